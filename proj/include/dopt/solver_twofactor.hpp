#pragma once

// Four distinct design points of a two-factor main-effects GLM. The
// determinant reduces to w1 w2 w3 w4 * f_u(p) with u_i = |X[rows != i]|^2 / w_i;
// the zero pattern of the u's decides between the degenerate, one-zero and
// general closed forms.

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"
#include "dopt/solver_2x2.hpp"

namespace dopt {

enum class RankCase { rank2, rank3_one_zero, rank3_general };

inline std::string to_string(RankCase c) {
  switch (c) {
    case RankCase::rank2: return "rank2";
    case RankCase::rank3_one_zero: return "rank3_one_zero";
    case RankCase::rank3_general: return "rank3_general";
  }
  return "unknown";
}

/// Minor threshold, relative to the largest |3x3 minor|.
inline constexpr double kMinorZeroTolerance = 1e-12;

struct UCoefficients {
  std::array<double, 4> u{};       // input order; exact zeros where the minor vanishes
  std::array<double, 4> minors{};  // |X[rows != i]| with sign
  std::array<std::size_t, 4> perm{0, 1, 2, 3};
  RankCase rank_case = RankCase::rank3_general;
};

inline UCoefficients compute_u(const DesignProblem& problem) {
  const auto& X = problem.X();
  if (X.rows() != 4 || X.cols() != 3) throw DimensionError("compute_u: design must be 4 x 3");
  for (Eigen::Index i = 0; i < 4; ++i) {
    if (X(i, 0) != 1.0) throw DomainError("compute_u: first column of X must be all ones");
  }
  UCoefficients out;
  double largest = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    out.minors[i] = leave_one_out_minor(X, i);
    largest = std::max(largest, std::abs(out.minors[i]));
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(X);
  lu.setThreshold(kMinorZeroTolerance);
  if (lu.rank() < 3 || largest == 0.0) {
    out.u = {0.0, 0.0, 0.0, 0.0};
    out.rank_case = RankCase::rank2;
    return out;
  }
  int zeros = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (std::abs(out.minors[i]) <= kMinorZeroTolerance * largest) {
      out.u[i] = 0.0;
      ++zeros;
    } else {
      out.u[i] = out.minors[i] * out.minors[i] / problem.w()(static_cast<Eigen::Index>(i));
    }
  }
  if (zeros > 1) throw NumericalError("compute_u: rank 3 design with more than one vanishing minor");
  out.rank_case = zeros == 1 ? RankCase::rank3_one_zero : RankCase::rank3_general;
  out.perm = VCoefficients::from_unsorted(out.u).perm;
  return out;
}

/// Analytic allocation for any four distinct points of two factors. The
/// reported objective is det(X'WX); the reduced f_u goes to diagnostics.
inline SolveReport solve_fourpoint(const DesignProblem& problem) {
  const UCoefficients uc = compute_u(problem);
  SolveReport report;
  switch (uc.rank_case) {
    case RankCase::rank2:
      // |X'WX| vanishes identically; every allocation is optimal.
      report.allocation = Allocation::uniform(4);
      report.objective = 0.0;
      report.case_label = "degenerate-rank2";
      report.diagnostics["reduced_objective"] = 0.0;
      return report;
    case RankCase::rank3_one_zero:
      report = solve_one_zero(VCoefficients::from_unsorted(uc.u));
      break;
    case RankCase::rank3_general: {
      report = solve_22(uc.u);
      report.case_label = "twofactor-3/" + report.case_label;
      break;
    }
  }
  report.diagnostics["reduced_objective"] = report.objective;
  report.objective = objective_det(problem, report.allocation);
  return report;
}

}  // namespace dopt
