#pragma once

// n design points, n - 1 parameters. With v_j = |X[rows != j]|^2 prod_{i != j} w_i
// the determinant is f(p) = p_1 ... p_n sum_j v_j / p_j. The interior optimum
// has p_j = (1 +/- sqrt(1 - mu v_j)) / (2 (n - 1)) with a scalar mu found by
// bisection on one of two monotone pieces.
//
// Internally mu is parametrized by t = sqrt(1 - mu v_n) in [0, 1]. Then
// sqrt(1 - mu v_j) = sqrt(1 - (1 - t^2) v_j / v_n) is smooth in t, which keeps
// the branch equations well conditioned up to mu = 1 / v_n where d/dmu blows up.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"
#include "dopt/solver_2x2.hpp"

namespace dopt {

inline constexpr double kSaturatedZeroTolerance = 1e-12;
inline constexpr int kMuMaxIterations = 200;

/// Sorted reduced coefficients of a saturated problem. When the exact v_j
/// would under/overflow, `v` holds v_j * exp(-log_scale); allocations do not
/// depend on a common factor.
struct SaturatedProblem {
  std::vector<double> v;         // ascending
  std::vector<std::size_t> perm; // perm[k] = input position of sorted entry k
  std::size_t zeros = 0;         // leading exact zeros (l)
  std::size_t n = 0;
  double log_scale = 0.0;

  static SaturatedProblem from_v(const std::vector<double>& raw, double log_scale = 0.0) {
    const std::size_t n = raw.size();
    if (n < 3) throw DimensionError("saturated problem needs at least 3 points");
    double largest = 0.0;
    for (double x : raw) {
      if (!std::isfinite(x) || x < 0.0) throw DomainError("saturated problem: v must be finite and >= 0");
      largest = std::max(largest, x);
    }
    if (!(largest > 0.0)) throw DomainError("saturated problem: all v are zero; reparametrize model");
    SaturatedProblem sp;
    sp.n = n;
    sp.log_scale = log_scale;
    sp.perm.resize(n);
    std::iota(sp.perm.begin(), sp.perm.end(), std::size_t{0});
    std::stable_sort(sp.perm.begin(), sp.perm.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
    sp.v.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = raw[sp.perm[k]];
      sp.v[k] = x <= kSaturatedZeroTolerance * largest ? 0.0 : x;
      if (sp.v[k] == 0.0) ++sp.zeros;
    }
    if (sp.zeros > n - 3) {
      throw DomainError("saturated problem: " + std::to_string(sp.zeros) +
                        " zero coefficients implies rank(X) < n - 1; reparametrize model");
    }
    return sp;
  }

  std::vector<double> to_input_order(const std::vector<double>& sorted) const {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[perm[k]] = sorted[k];
    return out;
  }

  /// sum_{j<n} sqrt(1 - v_j / v_n): at most n - 2 selects the all-plus branch.
  double branch_statistic() const {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) s += std::sqrt(std::max(0.0, 1.0 - v[j] / v[n - 1]));
    return s;
  }
};

/// v_j from the leave-one-out minors and the weights.
inline SaturatedProblem compute_v(const DesignProblem& problem) {
  const auto& X = problem.X();
  const std::size_t n = problem.points();
  if (problem.terms() + 1 != n) throw DimensionError("compute_v: design must have n = d + 1 rows");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(X);
  lu.setThreshold(kSaturatedZeroTolerance);
  if (static_cast<std::size_t>(lu.rank()) < n - 1) {
    throw DomainError("compute_v: rank(X) < n - 1; reparametrize model");
  }
  std::vector<double> minors(n);
  double largest = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    minors[j] = leave_one_out_minor(X, j);
    largest = std::max(largest, std::abs(minors[j]));
  }
  double sum_log_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum_log_w += std::log(problem.w()(static_cast<Eigen::Index>(i)));
  std::vector<double> log_v(n, -INFINITY);
  double max_log = -INFINITY, min_log = INFINITY;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(minors[j]) <= kSaturatedZeroTolerance * largest) continue;
    log_v[j] = 2.0 * std::log(std::abs(minors[j])) + sum_log_w - std::log(problem.w()(static_cast<Eigen::Index>(j)));
    max_log = std::max(max_log, log_v[j]);
    min_log = std::min(min_log, log_v[j]);
  }
  std::vector<double> v(n, 0.0);
  const bool exact = max_log < 700.0 && min_log > -700.0;
  if (exact) {
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isfinite(log_v[j])) {
        const double m = minors[j];
        double prod = m * m;
        for (std::size_t i = 0; i < n; ++i) {
          if (i != j) prod *= problem.w()(static_cast<Eigen::Index>(i));
        }
        v[j] = prod;
      }
    }
    return SaturatedProblem::from_v(v);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isfinite(log_v[j])) v[j] = std::exp(log_v[j] - max_log);
  }
  return SaturatedProblem::from_v(v, max_log);
}

// ---------------------------------------------------------------------------
// Branch functions
// ---------------------------------------------------------------------------

namespace detail {

inline void check_mu(double mu, std::span<const double> v) {
  const double vmax = *std::max_element(v.begin(), v.end());
  if (!(mu >= 0.0) || !(mu * vmax <= 1.0 + 1e-15)) {
    throw DomainError("mu must lie in [0, 1/v_n]");
  }
}

}  // namespace detail

/// h1(mu) = sum_j sqrt(1 - mu v_j), for 0 <= mu <= 1/max(v).
inline double h1_eval(double mu, std::span<const double> v) {
  detail::check_mu(mu, v);
  double s = 0.0;
  for (double x : v) s += std::sqrt(std::max(0.0, 1.0 - mu * x));
  return s;
}

/// h2(mu) = sum_{j<n} sqrt(1 - mu v_j) - sqrt(1 - mu v_n), v ascending.
inline double h2_eval(double mu, std::span<const double> v) {
  detail::check_mu(mu, v);
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < v.size(); ++j) s += std::sqrt(std::max(0.0, 1.0 - mu * v[j]));
  return s - std::sqrt(std::max(0.0, 1.0 - mu * v.back()));
}

enum class MuBranch { h1, h2 };

struct MuSolve {
  double mu = 0.0;
  double t = 0.0;  // sqrt(1 - mu v_n)
  MuBranch branch = MuBranch::h1;
  int iterations = 0;
  double residual = 0.0;  // |h_branch(mu) - (n - 2)|
};

namespace detail {

// sqrt(1 - mu v_j) expressed through t.
inline double root_term(double t, double ratio) { return std::sqrt(std::max(0.0, 1.0 - (1.0 - t * t) * ratio)); }

struct BranchTerms {
  std::vector<double> ratio;  // v_j / v_n, ascending
  double h1(double t) const {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < ratio.size(); ++j) s += root_term(t, ratio[j]);
    return s + t;
  }
  double h2(double t) const { return h1(t) - 2.0 * t; }
  // g2 / v_n: 1 - sum_{j<n} r_j t / sqrt(1 - mu v_j)
  double g2(double t) const {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < ratio.size(); ++j) {
      if (ratio[j] == 0.0) continue;
      s += ratio[j] * t / root_term(t, ratio[j]);
    }
    return 1.0 - s;
  }
};

// Root of a monotone function on [lo, hi] given the sign at lo; bisects to
// machine resolution.
template <class F>
double bisect(F&& fn, double lo, double hi, bool negative_at_lo, int& iterations) {
  for (iterations = 0; iterations < kMuMaxIterations; ++iterations) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const bool neg = fn(mid) < 0.0;
    if (neg == negative_at_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Solves h1(mu) = n - 2 or h2(mu) = n - 2, branch chosen by the dichotomy
/// on sum_{j<n} sqrt(1 - v_j/v_n). Requires v_n < sum_{j<n} v_j.
inline MuSolve root_mu(const SaturatedProblem& sp) {
  const std::size_t n = sp.n;
  const double vn = sp.v[n - 1];
  double rest = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) rest += sp.v[j];
  if (!(vn < rest)) throw DomainError("root_mu: requires v_n < sum of the other coefficients");

  detail::BranchTerms terms;
  terms.ratio.resize(n);
  for (std::size_t j = 0; j < n; ++j) terms.ratio[j] = sp.v[j] / vn;
  const double target = static_cast<double>(n) - 2.0;

  MuSolve out;
  int iterations = 0;
  if (sp.branch_statistic() <= target) {
    out.branch = MuBranch::h1;
    // h1 increases in t from branch_statistic() at t = 0 to n at t = 1.
    out.t = detail::bisect([&](double t) { return terms.h1(t) - target; }, 0.0, 1.0, true, iterations);
    out.residual = std::abs(terms.h1(out.t) - target);
  } else {
    out.branch = MuBranch::h2;
    // g2 decreases in t (increases in mu); its root is the minimum of h2.
    int pre = 0;
    const double t_star = detail::bisect([&](double t) { return -terms.g2(t); }, 0.0, 1.0, true, pre);
    if (!(terms.h2(t_star) < target)) throw NumericalError("root_mu: h2 minimum does not cross n - 2");
    // On [0, t_star] h2 decreases in t, from above n - 2 to below it.
    out.t = detail::bisect([&](double t) { return target - terms.h2(t); }, 0.0, t_star, true, iterations);
    iterations += pre;
    out.residual = std::abs(terms.h2(out.t) - target);
  }
  out.iterations = iterations;
  out.mu = (1.0 - out.t * out.t) / vn;
  if (out.residual > 1e-12) throw NumericalError("root_mu: residual " + std::to_string(out.residual));
  return out;
}

/// D-optimal allocation for a saturated problem. Labels: "saturated-lemma4"
/// (largest coefficient dominates, boundary solution), "saturated-h1" or
/// "saturated-h2" (interior).
inline SolveReport solve_saturated(const SaturatedProblem& sp) {
  const std::size_t n = sp.n;
  const double nm1 = static_cast<double>(n - 1);
  const double vn = sp.v[n - 1];
  double rest = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) rest += sp.v[j];

  SolveReport report;
  std::vector<double> p(n);
  if (detail::dominates(vn, rest)) {
    std::fill(p.begin(), p.end() - 1, 1.0 / nm1);
    p.back() = 0.0;
    report.allocation = Allocation(sp.to_input_order(p));
    report.objective = vn / std::pow(nm1, nm1);
    report.case_label = "saturated-lemma4";
    report.diagnostics["kkt_residual"] = kkt_violation(sp.v, Allocation(p));
    report.diagnostics["zeros"] = static_cast<double>(sp.zeros);
    report.diagnostics["log_scale"] = sp.log_scale;
    return report;
  }

  const MuSolve mu = root_mu(sp);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double root = sp.v[j] == vn ? mu.t : detail::root_term(mu.t, sp.v[j] / vn);
    p[j] = (1.0 + root) / (2.0 * nm1);
  }
  p[n - 1] = (mu.branch == MuBranch::h1 ? 1.0 + mu.t : 1.0 - mu.t) / (2.0 * nm1);

  const Allocation sorted_p(p);
  const double direct = reduced_objective(sp.v, sorted_p);
  double prod = 1.0;
  for (double x : p) prod *= x;
  // f = p_1..p_n [v_i/p_i + 4(n-1)^2 p_i / mu] for every i; i = 1 has the
  // largest proportion. Zero-coefficient designs reduce to 4(n-1) prod / mu.
  const double via_lambda = prod * (sp.v[0] / p[0] + 4.0 * nm1 * nm1 * p[0] / mu.mu);

  report.allocation = Allocation(sp.to_input_order(p));
  report.objective = direct;
  report.case_label = mu.branch == MuBranch::h1 ? "saturated-h1" : "saturated-h2";
  report.diagnostics["mu"] = mu.mu;
  report.diagnostics["lambda"] = 4.0 * nm1 * nm1 * prod / mu.mu;
  report.diagnostics["mu_iterations"] = mu.iterations;
  report.diagnostics["mu_residual"] = mu.residual;
  report.diagnostics["objective_via_mu"] = via_lambda;
  if (sp.zeros > 0) report.diagnostics["objective_degenerate_form"] = 4.0 * nm1 * prod / mu.mu;
  report.diagnostics["kkt_residual"] = kkt_violation(sp.v, sorted_p);
  report.diagnostics["zeros"] = static_cast<double>(sp.zeros);
  report.diagnostics["log_scale"] = sp.log_scale;
  return report;
}

}  // namespace dopt
