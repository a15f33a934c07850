#pragma once

// Solver dispatch for parsed problem files.
//
//   4 points, intercept + 2 factors -> solve_fourpoint
//   n = d + 1                        -> solve_saturated
//   n = d                            -> uniform (det factorizes)
//   otherwise                        -> lift-one (auto) or UnsupportedShape (analytic)

#include <stdexcept>
#include <string>

#include "dopt/app/problem_file.hpp"
#include "dopt/boundary.hpp"
#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"
#include "dopt/liftone.hpp"
#include "dopt/solver_2x2.hpp"
#include "dopt/solver_saturated.hpp"
#include "dopt/solver_twofactor.hpp"

namespace dopt::app {

enum class Method { automatic, analytic, liftone };

inline Method method_from_string(const std::string& name) {
  if (name == "auto") return Method::automatic;
  if (name == "analytic") return Method::analytic;
  if (name == "liftone") return Method::liftone;
  throw InputError("--method", "expected auto, analytic or liftone");
}

/// No closed form applies to the requested problem shape.
class UnsupportedShape : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  Method method = Method::automatic;
  double tol = 1e-12;
  int grid_steps = 201;  // continuous mode only
};

inline bool is_fourpoint_two_factor(const DesignProblem& problem) {
  if (problem.points() != 4 || problem.terms() != 3) return false;
  for (Eigen::Index i = 0; i < 4; ++i) {
    if (problem.X()(i, 0) != 1.0) return false;
  }
  return true;
}

inline SolveReport solve_design(const DesignProblem& problem, const SolveOptions& options) {
  const std::size_t n = problem.points(), d = problem.terms();
  SolveReport report;
  if (options.method == Method::liftone) {
    LiftOneConfig config;
    config.tol = options.tol;
    report = liftone_maximize(problem, config);
  } else if (is_fourpoint_two_factor(problem)) {
    report = solve_fourpoint(problem);
  } else if (n == d + 1) {
    report = solve_saturated(compute_v(problem));
    report.diagnostics["reduced_objective"] = report.objective;
    report.objective = objective_det(problem, report.allocation);
  } else if (n == d) {
    report.allocation = Allocation::uniform(n);
    report.objective = objective_det(problem, report.allocation);
    report.case_label = "square-uniform";
  } else if (options.method == Method::analytic) {
    throw UnsupportedShape("analytic method needs n = d + 1 or a four-point two-factor design; got n = " +
                           std::to_string(n) + ", d = " + std::to_string(d));
  } else {
    LiftOneConfig config;
    config.tol = options.tol;
    report = liftone_maximize(problem, config);
  }
  report.diagnostics["equivalence_gap"] = equivalence_gap(problem, report.allocation);
  return report;
}

/// Corner design in original coordinates, solved analytically, plus the
/// boundary-optimality verdict for the whole rectangle.
inline SolveReport solve_continuous(const ContinuousProblem& cp, const SolveOptions& options) {
  const auto& r = cp.bounds;
  std::vector<std::vector<double>> corners;
  for (const auto& c : kCorners) {
    corners.push_back({c[0] > 0 ? r.b1 : r.a1, c[1] > 0 ? r.b2 : r.a2});
  }
  const Eigen::Vector3d beta(cp.beta[0], cp.beta[1], cp.beta[2]);
  const auto problem = DesignProblem::from_model(model_matrix(corners, main_effect_terms(2)), beta, cp.weight_fn);
  SolveReport report = solve_design(problem, options);
  BoundaryConfig config;
  config.grid_steps = options.grid_steps;
  const auto verdict = check_boundary_optimal(cp, config);
  report.diagnostics["boundary_optimal"] = verdict.boundary_optimal ? 1.0 : 0.0;
  report.diagnostics["min_s"] = verdict.min_s;
  report.diagnostics["min_s_a"] = verdict.argmin[0];
  report.diagnostics["min_s_b"] = verdict.argmin[1];
  return report;
}

inline SolveReport solve_reduced(const std::vector<double>& v, const SolveOptions& options) {
  if (options.method == Method::liftone) throw UnsupportedShape("lift-one needs design_points, not reduced_coefficients");
  if (v.size() == 4) return solve_22(std::array<double, 4>{v[0], v[1], v[2], v[3]});
  return solve_saturated(SaturatedProblem::from_v(v));
}

inline SolveReport solve_problem(const ProblemFile& pf, const SolveOptions& options) {
  switch (pf.kind) {
    case ProblemKind::reduced: return solve_reduced(pf.reduced_coefficients, options);
    case ProblemKind::continuous: return solve_continuous(pf.continuous(), options);
    case ProblemKind::design: return solve_design(pf.design(), options);
  }
  throw UnsupportedShape("unknown problem kind");
}

}  // namespace dopt::app
