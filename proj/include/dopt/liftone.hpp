#pragma once

// Lift-one coordinate ascent for max det(X'WX) over the simplex.
//
// Moving weight z onto point i and rescaling the rest by (1-z)/(1-p_i) gives
// f_i(z) = alpha z (1-z)^(d-1) + beta (1-z)^d, because det(X'WX) is multilinear
// in p with every monomial over d distinct points. Two evaluations fix
// (alpha, beta) and the maximizer is closed form.
//
// Stopping rule and sweep order are a reconstruction: sweeps run i = 1..n
// (or a seeded shuffle) until one full sweep improves f by less than `tol`
// relative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"

namespace dopt {

struct LiftOneConfig {
  enum class Init { uniform, user };

  double tol = 1e-12;
  int max_sweeps = 500;
  Init init = Init::uniform;
  std::optional<Allocation> start;           // used when init == user
  std::optional<std::uint64_t> shuffle_seed; // random sweep order when set
};

struct Profile {
  double alpha = 0.0;
  double beta = 0.0;

  double operator()(double z, std::size_t d) const {
    const double rest = 1.0 - z;
    return alpha * z * std::pow(rest, static_cast<double>(d) - 1.0) + beta * std::pow(rest, static_cast<double>(d));
  }

  /// argmax on [0, 1]: (alpha - d beta) / (d (alpha - beta)) when alpha > d beta, else 0.
  double argmax(std::size_t d) const {
    const double dd = static_cast<double>(d);
    if (!(alpha > dd * beta)) return 0.0;
    return std::clamp((alpha - dd * beta) / (dd * (alpha - beta)), 0.0, 1.0);
  }
};

namespace detail {

inline Allocation lifted(const Allocation& p, std::size_t i, double z) {
  Allocation out = p;
  const double scale = (1.0 - z) / (1.0 - p[i]);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = j == i ? z : p[j] * scale;
  return out;
}

inline void renormalize(Allocation& p) {
  for (double& x : p.p) x = std::max(x, 0.0);
  const double s = p.sum();
  if (std::abs(s - 1.0) > 1e-13) {
    for (double& x : p.p) x /= s;
  }
}

}  // namespace detail

/// (alpha, beta) of f_i with beta = f_i(0) and alpha = 2^d f_i(1/2) - beta.
inline Profile fi_profile(const DesignProblem& problem, const Allocation& p, std::size_t i) {
  check_allocation_size(problem, p);
  if (i >= p.size()) throw DimensionError("fi_profile: index out of range");
  if (!(p[i] < 1.0)) throw DegenerateError("fi_profile: degenerate profile at p_i = 1");
  const double beta = objective_det(problem, detail::lifted(p, i, 0.0));
  const double half = objective_det(problem, detail::lifted(p, i, 0.5));
  return {std::ldexp(half, static_cast<int>(problem.terms())) - beta, beta};
}

/// Profile divided by f(p), evaluated through log-determinants so that tiny
/// or huge determinants do not underflow. `log_f` is log f(p).
inline Profile fi_profile_scaled(const DesignProblem& problem, const Allocation& p, std::size_t i, double log_f) {
  const double beta = std::exp(log_objective_det(problem, detail::lifted(p, i, 0.0)) - log_f);
  const double half = std::exp(log_objective_det(problem, detail::lifted(p, i, 0.5)) - log_f);
  return {std::ldexp(half, static_cast<int>(problem.terms())) - beta, beta};
}

/// One lift-one update of coordinate i. Returns p unchanged when p_i = 1 or
/// when moving does not increase the objective.
inline Allocation lift_one_step(const DesignProblem& problem, const Allocation& p, std::size_t i) {
  if (!(p[i] < 1.0)) return p;
  const double log_f = log_objective_det(problem, p);
  if (!std::isfinite(log_f)) throw DegenerateError("degenerate objective: det(X'WX) = 0 at the current allocation");
  const Profile prof = fi_profile_scaled(problem, p, i, log_f);
  const std::size_t d = problem.terms();
  const double z = prof.argmax(d);
  // f_i(p_i) == 1 in scaled units; keep the current point unless z is better.
  if (!(prof(z, d) > 1.0)) return p;
  Allocation next = detail::lifted(p, i, z);
  detail::renormalize(next);
  return next;
}

/// Coordinate ascent from uniform (or a user start). Report carries the
/// allocation, det(X'WX), sweep count, and convergence flag.
inline SolveReport liftone_maximize(const DesignProblem& problem, const LiftOneConfig& config = {}) {
  if (!(config.tol > 0.0) || config.max_sweeps < 1) throw DomainError("liftone: tol > 0 and max_sweeps >= 1 required");
  const std::size_t n = problem.points();
  Allocation p = Allocation::uniform(n);
  if (config.init == LiftOneConfig::Init::user) {
    if (!config.start) throw DomainError("liftone: user init requested without a start allocation");
    p = *config.start;
    check_allocation_size(problem, p);
    if (!p.is_feasible()) throw DomainError("liftone: start allocation is not on the simplex");
  }
  double log_f = log_objective_det(problem, p);
  if (!std::isfinite(log_f)) throw DegenerateError("degenerate objective: det(X'WX) = 0 at the start allocation");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::optional<std::mt19937_64> rng;
  if (config.shuffle_seed) rng.emplace(*config.shuffle_seed);

  int sweeps = 0;
  int steps = 0;
  bool converged = false;
  while (sweeps < config.max_sweeps) {
    if (rng) std::shuffle(order.begin(), order.end(), *rng);
    const double sweep_start = log_f;
    for (std::size_t i : order) {
      Allocation next = lift_one_step(problem, p, i);
      if (next.p != p.p) {
        const double next_log = log_objective_det(problem, next);
        if (next_log >= log_f) {
          p = std::move(next);
          log_f = next_log;
          ++steps;
        }
      }
    }
    ++sweeps;
    if (std::expm1(log_f - sweep_start) < config.tol) {
      converged = true;
      break;
    }
  }

  SolveReport report;
  report.allocation = std::move(p);
  report.objective = objective_det(problem, report.allocation);
  report.case_label = "liftone";
  report.diagnostics["sweeps"] = sweeps;
  report.diagnostics["steps"] = steps;
  report.diagnostics["converged"] = converged ? 1.0 : 0.0;
  report.diagnostics["log_objective"] = log_f;
  return report;
}

}  // namespace dopt
