#pragma once

// Analytic vs lift-one benchmark on random beta. Instances are drawn up front
// from a single Rng, so the stream does not depend on the thread count; the
// per-instance results are reduced in index order.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "dopt/app/format.hpp"
#include "dopt/app/random.hpp"
#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"
#include "dopt/liftone.hpp"
#include "dopt/solver_saturated.hpp"
#include "dopt/solver_twofactor.hpp"

namespace dopt::app {

struct BetaDistribution {
  enum class Kind { uniform, normal };
  Kind kind = Kind::uniform;
  double lo = -3.0, hi = 3.0;  // uniform
  double sigma = 1.0;          // normal, mean 0

  double draw(Rng& rng) const { return kind == Kind::uniform ? rng.uniform(lo, hi) : rng.normal(sigma); }
};

struct BenchSpec {
  std::size_t n_instances = 10000;
  BetaDistribution beta_distribution;
  std::uint64_t seed = 42;
  // k = 2 with main_effects = true is the 2x2 model (4 x 3); otherwise the
  // 2^k full factorial without its top interaction (saturated).
  std::size_t k = 2;
  bool main_effects = true;
  WeightFunction link = WeightFunction::logit();
  double tol = 1e-12;
  unsigned threads = 1;
  bool run_liftone = true;

  Eigen::MatrixXd design_matrix() const { return main_effects ? main_effects_2x2() : full_factorial_matrix(k); }
};

inline BetaDistribution parse_distribution(const std::string& text) {
  auto fields = [&] {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const auto pos = text.find(':', start);
      out.push_back(text.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out;
  }();
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(x)) throw std::invalid_argument(s);
      return x;
    } catch (const std::exception&) {
      throw InputError("--dist", "bad number '" + s + "'");
    }
  };
  BetaDistribution dist;
  if (fields[0] == "uniform" && fields.size() == 3) {
    dist.kind = BetaDistribution::Kind::uniform;
    dist.lo = number(fields[1]);
    dist.hi = number(fields[2]);
    if (!(dist.lo < dist.hi)) throw InputError("--dist", "uniform needs lo < hi");
    return dist;
  }
  if (fields[0] == "normal" && fields.size() == 2) {
    dist.kind = BetaDistribution::Kind::normal;
    dist.sigma = number(fields[1]);
    if (!(dist.sigma > 0.0)) throw InputError("--dist", "normal needs sigma > 0");
    return dist;
  }
  throw InputError("--dist", "expected uniform:lo:hi or normal:sigma");
}

/// "2x2" or "2^k" with k = 2..6.
inline void parse_model(const std::string& text, BenchSpec& spec) {
  if (text == "2x2") {
    spec.k = 2;
    spec.main_effects = true;
    return;
  }
  if (text.size() == 3 && text.compare(0, 2, "2^") == 0 && text[2] >= '2' && text[2] <= '6') {
    spec.k = static_cast<std::size_t>(text[2] - '0');
    spec.main_effects = false;
    return;
  }
  throw InputError("--model", "expected 2x2 or 2^k with k = 2..6");
}

/// n_instances rows of d coefficients, drawn row by row.
inline std::vector<std::vector<double>> generate_betas(const BenchSpec& spec) {
  const auto d = static_cast<std::size_t>(spec.design_matrix().cols());
  Rng rng(spec.seed);
  std::vector<std::vector<double>> betas(spec.n_instances, std::vector<double>(d));
  for (auto& row : betas) {
    for (double& b : row) b = spec.beta_distribution.draw(rng);
  }
  return betas;
}

struct MethodStats {
  std::string method;
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::size_t fallbacks = 0;  // analytic: quartic fallbacks; liftone: sweep limit reached
  double total_seconds = 0.0;
  double mean_efficiency = NAN;
  double p01_efficiency = NAN;
  double min_efficiency = NAN;
};

struct BenchResult {
  MethodStats analytic;
  MethodStats liftone;
  std::vector<double> efficiency;  // per instance; NaN when either side failed
};

namespace detail {

struct InstanceOutcome {
  bool analytic_ok = false, liftone_ok = false;
  bool analytic_fallback = false, liftone_fallback = false;
  double analytic_seconds = 0.0, liftone_seconds = 0.0;
  double efficiency = NAN;
};

inline bool usable(const Allocation& p) {
  for (double x : p.p) {
    if (!std::isfinite(x) || x < 0.0) return false;
  }
  return std::abs(p.sum() - 1.0) <= 1e-9;
}

inline InstanceOutcome run_instance(const BenchSpec& spec, const Eigen::MatrixXd& X, const std::vector<double>& beta) {
  using clock = std::chrono::steady_clock;
  InstanceOutcome out;
  std::optional<DesignProblem> problem;
  try {
    problem = DesignProblem::from_model(X, Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size())),
                                        spec.link);
  } catch (const std::exception&) {
    return out;
  }
  double log_a = NAN;
  try {
    const auto t0 = clock::now();
    const SolveReport r = spec.main_effects ? solve_fourpoint(*problem) : solve_saturated(compute_v(*problem));
    out.analytic_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    const auto it = r.diagnostics.find("quartic_fallback");
    out.analytic_fallback = it != r.diagnostics.end() && it->second != 0.0;
    log_a = log_objective_det(*problem, r.allocation);
    out.analytic_ok = usable(r.allocation) && std::isfinite(log_a);
  } catch (const std::exception&) {
    out.analytic_ok = false;
  }
  if (!spec.run_liftone) return out;
  try {
    LiftOneConfig config;
    config.tol = spec.tol;
    const auto t0 = clock::now();
    const SolveReport r = liftone_maximize(*problem, config);
    out.liftone_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.liftone_fallback = r.diagnostics.at("converged") == 0.0;
    const double log_l = log_objective_det(*problem, r.allocation);
    out.liftone_ok = usable(r.allocation) && std::isfinite(log_l);
    if (out.liftone_ok && out.analytic_ok) out.efficiency = std::exp(log_l - log_a);
  } catch (const std::exception&) {
    out.liftone_ok = false;
  }
  return out;
}

inline void fill_efficiency(MethodStats& stats, std::vector<double> values) {
  if (values.empty()) return;
  std::sort(values.begin(), values.end());
  stats.min_efficiency = values.front();
  stats.mean_efficiency = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  stats.p01_efficiency = values[static_cast<std::size_t>(0.01 * static_cast<double>(values.size() - 1))];
}

}  // namespace detail

inline BenchResult run_bench(const BenchSpec& spec) {
  if (spec.n_instances < 1) throw InputError("--n-instances", "must be at least 1");
  const auto betas = generate_betas(spec);
  const Eigen::MatrixXd X = spec.design_matrix();
  std::vector<detail::InstanceOutcome> outcomes(betas.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < betas.size(); i += stride) outcomes[i] = detail::run_instance(spec, X, betas[i]);
  };
  const unsigned threads = std::max(1U, spec.threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }

  BenchResult result;
  result.analytic.method = spec.main_effects ? "analytic-fourpoint" : "analytic-saturated";
  result.liftone.method = "liftone";
  result.analytic.instances = result.liftone.instances = betas.size();
  std::vector<double> eff;
  std::vector<double> ones;
  for (const auto& o : outcomes) {
    result.analytic.failures += o.analytic_ok ? 0 : 1;
    result.analytic.fallbacks += o.analytic_fallback ? 1 : 0;
    result.analytic.total_seconds += o.analytic_seconds;
    if (o.analytic_ok) ones.push_back(1.0);
    if (spec.run_liftone) {
      result.liftone.failures += o.liftone_ok ? 0 : 1;
      result.liftone.fallbacks += o.liftone_fallback ? 1 : 0;
      result.liftone.total_seconds += o.liftone_seconds;
    }
    result.efficiency.push_back(o.efficiency);
    if (std::isfinite(o.efficiency)) eff.push_back(o.efficiency);
  }
  detail::fill_efficiency(result.analytic, std::move(ones));
  detail::fill_efficiency(result.liftone, std::move(eff));
  return result;
}

inline void write_bench_csv(std::ostream& out, const BenchResult& result, bool include_liftone) {
  write_csv_row(out, {"method", "instances", "failures", "fallbacks", "total_seconds", "mean_efficiency",
                      "p01_efficiency", "min_efficiency"});
  auto row = [&](const MethodStats& s) {
    write_csv_row(out, {s.method, std::to_string(s.instances), std::to_string(s.failures), std::to_string(s.fallbacks),
                        format_real(s.total_seconds), format_real(s.mean_efficiency), format_real(s.p01_efficiency),
                        format_real(s.min_efficiency)});
  };
  row(result.analytic);
  if (include_liftone) row(result.liftone);
}

}  // namespace dopt::app
