#pragma once

// The dopt command line: solve, sweep, region, bench.
//
// Exit codes: 0 success, 2 input error (bad flags, unreadable or invalid
// problem file), 3 solver error.

#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dopt/app/bench.hpp"
#include "dopt/app/format.hpp"
#include "dopt/app/problem_file.hpp"
#include "dopt/app/report_json.hpp"
#include "dopt/app/solve.hpp"
#include "dopt/boundary.hpp"
#include "dopt/errors.hpp"

namespace dopt::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSolver = 3;

struct Range {
  double lo = 0.0, hi = 0.0;
  int steps = 1;
};

/// "lo:hi:steps", or "lo:hi" when `steps_optional`.
inline Range parse_range(const std::string& text, const std::string& flag, bool steps_optional = false) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 3 && !(steps_optional && parts.size() == 2)) {
    throw InputError(flag, steps_optional ? "expected lo:hi or lo:hi:steps" : "expected lo:hi:steps");
  }
  Range r;
  try {
    std::size_t used = 0;
    r.lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
    r.hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    if (parts.size() == 3) {
      r.steps = std::stoi(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
    }
  } catch (const std::exception&) {
    throw InputError(flag, "cannot parse '" + text + "'");
  }
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) throw InputError(flag, "need finite lo <= hi");
  if (r.steps < 1) throw InputError(flag, "steps must be at least 1");
  return r;
}

inline WeightFunction link_from_flag(const std::string& name) {
  const auto kind = weight_kind_from_string(name);
  if (!kind) throw InputError("--link", "unknown weight function '" + name + "'");
  switch (*kind) {
    case WeightKind::logit: return WeightFunction::logit();
    case WeightKind::log_poisson: return WeightFunction::log_poisson();
    case WeightKind::probit: return WeightFunction::probit();
    case WeightKind::identity_constant: return WeightFunction::identity_constant(1.0);
    case WeightKind::user_tabulated: break;
  }
  throw InputError("--link", "tabulated weights are only available through problem files");
}

inline unsigned resolve_threads(int threads) {
  if (threads < 0) throw InputError("--threads", "must be >= 0");
  if (threads == 0) return std::max(1U, std::thread::hardware_concurrency());
  return static_cast<unsigned>(threads);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline void write_report_csv(std::ostream& out, const SolveReport& report) {
  std::vector<std::string> header{"case_label", "objective"}, row{report.case_label, format_real(report.objective)};
  for (std::size_t i = 0; i < report.allocation.size(); ++i) {
    header.push_back("p_" + std::to_string(i + 1));
    row.push_back(format_real(report.allocation[i]));
  }
  write_csv_row(out, header);
  write_csv_row(out, row);
}

inline void cmd_solve(const std::string& file, const SolveOptions& options, const std::string& format, std::ostream& out) {
  if (format != "json" && format != "csv") throw InputError("--format", "expected json or csv");
  const ProblemFile pf = load_problem_file(file);
  const SolveReport report = solve_problem(pf, options);
  if (format == "json") {
    write_report_json(out, report);
  } else {
    write_report_csv(out, report);
  }
}

/// Grid value i of a sweep: exact endpoints, evenly spaced in between.
inline double sweep_value(const Range& r, int i) {
  if (r.steps == 1) return r.lo;
  if (i == r.steps - 1) return r.hi;
  return r.lo + (r.hi - r.lo) * static_cast<double>(i) / static_cast<double>(r.steps - 1);
}

inline void cmd_sweep(const std::string& file, std::size_t vary, const Range& range, const SolveOptions& options,
                      std::ostream& out) {
  ProblemFile pf = load_problem_file(file);
  if (pf.kind == ProblemKind::reduced) throw InputError("reduced_coefficients", "sweeps need beta");
  if (pf.beta.empty()) throw InputError("beta", "sweeps need beta (explicit weights cannot be varied)");
  if (pf.weights) throw InputError("weights", "sweeps recompute weights from beta; remove explicit weights");
  if (vary >= pf.beta.size()) throw InputError("--vary", "index out of range for beta of length " + std::to_string(pf.beta.size()));

  const std::size_t n = pf.kind == ProblemKind::continuous ? 4 : pf.design_points.size();
  std::vector<std::string> header{"beta_" + std::to_string(vary)};
  for (std::size_t i = 0; i < n; ++i) header.push_back("p_" + std::to_string(i + 1));
  header.push_back("objective");
  header.push_back("case_label");
  write_csv_row(out, header);
  for (int k = 0; k < range.steps; ++k) {
    pf.beta[vary] = sweep_value(range, k);
    const SolveReport report = solve_problem(pf, options);
    std::vector<std::string> row{format_real(pf.beta[vary])};
    for (double p : report.allocation.p) row.push_back(format_real(p));
    row.push_back(format_real(report.objective));
    row.push_back(report.case_label);
    write_csv_row(out, row);
  }
}

struct RegionOptions {
  double beta0 = -1.0;
  Range range{-2.0, 2.0, 41};
  std::string link = "logit";
  int grid_steps = 201;
  unsigned threads = 1;
  std::string boundary_file;
};

inline RegionGrid compute_region(const RegionOptions& o) {
  if (!std::isfinite(o.beta0)) throw InputError("--beta0", "must be finite");
  if (o.grid_steps < 2) throw InputError("--grid-steps", "must be at least 2");
  BoundaryConfig config;
  config.grid_steps = o.grid_steps;
  const GridAxis axis{o.range.lo, o.range.hi, o.range.steps};
  return region_sweep(o.beta0, axis, axis, link_from_flag(o.link), config, o.threads);
}

inline void write_region_csv(std::ostream& out, const RegionGrid& grid) {
  write_csv_row(out, {"beta1", "beta2", "min_s", "verdict"});
  for (const auto& node : grid.nodes) {
    write_csv_row(out, {format_real(node.beta1), format_real(node.beta2), node.ok ? format_real(node.min_s) : "",
                        node.ok ? (node.verdict ? "1" : "0") : ""});
  }
}

inline void write_boundary_csv(std::ostream& out, const std::vector<BoundarySegment>& segments) {
  write_csv_row(out, {"beta1_start", "beta2_start", "beta1_end", "beta2_end"});
  for (const auto& s : segments) {
    write_csv_row(out, {format_real(s.x0), format_real(s.y0), format_real(s.x1), format_real(s.y1)});
  }
}

inline void cmd_region(const RegionOptions& options, std::ostream& out) {
  const RegionGrid grid = compute_region(options);
  if (!options.boundary_file.empty()) {
    std::ofstream bf(options.boundary_file);
    if (!bf) throw InputError("--boundary", "cannot open '" + options.boundary_file + "' for writing");
    write_boundary_csv(bf, region_boundary(grid));
  }
  write_region_csv(out, grid);
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Locally D-optimal approximate designs for generalized linear models", "dopt"};
  app.require_subcommand(1);

  std::string file, method = "auto", format = "json";
  double tol = 1e-12;
  int grid_steps = 201;
  auto* solve = app.add_subcommand("solve", "Optimal allocation for one problem file");
  solve->add_option("problem", file, "Problem file (JSON)")->required();
  solve->add_option("--method", method, "auto | analytic | liftone")->capture_default_str();
  solve->add_option("--tol", tol, "Lift-one relative stopping tolerance")->capture_default_str();
  solve->add_option("--format", format, "json | csv")->capture_default_str();
  solve->add_option("--grid-steps", grid_steps, "Boundary check grid per axis (continuous mode)")->capture_default_str();

  std::string sweep_file, sweep_range, sweep_method = "analytic";
  std::size_t vary = 0;
  double sweep_tol = 1e-12;
  auto* sweep = app.add_subcommand("sweep", "Solve along a grid of one beta coefficient (CSV)");
  sweep->add_option("problem", sweep_file, "Problem file (JSON)")->required();
  sweep->add_option("--vary", vary, "Index of the varied beta coefficient (0 = intercept)")->required();
  sweep->add_option("--range", sweep_range, "lo:hi:steps")->required();
  sweep->add_option("--method", sweep_method, "auto | analytic | liftone")->capture_default_str();
  sweep->add_option("--tol", sweep_tol, "Lift-one relative stopping tolerance")->capture_default_str();

  RegionOptions region_opts;
  std::string region_range = "-2:2", region_format = "csv";
  int region_steps = 41, region_threads = 1;
  auto* region = app.add_subcommand("region", "Boundary-optimality verdicts over a (beta1, beta2) grid (CSV)");
  region->add_option("--beta0", region_opts.beta0, "Intercept")->capture_default_str();
  region->add_option("--range", region_range, "lo:hi[:steps] for both beta1 and beta2")->capture_default_str();
  region->add_option("--steps", region_steps, "Grid nodes per axis")->capture_default_str();
  region->add_option("--link", region_opts.link, "logit | probit | log_poisson | identity")->capture_default_str();
  region->add_option("--grid-steps", region_opts.grid_steps, "(a, b) grid per axis for min s")->capture_default_str();
  region->add_option("--threads", region_threads, "Worker threads (0 = all cores)")->capture_default_str();
  region->add_option("--boundary", region_opts.boundary_file, "Also write region boundary segments to this CSV");
  region->add_option("--format", region_format, "csv")->capture_default_str();

  BenchSpec bench_spec;
  std::string dist = "uniform:-3:3", model = "2x2", bench_link = "logit";
  int bench_threads = 1;
  bool skip_liftone = false;
  auto* bench = app.add_subcommand("bench", "Analytic vs lift-one on random beta (CSV summary)");
  bench->add_option("--n-instances", bench_spec.n_instances, "Number of random instances")->capture_default_str();
  bench->add_option("--dist", dist, "uniform:lo:hi | normal:sigma")->capture_default_str();
  bench->add_option("--seed", bench_spec.seed, "Generator seed")->capture_default_str();
  bench->add_option("--model", model, "2x2 | 2^k (k = 2..6)")->capture_default_str();
  bench->add_option("--link", bench_link, "logit | probit | log_poisson | identity")->capture_default_str();
  bench->add_option("--tol", bench_spec.tol, "Lift-one relative stopping tolerance")->capture_default_str();
  bench->add_option("--threads", bench_threads, "Worker threads (0 = all cores)")->capture_default_str();
  bench->add_flag("--skip-liftone", skip_liftone, "Time the analytic solver only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (solve->parsed()) {
      if (!(tol > 0.0)) throw InputError("--tol", "must be > 0");
      if (grid_steps < 2) throw InputError("--grid-steps", "must be at least 2");
      cmd_solve(file, SolveOptions{method_from_string(method), tol, grid_steps}, format, out);
    } else if (sweep->parsed()) {
      if (!(sweep_tol > 0.0)) throw InputError("--tol", "must be > 0");
      const Range r = parse_range(sweep_range, "--range");
      cmd_sweep(sweep_file, vary, r, SolveOptions{method_from_string(sweep_method), sweep_tol, 201}, out);
    } else if (region->parsed()) {
      if (region_format != "csv") throw InputError("--format", "region output is csv only");
      region_opts.range = parse_range(region_range, "--range", true);
      if (region_range.find(':') == region_range.rfind(':')) region_opts.range.steps = region_steps;
      if (region_opts.range.steps < 1) throw InputError("--steps", "must be at least 1");
      region_opts.threads = resolve_threads(region_threads);
      cmd_region(region_opts, out);
    } else if (bench->parsed()) {
      bench_spec.beta_distribution = parse_distribution(dist);
      parse_model(model, bench_spec);
      bench_spec.link = link_from_flag(bench_link);
      bench_spec.threads = resolve_threads(bench_threads);
      bench_spec.run_liftone = !skip_liftone;
      if (!(bench_spec.tol > 0.0)) throw InputError("--tol", "must be > 0");
      write_bench_csv(out, run_bench(bench_spec), bench_spec.run_liftone);
    }
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace dopt::app
