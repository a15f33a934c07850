#pragma once

// Two continuous factors on a rectangle. After rescaling to [-1, 1]^2 the
// four corners alone support a D-optimal design iff
//
//     s(a, b) = 3/4 f(p4) - nu(beta0 + a beta1 + b beta2) h(a, b) >= 0
//
// for every (a, b) in the square, where p4 is the exact 2^2 optimum for the
// corner weights. min s is located by a dense grid followed by compass-search
// polishing of the lowest grid minima.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"
#include "dopt/solver_2x2.hpp"

namespace dopt {

struct Rectangle {
  double a1 = -1.0, b1 = 1.0, a2 = -1.0, b2 = 1.0;
};

struct ContinuousProblem {
  std::array<double, 3> beta{};
  Rectangle bounds;
  WeightFunction weight_fn;

  ContinuousProblem() = default;
  ContinuousProblem(std::array<double, 3> b, Rectangle r, WeightFunction fn)
      : beta(b), bounds(r), weight_fn(std::move(fn)) {
    if (!(r.a1 < r.b1) || !(r.a2 < r.b2)) throw DomainError("rectangle bounds must satisfy a_k < b_k");
    for (double x : b) {
      if (!std::isfinite(x)) throw DomainError("beta must be finite");
    }
  }

  double eta(double x1, double x2) const { return beta[0] + beta[1] * x1 + beta[2] * x2; }
};

/// Affine map between the original rectangle and [-1, 1]^2.
struct AffineTransform {
  double mid1 = 0.0, half1 = 1.0, mid2 = 0.0, half2 = 1.0;

  std::array<double, 2> to_original(double x1_unit, double x2_unit) const {
    return {mid1 + x1_unit * half1, mid2 + x2_unit * half2};
  }
  std::array<double, 2> to_unit(double x1, double x2) const { return {(x1 - mid1) / half1, (x2 - mid2) / half2}; }

  /// |T| for X_unit = X T, i.e. 4 / ((b1 - a1)(b2 - a2)).
  double det_T() const { return 1.0 / (half1 * half2); }
};

inline std::pair<ContinuousProblem, AffineTransform> rescale_problem(const ContinuousProblem& cp) {
  const auto& r = cp.bounds;
  AffineTransform tr{(r.a1 + r.b1) / 2.0, (r.b1 - r.a1) / 2.0, (r.a2 + r.b2) / 2.0, (r.b2 - r.a2) / 2.0};
  ContinuousProblem unit;
  unit.beta = {cp.beta[0] + cp.beta[1] * tr.mid1 + cp.beta[2] * tr.mid2, cp.beta[1] * tr.half1,
               cp.beta[2] * tr.half2};
  unit.bounds = Rectangle{};
  unit.weight_fn = cp.weight_fn;
  return {unit, tr};
}

inline bool is_unit_square(const Rectangle& r) { return r.a1 == -1.0 && r.b1 == 1.0 && r.a2 == -1.0 && r.b2 == 1.0; }

/// Corner order (1,1), (1,-1), (-1,1), (-1,-1) on the unit square.
inline constexpr std::array<std::array<double, 2>, 4> kCorners{{{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}};

inline std::array<double, 4> corner_weights(const ContinuousProblem& unit) {
  std::array<double, 4> w{};
  for (std::size_t i = 0; i < 4; ++i) w[i] = unit.weight_fn(unit.eta(kCorners[i][0], kCorners[i][1]));
  return w;
}

/// 16 (q1 q2 q3 + q1 q2 q4 + q1 q3 q4 + q2 q3 q4) with q_i = p_i w_i.
inline double corner_objective(const Allocation& p4, const std::array<double, 4>& w) {
  const double q1 = p4[0] * w[0], q2 = p4[1] * w[1], q3 = p4[2] * w[2], q4 = p4[3] * w[3];
  return 16.0 * (q1 * q2 * q3 + q1 * q2 * q4 + q1 * q3 * q4 + q2 * q3 * q4);
}

/// The quadratic form h(a, b) obtained from f(p50) - 2 f5(1/2) for a fifth
/// candidate point (a, b).
inline double h_ab(double a, double b, const Allocation& p4, const std::array<double, 4>& w) {
  const double p1 = p4[0], p2 = p4[1], p3 = p4[2], p4v = p4[3];
  const double w1 = w[0], w2 = w[1], w3 = w[2], w4 = w[3];
  const double t12 = p1 * p2 * w1 * w2, t13 = p1 * p3 * w1 * w3, t14 = p1 * p4v * w1 * w4;
  const double t23 = p2 * p3 * w2 * w3, t24 = p2 * p4v * w2 * w4, t34 = p3 * p4v * w3 * w4;
  return t12 + t13 + t24 + t34                 //
         + b * b * (t13 + t23 + t14 + t24)     //
         + 2.0 * b * (-t13 + t24)              //
         + a * a * (t12 + t23 + t14 + t34)     //
         + 2.0 * a * (-t12 + t34)              //
         + 2.0 * a * b * (t23 - t14);
}

struct BoundaryConfig {
  int grid_steps = 201;        // per axis on [-1, 1]
  double polish_tol = 1e-10;   // final compass step in (a, b)
  int polish_starts = 8;       // lowest grid local minima to refine
  double verdict_rel_tol = 1e-10;
};

struct BoundaryVerdict {
  bool boundary_optimal = false;
  double min_s = 0.0;
  std::array<double, 2> argmin{};
  Allocation p4;
  double f_p4 = 0.0;
  double tol_s = 0.0;
};

/// s(a, b) for a fixed problem and corner allocation.
class BoundaryScore {
 public:
  BoundaryScore(const ContinuousProblem& unit, Allocation p4, const std::array<double, 4>& w)
      : unit_(unit), p4_(std::move(p4)), w_(w), f_p4_(corner_objective(p4_, w)) {}

  double operator()(double a, double b) const {
    return 0.75 * f_p4_ - unit_.weight_fn(unit_.eta(a, b)) * h_ab(a, b, p4_, w_);
  }

  double f_p4() const { return f_p4_; }
  const Allocation& p4() const { return p4_; }

 private:
  ContinuousProblem unit_;
  Allocation p4_;
  std::array<double, 4> w_;
  double f_p4_;
};

namespace detail {

inline std::pair<std::array<double, 2>, double> compass_polish(const BoundaryScore& s, std::array<double, 2> x,
                                                               double step, double tol) {
  double best = s(x[0], x[1]);
  static constexpr std::array<std::array<double, 2>, 8> dirs{
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  while (step >= tol) {
    bool moved = false;
    for (const auto& d : dirs) {
      const double a = std::clamp(x[0] + step * d[0], -1.0, 1.0);
      const double b = std::clamp(x[1] + step * d[1], -1.0, 1.0);
      const double val = s(a, b);
      if (val < best) {
        best = val;
        x = {a, b};
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return {x, best};
}

}  // namespace detail

/// Decides whether the four corners support a D-optimal design. The problem
/// is rescaled to the unit square first if needed; p4 always comes from the
/// analytic 2^2 solver.
inline BoundaryVerdict check_boundary_optimal(const ContinuousProblem& cp, const BoundaryConfig& config = {}) {
  if (config.grid_steps < 2) throw DomainError("boundary grid needs at least 2 steps per axis");
  const ContinuousProblem unit = is_unit_square(cp.bounds) ? cp : rescale_problem(cp).first;
  const auto w = corner_weights(unit);
  const std::array<double, 4> v{1.0 / w[0], 1.0 / w[1], 1.0 / w[2], 1.0 / w[3]};
  const SolveReport corners = solve_22(v);
  const BoundaryScore score(unit, corners.allocation, w);

  const int m = config.grid_steps;
  const double h = 2.0 / (m - 1);
  std::vector<double> grid(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
  auto at = [&](int i, int j) -> double& { return grid[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)]; };
  auto coord = [&](int i) { return i == m - 1 ? 1.0 : -1.0 + h * i; };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) at(i, j) = score(coord(i), coord(j));
  }

  // Grid local minima (8-neighbourhood), lowest first.
  std::vector<std::pair<double, std::array<int, 2>>> minima;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double val = at(i, j);
      bool local = true;
      for (int di = -1; di <= 1 && local; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = i + di, jj = j + dj;
          if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= m || jj >= m) continue;
          if (at(ii, jj) < val) {
            local = false;
            break;
          }
        }
      }
      if (local) minima.push_back({val, {i, j}});
    }
  }
  std::sort(minima.begin(), minima.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

  BoundaryVerdict verdict;
  verdict.p4 = score.p4();
  verdict.f_p4 = score.f_p4();
  verdict.min_s = INFINITY;
  const std::size_t starts = std::min(minima.size(), static_cast<std::size_t>(std::max(config.polish_starts, 1)));
  for (std::size_t k = 0; k < starts; ++k) {
    const auto [i, j] = minima[k].second;
    const auto [x, val] = detail::compass_polish(score, {coord(i), coord(j)}, h, config.polish_tol);
    if (val < verdict.min_s) {
      verdict.min_s = val;
      verdict.argmin = x;
    }
  }
  verdict.tol_s = config.verdict_rel_tol * verdict.f_p4;
  verdict.boundary_optimal = verdict.min_s >= -verdict.tol_s;
  return verdict;
}

// ---------------------------------------------------------------------------
// Region sweeps over (beta1, beta2)
// ---------------------------------------------------------------------------

/// Closed interval sampled at `steps` points. Endpoints are exact and inner
/// nodes are placed symmetrically about the midpoint, so a symmetric range
/// gives exactly negated values. A single step samples the midpoint.
struct GridAxis {
  double lo = -2.0;
  double hi = 2.0;
  int steps = 41;

  double value(int i) const {
    if (steps <= 1) return 0.5 * (lo + hi);
    if (i == 0) return lo;
    if (i == steps - 1) return hi;
    const double step = (hi - lo) / (steps - 1);
    return 0.5 * (lo + hi) + (i - 0.5 * (steps - 1)) * step;
  }
};

struct RegionNode {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double min_s = 0.0;
  bool verdict = false;
  bool ok = true;  // false when the node's solve failed; recorded as missing
};

struct RegionGrid {
  double beta0 = 0.0;
  GridAxis axis1, axis2;
  std::vector<RegionNode> nodes;  // row-major: beta1 index outer

  const RegionNode& at(int i, int j) const {
    return nodes[static_cast<std::size_t>(i) * static_cast<std::size_t>(axis2.steps) + static_cast<std::size_t>(j)];
  }
};

inline RegionGrid region_sweep(double beta0, const GridAxis& axis1, const GridAxis& axis2, const WeightFunction& fn,
                               const BoundaryConfig& config = {}, unsigned threads = 1) {
  if (axis1.steps < 1 || axis2.steps < 1) throw DomainError("region grid needs at least one step per axis");
  if (!std::isfinite(axis1.lo) || !std::isfinite(axis1.hi) || !std::isfinite(axis2.lo) || !std::isfinite(axis2.hi)) {
    throw DomainError("region grid bounds must be finite");
  }
  RegionGrid grid{beta0, axis1, axis2, {}};
  const std::size_t total = static_cast<std::size_t>(axis1.steps) * static_cast<std::size_t>(axis2.steps);
  grid.nodes.resize(total);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < total; k += stride) {
      const int i = static_cast<int>(k / static_cast<std::size_t>(axis2.steps));
      const int j = static_cast<int>(k % static_cast<std::size_t>(axis2.steps));
      RegionNode node;
      node.beta1 = axis1.value(i);
      node.beta2 = axis2.value(j);
      try {
        const auto verdict = check_boundary_optimal(ContinuousProblem({beta0, node.beta1, node.beta2}, {}, fn), config);
        node.min_s = verdict.min_s;
        node.verdict = verdict.boundary_optimal;
      } catch (const std::exception&) {
        node.ok = false;
        node.min_s = NAN;
      }
      grid.nodes[k] = node;
    }
  };
  threads = std::max(1U, threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  return grid;
}

/// Number of 4-connected pieces of verdict-true nodes.
inline std::size_t count_region_pieces(const RegionGrid& grid) {
  const int m1 = grid.axis1.steps, m2 = grid.axis2.steps;
  std::vector<int> label(grid.nodes.size(), -1);
  std::size_t pieces = 0;
  std::vector<std::pair<int, int>> stack;
  for (int i = 0; i < m1; ++i) {
    for (int j = 0; j < m2; ++j) {
      const auto k = static_cast<std::size_t>(i * m2 + j);
      if (!grid.nodes[k].verdict || label[k] >= 0) continue;
      stack.push_back({i, j});
      label[k] = static_cast<int>(pieces);
      while (!stack.empty()) {
        const auto [ci, cj] = stack.back();
        stack.pop_back();
        const std::array<std::pair<int, int>, 4> nbrs{{{ci + 1, cj}, {ci - 1, cj}, {ci, cj + 1}, {ci, cj - 1}}};
        for (const auto& [ni, nj] : nbrs) {
          if (ni < 0 || nj < 0 || ni >= m1 || nj >= m2) continue;
          const auto nk = static_cast<std::size_t>(ni * m2 + nj);
          if (grid.nodes[nk].verdict && label[nk] < 0) {
            label[nk] = static_cast<int>(pieces);
            stack.push_back({ni, nj});
          }
        }
      }
      ++pieces;
    }
  }
  return pieces;
}

struct BoundarySegment {
  double x0, y0, x1, y1;  // (beta1, beta2) endpoints
};

/// Marching squares on the 0/1 verdict field at level 1/2: segments
/// separating verdict-true from verdict-false nodes.
inline std::vector<BoundarySegment> region_boundary(const RegionGrid& grid) {
  std::vector<BoundarySegment> segments;
  const int m1 = grid.axis1.steps, m2 = grid.axis2.steps;
  auto val = [&](int i, int j) { return grid.at(i, j).verdict ? 1 : 0; };
  auto mid = [&](int i0, int j0, int i1, int j1) {
    return std::array<double, 2>{0.5 * (grid.axis1.value(i0) + grid.axis1.value(i1)),
                                 0.5 * (grid.axis2.value(j0) + grid.axis2.value(j1))};
  };
  for (int i = 0; i + 1 < m1; ++i) {
    for (int j = 0; j + 1 < m2; ++j) {
      // corners: c0 (i,j), c1 (i+1,j), c2 (i+1,j+1), c3 (i,j+1)
      const int code = val(i, j) | (val(i + 1, j) << 1) | (val(i + 1, j + 1) << 2) | (val(i, j + 1) << 3);
      if (code == 0 || code == 15) continue;
      const auto e0 = mid(i, j, i + 1, j);          // bottom
      const auto e1 = mid(i + 1, j, i + 1, j + 1);  // right
      const auto e2 = mid(i, j + 1, i + 1, j + 1);  // top
      const auto e3 = mid(i, j, i, j + 1);          // left
      auto add = [&](const std::array<double, 2>& p, const std::array<double, 2>& q) {
        segments.push_back({p[0], p[1], q[0], q[1]});
      };
      switch (code) {
        case 1: case 14: add(e3, e0); break;
        case 2: case 13: add(e0, e1); break;
        case 3: case 12: add(e3, e1); break;
        case 4: case 11: add(e1, e2); break;
        case 6: case 9: add(e0, e2); break;
        case 7: case 8: add(e3, e2); break;
        case 5: add(e3, e0); add(e1, e2); break;
        case 10: add(e0, e1); add(e2, e3); break;
        default: break;
      }
    }
  }
  return segments;
}

}  // namespace dopt
