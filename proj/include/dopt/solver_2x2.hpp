#pragma once

// Analytic D-optimal allocation for four-point problems in reduced form
//
//     f(p) = v1 p2 p3 p4 + p1 v2 p3 p4 + p1 p2 v3 p4 + p1 p2 p3 v4,
//
// which covers the 2^2 main-effects model (v_i = 1/w_i) and any two-factor
// four-point design after the minor reduction in solver_twofactor.hpp.
// Everything is computed on ascending v and mapped back at the boundary.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <string>

#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"

namespace dopt {

/// Two coefficients count as equal when they differ by at most this times
/// the largest coefficient; a coefficient this small counts as zero.
inline constexpr double kTieTolerance = 1e-9;

/// Relative rounding applied before the "largest dominates the rest" test.
inline constexpr double kDominanceRounding = 1e-12;

/// Ascending coefficients plus the permutation back to input order:
/// perm[k] is the input position of sorted entry k.
struct VCoefficients {
  std::array<double, 4> v{};
  std::array<std::size_t, 4> perm{0, 1, 2, 3};

  VCoefficients() = default;

  static VCoefficients from_unsorted(const std::array<double, 4>& raw) {
    VCoefficients out;
    std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
    std::stable_sort(out.perm.begin(), out.perm.end(),
                     [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
    for (std::size_t k = 0; k < 4; ++k) out.v[k] = raw[out.perm[k]];
    return out;
  }

  Allocation to_input_order(const std::array<double, 4>& sorted_p) const {
    std::vector<double> p(4);
    for (std::size_t k = 0; k < 4; ++k) p[perm[k]] = sorted_p[k];
    return Allocation(std::move(p));
  }

  double scale() const { return v[3]; }
};

inline double reduced_objective4(const std::array<double, 4>& v, const Allocation& p) {
  return reduced_objective(std::span<const double>(v.data(), v.size()), p);
}

// ---------------------------------------------------------------------------
// KKT residuals
// ---------------------------------------------------------------------------

/// max_{i,j} |df/dp_i - df/dp_j| at an interior allocation; empty when some
/// p_i = 0, where the equal-gradient condition does not apply.
inline std::optional<double> kkt_residual(std::span<const double> v, const Allocation& p) {
  if (!p.interior()) return std::nullopt;
  const auto g = reduced_gradient(v, p);
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  return *hi - *lo;
}

inline std::optional<double> kkt_residual(const VCoefficients& v, const Allocation& sorted_p) {
  return kkt_residual(std::span<const double>(v.v.data(), 4), sorted_p);
}

/// Simplex KKT violation valid on the boundary as well: spread of the
/// gradient over the support plus any excess of an off-support gradient.
inline double kkt_violation(std::span<const double> v, const Allocation& p) {
  const auto g = reduced_gradient(v, p);
  double lo = INFINITY, hi = -INFINITY, off = -INFINITY;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (p[i] > 0.0) {
      lo = std::min(lo, g[i]);
      hi = std::max(hi, g[i]);
    } else {
      off = std::max(off, g[i]);
    }
  }
  if (!std::isfinite(lo)) return INFINITY;
  return (hi - lo) + std::max(0.0, off - hi);
}

// ---------------------------------------------------------------------------
// Quartic for the general case
// ---------------------------------------------------------------------------

/// Coefficients and intermediates of the quartic whose largest root is
/// y1 = p1/p4.
struct QuarticSolveState {
  std::array<double, 5> c{};
  std::array<double, 4> a{};
  std::complex<double> E1, F1, G1, A1, C1;
  double y1 = 0.0;
  double residual = 0.0;  // |quartic(y1)|
  bool fallback = false;
};

/// c0..c4 for ascending v.
inline std::array<double, 5> quartic_coefficients(const std::array<double, 4>& v) {
  const double v1 = v[0], v2 = v[1], v3 = v[2], v4 = v[3];
  std::array<double, 5> c{};
  c[0] = 2.0 * v1 * v1 * v1 * (-v1 + v2 + v3 + v4);
  c[1] = v1 * v1 * ((-v1 - v2 + v3 + v4) * (-v1 - v2 + v3 + v4) + 4.0 * (v4 - v1) * (v2 + v4));
  c[2] = 2.0 * v1 * v4 * (2.0 * (v1 - v4) * (v1 - v4) - (v2 - v3) * (v2 - v3) - (v1 + v4) * (v2 + v3));
  c[3] = v4 * v4 * ((v1 - v2 + v3 - v4) * (v1 - v2 + v3 - v4) - 4.0 * (v4 - v1) * (v1 + v2));
  c[4] = 2.0 * (v1 + v2 + v3 - v4) * v4 * v4 * v4;
  return c;
}

inline double quartic_eval(const std::array<double, 5>& c, double y) {
  return (((c[4] * y + c[3]) * y + c[2]) * y + c[1]) * y + c[0];
}

inline double quartic_residual_scale(const std::array<double, 5>& c, double y) {
  double big = 0.0;
  for (double ci : c) big = std::max(big, std::abs(ci));
  return big * y * y * y * y;
}

inline constexpr double kQuarticResidualTolerance = 1e-9;

namespace detail {

// Unique root in (1, Y): the quartic is negative at 1 and positive beyond
// the Cauchy bound Y.
inline double bisect_quartic_root(const std::array<double, 5>& c) {
  double lo = 1.0;
  double hi = 1.0;
  for (std::size_t i = 0; i < 4; ++i) hi += std::abs(c[i]) / c[4];
  if (!(quartic_eval(c, lo) < 0.0) || !(quartic_eval(c, hi) > 0.0)) {
    throw NumericalError("quartic root is not bracketed in (1, Y)");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (quartic_eval(c, mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Largest real root (> 1) of c0 + c1 y + ... + c4 y^4 via the radical
/// formula in complex arithmetic (principal branches, real part kept). If the
/// residual check fails the root is isolated by bisection instead and
/// `fallback` is set.
inline QuarticSolveState quartic_largest_root(const std::array<double, 5>& c) {
  if (!(c[0] > 0.0) || !(c[4] > 0.0)) {
    throw DomainError("quartic_largest_root: expects c0 > 0 and c4 > 0");
  }
  using cd = std::complex<double>;
  QuarticSolveState s;
  s.c = c;
  for (std::size_t i = 0; i < 4; ++i) s.a[i] = c[i] / c[4];
  const double a0 = s.a[0], a1 = s.a[1], a2 = s.a[2], a3 = s.a[3];

  s.E1 = cd(12.0 * a0 + a2 * a2 - 3.0 * a1 * a3);
  s.F1 = cd(27.0 * a1 * a1 - 72.0 * a0 * a2 + 2.0 * a2 * a2 * a2 - 9.0 * a1 * a2 * a3 + 27.0 * a0 * a3 * a3);
  const cd disc = std::sqrt(s.F1 * s.F1 - 4.0 * s.E1 * s.E1 * s.E1);
  s.G1 = std::pow(s.F1 - disc, 1.0 / 3.0) + std::pow(s.F1 + disc, 1.0 / 3.0);
  const double cbrt2 = std::cbrt(2.0);
  s.A1 = -2.0 * a2 / 3.0 + a3 * a3 / 4.0 + s.G1 / (3.0 * cbrt2);
  const cd sqrtA1 = std::sqrt(s.A1);
  s.C1 = -4.0 * a2 / 3.0 + a3 * a3 / 2.0 - s.G1 / (3.0 * cbrt2) +
         (-8.0 * a1 + 4.0 * a2 * a3 - a3 * a3 * a3) / (4.0 * sqrtA1);
  const cd y = -a3 / 4.0 + sqrtA1 / 2.0 + std::sqrt(s.C1) / 2.0;
  s.y1 = y.real();

  const bool ok = std::isfinite(s.y1) && s.y1 > 1.0 &&
                  std::abs(quartic_eval(c, s.y1)) <= kQuarticResidualTolerance * quartic_residual_scale(c, s.y1);
  if (!ok) {
    s.y1 = detail::bisect_quartic_root(c);
    s.fallback = true;
  }
  s.residual = std::abs(quartic_eval(c, s.y1));
  return s;
}

// ---------------------------------------------------------------------------
// Back substitution y1 -> (y2, y3, p)
// ---------------------------------------------------------------------------

struct BackSubstitution {
  double y2 = 0.0;
  double y3 = 0.0;
  std::array<double, 4> p{};  // ascending-v order
};

/// Recovers y2 = p2/p4 as the positive root of the quadratic left after
/// eliminating y3, then y3 = p3/p4, then normalizes.
inline BackSubstitution back_substitute(double y1, const std::array<double, 4>& v) {
  const double v1 = v[0], v2 = v[1], v3 = v[2], v4 = v[3];
  if (!(y1 > 1.0)) throw DomainError("back_substitute: y1 must exceed 1");
  const double L = v1 + v4 * y1;
  const double lead = L * L - (v3 - v2) * v4 * y1 * y1;
  double D2 = lead * lead - 4.0 * v2 * (v4 - v3) * L * L * y1 * y1;
  if (D2 < 0.0) {
    if (D2 < -1e-12 * lead * lead) throw NumericalError("back_substitute: negative discriminant D2");
    D2 = 0.0;
  }
  // y2 = (B + sqrt(D2)) / (2 v1 L) with B the linear coefficient of the
  // quadratic; the conjugate form 2C / (sqrt(D2) - B) is used when B < 0.
  const double B = v1 * v1 + 2.0 * v1 * (v4 - v2) * y1 + v4 * (v4 - v2 - v3) * y1 * y1;
  const double C = v2 * y1 * (v1 + (v3 + v4 - v2) * y1);
  const double root = std::sqrt(D2);
  const double y2 = B >= 0.0 ? (B + root) / (2.0 * v1 * L) : 2.0 * C / (root - B);
  if (!std::isfinite(y2) || !(y2 > 0.0)) throw NumericalError("back_substitute: no positive y2");
  const double y3 = 1.0 + (v4 - v3) * y1 * y2 / (v2 * y1 + v1 * y2);
  const double total = y1 + y2 + y3 + 1.0;
  return {y2, y3, {y1 / total, y2 / total, y3 / total, 1.0 / total}};
}

// ---------------------------------------------------------------------------
// One zero coefficient (rank-3 two-factor designs with three collinear points)
// ---------------------------------------------------------------------------

namespace detail {

inline bool tied(double a, double b, double scale) { return std::abs(a - b) <= kTieTolerance * scale; }

inline bool dominates(double largest, double rest) {
  return largest >= rest - kDominanceRounding * std::abs(rest);
}

inline void fill_kkt(SolveReport& report, const std::array<double, 4>& sorted_v,
                     const std::array<double, 4>& sorted_p) {
  const Allocation p(std::vector<double>(sorted_p.begin(), sorted_p.end()));
  report.diagnostics["kkt_residual"] = kkt_violation(std::span<const double>(sorted_v.data(), 4), p);
}

}  // namespace detail

/// Ascending u with u[0] treated as zero: cases (2a)-(2d). The zero point
/// always receives 1/3.
inline SolveReport solve_one_zero(const VCoefficients& sorted) {
  const double u2 = sorted.v[1], u3 = sorted.v[2], u4 = sorted.v[3];
  const double scale = u4;
  std::array<double, 4> p{};
  std::string label;
  if (detail::dominates(u4, u2 + u3)) {
    p = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0};
    label = "twofactor-2a";
  } else if (detail::tied(u2, u3, scale)) {
    const double u = 0.5 * (u2 + u3);
    const double den = 4.0 * u - u4;
    p = {1.0 / 3.0, 2.0 * u / (3.0 * den), 2.0 * u / (3.0 * den), 0.5 - (4.0 * u + u4) / (6.0 * den)};
    label = "twofactor-2b";
  } else if (detail::tied(u3, u4, scale)) {
    const double u = 0.5 * (u3 + u4);
    const double den = 4.0 * u - u2;
    p = {1.0 / 3.0, 0.5 - (u2 + 4.0 * u) / (6.0 * den), 2.0 * u / (3.0 * den), 2.0 * u / (3.0 * den)};
    label = "twofactor-2c";
  } else {
    const double delta = 2.0 * u2 * u3 + 2.0 * u2 * u4 + 2.0 * u3 * u4 - u2 * u2 - u3 * u3 - u4 * u4;
    p = {1.0 / 3.0, 2.0 * u2 * (u3 + u4 - u2) / (3.0 * delta), 2.0 * u3 * (u2 + u4 - u3) / (3.0 * delta),
         2.0 * u4 * (u2 + u3 - u4) / (3.0 * delta)};
    label = "twofactor-2d";
  }
  SolveReport report;
  std::array<double, 4> v_zeroed = sorted.v;
  v_zeroed[0] = 0.0;
  report.allocation = sorted.to_input_order(p);
  report.objective = reduced_objective4(v_zeroed, Allocation(std::vector<double>(p.begin(), p.end())));
  report.case_label = std::move(label);
  detail::fill_kkt(report, v_zeroed, p);
  return report;
}

// ---------------------------------------------------------------------------
// Theorem-1 dispatcher
// ---------------------------------------------------------------------------

/// Case (v) on strictly ordered 0 < v1 < v2 < v3 < v4 < v1 + v2 + v3.
/// Exposed separately so callers can force the quartic path.
inline SolveReport solve_22_general(const VCoefficients& sorted) {
  const auto c = quartic_coefficients(sorted.v);
  const auto quartic = quartic_largest_root(c);
  const auto back = back_substitute(quartic.y1, sorted.v);
  SolveReport report;
  report.allocation = sorted.to_input_order(back.p);
  report.objective = reduced_objective4(sorted.v, Allocation(std::vector<double>(back.p.begin(), back.p.end())));
  report.case_label = "2x2-case-v";
  report.diagnostics["y1"] = quartic.y1;
  report.diagnostics["y2"] = back.y2;
  report.diagnostics["y3"] = back.y3;
  report.diagnostics["quartic_residual"] = quartic.residual;
  report.diagnostics["quartic_fallback"] = quartic.fallback ? 1.0 : 0.0;
  detail::fill_kkt(report, sorted.v, back.p);
  return report;
}

/// Maximizer of f over the simplex for any v >= 0 with at most one zero.
/// The case label records which closed form fired: "2x2-case-i" .. "2x2-case-v",
/// or "twofactor-2a" .. "twofactor-2d" when one coefficient is zero.
inline SolveReport solve_22(const std::array<double, 4>& raw) {
  for (double x : raw) {
    if (!std::isfinite(x) || x < 0.0) throw DomainError("solve_22: coefficients must be finite and >= 0");
  }
  const VCoefficients sorted = VCoefficients::from_unsorted(raw);
  const auto& v = sorted.v;
  const double scale = v[3];
  if (!(scale > 0.0)) throw DegenerateError("degenerate: use solver_twofactor rank analysis");
  const auto zeros = std::count_if(v.begin(), v.end(), [&](double x) { return x <= kTieTolerance * scale; });
  if (zeros > 1) throw DegenerateError("degenerate: use solver_twofactor rank analysis");
  if (zeros == 1) return solve_one_zero(sorted);

  std::array<double, 4> p{};
  std::string label;
  if (detail::dominates(v[3], v[0] + v[1] + v[2])) {
    SolveReport report;
    p = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0};
    report.allocation = sorted.to_input_order(p);
    report.objective = v[3] / 27.0;
    report.case_label = "2x2-case-i";
    detail::fill_kkt(report, v, p);
    return report;
  }
  if (detail::tied(v[0], v[1], scale)) {
    const double v1 = 0.5 * (v[0] + v[1]), v3 = v[2], v4 = v[3];
    const double delta = v3 + v4 - 4.0 * v1;
    const double den = -2.0 * delta + std::sqrt(delta * delta + 12.0 * v3 * v4);
    p = {2.0 * v1 / den, 2.0 * v1 / den, 0.5 + (v4 - v3 - 4.0 * v1) / (2.0 * den),
         0.5 - (v4 - v3 + 4.0 * v1) / (2.0 * den)};
    label = "2x2-case-ii";
  } else if (detail::tied(v[1], v[2], scale)) {
    const double v1 = v[0], v2 = 0.5 * (v[1] + v[2]), v4 = v[3];
    const double delta = v1 + v4 - 4.0 * v2;
    const double den = -2.0 * delta + std::sqrt(delta * delta + 12.0 * v1 * v4);
    p = {0.5 + (v4 - v1 - 4.0 * v2) / (2.0 * den), 2.0 * v2 / den, 2.0 * v2 / den,
         0.5 - (v4 - v1 + 4.0 * v2) / (2.0 * den)};
    label = "2x2-case-iii";
  } else if (detail::tied(v[2], v[3], scale)) {
    const double v1 = v[0], v2 = v[1], v3 = 0.5 * (v[2] + v[3]);
    const double delta = v1 + v2 - 4.0 * v3;
    const double den = -2.0 * delta + std::sqrt(delta * delta + 12.0 * v1 * v2);
    p = {0.5 + (v2 - v1 - 4.0 * v3) / (2.0 * den), 0.5 - (v2 - v1 + 4.0 * v3) / (2.0 * den), 2.0 * v3 / den,
         2.0 * v3 / den};
    label = "2x2-case-iv";
  } else {
    return solve_22_general(sorted);
  }
  SolveReport report;
  report.allocation = sorted.to_input_order(p);
  report.objective = reduced_objective4(v, Allocation(std::vector<double>(p.begin(), p.end())));
  report.case_label = std::move(label);
  detail::fill_kkt(report, v, p);
  return report;
}

inline SolveReport solve_22(const VCoefficients& v) {
  std::array<double, 4> raw{};
  for (std::size_t k = 0; k < 4; ++k) raw[v.perm[k]] = v.v[k];
  return solve_22(raw);
}

}  // namespace dopt
