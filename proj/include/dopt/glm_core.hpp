#pragma once

// Domain types for locally D-optimal approximate designs under GLMs:
// information-weight functions, design problems, allocations, solver
// reports, and the determinant objective |X'WX| with W = Diag{p_i w_i}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dopt/errors.hpp"

namespace dopt {

// ---------------------------------------------------------------------------
// Weight functions
// ---------------------------------------------------------------------------

enum class WeightKind { logit, log_poisson, probit, identity_constant, user_tabulated };

inline std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::logit: return "logit";
    case WeightKind::log_poisson: return "log_poisson";
    case WeightKind::probit: return "probit";
    case WeightKind::identity_constant: return "identity_constant";
    case WeightKind::user_tabulated: return "user_tabulated";
  }
  return "unknown";
}

inline std::optional<WeightKind> weight_kind_from_string(const std::string& name) {
  if (name == "logit") return WeightKind::logit;
  if (name == "log_poisson" || name == "poisson" || name == "log") return WeightKind::log_poisson;
  if (name == "probit") return WeightKind::probit;
  if (name == "identity_constant" || name == "identity") return WeightKind::identity_constant;
  if (name == "user_tabulated" || name == "tabulated") return WeightKind::user_tabulated;
  return std::nullopt;
}

namespace detail {

// log Phi(x) for x <= 0, accurate far into the lower tail.
inline double log_normal_lower_tail(double x) {
  const double tail = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  if (tail > 1e-300) return std::log(tail);
  // Mills-ratio asymptotics once erfc underflows.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-x) + std::log(series);
}

}  // namespace detail

/// The GLM information weight nu(eta) = ((g^-1)')^2 / Var(Y), mapping the
/// linear predictor to the per-observation weight of a design point.
///
/// Only nu is represented; links not in the catalog are supplied as a table
/// of (eta, w) pairs interpolated linearly and held constant outside the
/// tabulated range.
class WeightFunction {
 public:
  WeightFunction() = default;

  static WeightFunction logit() { return WeightFunction(WeightKind::logit); }
  static WeightFunction log_poisson() { return WeightFunction(WeightKind::log_poisson); }
  static WeightFunction probit() { return WeightFunction(WeightKind::probit); }

  static WeightFunction identity_constant(double value = 1.0) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw DomainError("identity_constant weight must be positive and finite");
    }
    WeightFunction fn(WeightKind::identity_constant);
    fn.constant_ = value;
    return fn;
  }

  /// Table rows are (eta, w) with strictly increasing eta and w > 0.
  static WeightFunction tabulated(std::vector<std::pair<double, double>> table) {
    if (table.empty()) throw DomainError("tabulated weight needs at least one row");
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto [eta, w] = table[i];
      if (!std::isfinite(eta) || !std::isfinite(w) || !(w > 0.0)) {
        throw DomainError("tabulated weight rows must be finite with w > 0");
      }
      if (i > 0 && !(eta > table[i - 1].first)) {
        throw DomainError("tabulated weight eta values must be strictly increasing");
      }
    }
    WeightFunction fn(WeightKind::user_tabulated);
    fn.table_ = std::move(table);
    return fn;
  }

  WeightKind kind() const noexcept { return kind_; }
  double constant() const noexcept { return constant_; }
  const std::vector<std::pair<double, double>>& table() const noexcept { return table_; }

  double operator()(double eta) const {
    if (!std::isfinite(eta)) throw DomainError("weight_eval: linear predictor is not finite");
    switch (kind_) {
      case WeightKind::logit: {
        // e^eta / (1 + e^eta)^2 is even in eta; evaluate on the negative side.
        const double e = std::exp(-std::abs(eta));
        return e / ((1.0 + e) * (1.0 + e));
      }
      case WeightKind::log_poisson:
        return std::exp(eta);
      case WeightKind::probit: {
        const double log_phi = -0.5 * eta * eta - 0.5 * std::log(2.0 * std::numbers::pi);
        const double lower = detail::log_normal_lower_tail(-std::abs(eta));
        const double upper = std::log1p(-std::exp(lower));
        return std::exp(2.0 * log_phi - lower - upper);
      }
      case WeightKind::identity_constant:
        return constant_;
      case WeightKind::user_tabulated:
        return interpolate(eta);
    }
    return 0.0;
  }

 private:
  explicit WeightFunction(WeightKind kind) : kind_(kind) {}

  double interpolate(double eta) const {
    if (eta <= table_.front().first) return table_.front().second;
    if (eta >= table_.back().first) return table_.back().second;
    auto upper = std::upper_bound(table_.begin(), table_.end(), eta,
                                  [](double x, const auto& row) { return x < row.first; });
    auto lower = upper - 1;
    const double t = (eta - lower->first) / (upper->first - lower->first);
    return lower->second + t * (upper->second - lower->second);
  }

  WeightKind kind_ = WeightKind::logit;
  double constant_ = 1.0;
  std::vector<std::pair<double, double>> table_;
};

inline double weight_eval(const WeightFunction& fn, double eta) { return fn(eta); }

// ---------------------------------------------------------------------------
// Allocation and solver report
// ---------------------------------------------------------------------------

inline constexpr double kSimplexTolerance = 1e-12;

/// Proportions of experimental effort on the candidate design points.
struct Allocation {
  std::vector<double> p;

  Allocation() = default;
  explicit Allocation(std::vector<double> values) : p(std::move(values)) {}

  static Allocation uniform(std::size_t n) {
    return Allocation(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const noexcept { return p.size(); }
  double operator[](std::size_t i) const { return p[i]; }
  double& operator[](std::size_t i) { return p[i]; }

  double sum() const { return std::accumulate(p.begin(), p.end(), 0.0); }

  bool is_feasible(double tol = kSimplexTolerance) const {
    if (p.empty()) return false;
    for (double x : p) {
      if (!std::isfinite(x) || x < 0.0) return false;
    }
    return std::abs(sum() - 1.0) <= tol;
  }

  bool interior() const {
    return std::all_of(p.begin(), p.end(), [](double x) { return x > 0.0; });
  }
};

/// Outcome of a solver: allocation, objective value, which analytic case
/// fired, and named numeric diagnostics (mu, lambda, y-values, residuals).
struct SolveReport {
  Allocation allocation;
  double objective = 0.0;
  std::string case_label;
  std::map<std::string, double> diagnostics;
};

// ---------------------------------------------------------------------------
// Design problem
// ---------------------------------------------------------------------------

namespace detail {

inline double canonical(double x) { return std::nearbyint(x * 1e12); }

inline bool rows_equal(const Eigen::MatrixXd& X, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    if (canonical(X(a, c)) != canonical(X(b, c))) return false;
  }
  return true;
}

}  // namespace detail

/// Design matrix X (n points x d model terms), optional assumed parameters,
/// and the derived information weights w_i = nu(x_i' beta).
class DesignProblem {
 public:
  static DesignProblem from_model(Eigen::MatrixXd X, Eigen::VectorXd beta, WeightFunction fn) {
    if (beta.size() != X.cols()) {
      throw DimensionError("beta has " + std::to_string(beta.size()) + " entries but X has " +
                           std::to_string(X.cols()) + " columns");
    }
    Eigen::VectorXd w(X.rows());
    const Eigen::VectorXd eta = X * beta;
    for (Eigen::Index i = 0; i < X.rows(); ++i) w(i) = fn(eta(i));
    DesignProblem problem(std::move(X), std::move(w));
    problem.beta_ = std::move(beta);
    problem.weight_fn_ = std::move(fn);
    return problem;
  }

  /// Problems whose weights are known directly (or reconstructed to match a
  /// prescribed reduced objective).
  static DesignProblem from_weights(Eigen::MatrixXd X, Eigen::VectorXd w) {
    return DesignProblem(std::move(X), std::move(w));
  }

  const Eigen::MatrixXd& X() const noexcept { return X_; }
  const Eigen::VectorXd& w() const noexcept { return w_; }
  const std::optional<Eigen::VectorXd>& beta() const noexcept { return beta_; }
  const std::optional<WeightFunction>& weight_fn() const noexcept { return weight_fn_; }

  std::size_t points() const noexcept { return static_cast<std::size_t>(X_.rows()); }
  std::size_t terms() const noexcept { return static_cast<std::size_t>(X_.cols()); }

 private:
  DesignProblem(Eigen::MatrixXd X, Eigen::VectorXd w) : X_(std::move(X)), w_(std::move(w)) {
    if (X_.cols() < 1 || X_.rows() < 1) throw DimensionError("design matrix is empty");
    if (X_.rows() < X_.cols()) {
      throw DimensionError("need at least as many design points as model terms (n >= d)");
    }
    if (w_.size() != X_.rows()) throw DimensionError("weight vector length differs from row count");
    if (!X_.allFinite()) throw DomainError("design matrix has non-finite entries");
    for (Eigen::Index i = 0; i < w_.size(); ++i) {
      if (!std::isfinite(w_(i)) || !(w_(i) > 0.0)) {
        throw DomainError("weight w_" + std::to_string(i + 1) + " is not a positive finite number");
      }
    }
    for (Eigen::Index a = 0; a < X_.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < X_.rows(); ++b) {
        if (detail::rows_equal(X_, a, b)) {
          throw DomainError("design points " + std::to_string(a + 1) + " and " +
                            std::to_string(b + 1) + " are not distinct");
        }
      }
    }
  }

  Eigen::MatrixXd X_;
  Eigen::VectorXd w_;
  std::optional<Eigen::VectorXd> beta_;
  std::optional<WeightFunction> weight_fn_;
};

// ---------------------------------------------------------------------------
// Objective |X'WX|
// ---------------------------------------------------------------------------

inline void check_allocation_size(const DesignProblem& problem, const Allocation& p) {
  if (p.size() != problem.points()) {
    throw DimensionError("allocation has " + std::to_string(p.size()) + " entries but the design has " +
                         std::to_string(problem.points()) + " points");
  }
}

/// det(X'WX) with W = Diag{p_i w_i}, by partial-pivot LU. Allocations whose
/// support is smaller than d give exactly zero.
inline double objective_det(const DesignProblem& problem, const Allocation& p) {
  check_allocation_size(problem, p);
  const auto& X = problem.X();
  const auto& w = problem.w();
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (p[static_cast<std::size_t>(i)] > 0.0) support.push_back(i);
  }
  if (support.size() < problem.terms()) return 0.0;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  for (Eigen::Index i : support) {
    const double q = p[static_cast<std::size_t>(i)] * w(i);
    M.noalias() += q * X.row(i).transpose() * X.row(i);
  }
  const double det = Eigen::PartialPivLU<Eigen::MatrixXd>(M).determinant();
  return std::max(det, 0.0);
}

/// log det(X'WX) through Householder QR of sqrt(W) X. Stays finite where the
/// determinant itself under- or overflows. Returns -inf when singular.
inline double log_objective_det(const DesignProblem& problem, const Allocation& p) {
  check_allocation_size(problem, p);
  const auto& X = problem.X();
  const auto& w = problem.w();
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (p[static_cast<std::size_t>(i)] > 0.0) support.push_back(i);
  }
  if (support.size() < problem.terms()) return -INFINITY;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(support.size()), X.cols());
  for (std::size_t r = 0; r < support.size(); ++r) {
    const Eigen::Index i = support[r];
    A.row(static_cast<Eigen::Index>(r)) = std::sqrt(p[static_cast<std::size_t>(i)] * w(i)) * X.row(i);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const auto R = qr.matrixQR();
  double log_det = 0.0;
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    const double r = std::abs(R(k, k));
    if (r == 0.0) return -INFINITY;
    log_det += 2.0 * std::log(r);
  }
  return log_det;
}

/// Determinant of the square submatrix of X formed by the given rows.
inline double minor_det(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  if (rows.size() != static_cast<std::size_t>(X.cols())) {
    throw DimensionError("minor needs exactly d rows");
  }
  const auto d = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd sub(d, d);
  for (Eigen::Index r = 0; r < d; ++r) sub.row(r) = X.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
  return Eigen::PartialPivLU<Eigen::MatrixXd>(sub).determinant();
}

/// Minor of X with row `skip` removed (X must be (d+1) x d).
inline double leave_one_out_minor(const Eigen::MatrixXd& X, std::size_t skip) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < static_cast<std::size_t>(X.rows()); ++i) {
    if (i != skip) rows.push_back(i);
  }
  return minor_det(X, rows);
}

struct ExpansionTerm {
  std::vector<std::size_t> rows;  // 0-based, increasing
  double coefficient = 0.0;       // |X[rows]|^2 * prod w_rows
};

inline constexpr std::size_t kExpansionMaxPoints = 20;

/// All d-subsets of design points with coefficient |X[i_1..i_d]|^2 w_i1...w_id.
/// Sum of coefficient * prod p over the subsets equals det(X'WX).
inline std::vector<ExpansionTerm> objective_expansion(const DesignProblem& problem,
                                                      std::size_t max_points = kExpansionMaxPoints) {
  const std::size_t n = problem.points();
  const std::size_t d = problem.terms();
  if (n > max_points) {
    throw ExpansionTooLarge("expansion too large: " + std::to_string(n) + " points exceeds the guard of " +
                            std::to_string(max_points));
  }
  std::vector<ExpansionTerm> terms;
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    const double m = minor_det(problem.X(), idx);
    double coef = m * m;
    for (std::size_t i : idx) coef *= problem.w()(static_cast<Eigen::Index>(i));
    terms.push_back({idx, coef});
    // next combination in lexicographic order
    std::size_t k = d;
    while (k > 0 && idx[k - 1] == n - d + (k - 1)) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  return terms;
}

inline double evaluate_expansion(std::span<const ExpansionTerm> terms, const Allocation& p) {
  double total = 0.0;
  for (const auto& term : terms) {
    double prod = term.coefficient;
    for (std::size_t i : term.rows) prod *= p[i];
    total += prod;
  }
  return total;
}

/// General equivalence check for det(X'WX). With d_i = w_i x_i' M^-1 x_i,
/// an optimum has d_i = d on the support and d_i <= d elsewhere. Returns the
/// largest violation divided by d, or +inf when M is singular.
inline double equivalence_gap(const DesignProblem& problem, const Allocation& p) {
  check_allocation_size(problem, p);
  const auto& X = problem.X();
  const auto& w = problem.w();
  const auto d = static_cast<double>(problem.terms());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    M.noalias() += (p[static_cast<std::size_t>(i)] * w(i)) * X.row(i).transpose() * X.row(i);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) return INFINITY;
  double gap = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    const double di = w(i) * x.dot(ldlt.solve(x));
    gap = std::max(gap, p[static_cast<std::size_t>(i)] > 0.0 ? std::abs(di - d) : di - d);
  }
  return gap / d;
}

// ---------------------------------------------------------------------------
// Reduced objective f(p) = sum_j v_j prod_{i != j} p_i
// ---------------------------------------------------------------------------

/// The reduced multilinear objective shared by the 4-point and saturated
/// families; each coefficient multiplies the product of all other proportions.
inline double reduced_objective(std::span<const double> v, const Allocation& p) {
  const std::size_t n = v.size();
  if (p.size() != n) throw DimensionError("reduced objective: coefficient/allocation size mismatch");
  std::vector<double> prefix(n + 1, 1.0), suffix(n + 1, 1.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * p[i];
  for (std::size_t i = n; i > 0; --i) suffix[i - 1] = suffix[i] * p[i - 1];
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) total += v[j] * prefix[j] * suffix[j + 1];
  return total;
}

/// Partial derivatives of the reduced objective.
inline std::vector<double> reduced_gradient(std::span<const double> v, const Allocation& p) {
  const std::size_t n = v.size();
  if (p.size() != n) throw DimensionError("reduced gradient: coefficient/allocation size mismatch");
  std::vector<double> g(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      double prod = v[j];
      for (std::size_t i = 0; i < n; ++i) {
        if (i != j && i != k) prod *= p[i];
      }
      g[k] += prod;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Design-matrix helpers
// ---------------------------------------------------------------------------

/// Model term as the list of factor indices multiplied together; the empty
/// list is the intercept.
using ModelTerm = std::vector<std::size_t>;

inline Eigen::MatrixXd model_matrix(const std::vector<std::vector<double>>& points,
                                    const std::vector<ModelTerm>& terms) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(terms.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t c = 0; c < terms.size(); ++c) {
      double value = 1.0;
      for (std::size_t factor : terms[c]) {
        if (factor >= points[i].size()) throw DimensionError("model term references a missing factor");
        value *= points[i][factor];
      }
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = value;
    }
  }
  return X;
}

inline std::vector<ModelTerm> main_effect_terms(std::size_t factors) {
  std::vector<ModelTerm> terms{{}};
  for (std::size_t f = 0; f < factors; ++f) terms.push_back({f});
  return terms;
}

/// Intercept plus every interaction of order 1..max_order, grouped by order
/// and lexicographic within an order.
inline std::vector<ModelTerm> interaction_terms(std::size_t factors, std::size_t max_order) {
  std::vector<ModelTerm> terms{{}};
  for (std::size_t order = 1; order <= max_order && order <= factors; ++order) {
    std::vector<std::size_t> idx(order);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    while (true) {
      terms.push_back(idx);
      std::size_t k = order;
      while (k > 0 && idx[k - 1] == factors - order + (k - 1)) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t j = k; j < order; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return terms;
}

/// All 2^k combinations of +/-1 levels; the first factor varies slowest and
/// +1 precedes -1, so k = 2 gives (1,1), (1,-1), (-1,1), (-1,-1).
inline std::vector<std::vector<double>> full_factorial_points(std::size_t k) {
  const std::size_t n = std::size_t{1} << k;
  std::vector<std::vector<double>> points(n, std::vector<double>(k));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t bit = (i >> (k - 1 - f)) & 1U;
      points[i][f] = bit ? -1.0 : 1.0;
    }
  }
  return points;
}

/// 2^k x (2^k - 1) matrix: every interaction except the order-k one.
inline Eigen::MatrixXd full_factorial_matrix(std::size_t k) {
  return model_matrix(full_factorial_points(k), interaction_terms(k, k - 1));
}

inline Eigen::MatrixXd main_effects_2x2() { return model_matrix(full_factorial_points(2), main_effect_terms(2)); }

}  // namespace dopt
