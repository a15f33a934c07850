#pragma once

// JSON problem files. See docs/problem_file.md for the schema. Every
// validation failure throws InputError carrying the offending field path,
// e.g. "design_points[2][0]" or "beta".

#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dopt/boundary.hpp"
#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"

namespace dopt::app {

using json = nlohmann::json;

enum class ProblemKind { design, reduced, continuous };

struct ProblemFile {
  ProblemKind kind = ProblemKind::design;
  std::optional<WeightFunction> link;
  std::vector<double> beta;
  std::vector<std::vector<double>> design_points;
  std::vector<ModelTerm> model_terms;
  std::optional<std::vector<double>> weights;
  std::vector<double> reduced_coefficients;
  std::optional<Rectangle> bounds;

  /// Only valid for ProblemKind::design.
  DesignProblem design() const {
    const Eigen::MatrixXd X = model_matrix(design_points, model_terms);
    try {
      if (weights) {
        return DesignProblem::from_weights(X, Eigen::Map<const Eigen::VectorXd>(weights->data(),
                                                                                static_cast<Eigen::Index>(weights->size())));
      }
      return DesignProblem::from_model(X, Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size())),
                                       *link);
    } catch (const DomainError& e) {
      throw InputError(weights ? "weights" : "design_points", e.what());
    } catch (const DimensionError& e) {
      throw InputError("design_points", e.what());
    }
  }

  /// Only valid for ProblemKind::continuous.
  ContinuousProblem continuous() const {
    try {
      return ContinuousProblem({beta[0], beta[1], beta[2]}, *bounds, *link);
    } catch (const DomainError& e) {
      throw InputError("bounds", e.what());
    }
  }
};

namespace detail {

inline std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline double real_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw InputError(path, "must be finite");
  return x;
}

inline std::vector<double> real_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(real_at(j[i], index_path(path, i)));
  return out;
}

inline WeightFunction parse_link(const json& root) {
  if (!root.contains("link")) throw InputError("link", "missing (or give explicit weights)");
  const json& j = root["link"];
  if (!j.is_string()) throw InputError("link", "expected a string");
  const auto kind = weight_kind_from_string(j.get<std::string>());
  if (!kind) throw InputError("link", "unknown weight function '" + j.get<std::string>() + "'");
  try {
    switch (*kind) {
      case WeightKind::logit: return WeightFunction::logit();
      case WeightKind::log_poisson: return WeightFunction::log_poisson();
      case WeightKind::probit: return WeightFunction::probit();
      case WeightKind::identity_constant:
        return WeightFunction::identity_constant(root.contains("link_constant") ? real_at(root["link_constant"], "link_constant")
                                                                                : 1.0);
      case WeightKind::user_tabulated: {
        if (!root.contains("link_table")) throw InputError("link_table", "required for user_tabulated");
        const json& t = root["link_table"];
        if (!t.is_array()) throw InputError("link_table", "expected an array of [eta, weight] pairs");
        std::vector<std::pair<double, double>> table;
        for (std::size_t i = 0; i < t.size(); ++i) {
          const auto pair = real_array(t[i], index_path("link_table", i));
          if (pair.size() != 2) throw InputError(index_path("link_table", i), "expected [eta, weight]");
          table.emplace_back(pair[0], pair[1]);
        }
        return WeightFunction::tabulated(std::move(table));
      }
    }
  } catch (const DomainError& e) {
    throw InputError(*kind == WeightKind::user_tabulated ? "link_table" : "link_constant", e.what());
  }
  throw InputError("link", "unsupported");
}

inline std::vector<ModelTerm> parse_terms(const json& root, std::size_t factors) {
  if (!root.contains("model_terms")) return main_effect_terms(factors);
  const json& j = root["model_terms"];
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "main-effects") return main_effect_terms(factors);
    if (name == "all-but-highest") return interaction_terms(factors, factors - 1);
    if (name == "full") return interaction_terms(factors, factors);
    throw InputError("model_terms", "unknown recipe '" + name + "'");
  }
  if (!j.is_array()) throw InputError("model_terms", "expected a recipe name or an array of factor-index lists");
  std::vector<ModelTerm> terms;
  for (std::size_t c = 0; c < j.size(); ++c) {
    const auto path = index_path("model_terms", c);
    if (!j[c].is_array()) throw InputError(path, "expected an array of factor indices");
    ModelTerm term;
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < j[c].size(); ++k) {
      const json& f = j[c][k];
      const auto fpath = index_path(path, k);
      if (!f.is_number_unsigned()) throw InputError(fpath, "expected a non-negative integer factor index");
      const auto idx = f.get<std::size_t>();
      if (idx >= factors) throw InputError(fpath, "factor index out of range");
      if (!seen.insert(idx).second) throw InputError(fpath, "repeated factor index");
      term.push_back(idx);
    }
    terms.push_back(std::move(term));
  }
  if (terms.empty()) throw InputError("model_terms", "empty");
  return terms;
}

inline void check_keys(const json& root, const std::set<std::string>& allowed) {
  for (const auto& item : root.items()) {
    if (!allowed.count(item.key())) throw InputError(item.key(), "unknown or inapplicable field");
  }
}

}  // namespace detail

inline ProblemFile parse_problem(const json& root) {
  if (!root.is_object()) throw InputError("", "problem file must be a JSON object");
  ProblemFile pf;

  if (root.contains("reduced_coefficients")) {
    detail::check_keys(root, {"reduced_coefficients"});
    pf.kind = ProblemKind::reduced;
    pf.reduced_coefficients = detail::real_array(root["reduced_coefficients"], "reduced_coefficients");
    if (pf.reduced_coefficients.size() < 3) throw InputError("reduced_coefficients", "need at least 3 entries");
    for (std::size_t i = 0; i < pf.reduced_coefficients.size(); ++i) {
      if (pf.reduced_coefficients[i] < 0.0) {
        throw InputError(detail::index_path("reduced_coefficients", i), "must be >= 0");
      }
    }
    return pf;
  }

  if (root.contains("bounds")) {
    detail::check_keys(root, {"bounds", "link", "link_constant", "link_table", "beta"});
    pf.kind = ProblemKind::continuous;
    pf.link = detail::parse_link(root);
    const json& b = root["bounds"];
    if (!b.is_array() || b.size() != 2) throw InputError("bounds", "expected [[a1, b1], [a2, b2]]");
    std::array<std::array<double, 2>, 2> r{};
    for (std::size_t k = 0; k < 2; ++k) {
      const auto pair = detail::real_array(b[k], detail::index_path("bounds", k));
      if (pair.size() != 2) throw InputError(detail::index_path("bounds", k), "expected [lower, upper]");
      if (!(pair[0] < pair[1])) throw InputError(detail::index_path("bounds", k), "lower bound must be below upper bound");
      r[k] = {pair[0], pair[1]};
    }
    pf.bounds = Rectangle{r[0][0], r[0][1], r[1][0], r[1][1]};
    if (!root.contains("beta")) throw InputError("beta", "missing");
    pf.beta = detail::real_array(root["beta"], "beta");
    if (pf.beta.size() != 3) throw InputError("beta", "continuous mode needs 3 entries (intercept, x1, x2)");
    pf.model_terms = main_effect_terms(2);
    return pf;
  }

  detail::check_keys(root, {"link", "link_constant", "link_table", "beta", "design_points", "model_terms", "weights"});
  pf.kind = ProblemKind::design;
  if (!root.contains("design_points")) throw InputError("design_points", "missing");
  const json& pts = root["design_points"];
  if (!pts.is_array() || pts.empty()) throw InputError("design_points", "expected a non-empty array of points");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pf.design_points.push_back(detail::real_array(pts[i], detail::index_path("design_points", i)));
    if (pf.design_points.back().empty()) throw InputError(detail::index_path("design_points", i), "empty point");
    if (pf.design_points.back().size() != pf.design_points.front().size()) {
      throw InputError(detail::index_path("design_points", i), "all points need the same number of factors");
    }
  }
  const std::size_t factors = pf.design_points.front().size();
  pf.model_terms = detail::parse_terms(root, factors);

  if (root.contains("weights")) {
    pf.weights = detail::real_array(root["weights"], "weights");
    if (pf.weights->size() != pts.size()) throw InputError("weights", "need one weight per design point");
    for (std::size_t i = 0; i < pf.weights->size(); ++i) {
      if (!((*pf.weights)[i] > 0.0)) throw InputError(detail::index_path("weights", i), "must be > 0");
    }
  } else {
    pf.link = detail::parse_link(root);
  }
  if (root.contains("beta") || !pf.weights) {
    if (!root.contains("beta")) throw InputError("beta", "missing");
    pf.beta = detail::real_array(root["beta"], "beta");
    if (pf.beta.size() != pf.model_terms.size()) {
      throw InputError("beta", "length " + std::to_string(pf.beta.size()) + " does not match the " +
                                   std::to_string(pf.model_terms.size()) + " model terms");
    }
  }
  if (pf.design_points.size() < pf.model_terms.size()) {
    throw InputError("design_points", "fewer points than model terms");
  }
  return pf;
}

inline ProblemFile parse_problem_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_problem(root);
}

inline ProblemFile load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, "cannot open problem file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str());
}

}  // namespace dopt::app
