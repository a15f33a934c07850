#pragma once

// SolveReport <-> JSON. The writer is hand-rolled so that the byte layout is
// fixed: keys sorted, two-space indent, reals at 17 significant digits and
// non-finite reals as null. Parsing and re-writing is byte-identical.

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dopt/app/format.hpp"
#include "dopt/errors.hpp"
#include "dopt/glm_core.hpp"

namespace dopt::app {

namespace detail {

inline std::string json_real(double x) { return std::isfinite(x) ? format_real(x) : "null"; }

inline double real_or_nan(const nlohmann::json& j, const std::string& path) {
  if (j.is_null()) return NAN;
  if (!j.is_number()) throw InputError(path, "expected a number or null");
  return j.get<double>();
}

}  // namespace detail

inline void write_report_json(std::ostream& out, const SolveReport& report) {
  out << "{\n  \"allocation\": [";
  for (std::size_t i = 0; i < report.allocation.size(); ++i) {
    out << (i ? ", " : "") << detail::json_real(report.allocation[i]);
  }
  out << "],\n  \"case_label\": " << nlohmann::json(report.case_label).dump() << ",\n  \"diagnostics\": {";
  bool first = true;
  for (const auto& [key, value] : report.diagnostics) {
    out << (first ? "\n" : ",\n") << "    " << nlohmann::json(key).dump() << ": " << detail::json_real(value);
    first = false;
  }
  out << (first ? "}" : "\n  }") << ",\n  \"objective\": " << detail::json_real(report.objective) << "\n}\n";
}

inline std::string report_to_json(const SolveReport& report) {
  std::ostringstream out;
  write_report_json(out, report);
  return out.str();
}

inline SolveReport report_from_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InputError("", "report must be a JSON object");
  for (const char* key : {"allocation", "case_label", "diagnostics", "objective"}) {
    if (!root.contains(key)) throw InputError(key, "missing");
  }
  SolveReport report;
  const auto& alloc = root["allocation"];
  if (!alloc.is_array()) throw InputError("allocation", "expected an array");
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    report.allocation.p.push_back(detail::real_or_nan(alloc[i], "allocation[" + std::to_string(i) + "]"));
  }
  if (!root["case_label"].is_string()) throw InputError("case_label", "expected a string");
  report.case_label = root["case_label"].get<std::string>();
  if (!root["diagnostics"].is_object()) throw InputError("diagnostics", "expected an object");
  for (const auto& item : root["diagnostics"].items()) {
    report.diagnostics[item.key()] = detail::real_or_nan(item.value(), "diagnostics." + item.key());
  }
  report.objective = detail::real_or_nan(root["objective"], "objective");
  return report;
}

}  // namespace dopt::app
