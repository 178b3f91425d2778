#pragma once

// Model configuration audit: parse configs, evaluate them against the
// feasibility region, classify, and render tables.
//
// Config schema (JSON object; batches are arrays of objects):
//   required: name, num_layers, context_length, nominal_base, precision
//   optional: effective_base, head_dim, reference_empirical_bound, notes

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ropebound/bounds.hpp"
#include "ropebound/common.hpp"
#include "ropebound/precision.hpp"

namespace ropebound {

class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& message)
      : InvalidArgument("field '" + field + "': " + message), field_(std::move(field)) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ModelConfig {
  std::string name;
  int num_layers = 1;
  std::int64_t context_length = 1;
  double nominal_base = 10000.0;
  std::optional<double> effective_base;
  FloatFormat precision = kFP32;
  int head_dim = 128;
  std::optional<double> reference_empirical_bound;
  std::string notes;

  /// Base actually used for classification.
  [[nodiscard]] double deployed_base() const noexcept { return effective_base.value_or(nominal_base); }
};

enum class Status { Stable, Unstable, Infeasible };

inline std::string_view to_string(Status status) {
  switch (status) {
    case Status::Stable: return "Stable";
    case Status::Unstable: return "Unstable";
    case Status::Infeasible: return "Infeasible";
  }
  return "?";
}

struct FeasibilityReport {
  ModelConfig config;
  double epsilon = kDefaultEpsilon;
  double aliasing_bound = 0.0;
  double dc_depth_bound = 0.0;
  double min_base = 0.0;
  double max_base = 0.0;
  Status status = Status::Unstable;
  double margin = 0.0;  // deployed base / min_base
  std::optional<std::int64_t> erasure_onset;
};

namespace detail {

using Json = nlohmann::json;

inline const Json& required_field(const Json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end() || it->is_null()) throw ConfigError(field, "missing required field");
  return *it;
}

inline std::int64_t positive_int(const Json& value, const char* field) {
  if (!value.is_number_integer()) throw ConfigError(field, "must be an integer");
  const auto v = value.get<std::int64_t>();
  if (v <= 0) throw ConfigError(field, "must be positive, got " + std::to_string(v));
  return v;
}

inline double number_above(const Json& value, const char* field, double floor) {
  if (!value.is_number()) throw ConfigError(field, "must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v) || !(v > floor)) {
    throw ConfigError(field, "must be greater than " + format_double(floor) + ", got " + format_double(v));
  }
  return v;
}

}  // namespace detail

inline ModelConfig parse_model_config(const nlohmann::json& doc) {
  using detail::required_field;
  if (!doc.is_object()) throw ConfigError("<root>", "config must be a JSON object");

  ModelConfig config;
  const auto& name = required_field(doc, "name");
  if (!name.is_string()) throw ConfigError("name", "must be a string");
  config.name = name.get<std::string>();

  const auto layers = detail::positive_int(required_field(doc, "num_layers"), "num_layers");
  if (layers > 1'000'000) throw ConfigError("num_layers", "unreasonably large");
  config.num_layers = static_cast<int>(layers);
  config.context_length = detail::positive_int(required_field(doc, "context_length"), "context_length");
  config.nominal_base = detail::number_above(required_field(doc, "nominal_base"), "nominal_base", 1.0);

  const auto& precision = required_field(doc, "precision");
  if (!precision.is_string()) throw ConfigError("precision", "must be a string");
  try {
    config.precision = format_from_name(precision.get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ConfigError("precision", e.what());
  }

  if (auto it = doc.find("effective_base"); it != doc.end() && !it->is_null()) {
    config.effective_base = detail::number_above(*it, "effective_base", 1.0);
  }
  if (auto it = doc.find("head_dim"); it != doc.end() && !it->is_null()) {
    const auto d = detail::positive_int(*it, "head_dim");
    if (d % 2 != 0 || d > 1'000'000) throw ConfigError("head_dim", "must be a positive even integer");
    config.head_dim = static_cast<int>(d);
  }
  if (auto it = doc.find("reference_empirical_bound"); it != doc.end() && !it->is_null()) {
    config.reference_empirical_bound = detail::number_above(*it, "reference_empirical_bound", 0.0);
  }
  if (auto it = doc.find("notes"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw ConfigError("notes", "must be a string");
    config.notes = it->get<std::string>();
  }
  return config;
}

inline ModelConfig parse_model_config_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_model_config(doc);
}

inline FeasibilityReport evaluate_model(const ModelConfig& config, double eps) {
  detail::require_unit_interval(eps);
  const StabilityParams params{config.context_length, eps, config.num_layers};
  const FeasibilityRegion region = feasibility_region(params, config.precision);

  FeasibilityReport report;
  report.config = config;
  report.epsilon = eps;
  report.aliasing_bound = aliasing_lower_bound(config.context_length);
  report.dc_depth_bound = depth_lower_bound(params);
  report.min_base = region.lower;
  report.max_base = region.upper;

  const double base = config.deployed_base();
  if (!region.non_empty) {
    report.status = Status::Infeasible;
  } else if (region.contains(base)) {
    report.status = Status::Stable;
  } else {
    report.status = Status::Unstable;
  }
  report.margin = base / report.min_base;
  report.erasure_onset = erasure_onset(base, config.precision, config.context_length);
  return report;
}

struct BatchError {
  std::size_t index = 0;
  std::string name;  // "<unnamed>" when the document has no usable name
  std::string message;
};

struct BatchResult {
  std::vector<FeasibilityReport> reports;
  std::vector<BatchError> errors;

  [[nodiscard]] bool all_stable() const {
    if (!errors.empty()) return false;
    for (const auto& r : reports) {
      if (r.status != Status::Stable) return false;
    }
    return true;
  }
};

inline std::vector<FeasibilityReport> audit_batch(const std::vector<ModelConfig>& configs, double eps) {
  detail::require(!configs.empty(), "audit batch must not be empty");
  std::vector<FeasibilityReport> reports;
  reports.reserve(configs.size());
  for (const auto& config : configs) reports.push_back(evaluate_model(config, eps));
  return reports;
}

/// Parses and evaluates each document independently; failures are collected
/// with the config's name instead of aborting the batch.
inline BatchResult audit_batch(const nlohmann::json& documents, double eps) {
  detail::require_unit_interval(eps);
  const nlohmann::json list = documents.is_array() ? documents : nlohmann::json::array({documents});
  detail::require(!list.empty(), "audit batch must not be empty");

  BatchResult result;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& doc = list[i];
    std::string name = "<unnamed>";
    if (doc.is_object()) {
      if (auto it = doc.find("name"); it != doc.end() && it->is_string()) name = it->get<std::string>();
    }
    try {
      result.reports.push_back(evaluate_model(parse_model_config(doc), eps));
    } catch (const std::exception& e) {
      result.errors.push_back({i, name, e.what()});
    }
  }
  return result;
}

enum class ReportStyle { Markdown, CSV, JSON };

inline constexpr const char* kReportColumns[] = {"Model",        "Layers",   "Context",  "Actual Base", "Aliasing",
                                                 "DC Stability", "Min Base", "Max Base", "Status",      "Margin"};

namespace detail {

inline std::string csv_cell(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Lower bounds round up at presentation time.
inline std::string grouped_ceil(double value) {
  return format_grouped(static_cast<std::int64_t>(std::ceil(value)));
}

inline std::string grouped_round(double value) {
  return format_grouped(static_cast<std::int64_t>(std::llround(value)));
}

inline nlohmann::ordered_json config_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["num_layers"] = c.num_layers;
  j["context_length"] = c.context_length;
  j["nominal_base"] = c.nominal_base;
  j["effective_base"] = c.effective_base ? nlohmann::ordered_json(*c.effective_base) : nlohmann::ordered_json(nullptr);
  j["precision"] = std::string(to_string(c.precision.name));
  j["head_dim"] = c.head_dim;
  j["reference_empirical_bound"] = c.reference_empirical_bound
                                       ? nlohmann::ordered_json(*c.reference_empirical_bound)
                                       : nlohmann::ordered_json(nullptr);
  j["notes"] = c.notes;
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const FeasibilityReport& r) {
  nlohmann::ordered_json j;
  j["config"] = detail::config_json(r.config);
  j["epsilon"] = r.epsilon;
  j["aliasing_bound"] = r.aliasing_bound;
  j["dc_depth_bound"] = r.dc_depth_bound;
  j["min_base"] = r.min_base;
  j["max_base"] = r.max_base;
  j["status"] = std::string(to_string(r.status));
  j["margin"] = r.margin;
  j["erasure_onset"] = r.erasure_onset ? nlohmann::ordered_json(*r.erasure_onset) : nlohmann::ordered_json(nullptr);
  return j;
}

inline std::string render_report(const std::vector<FeasibilityReport>& reports, ReportStyle style) {
  std::ostringstream out;
  switch (style) {
    case ReportStyle::JSON: {
      auto array = nlohmann::ordered_json::array();
      for (const auto& r : reports) array.push_back(report_json(r));
      out << array.dump(2) << '\n';
      break;
    }
    case ReportStyle::CSV: {
      for (std::size_t i = 0; i < std::size(kReportColumns); ++i) out << (i ? "," : "") << kReportColumns[i];
      out << '\n';
      for (const auto& r : reports) {
        out << detail::csv_cell(r.config.name) << ',' << r.config.num_layers << ',' << r.config.context_length << ','
            << format_double(r.config.deployed_base()) << ',' << format_double(r.aliasing_bound) << ','
            << format_double(r.dc_depth_bound) << ',' << format_double(r.min_base) << ','
            << format_double(r.max_base) << ',' << to_string(r.status) << ',' << format_double(r.margin) << '\n';
      }
      break;
    }
    case ReportStyle::Markdown: {
      out << '|';
      for (const char* column : kReportColumns) out << ' ' << column << " |";
      out << "\n|";
      for (std::size_t i = 0; i < std::size(kReportColumns); ++i) out << (i == 0 || i == 8 ? " :--- |" : " ---: |");
      out << '\n';
      for (const auto& r : reports) {
        out << "| " << r.config.name << " | " << r.config.num_layers << " | "
            << format_grouped(r.config.context_length) << " | " << detail::grouped_round(r.config.deployed_base())
            << " | " << detail::grouped_ceil(r.aliasing_bound) << " | " << detail::grouped_ceil(r.dc_depth_bound)
            << " | >" << detail::grouped_ceil(r.min_base) << " | <" << detail::grouped_round(r.max_base) << " | "
            << to_string(r.status) << " | " << format_fixed(r.margin, 3) << " |\n";
      }
      break;
    }
  }
  return out.str();
}

}  // namespace ropebound
