#pragma once

// Command-line front end. Data goes to stdout (or --output); summaries and
// diagnostics go to stderr.
//
// Exit codes:
//   0  computed; region non-empty / all configs Stable
//   1  could not compute (bad flags, bad input, I/O failure)
//   2  computed; feasibility region empty (bounds, region)
//   3  computed; at least one config Unstable or Infeasible (audit)

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ropebound/ropebound.hpp"

namespace ropebound::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitEmptyRegion = 2;
inline constexpr int kExitNotStable = 3;

/// Inclusive arithmetic grid parsed from "start:stop:step".
inline std::vector<double> parse_range(const std::string& spec) {
  const auto first = spec.find(':');
  const auto second = first == std::string::npos ? std::string::npos : spec.find(':', first + 1);
  if (second == std::string::npos || spec.find(':', second + 1) != std::string::npos) {
    throw InvalidArgument("range must look like start:stop:step, got '" + spec + "'");
  }
  const double start = parse_double(spec.substr(0, first));
  const double stop = parse_double(spec.substr(first + 1, second - first - 1));
  const double step = parse_double(spec.substr(second + 1));
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("range step must be positive");
  if (!std::isfinite(start) || !std::isfinite(stop) || stop < start) {
    throw InvalidArgument("range is empty or inverted: '" + spec + "'");
  }
  const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 10'000'000) throw InvalidArgument("range has too many points");
  std::vector<double> points;
  points.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) points.push_back(start + static_cast<double>(i) * step);
  return points;
}

namespace detail {

inline std::int64_t as_integer(double value, const char* what) {
  if (value != std::floor(value) || std::fabs(value) > 9.0e15) {
    throw InvalidArgument(std::string(what) + " must be an integer, got " + format_double(value));
  }
  return static_cast<std::int64_t>(value);
}

/// One grid point of the bounds table (shared by `bounds` and `sweep`).
struct BoundsRow {
  std::int64_t context = 0;
  int layers = 0;
  double epsilon = 0.0;
  FloatFormat precision = kFP32;
  std::optional<double> base;

  double multiplier = 0.0;
  double aliasing = 0.0;
  double dc = 0.0;
  double depth = 0.0;
  FeasibilityRegion region;
  std::optional<double> max_context;
};

inline BoundsRow compute_row(std::int64_t context, int layers, double eps, const FloatFormat& precision,
                             std::optional<double> base) {
  const StabilityParams params{context, eps, layers};
  BoundsRow row;
  row.context = context;
  row.layers = layers;
  row.epsilon = eps;
  row.precision = precision;
  row.base = base;
  row.multiplier = coherence_multiplier(eps);
  row.aliasing = aliasing_lower_bound(context);
  row.dc = dc_lower_bound(context, eps);
  row.depth = depth_lower_bound(params);
  row.region = feasibility_region(params, precision);
  if (base) row.max_context = max_context_for_base(*base, eps, layers);
  return row;
}

inline constexpr const char* kRowColumns[] = {
    "context",  "layers",   "epsilon",   "precision", "coherence_multiplier", "aliasing_bound", "dc_bound",
    "depth_bound", "min_base", "max_base", "non_empty", "base",                 "max_context",    "in_region"};

inline std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline void write_rows(const std::vector<BoundsRow>& rows, const std::string& style, std::ostream& out) {
  if (style == "json") {
    auto array = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json j;
      j["context"] = r.context;
      j["layers"] = r.layers;
      j["epsilon"] = r.epsilon;
      j["precision"] = std::string(to_string(r.precision.name));
      j["coherence_multiplier"] = r.multiplier;
      j["aliasing_bound"] = r.aliasing;
      j["dc_bound"] = r.dc;
      j["depth_bound"] = r.depth;
      j["min_base"] = r.region.lower;
      j["max_base"] = r.region.upper;
      j["non_empty"] = r.region.non_empty;
      j["base"] = r.base ? nlohmann::ordered_json(*r.base) : nlohmann::ordered_json(nullptr);
      j["max_context"] = r.max_context ? nlohmann::ordered_json(*r.max_context) : nlohmann::ordered_json(nullptr);
      j["in_region"] = r.base ? nlohmann::ordered_json(r.region.contains(*r.base)) : nlohmann::ordered_json(nullptr);
      array.push_back(std::move(j));
    }
    out << array.dump(2) << '\n';
    return;
  }
  if (style == "markdown") {
    out << '|';
    for (const char* c : kRowColumns) out << ' ' << c << " |";
    out << "\n|";
    for (std::size_t i = 0; i < std::size(kRowColumns); ++i) out << " ---: |";
    out << '\n';
    for (const auto& r : rows) {
      out << "| " << format_grouped(r.context) << " | " << r.layers << " | " << format_double(r.epsilon) << " | "
          << to_string(r.precision.name) << " | " << format_fixed(r.multiplier, 4) << " | "
          << ropebound::detail::grouped_ceil(r.aliasing) << " | " << ropebound::detail::grouped_ceil(r.dc) << " | "
          << ropebound::detail::grouped_ceil(r.depth) << " | " << ropebound::detail::grouped_ceil(r.region.lower)
          << " | " << ropebound::detail::grouped_round(r.region.upper) << " | "
          << (r.region.non_empty ? "yes" : "no") << " | "
          << (r.base ? ropebound::detail::grouped_round(*r.base) : "") << " | "
          << (r.max_context ? format_grouped(static_cast<std::int64_t>(std::floor(*r.max_context))) : "") << " | "
          << (r.base ? (r.region.contains(*r.base) ? "yes" : "no") : "") << " |\n";
    }
    return;
  }
  for (std::size_t i = 0; i < std::size(kRowColumns); ++i) out << (i ? "," : "") << kRowColumns[i];
  out << '\n';
  for (const auto& r : rows) {
    out << r.context << ',' << r.layers << ',' << format_double(r.epsilon) << ',' << to_string(r.precision.name)
        << ',' << format_double(r.multiplier) << ',' << format_double(r.aliasing) << ',' << format_double(r.dc)
        << ',' << format_double(r.depth) << ',' << format_double(r.region.lower) << ','
        << format_double(r.region.upper) << ',' << (r.region.non_empty ? "true" : "false") << ','
        << opt_cell(r.base) << ',' << opt_cell(r.max_context) << ','
        << (r.base ? (r.region.contains(*r.base) ? "true" : "false") : "") << '\n';
  }
}

/// Writes `text` to `path`, or to `out` when path is empty.
inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  file << text;
  file.flush();
  if (!file) throw std::runtime_error("write failed for '" + path + "'");
}

inline double default_epsilon() {
  if (const char* env = std::getenv("ROPE_EPSILON_DEFAULT"); env != nullptr && *env != '\0') {
    const double eps = parse_double(env);
    ropebound::detail::require_unit_interval(eps, "ROPE_EPSILON_DEFAULT");
    return eps;
  }
  return kDefaultEpsilon;
}

inline std::string curve_file_name(const std::string& scan, double base, const std::string& param) {
  return scan + "_" + format_double(base) + "_" + param + ".csv";
}

}  // namespace detail

/// Runs one CLI invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feasibility bounds for the RoPE base parameter", "ropebound"};
  app.set_config("--config", "", "TOML/INI file supplying flags; command-line values win");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  // Shared flag storage.
  std::int64_t context = 0;
  int layers = 0;
  double epsilon = 0.0;
  std::string precision = "FP32";
  std::string format;
  std::string output;

  const std::vector<std::string> precisions{"BF16", "FP16", "FP32", "FP64"};

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Lower/upper bounds on the base for one configuration");
  std::optional<double> bounds_base;
  bounds->add_option("--context", context, "Context length L (tokens)")->required();
  bounds->add_option("--layers", layers, "Number of layers N")->required();
  bounds->add_option("--base", bounds_base, "Optional base to check against the region");
  bounds->add_option("--epsilon", epsilon, "Coherence threshold in (0, 1)");
  bounds->add_option("--precision", precision, "Float format")->check(CLI::IsMember(precisions));
  bounds->add_option("--format", format, "markdown|csv|json")->check(CLI::IsMember({"markdown", "csv", "json"}));
  bounds->add_option("--output", output, "Write data here instead of stdout");

  // region
  auto* region_cmd = app.add_subcommand("region", "Feasibility region and whether a base lies inside it");
  std::optional<double> region_base;
  region_cmd->add_option("--context", context, "Context length L (tokens)")->required();
  region_cmd->add_option("--layers", layers, "Number of layers N")->required();
  region_cmd->add_option("--base", region_base, "Base to test for membership");
  region_cmd->add_option("--epsilon", epsilon, "Coherence threshold in (0, 1)");
  region_cmd->add_option("--precision", precision, "Float format")->check(CLI::IsMember(precisions));
  region_cmd->add_option("--format", format, "markdown|csv|json")->check(CLI::IsMember({"markdown", "csv", "json"}));
  region_cmd->add_option("--output", output, "Write data here instead of stdout");

  // scan
  auto* scan = app.add_subcommand("scan", "Sampled similarity / erasure curves");
  std::string scan_kind;
  std::vector<double> scan_bases;
  std::vector<int> scan_layers;
  std::int64_t max_position = -1;
  std::int64_t stride = 0;
  std::string output_dir;
  scan->add_option("kind", scan_kind, "aliasing|dc|depth|erasure")
      ->required()
      ->check(CLI::IsMember({"aliasing", "dc", "depth", "erasure"}));
  scan->add_option("--base", scan_bases, "Base (comma-separated list for dc)")->delimiter(',')->required();
  scan->add_option("--max-position", max_position, "Largest sampled position")->required();
  scan->add_option("--stride", stride, "Sample spacing (default: 1, coarsened above 10^6 samples)");
  scan->add_option("--layers", scan_layers, "Layer counts for depth scans (comma-separated)")->delimiter(',');
  scan->add_option("--precision", precision, "Float format for erasure scans")->check(CLI::IsMember(precisions));
  scan->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  scan->add_option("--output", output, "Write data here instead of stdout (single-curve scans)");
  scan->add_option("--output-dir", output_dir, "Write one <scan>_<base>_<param>.csv per curve");

  // erasure
  auto* erasure = app.add_subcommand("erasure", "Dead-zone map of erased phase steps");
  double erasure_base = 0.0;
  std::int64_t scan_limit = 0;
  erasure->add_option("--base", erasure_base, "RoPE base")->required();
  erasure->add_option("--scan-limit", scan_limit, "Largest position scanned")->required();
  erasure->add_option("--precision", precision, "Float format")->check(CLI::IsMember(precisions));
  erasure->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  erasure->add_option("--output", output, "Write data here instead of stdout");

  // audit
  auto* audit = app.add_subcommand("audit", "Audit model configs against the feasibility region");
  std::string config_path;
  audit->add_option("config", config_path, "JSON file: one config object or an array")->required();
  audit->add_option("--epsilon", epsilon, "Coherence threshold in (0, 1)");
  audit->add_option("--format", format, "markdown|csv|json")->check(CLI::IsMember({"markdown", "csv", "json"}));
  audit->add_option("--output", output, "Write data here instead of stdout");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Tabulate bounds over a parameter grid");
  std::string variable;
  std::string range;
  std::vector<double> values;
  std::optional<std::int64_t> sweep_context;
  std::optional<int> sweep_layers;
  std::optional<double> sweep_base;
  sweep->add_option("--variable", variable, "L|N|epsilon|base")
      ->required()
      ->check(CLI::IsMember({"L", "N", "epsilon", "base"}));
  auto* range_opt = sweep->add_option("--range", range, "start:stop:step");
  auto* values_opt = sweep->add_option("--values", values, "Explicit comma-separated grid")->delimiter(',');
  range_opt->excludes(values_opt);
  sweep->add_option("--context", sweep_context, "Fixed context length L");
  sweep->add_option("--layers", sweep_layers, "Fixed number of layers N");
  sweep->add_option("--epsilon", epsilon, "Fixed coherence threshold");
  sweep->add_option("--base", sweep_base, "Fixed base (adds max_context/in_region columns)");
  sweep->add_option("--precision", precision, "Float format")->check(CLI::IsMember(precisions));
  sweep->add_option("--format", format, "csv|json|markdown")->check(CLI::IsMember({"markdown", "csv", "json"}));
  sweep->add_option("--output", output, "Write data here instead of stdout");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("ropebound");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    epsilon = detail::default_epsilon();
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  try {
    const FloatFormat float_format = format_from_name(precision);

    if (bounds->parsed() || region_cmd->parsed()) {
      const bool is_bounds = bounds->parsed();
      const std::string style = format.empty() ? "markdown" : format;
      const std::optional<double> base = is_bounds ? bounds_base : region_base;
      if (base) ropebound::detail::require(std::isfinite(*base) && *base > 1.0, "--base must be greater than 1");
      const auto row = detail::compute_row(context, layers, epsilon, float_format, base);

      std::ostringstream data;
      if (is_bounds) {
        detail::write_rows({row}, style, data);
      } else if (style == "json") {
        nlohmann::ordered_json j;
        j["lower"] = row.region.lower;
        j["upper"] = row.region.upper;
        j["non_empty"] = row.region.non_empty;
        j["base"] = base ? nlohmann::ordered_json(*base) : nlohmann::ordered_json(nullptr);
        j["contains_base"] = base ? nlohmann::ordered_json(row.region.contains(*base)) : nlohmann::ordered_json(nullptr);
        data << j.dump(2) << '\n';
      } else if (style == "csv") {
        data << "lower,upper,non_empty,base,contains_base\n"
             << format_double(row.region.lower) << ',' << format_double(row.region.upper) << ','
             << (row.region.non_empty ? "true" : "false") << ',' << detail::opt_cell(base) << ','
             << (base ? (row.region.contains(*base) ? "true" : "false") : "") << '\n';
      } else {
        data << "| lower | upper | non_empty | base | contains_base |\n| ---: | ---: | ---: | ---: | ---: |\n"
             << "| >" << ropebound::detail::grouped_ceil(row.region.lower) << " | <"
             << ropebound::detail::grouped_round(row.region.upper) << " | " << (row.region.non_empty ? "yes" : "no")
             << " | " << (base ? ropebound::detail::grouped_round(*base) : "") << " | "
             << (base ? (row.region.contains(*base) ? "yes" : "no") : "") << " |\n";
      }
      detail::emit(data.str(), output, out);

      err << "aliasing " << format_double(row.aliasing) << ", depth " << format_double(row.depth) << ", min base "
          << format_double(row.region.lower) << ", max base " << format_double(row.region.upper) << ", region "
          << (row.region.non_empty ? "non-empty" : "empty");
      if (base) err << ", base " << format_double(*base) << (row.region.contains(*base) ? " inside" : " outside");
      err << '\n';
      return row.region.non_empty ? kExitOk : kExitEmptyRegion;
    }

    if (scan->parsed()) {
      ropebound::detail::require(max_position >= 0, "--max-position must be non-negative");
      const std::int64_t step = stride > 0 ? stride : default_stride(max_position);
      const CurveFormat curve_format = format == "json" ? CurveFormat::JSON : CurveFormat::CSV;
      const std::string ext_scan = scan_kind;
      std::vector<Curve> curves;
      std::vector<std::string> params;

      auto single_base = [&]() {
        if (scan_bases.size() != 1) throw InvalidArgument("scan " + scan_kind + " takes exactly one --base");
        return scan_bases.front();
      };

      if (scan_kind == "aliasing") {
        const double base = single_base();
        curves.push_back(aliasing_scan(base, max_position, step));
        params.push_back(std::to_string(max_position));
        if (auto f = find_aliasing_spike(curves.back())) {
          err << "spike at " << f->spike.position << " (value " << format_double(f->spike.value) << "), trough at "
              << f->minimum.position << " (value " << format_double(f->minimum.value) << "), analytic 2*pi*base "
              << format_double(kTwoPi * base) << '\n';
        } else {
          err << "no spike within range; analytic 2*pi*base " << format_double(kTwoPi * base) << '\n';
        }
      } else if (scan_kind == "dc") {
        curves = dc_stability_scan(scan_bases, max_position, step);
        for (const auto& c : curves) {
          params.push_back(std::to_string(max_position));
          err << "base " << c.metadata.at("base") << ": " << c.metadata.at("rotations_at_max")
              << " rotations by position " << max_position << '\n';
        }
      } else if (scan_kind == "depth") {
        const double base = single_base();
        if (scan_layers.empty()) throw InvalidArgument("scan depth requires --layers");
        curves = depth_decay_scan(base, scan_layers, max_position, step);
        for (std::size_t i = 0; i < curves.size(); ++i) {
          params.push_back("N" + std::to_string(scan_layers[i]));
          err << "N=" << scan_layers[i] << ": value " << format_double(curves[i].samples.back().value)
              << " at position " << curves[i].samples.back().position << '\n';
        }
      } else {
        const double base = single_base();
        curves.push_back(precision_erasure_scan(base, float_format, max_position));
        params.push_back(std::string(to_string(float_format.name)));
        err << "onset " << curves.back().metadata.at("onset") << " (" << to_string(float_format.name)
            << ", base " << format_double(base) << ", scanned to " << curves.back().metadata.at("scanned_to")
            << ")\n";
      }

      if (!output_dir.empty()) {
        std::filesystem::create_directories(output_dir);
        for (std::size_t i = 0; i < curves.size(); ++i) {
          const auto path = (std::filesystem::path(output_dir) /
                             detail::curve_file_name(ext_scan, parse_double(curves[i].metadata.at("base")), params[i]))
                                .string();
          export_curve(curves[i], path, CurveFormat::CSV);
        }
        return kExitOk;
      }
      std::ostringstream data;
      for (std::size_t i = 0; i < curves.size(); ++i) {
        if (i > 0 && curve_format == CurveFormat::CSV) data << '\n';
        export_curve(curves[i], data, curve_format);
      }
      detail::emit(data.str(), output, out);
      return kExitOk;
    }

    if (erasure->parsed()) {
      const DeadZoneReport report = dead_zone_map(erasure_base, float_format, scan_limit);
      std::ostringstream data;
      if (format == "json") {
        data << dead_zone_json(report).dump(2) << '\n';
      } else {
        write_dead_zone_csv(report, data);
      }
      detail::emit(data.str(), output, out);
      err << "onset " << (report.onset ? std::to_string(*report.onset) : "none") << ", " << report.runs.size()
          << " dead-zone run(s), scanned to " << report.scanned_to << '\n';
      return kExitOk;
    }

    if (audit->parsed()) {
      std::ifstream file(config_path);
      if (!file) throw std::runtime_error("cannot read '" + config_path + "'");
      nlohmann::json docs;
      try {
        docs = nlohmann::json::parse(file);
      } catch (const nlohmann::json::parse_error& e) {
        err << "error: malformed JSON in '" << config_path << "': " << e.what() << '\n';
        return kExitError;
      }
      const BatchResult result = audit_batch(docs, epsilon);
      const ReportStyle style = format == "csv" ? ReportStyle::CSV
                                : format == "json" ? ReportStyle::JSON
                                                   : ReportStyle::Markdown;
      detail::emit(render_report(result.reports, style), output, out);
      for (const auto& e : result.errors) {
        err << "error: config '" << e.name << "' (#" << e.index << "): " << e.message << '\n';
      }
      if (!result.errors.empty()) return kExitError;
      std::size_t stable = 0;
      for (const auto& r : result.reports) stable += r.status == Status::Stable;
      err << stable << '/' << result.reports.size() << " config(s) Stable\n";
      return result.all_stable() ? kExitOk : kExitNotStable;
    }

    if (sweep->parsed()) {
      ropebound::detail::require(!range.empty() || !values.empty(), "sweep requires --range or --values");
      const std::vector<double> grid = range.empty() ? values : parse_range(range);
      ropebound::detail::require(!grid.empty(), "sweep grid is empty");
      if (variable != "L") ropebound::detail::require(sweep_context.has_value(), "sweep requires --context");
      if (variable != "N") ropebound::detail::require(sweep_layers.has_value(), "sweep requires --layers");

      std::vector<detail::BoundsRow> rows;
      rows.reserve(grid.size());
      for (double v : grid) {
        std::int64_t L = sweep_context.value_or(0);
        int N = sweep_layers.value_or(0);
        double eps = epsilon;
        std::optional<double> base = sweep_base;
        if (variable == "L") L = detail::as_integer(v, "L");
        if (variable == "N") N = static_cast<int>(detail::as_integer(v, "N"));
        if (variable == "epsilon") eps = v;
        if (variable == "base") base = v;
        if (base) ropebound::detail::require(std::isfinite(*base) && *base > 1.0, "base must be greater than 1");
        rows.push_back(detail::compute_row(L, N, eps, float_format, base));
      }
      std::ostringstream data;
      detail::write_rows(rows, format.empty() ? "csv" : format, data);
      detail::emit(data.str(), output, out);
      err << rows.size() << " grid point(s) over " << variable << '\n';
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace ropebound::cli
