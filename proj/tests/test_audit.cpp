#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ropebound/audit.hpp"

namespace rb = ropebound;

namespace {

nlohmann::json load_corpus() {
  std::ifstream in(ROPEBOUND_CORPUS);
  return nlohmann::json::parse(in);
}

std::vector<rb::ModelConfig> corpus_configs() {
  std::vector<rb::ModelConfig> configs;
  for (const auto& doc : load_corpus()) configs.push_back(rb::parse_model_config(doc));
  return configs;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

TEST(ParseModelConfig, MinimalDocumentAppliesDefaults) {
  const auto c = rb::parse_model_config_text(
      R"({"name":"m","num_layers":12,"context_length":2048,"nominal_base":10000,"precision":"BF16"})");
  EXPECT_EQ(c.name, "m");
  EXPECT_EQ(c.num_layers, 12);
  EXPECT_EQ(c.context_length, 2048);
  EXPECT_EQ(c.deployed_base(), 10000.0);
  EXPECT_FALSE(c.effective_base.has_value());
  EXPECT_EQ(c.precision, rb::kBF16);
  EXPECT_EQ(c.head_dim, 128);
}

TEST(ParseModelConfig, EffectiveBaseParsedAsGiven) {
  const auto c = rb::parse_model_config_text(
      R"({"name":"DeepSeek-V2","num_layers":60,"context_length":131072,"nominal_base":10000,
          "effective_base":4e5,"precision":"FP32","head_dim":64,"reference_empirical_bound":7800000})");
  EXPECT_EQ(c.nominal_base, 10000.0);
  EXPECT_EQ(c.deployed_base(), 400000.0);
  EXPECT_EQ(c.head_dim, 64);
  EXPECT_EQ(c.reference_empirical_bound, 7800000.0);
}

TEST(ParseModelConfig, ErrorsNameTheField) {
  auto field_of = [](const std::string& text) {
    try {
      rb::parse_model_config_text(text);
    } catch (const rb::ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(e.field()), std::string::npos);
      return e.field();
    }
    return std::string("<no error>");
  };
  EXPECT_EQ(field_of(R"({"name":"m","num_layers":12,"context_length":0,"nominal_base":1e4,"precision":"FP32"})"),
            "context_length");
  EXPECT_EQ(field_of(R"({"name":"m","context_length":10,"nominal_base":1e4,"precision":"FP32"})"), "num_layers");
  EXPECT_EQ(field_of(R"({"name":"m","num_layers":2,"context_length":10,"nominal_base":1e4,"precision":"FP8"})"),
            "precision");
  EXPECT_EQ(field_of(R"({"name":"m","num_layers":2,"context_length":10,"nominal_base":0.5,"precision":"FP32"})"),
            "nominal_base");
  EXPECT_EQ(field_of(R"({"name":"m","num_layers":2.5,"context_length":10,"nominal_base":1e4,"precision":"FP32"})"),
            "num_layers");
  EXPECT_EQ(field_of(R"({"name":"m","num_layers":2,"context_length":10,"nominal_base":1e4,"precision":"FP32",
                         "head_dim":7})"),
            "head_dim");
  EXPECT_EQ(field_of(R"({"num_layers":2,"context_length":10,"nominal_base":1e4,"precision":"FP32"})"), "name");
  EXPECT_EQ(field_of(R"([1,2)"), "<root>");
}

TEST(EvaluateModel, TableExamples) {
  rb::ModelConfig llama2{"LLaMA2-7B", 32, 4096, 1e4};
  const auto r2 = rb::evaluate_model(llama2, 0.95);
  EXPECT_EQ(r2.status, rb::Status::Unstable);
  EXPECT_LT(std::abs(r2.min_base - 72394.0) / 72394.0, 1e-3);
  EXPECT_EQ(r2.max_base, 8388608.0);
  EXPECT_EQ(r2.erasure_onset, 2048);

  rb::ModelConfig llama3{"LLaMA3-8B", 32, 8192, 5e5};
  EXPECT_EQ(rb::evaluate_model(llama3, 0.95).status, rb::Status::Stable);

  for (double base : {10.0, 1e4, 5e6, 8e6, 1e7, 1e9}) {
    rb::ModelConfig target{"Target", 96, 1048576, base};
    EXPECT_EQ(rb::evaluate_model(target, 0.95).status, rb::Status::Infeasible) << base;
  }
}

TEST(EvaluateModel, StatusRuleHoldsOnRandomConfigs) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> log_base(0.1, 9.0);
  std::uniform_int_distribution<std::int64_t> len(1, 1 << 21);
  std::uniform_int_distribution<int> layers(1, 128);
  std::uniform_real_distribution<double> eps(0.5, 0.99);
  const rb::FloatFormat formats[] = {rb::kBF16, rb::kFP16, rb::kFP32, rb::kFP64};
  for (int i = 0; i < 300; ++i) {
    rb::ModelConfig c{"r", layers(rng), len(rng), std::pow(10.0, log_base(rng))};
    c.precision = formats[i % 4];
    const auto r = rb::evaluate_model(c, eps(rng));
    EXPECT_EQ(r.min_base, std::max(r.aliasing_bound, r.dc_depth_bound));
    const bool infeasible = r.min_base >= r.max_base;
    const bool stable = !infeasible && r.min_base <= c.deployed_base() && c.deployed_base() < r.max_base;
    EXPECT_EQ(r.status == rb::Status::Infeasible, infeasible);
    EXPECT_EQ(r.status == rb::Status::Stable, stable);
    EXPECT_EQ(r.status == rb::Status::Unstable, !infeasible && !stable);
  }
}

TEST(EvaluateModel, MarginNonIncreasingInEpsilon) {
  for (const auto& c : corpus_configs()) {
    double previous = std::numeric_limits<double>::infinity();
    for (double eps = 0.05; eps < 0.999; eps += 0.01) {
      const double margin = rb::evaluate_model(c, eps).margin;
      EXPECT_LE(margin, previous) << c.name << " eps=" << eps;
      previous = margin;
    }
  }
}

TEST(EvaluateModel, RetrofitToRegionMidpoint) {
  for (auto c : corpus_configs()) {
    const auto r = rb::evaluate_model(c, 0.95);
    if (r.status != rb::Status::Unstable) continue;
    c.effective_base = 0.5 * (r.min_base + r.max_base);
    EXPECT_EQ(rb::evaluate_model(c, 0.95).status, rb::Status::Stable) << c.name;
  }
}

TEST(AuditBatch, CorpusStatuses) {
  const auto result = rb::audit_batch(load_corpus(), 0.95);
  ASSERT_TRUE(result.errors.empty());
  const std::vector<rb::Status> expected{rb::Status::Unstable, rb::Status::Unstable, rb::Status::Unstable,
                                         rb::Status::Stable,   rb::Status::Stable,   rb::Status::Unstable,
                                         rb::Status::Stable,   rb::Status::Infeasible};
  ASSERT_EQ(result.reports.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(result.reports[i].status, expected[i]) << result.reports[i].config.name;
  }
  EXPECT_FALSE(result.all_stable());
}

TEST(AuditBatch, SingleConfigEqualsEvaluate) {
  const auto configs = corpus_configs();
  const auto batch = rb::audit_batch(std::vector<rb::ModelConfig>{configs[3]}, 0.95);
  const auto single = rb::evaluate_model(configs[3], 0.95);
  ASSERT_EQ(batch.size(), 1u);
  EXPECT_EQ(rb::report_json(batch[0]), rb::report_json(single));
}

TEST(AuditBatch, InvalidConfigCollectedWithName) {
  auto docs = load_corpus();
  docs[2]["context_length"] = 0;
  const auto result = rb::audit_batch(docs, 0.95);
  EXPECT_EQ(result.reports.size(), 7u);
  ASSERT_EQ(result.errors.size(), 1u);
  EXPECT_EQ(result.errors[0].index, 2u);
  EXPECT_EQ(result.errors[0].name, "Baichuan2-7B");
  EXPECT_NE(result.errors[0].message.find("context_length"), std::string::npos);
  EXPECT_FALSE(result.all_stable());
}

TEST(AuditBatch, RejectsEmpty) {
  EXPECT_THROW(rb::audit_batch(std::vector<rb::ModelConfig>{}, 0.95), rb::InvalidArgument);
  EXPECT_THROW(rb::audit_batch(nlohmann::json::array(), 0.95), rb::InvalidArgument);
}

TEST(RenderReport, EmptyIsHeaderOnly) {
  EXPECT_EQ(rb::render_report({}, rb::ReportStyle::CSV),
            "Model,Layers,Context,Actual Base,Aliasing,DC Stability,Min Base,Max Base,Status,Margin\n");
  EXPECT_EQ(rb::render_report({}, rb::ReportStyle::JSON), "[]\n");
  const auto md = rb::render_report({}, rb::ReportStyle::Markdown);
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 2);
}

TEST(RenderReport, CsvRoundTripIsExact) {
  const auto reports = rb::audit_batch(corpus_configs(), 0.95);
  std::istringstream in(rb::render_report(reports, rb::ReportStyle::CSV));
  std::string line;
  std::getline(in, line);
  for (const auto& r : reports) {
    ASSERT_TRUE(std::getline(in, line));
    const auto cells = split_csv_line(line);
    ASSERT_EQ(cells.size(), 10u);
    EXPECT_EQ(cells[0], r.config.name);
    EXPECT_EQ(rb::parse_int(cells[1]), r.config.num_layers);
    EXPECT_EQ(rb::parse_int(cells[2]), r.config.context_length);
    EXPECT_EQ(rb::parse_double(cells[3]), r.config.deployed_base());
    EXPECT_EQ(rb::parse_double(cells[4]), r.aliasing_bound);
    EXPECT_EQ(rb::parse_double(cells[5]), r.dc_depth_bound);
    EXPECT_EQ(rb::parse_double(cells[6]), r.min_base);
    EXPECT_EQ(rb::parse_double(cells[7]), r.max_base);
    EXPECT_EQ(cells[8], rb::to_string(r.status));
    EXPECT_EQ(rb::parse_double(cells[9]), r.margin);
  }
  EXPECT_FALSE(std::getline(in, line));
}

TEST(RenderReport, MarkdownDeepSeekRow) {
  const auto reports = rb::audit_batch(corpus_configs(), 0.95);
  const auto md = rb::render_report(reports, rb::ReportStyle::Markdown);
  EXPECT_NE(md.find("| DeepSeek-V2 (YaRN=40) | 60 | 131,072 | 400,000 | 20,861 | 3,170,313 | >3,170,313 | <8,388,608 | "
                    "Unstable |"),
            std::string::npos)
      << md;
  EXPECT_EQ(md, rb::render_report(reports, rb::ReportStyle::Markdown));
}

TEST(RenderReport, JsonMirrorsReport) {
  const auto reports = rb::audit_batch(corpus_configs(), 0.95);
  const auto j = nlohmann::json::parse(rb::render_report(reports, rb::ReportStyle::JSON));
  ASSERT_EQ(j.size(), reports.size());
  EXPECT_EQ(j[5]["config"]["effective_base"], 400000.0);
  EXPECT_EQ(j[5]["status"], "Unstable");
  EXPECT_EQ(j[0]["erasure_onset"], 2048);
  EXPECT_EQ(j[7]["status"], "Infeasible");
  EXPECT_EQ(j[3]["min_base"].get<double>(), reports[3].min_base);
}

TEST(RenderReport, CsvQuotesAwkwardNames) {
  rb::ModelConfig c{"a,\"b\"", 2, 100, 1e4};
  const auto csv = rb::render_report({rb::evaluate_model(c, 0.95)}, rb::ReportStyle::CSV);
  EXPECT_NE(csv.find("\"a,\"\"b\"\"\",2,100,"), std::string::npos) << csv;
}
