#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "../support/perturb.hpp"
#include "qindex/config.hpp"
#include "qindex/errors.hpp"
#include "qindex/fixture.hpp"
#include "qindex/record.hpp"
#include "qindex/report.hpp"
#include "qindex/verify.hpp"

using namespace qindex;
namespace fs = std::filesystem;

namespace {

RunRecord sample_record() {
  RunRecord r;
  r.run_id = "unit";
  r.timestamp = "2026-01-01T00:00:00Z";
  r.command = "sweep";
  r.config = config_to_json(ExperimentConfig{});
  r.seeds = {0, 42};
  r.threshold_spec = {10, 0.97, 0.19};
  r.threshold = resolve_threshold(r.threshold_spec);
  const struct {
    const char* bits;
    double c;
    double p[2];
    double t[2];
  } cells[] = {{"32", 1, {0.97, 0.971}, {1.2, 1.3}},
               {"8", 4, {0.968, 0.969}, {1.5, 1.45}},
               {"2", 16, {0.11, 0.09}, {1.4, 1.41}}};
  for (const auto& cell : cells) {
    for (int s = 0; s < 2; ++s) {
      r.rows.push_back(make_row(cell.bits, r.seeds[s], cell.p[s], cell.c, cell.t[s],
                                r.threshold));
    }
  }
  finalize(r);
  return r;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig c;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  validate_config(back);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(config_from_json({{"bogus", 1}}), ConfigError);
  EXPECT_THROW(config_from_json({{"search", {{"ga", {{"pop", 3}}}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"bits", "8"}}), ConfigError);
}

TEST(Config, ValidatesValues) {
  ExperimentConfig c;
  c.bits = {8, 3};
  EXPECT_THROW(validate_config(c), ConfigError);
  c = ExperimentConfig{};
  c.timing.forward_threads = 2;
  EXPECT_THROW(validate_config(c), ConfigError);
  c = ExperimentConfig{};
  c.search.ga.alleles = {32, 8};
  EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Config, MissingDatasetNamed) {
  ExperimentConfig c;
  c.dataset.dir = "/nonexistent/qindex";
  try {
    require_dataset_files(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train-images"), std::string::npos);
  }
}

TEST(Record, SummaryUsesSampleStd) {
  const auto r = sample_record();
  ASSERT_EQ(r.summary.size(), 3u);
  EXPECT_EQ(r.summary[0].bits, "32");
  EXPECT_EQ(r.summary[0].n, 2);
  EXPECT_NEAR(r.summary[0].p_std, std::sqrt(0.0005 * 0.0005 * 2), 1e-12);
  EXPECT_NEAR(r.summary[1].i_mean, (r.rows[2].i + r.rows[3].i) / 2, 1e-15);
  EXPECT_EQ(r.pareto_knee, "8");
  EXPECT_EQ(sample_std({1.0}), 0.0);
}

TEST(Record, SaveLoadVerifies) {
  const fs::path p = fs::temp_directory_path() / "qindex_unit" / "rec" / "sweep.json";
  const auto r = sample_record();
  save_record(r, p);
  const auto back = load_record(p);
  EXPECT_EQ(record_to_json(back), record_to_json(r));
}

TEST(Record, PerturbedDigitIsCaught) {
  const fs::path dir = fs::temp_directory_path() / "qindex_unit" / "rec";
  save_record(sample_record(), dir / "good.json");
  const auto variants = qindex::testing::digit_perturbations(
      nlohmann::json::parse(read_text(dir / "good.json")));
  ASSERT_FALSE(variants.empty());
  const auto& v = variants.at(variants.size() / 2);
  std::ofstream(dir / "bad.json") << v.text;
  EXPECT_THROW(load_record(dir / "bad.json"), IntegrityError);
}

TEST(Record, MalformedIsParseError) {
  const fs::path p = fs::temp_directory_path() / "qindex_unit" / "rec" / "broken.json";
  std::ofstream(p) << "{\"rows\": [";
  EXPECT_THROW(load_record(p), ParseError);
}

TEST(Report, CsvIsStable) {
  const auto r = sample_record();
  const std::string a = format_csv(r);
  EXPECT_EQ(a, format_csv(r));
  EXPECT_EQ(a.substr(0, a.find('\n')), kCsvHeader);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
  EXPECT_EQ(a.find("-0.000000"), std::string::npos);
}

TEST(Report, TableMarksKnee) {
  const std::string t = format_table(sample_record());
  EXPECT_NE(t.find("8 *"), std::string::npos) << t;
}

TEST(Report, PlotSeries) {
  const auto series = format_plotdata(sample_record());
  std::vector<std::string> names;
  for (const auto& s : series) names.push_back(s.name);
  EXPECT_EQ(names, (std::vector<std::string>{"index_vs_bits", "p_t_breakdown", "pareto",
                                             "ranking", "threshold_ablation"}));
  EXPECT_THROW(parse_report_format("xml"), ConfigError);
}

TEST(Fixture, EmbeddedParses) {
  const auto& pub = published_results();
  EXPECT_EQ(pub.ptq_sweep.size(), 5u);
  EXPECT_EQ(pub.llm_sweep.rows.size(), 5u);
  EXPECT_EQ(pub.rankings.size(), 3u);
  EXPECT_NEAR(pub.condition("mnist").fp_accuracy(), 0.9921, 1e-12);
  EXPECT_THROW(parse_published_results("{}"), ParseError);
}

TEST(Verify, SeedValuesHaveRequestedMoments) {
  const auto v = seed_values(0.5, 0.02);
  EXPECT_NEAR((v[0] + v[1] + v[2]) / 3, 0.5, 1e-15);
  EXPECT_NEAR(sample_std({v[0], v[1], v[2]}), 0.02, 1e-15);
}

TEST(Verify, GridMeanEqualsIndexOfMeansWithoutSpread) {
  PublishedRow row;
  row.bits = "8";
  row.p_mean = 0.9;
  row.c = 4.0;
  row.t_mean = 1.2;
  EXPECT_NEAR(seed_grid_mean(row, Metric::kIndex, 0.0),
              index_of_means(row, Metric::kIndex, 0.0), 1e-15);
}
