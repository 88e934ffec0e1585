// qindex: train, sweep, search, bench, report and verify-paper commands.
//
// Exit codes: 0 success, 1 usage/config error, 2 data/parse error,
// 3 integrity/verification failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qindex/commands.hpp"
#include "qindex/errors.hpp"

namespace {

using namespace qindex;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIntegrity = 3;

struct Overrides {
  std::string config_path;
  std::vector<uint64_t> seeds;
  std::vector<int> bits;
  std::optional<double> delta;
  std::string out_dir;
  std::string weights;
  std::optional<int> epochs;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "Experiment config (JSON)");
  cmd->add_option("--seeds", o.seeds, "Seeds, overriding the config");
  cmd->add_option("--bits", o.bits, "Bit-widths, overriding the config");
  cmd->add_option("--delta", o.delta, "Threshold tolerance delta");
  cmd->add_option("--out-dir", o.out_dir, "Directory for records and logs");
  cmd->add_option("--weights", o.weights, "Baseline weight file");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  apply_environment(c);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.bits.empty()) c.bits = o.bits;
  if (o.delta) c.threshold.delta = *o.delta;
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (!o.weights.empty()) c.weights = o.weights;
  if (o.epochs) c.train.epochs = *o.epochs;
  validate_config(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantization efficiency indices: PTQ sweeps, benchmarks and search"};
  app.require_subcommand(1);

  Overrides o;
  auto* train = app.add_subcommand("train", "Train the full-precision baseline");
  auto* sweep = app.add_subcommand("sweep", "Seed x bit-width PTQ sweep");
  auto* search = app.add_subcommand("search", "Genetic mixed-precision search");
  auto* bench = app.add_subcommand("bench", "Latency of each uniform bit-width");
  for (auto* cmd : {train, sweep, search, bench}) add_experiment_flags(cmd, o);

  auto* report = app.add_subcommand("report", "Emit tables or plot data from run records");
  std::vector<std::string> record_paths;
  std::string format = "table";
  std::string report_dir;
  report->add_option("records", record_paths, "Run record files");
  report->add_option("--format", format, "csv|json|table|plotdata")
      ->check(CLI::IsMember({"csv", "json", "table", "plotdata"}));
  report->add_option("--out-dir", report_dir, "Write files here instead of stdout");

  auto* verify = app.add_subcommand("verify-paper",
                                    "Recompute the published indices and rankings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (verify->parsed()) {
      return cmd_verify_paper(std::cout).passed() ? 0 : kExitIntegrity;
    }
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(record_paths.begin(), record_paths.end());
      const auto written =
          cmd_report(paths, parse_report_format(format), report_dir, std::cout);
      for (const auto& p : written) std::cerr << "wrote " << p.string() << '\n';
      return 0;
    }
    const ExperimentConfig config = resolve(o);
    RunRecord record;
    if (train->parsed()) record = cmd_train(config, std::cerr);
    if (sweep->parsed()) record = cmd_sweep(config, std::cerr);
    if (search->parsed()) record = cmd_search(config, std::cerr);
    if (bench->parsed()) record = cmd_bench(config, std::cerr);
    std::cout << record.artifacts["record"] << '\n';
    return 0;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitData;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
