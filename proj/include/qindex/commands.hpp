#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qindex/config.hpp"
#include "qindex/record.hpp"
#include "qindex/report.hpp"
#include "qindex/search.hpp"
#include "qindex/verify.hpp"

namespace qindex {

// Every command validates its config and inputs before doing any work and
// writes its record to <out_dir>/<command>.json. Progress goes to `log`.

// Trains the baseline and saves it to config.weights.
RunRecord cmd_train(const ExperimentConfig& config, std::ostream& log);

// Seed x bit-width PTQ sweep of the saved baseline.
RunRecord cmd_sweep(const ExperimentConfig& config, std::ostream& log);

struct SearchOutcome {
  RunRecord record;
  SearchResult result;
  std::vector<ScoredGenome> uniform;  // one per allele, same evaluator
};

// Genetic mixed-precision search; the log is also written to
// <out_dir>/search_log.json.
SearchOutcome run_search(const ExperimentConfig& config, std::ostream& log);
RunRecord cmd_search(const ExperimentConfig& config, std::ostream& log);

// Latency of the FP model and each uniform bit-width.
RunRecord cmd_bench(const ExperimentConfig& config, std::ostream& log);

// Loads and verifies each record, then emits `format`. csv/json/table go to
// `out` (or, with a non-empty out_dir, to <out_dir>/<stem>.<ext>); plotdata
// always writes <out_dir>/<stem>.<series>.dat. Returns the files written.
std::vector<std::filesystem::path> cmd_report(
    const std::vector<std::filesystem::path>& records, ReportFormat format,
    const std::filesystem::path& out_dir, std::ostream& out);

// Prints the row-by-row diff against the embedded published results.
VerifyReport cmd_verify_paper(std::ostream& out);

nlohmann::json search_log_to_json(const SearchResult& result);

}  // namespace qindex
