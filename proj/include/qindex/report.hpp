#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qindex/record.hpp"

namespace qindex {

enum class ReportFormat { kCsv, kJson, kTable, kPlotData };

// Throws ConfigError for an unknown name.
ReportFormat parse_report_format(const std::string& name);

inline constexpr const char* kCsvHeader =
    "bits,P_mean,P_std,C,T_mean,T_std,I_mean,I_std,Iprime_mean,Iprime_std";

// Ranks of every summary row under each metric, from the per-seed means.
struct SummaryRanks {
  std::vector<std::string> bits;
  std::vector<int> i;
  std::vector<int> iprime;
  std::vector<int> acp;
  std::vector<int> als;
};

SummaryRanks summary_ranks(const std::vector<SummaryRow>& summary);

std::string format_csv(const RunRecord& record);
std::string format_table(const RunRecord& record);
std::string format_json(const std::vector<RunRecord>& records,
                        const std::vector<std::string>& names);

struct PlotSeries {
  std::string name;     // file suffix, e.g. "index_vs_bits"
  std::string content;  // header line naming the columns, then rows
};

// Series: index_vs_bits, p_t_breakdown, pareto, ranking, threshold_ablation.
std::vector<PlotSeries> format_plotdata(const RunRecord& record);

}  // namespace qindex
