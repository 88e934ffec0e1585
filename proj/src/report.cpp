#include "qindex/report.hpp"

#include <fmt/format.h>

#include "qindex/errors.hpp"

namespace qindex {
namespace {

using nlohmann::json;

// Fixed-point text of a half-away-from-zero rounded value; never "-0.000".
std::string fixed(double v, int decimals) {
  double r = round_half_away(v, decimals);
  if (r == 0.0) r = 0.0;
  return fmt::format("{:.{}f}", r, decimals);
}

std::vector<int> ranks_for(const std::vector<std::string>& labels,
                           const std::vector<double>& scores) {
  std::vector<int> out;
  for (const auto& e : rank_scores(labels, scores)) out.push_back(e.rank);
  return out;
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "table") return ReportFormat::kTable;
  if (name == "plotdata") return ReportFormat::kPlotData;
  throw ConfigError(fmt::format("unknown report format '{}' (csv|json|table|plotdata)", name));
}

SummaryRanks summary_ranks(const std::vector<SummaryRow>& summary) {
  SummaryRanks r;
  std::vector<double> i, ip, acp, als;
  for (const auto& s : summary) {
    r.bits.push_back(s.bits);
    i.push_back(s.i_mean);
    ip.push_back(s.iprime_mean);
    acp.push_back(s.acp_mean);
    als.push_back(s.als_mean);
  }
  if (summary.empty()) return r;
  r.i = ranks_for(r.bits, i);
  r.iprime = ranks_for(r.bits, ip);
  r.acp = ranks_for(r.bits, acp);
  r.als = ranks_for(r.bits, als);
  return r;
}

std::string format_csv(const RunRecord& record) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& s : record.summary) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", s.bits, fixed(s.p_mean, 6),
                       fixed(s.p_std, 6), fixed(s.c, 6), fixed(s.t_mean, 6),
                       fixed(s.t_std, 6), fixed(s.i_mean, 6), fixed(s.i_std, 6),
                       fixed(s.iprime_mean, 6), fixed(s.iprime_std, 6));
  }
  return out;
}

std::string format_table(const RunRecord& record) {
  std::string out = fmt::format("{} run {}  threshold {}  (K={}, P_FP={}, delta={})\n",
                                record.command, record.run_id, fixed(record.threshold, 4),
                                record.threshold_spec.num_classes_k,
                                fixed(record.threshold_spec.fp_accuracy, 4),
                                fixed(record.threshold_spec.delta, 2));
  out += fmt::format("{:<14} {:>17} {:>7} {:>17} {:>15} {:>15}\n", "bits", "P (%)", "C",
                     "T (ms)", "I", "I'");
  for (const auto& s : record.summary) {
    const std::string mark = s.bits == record.pareto_knee ? " *" : "";
    out += fmt::format("{:<14} {:>17} {:>7} {:>17} {:>15} {:>15}\n", s.bits + mark,
                       fixed(100.0 * s.p_mean, 2) + " ± " + fixed(100.0 * s.p_std, 2),
                       fixed(s.c, 2), fixed(s.t_mean, 2) + " ± " + fixed(s.t_std, 2),
                       fixed(s.i_mean, 3) + " ± " + fixed(s.i_std, 3),
                       fixed(s.iprime_mean, 3) + " ± " + fixed(s.iprime_std, 3));
  }
  out += "* Pareto knee (peak I')\n\n";
  const auto ranks = summary_ranks(record.summary);
  out += fmt::format("{:<14} {:>6} {:>6} {:>6} {:>6}\n", "bits", "I", "I'", "ACP", "ALS");
  for (size_t k = 0; k < ranks.bits.size(); ++k) {
    out += fmt::format("{:<14} {:>6} {:>6} {:>6} {:>6}\n", ranks.bits[k], ranks.i[k],
                       ranks.iprime[k], ranks.acp[k], ranks.als[k]);
  }
  return out;
}

std::string format_json(const std::vector<RunRecord>& records,
                        const std::vector<std::string>& names) {
  json out = json::array();
  for (size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const auto ranks = summary_ranks(r.summary);
    json rows = json::array();
    for (size_t n = 0; n < r.summary.size(); ++n) {
      const auto& s = r.summary[n];
      rows.push_back({{"bits", s.bits},
                      {"P_mean", s.p_mean},
                      {"P_std", s.p_std},
                      {"C", s.c},
                      {"T_mean", s.t_mean},
                      {"T_std", s.t_std},
                      {"I_mean", s.i_mean},
                      {"I_std", s.i_std},
                      {"Iprime_mean", s.iprime_mean},
                      {"Iprime_std", s.iprime_std},
                      {"rank_I", ranks.i[n]},
                      {"rank_Iprime", ranks.iprime[n]},
                      {"rank_ACP", ranks.acp[n]},
                      {"rank_ALS", ranks.als[n]},
                      {"pareto_knee", s.bits == r.pareto_knee}});
    }
    out.push_back({{"source", k < names.size() ? names[k] : ""},
                   {"run_id", r.run_id},
                   {"command", r.command},
                   {"threshold", r.threshold},
                   {"pareto_knee", r.pareto_knee},
                   {"summary", rows}});
  }
  return out.dump(2) + "\n";
}

std::vector<PlotSeries> format_plotdata(const RunRecord& record) {
  std::vector<PlotSeries> out;
  const auto& sum = record.summary;

  PlotSeries index{"index_vs_bits", "bits mean_bits I_mean I_std Iprime_mean Iprime_std\n"};
  PlotSeries pt{"p_t_breakdown", "bits P_mean P_std T_mean_ms T_std_ms\n"};
  PlotSeries pareto{"pareto", "C P_mean Iprime_mean bits knee\n"};
  PlotSeries ranking{"ranking", "bits rank_I rank_Iprime rank_ACP rank_ALS\n"};
  const auto ranks = summary_ranks(sum);
  for (size_t k = 0; k < sum.size(); ++k) {
    const auto& s = sum[k];
    index.content += fmt::format("{} {} {} {} {} {}\n", s.bits,
                                 fixed(label_mean_bits(s.bits), 4), fixed(s.i_mean, 6),
                                 fixed(s.i_std, 6), fixed(s.iprime_mean, 6),
                                 fixed(s.iprime_std, 6));
    pt.content += fmt::format("{} {} {} {} {}\n", s.bits, fixed(s.p_mean, 6),
                              fixed(s.p_std, 6), fixed(s.t_mean, 6), fixed(s.t_std, 6));
    pareto.content += fmt::format("{} {} {} {} {}\n", fixed(s.c, 6), fixed(s.p_mean, 6),
                                  fixed(s.iprime_mean, 6), s.bits,
                                  s.bits == record.pareto_knee ? 1 : 0);
    ranking.content += fmt::format("{} {} {} {} {}\n", s.bits, ranks.i[k], ranks.iprime[k],
                                   ranks.acp[k], ranks.als[k]);
  }
  out.push_back(std::move(index));
  out.push_back(std::move(pt));
  out.push_back(std::move(pareto));
  out.push_back(std::move(ranking));

  if (!sum.empty() && record.threshold_spec.num_classes_k > 0) {
    std::vector<MetricPoint> points;
    for (const auto& s : sum) points.push_back(MetricPoint{s.bits, s.p_mean, s.c, s.t_mean});
    std::vector<double> grid;
    for (int d = 0; d <= 20; ++d) grid.push_back(0.05 * d);
    PlotSeries ablation{"threshold_ablation", "delta threshold argmax_bits peak_Iprime\n"};
    for (const auto& row : threshold_ablation(points, record.threshold_spec, grid)) {
      ablation.content += fmt::format("{} {} {} {}\n", fixed(row.delta, 2),
                                      fixed(row.threshold, 6), row.argmax_label,
                                      fixed(row.peak_index_i_prime, 6));
    }
    out.push_back(std::move(ablation));
  }
  return out;
}

}  // namespace qindex
