#include "qindex/record.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "qindex/errors.hpp"

namespace qindex {
namespace {

using nlohmann::json;

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool close(double a, double b) {
  return std::fabs(a - b) <= kIntegrityTolerance * std::max(1.0, std::fabs(b));
}

void expect(double stored, double recomputed, const std::string& field) {
  if (!close(stored, recomputed)) {
    throw IntegrityError(fmt::format("{}: stored {:.17g}, recomputed {:.17g}", field, stored,
                                     recomputed));
  }
}

json row_to_json(const RecordRow& r) {
  return json{{"bits", r.bits},
              {"seed", r.seed ? json(*r.seed) : json(nullptr)},
              {"P", r.p},
              {"C", r.c},
              {"T", r.t},
              {"U", r.u},
              {"I", r.i},
              {"Iprime", r.iprime},
              {"ACP", r.acp},
              {"ALS", r.als}};
}

json summary_to_json(const SummaryRow& s) {
  return json{{"bits", s.bits},          {"n", s.n},
              {"P_mean", s.p_mean},      {"P_std", s.p_std},
              {"C", s.c},                {"T_mean", s.t_mean},
              {"T_std", s.t_std},        {"I_mean", s.i_mean},
              {"I_std", s.i_std},        {"Iprime_mean", s.iprime_mean},
              {"Iprime_std", s.iprime_std}, {"ACP_mean", s.acp_mean},
              {"ALS_mean", s.als_mean}};
}

}  // namespace

RecordRow make_row(const std::string& bits, std::optional<uint64_t> seed, double p,
                   double c, double t, double threshold) {
  const MetricReport m = make_report(MetricPoint{bits, p, c, t}, threshold);
  return RecordRow{bits, seed, p, c, t, m.spatial_utility_u, m.index_i, m.index_i_prime,
                   m.acp, m.als};
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<SummaryRow> summarize(const std::vector<RecordRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RecordRow*>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.bits)) order.push_back(r.bits);
    groups[r.bits].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& bits : order) {
    const auto& g = groups[bits];
    std::vector<double> p, t, i, ip, acp, als;
    for (const RecordRow* r : g) {
      if (r->c != g.front()->c) {
        throw IntegrityError(fmt::format("configuration {} has inconsistent C across seeds",
                                         bits));
      }
      p.push_back(r->p);
      t.push_back(r->t);
      i.push_back(r->i);
      ip.push_back(r->iprime);
      acp.push_back(r->acp);
      als.push_back(r->als);
    }
    SummaryRow s;
    s.bits = bits;
    s.n = static_cast<int>(g.size());
    s.p_mean = mean(p);
    s.p_std = sample_std(p);
    s.c = g.front()->c;
    s.t_mean = mean(t);
    s.t_std = sample_std(t);
    s.i_mean = mean(i);
    s.i_std = sample_std(i);
    s.iprime_mean = mean(ip);
    s.iprime_std = sample_std(ip);
    s.acp_mean = mean(acp);
    s.als_mean = mean(als);
    out.push_back(s);
  }
  return out;
}

std::string pareto_knee(const std::vector<SummaryRow>& summary) {
  if (summary.empty()) return "";
  std::vector<std::string> labels;
  std::vector<double> scores;
  for (const auto& s : summary) {
    labels.push_back(s.bits);
    scores.push_back(s.iprime_mean);
  }
  for (const auto& e : rank_scores(labels, scores)) {
    if (e.rank == 1) return e.bits_label;
  }
  return "";
}

void finalize(RunRecord& record) {
  record.summary = summarize(record.rows);
  record.pareto_knee = pareto_knee(record.summary);
}

json record_to_json(const RunRecord& r) {
  json j;
  j["run_id"] = r.run_id;
  j["timestamp"] = r.timestamp;
  j["command"] = r.command;
  j["config"] = r.config;
  j["seeds"] = r.seeds;
  j["threshold"] = {{"num_classes", r.threshold_spec.num_classes_k},
                    {"fp_accuracy", r.threshold_spec.fp_accuracy},
                    {"delta", r.threshold_spec.delta},
                    {"value", r.threshold}};
  j["rows"] = json::array();
  for (const auto& row : r.rows) j["rows"].push_back(row_to_json(row));
  j["summary"] = json::array();
  for (const auto& s : r.summary) j["summary"].push_back(summary_to_json(s));
  j["pareto_knee"] = r.pareto_knee;
  j["environment"] = r.environment;
  j["artifacts"] = r.artifacts;
  j["details"] = r.details;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.command = j.at("command").get<std::string>();
    r.config = j.at("config");
    r.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    const json& t = j.at("threshold");
    r.threshold_spec.num_classes_k = t.at("num_classes").get<int>();
    r.threshold_spec.fp_accuracy = t.at("fp_accuracy").get<double>();
    r.threshold_spec.delta = t.at("delta").get<double>();
    r.threshold = t.at("value").get<double>();
    for (const auto& jr : j.at("rows")) {
      RecordRow row;
      row.bits = jr.at("bits").get<std::string>();
      if (!jr.at("seed").is_null()) row.seed = jr.at("seed").get<uint64_t>();
      row.p = jr.at("P").get<double>();
      row.c = jr.at("C").get<double>();
      row.t = jr.at("T").get<double>();
      row.u = jr.at("U").get<double>();
      row.i = jr.at("I").get<double>();
      row.iprime = jr.at("Iprime").get<double>();
      row.acp = jr.at("ACP").get<double>();
      row.als = jr.at("ALS").get<double>();
      r.rows.push_back(row);
    }
    for (const auto& js : j.at("summary")) {
      SummaryRow s;
      s.bits = js.at("bits").get<std::string>();
      s.n = js.at("n").get<int>();
      s.p_mean = js.at("P_mean").get<double>();
      s.p_std = js.at("P_std").get<double>();
      s.c = js.at("C").get<double>();
      s.t_mean = js.at("T_mean").get<double>();
      s.t_std = js.at("T_std").get<double>();
      s.i_mean = js.at("I_mean").get<double>();
      s.i_std = js.at("I_std").get<double>();
      s.iprime_mean = js.at("Iprime_mean").get<double>();
      s.iprime_std = js.at("Iprime_std").get<double>();
      s.acp_mean = js.at("ACP_mean").get<double>();
      s.als_mean = js.at("ALS_mean").get<double>();
      r.summary.push_back(s);
    }
    r.pareto_knee = j.at("pareto_knee").get<std::string>();
    r.environment = j.at("environment");
    r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    r.details = j.at("details");
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("run record: {}", e.what()));
  }
  return r;
}

void verify_record(const RunRecord& r) {
  if (r.threshold_spec.num_classes_k > 0) {
    double recomputed = 0.0;
    try {
      recomputed = resolve_threshold(r.threshold_spec);
    } catch (const DomainError& e) {
      throw IntegrityError(fmt::format("threshold: {}", e.what()));
    }
    expect(r.threshold, recomputed, "threshold.value");
  }
  for (size_t k = 0; k < r.rows.size(); ++k) {
    const auto& row = r.rows[k];
    RecordRow fresh;
    try {
      fresh = make_row(row.bits, row.seed, row.p, row.c, row.t, r.threshold);
    } catch (const DomainError& e) {
      throw IntegrityError(fmt::format("rows[{}]: {}", k, e.what()));
    }
    const std::string at = fmt::format("rows[{}] ({})", k, row.bits);
    expect(row.u, fresh.u, at + ".U");
    expect(row.i, fresh.i, at + ".I");
    expect(row.iprime, fresh.iprime, at + ".Iprime");
    expect(row.acp, fresh.acp, at + ".ACP");
    expect(row.als, fresh.als, at + ".ALS");
  }
  const auto summary = summarize(r.rows);
  if (summary.size() != r.summary.size()) {
    throw IntegrityError(fmt::format("summary has {} rows, rows aggregate to {}",
                                     r.summary.size(), summary.size()));
  }
  for (size_t k = 0; k < summary.size(); ++k) {
    const auto& a = r.summary[k];
    const auto& b = summary[k];
    const std::string at = fmt::format("summary[{}] ({})", k, b.bits);
    if (a.bits != b.bits || a.n != b.n) {
      throw IntegrityError(fmt::format("{}: stored {} over {} rows", at, a.bits, a.n));
    }
    expect(a.p_mean, b.p_mean, at + ".P_mean");
    expect(a.p_std, b.p_std, at + ".P_std");
    expect(a.c, b.c, at + ".C");
    expect(a.t_mean, b.t_mean, at + ".T_mean");
    expect(a.t_std, b.t_std, at + ".T_std");
    expect(a.i_mean, b.i_mean, at + ".I_mean");
    expect(a.i_std, b.i_std, at + ".I_std");
    expect(a.iprime_mean, b.iprime_mean, at + ".Iprime_mean");
    expect(a.iprime_std, b.iprime_std, at + ".Iprime_std");
    expect(a.acp_mean, b.acp_mean, at + ".ACP_mean");
    expect(a.als_mean, b.als_mean, at + ".ALS_mean");
  }
  const std::string knee = pareto_knee(summary);
  if (knee != r.pareto_knee) {
    throw IntegrityError(
        fmt::format("pareto_knee: stored '{}', recomputed '{}'", r.pareto_knee, knee));
  }
}

void save_record(const RunRecord& record, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write record {}", path.string()));
  out << record_to_json(record).dump(2) << '\n';
}

RunRecord load_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open record {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("record {}: {}", path.string(), e.what()));
  }
  RunRecord r = record_from_json(j);
  verify_record(r);
  return r;
}

}  // namespace qindex
