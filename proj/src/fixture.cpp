#include "qindex/fixture.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "qindex/errors.hpp"

namespace qindex {
namespace {

using nlohmann::json;

constexpr std::string_view kEmbedded =
#include "qindex/published_results.inc"
    ;

PublishedRow parse_row(const json& j) {
  PublishedRow r;
  r.bits = j.at("bits").get<std::string>();
  r.p_mean = j.at("P_mean").get<double>();
  r.p_std = j.at("P_std").get<double>();
  r.c = j.at("C").get<double>();
  r.t_mean = j.at("T_mean").get<double>();
  r.t_std = j.at("T_std").get<double>();
  r.i_mean = j.at("I_mean").get<double>();
  r.i_std = j.at("I_std").get<double>();
  r.iprime_mean = j.at("Iprime_mean").get<double>();
  r.iprime_std = j.at("Iprime_std").get<double>();
  return r;
}

}  // namespace

double PublishedCondition::fp_accuracy() const { return row("32").p_mean; }

const PublishedRow& PublishedCondition::row(const std::string& bits) const {
  for (const auto& r : rows) {
    if (r.bits == bits) return r;
  }
  throw DomainError(fmt::format("condition {} has no {}-bit row", key, bits));
}

const PublishedCondition& PublishedResults::condition(const std::string& key) const {
  for (const auto& c : ptq_sweep) {
    if (c.key == key) return c;
  }
  throw DomainError(fmt::format("no published condition '{}'", key));
}

PublishedResults parse_published_results(std::string_view json_text) {
  PublishedResults out;
  try {
    const json doc = json::parse(json_text);
    for (const auto& jc : doc.at("ptq_sweep")) {
      PublishedCondition c;
      c.key = jc.at("key").get<std::string>();
      c.condition = jc.at("condition").get<std::string>();
      c.num_classes = jc.at("num_classes").get<int>();
      c.delta = jc.at("delta").get<double>();
      c.knee = jc.at("knee").get<std::string>();
      for (const auto& jr : jc.at("rows")) c.rows.push_back(parse_row(jr));
      out.ptq_sweep.push_back(std::move(c));
    }
    const json& jl = doc.at("llm_sweep");
    auto& l = out.llm_sweep;
    l.condition = jl.at("condition").get<std::string>();
    l.threshold = jl.at("threshold").get<double>();
    l.delta = jl.at("delta").get<double>();
    l.fp_accuracy = jl.at("fp_accuracy").get<double>();
    l.scale = jl.at("scale").get<double>();
    l.knee = jl.at("knee").get<std::string>();
    for (const auto& jr : jl.at("rows")) {
      l.rows.push_back(PublishedLlmRow{jr.at("method").get<std::string>(),
                                       jr.at("bits").get<std::string>(),
                                       jr.at("P").get<double>(), jr.at("C").get<double>(),
                                       jr.at("T").get<double>(), jr.at("I").get<double>(),
                                       jr.at("Iprime").get<double>()});
    }
    for (const auto& jk : doc.at("rankings")) {
      PublishedRanking r;
      r.dataset = jk.at("dataset").get<std::string>();
      for (const auto& e : jk.at("ranks")) {
        r.ranks.push_back(PublishedRank{e.at("bits").get<std::string>(), e.at("I").get<int>(),
                                        e.at("Iprime").get<int>(), e.at("ACP").get<int>(),
                                        e.at("ALS").get<int>()});
      }
      out.rankings.push_back(std::move(r));
    }
    for (const auto& jm : doc.at("mixed_precision_reference")) {
      out.mixed_precision_reference.push_back(PublishedMixedRow{
          jm.at("condition").get<std::string>(), jm.at("method").get<std::string>(),
          jm.at("topology").get<std::string>(), jm.at("P").get<double>(),
          jm.at("C").get<double>(), jm.at("T").get<double>(), jm.at("Iprime").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("published results fixture: {}", e.what()));
  }
  return out;
}

std::string_view embedded_published_results_text() { return kEmbedded; }

const PublishedResults& published_results() {
  static const PublishedResults results = parse_published_results(kEmbedded);
  return results;
}

}  // namespace qindex
