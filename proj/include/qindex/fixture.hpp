#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qindex {

// Published results shipped with the repository (data/fixtures/) and
// embedded at build time. P is a fraction, T milliseconds.
struct PublishedRow {
  std::string bits;
  double p_mean = 0.0;
  double p_std = 0.0;
  double c = 1.0;
  double t_mean = 0.0;
  double t_std = 0.0;
  double i_mean = 0.0;
  double i_std = 0.0;
  double iprime_mean = 0.0;
  double iprime_std = 0.0;
};

struct PublishedCondition {
  std::string key;  // "mnist", "cifar10", ...
  std::string condition;
  int num_classes = 10;
  double delta = 0.0;
  std::string knee;
  std::vector<PublishedRow> rows;  // first row is the 32-bit anchor

  double fp_accuracy() const;
  const PublishedRow& row(const std::string& bits) const;
};

// Language-model sweep, reported with P on the percent scale.
struct PublishedLlmRow {
  std::string method;
  std::string bits;
  double p = 0.0;
  double c = 1.0;
  double t = 0.0;
  double i = 0.0;
  double iprime = 0.0;
};

struct PublishedLlmSweep {
  std::string condition;
  double threshold = 0.0;
  double delta = 0.0;
  double fp_accuracy = 0.0;
  double scale = 100.0;
  std::string knee;
  std::vector<PublishedLlmRow> rows;
};

struct PublishedRank {
  std::string bits;
  int i = 0;
  int iprime = 0;
  int acp = 0;
  int als = 0;
};

struct PublishedRanking {
  std::string dataset;  // matches PublishedCondition::key
  std::vector<PublishedRank> ranks;
};

// Mixed-precision comparison rows; reference only, not reproduced.
struct PublishedMixedRow {
  std::string condition;
  std::string method;
  std::string topology;
  double p = 0.0;
  double c = 1.0;
  double t = 0.0;
  double iprime = 0.0;
};

struct PublishedResults {
  std::vector<PublishedCondition> ptq_sweep;
  PublishedLlmSweep llm_sweep;
  std::vector<PublishedRanking> rankings;
  std::vector<PublishedMixedRow> mixed_precision_reference;

  const PublishedCondition& condition(const std::string& key) const;
};

// Throws ParseError on malformed input.
PublishedResults parse_published_results(std::string_view json_text);

std::string_view embedded_published_results_text();
const PublishedResults& published_results();

}  // namespace qindex
