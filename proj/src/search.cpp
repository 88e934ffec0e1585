#include "qindex/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qindex/errors.hpp"
#include "qindex/metrics.hpp"

namespace qindex {
namespace {

// Index of the best entry: highest fitness, then higher mean bit-width, then
// earliest position.
size_t best_index(const std::vector<Genome>& genomes, const std::vector<double>& fitness) {
  size_t best = 0;
  for (size_t i = 1; i < genomes.size(); ++i) {
    if (fitness[i] > fitness[best] ||
        (fitness[i] == fitness[best] && genomes[i].mean_bits() > genomes[best].mean_bits())) {
      best = i;
    }
  }
  return best;
}

Genome random_genome(const GaParams& p, std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> pick(0, p.alleles.size() - 1);
  Genome g;
  g.bits.resize(p.genome_length);
  for (auto& b : g.bits) b = p.alleles[pick(rng)];
  return g;
}

size_t roulette(const std::vector<double>& fitness, double total, std::mt19937_64& rng) {
  if (!(total > 0.0)) {
    std::uniform_int_distribution<size_t> pick(0, fitness.size() - 1);
    return pick(rng);
  }
  std::uniform_real_distribution<double> spin(0.0, total);
  const double target = spin(rng);
  double acc = 0.0;
  for (size_t i = 0; i < fitness.size(); ++i) {
    acc += fitness[i];
    if (target < acc) return i;
  }
  // Rounding can leave target == total; take the last positive entry.
  for (size_t i = fitness.size(); i-- > 0;) {
    if (fitness[i] > 0.0) return i;
  }
  return fitness.size() - 1;
}

}  // namespace

std::string Genome::label() const { return fmt::format("{}", fmt::join(bits, "-")); }

double Genome::mean_bits() const {
  if (bits.empty()) return 0.0;
  return std::accumulate(bits.begin(), bits.end(), 0.0) / static_cast<double>(bits.size());
}

void GaParams::validate() const {
  if (population <= 0) throw DomainError("population must be positive");
  if (generations < 0) throw DomainError("generations must be nonnegative");
  if (elite < 0 || elite >= population) {
    throw DomainError(fmt::format("elite count {} must be below population {}", elite,
                                  population));
  }
  if (!(mutation >= 0.0 && mutation <= 1.0)) {
    throw DomainError(fmt::format("mutation probability {} outside [0, 1]", mutation));
  }
  if (genome_length == 0) throw DomainError("genome length must be positive");
  if (alleles.empty()) throw DomainError("allele set is empty");
}

EvaluationError::EvaluationError(const Genome& genome, const std::string& what)
    : std::runtime_error(fmt::format("evaluating genome {}: {}", genome.label(), what)),
      genome_(genome) {}

FitnessCache::FitnessCache(Evaluator evaluator, double threshold)
    : evaluator_(std::move(evaluator)), threshold_(threshold) {}

const ScoredGenome& FitnessCache::score(const Genome& genome) {
  auto it = cache_.find(genome);
  if (it != cache_.end()) return it->second;
  ScoredGenome s;
  s.genome = genome;
  try {
    s.evaluation = evaluator_(genome);
    const MetricPoint point{genome.label(), s.evaluation.accuracy,
                            s.evaluation.compression, s.evaluation.latency_ms};
    s.fitness = refined_index(point, threshold_);
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(genome, e.what());
  }
  return cache_.emplace(genome, std::move(s)).first->second;
}

SearchResult run_ga(const GaParams& params, const Evaluator& evaluator,
                    double threshold) {
  FitnessCache cache(evaluator, threshold);
  return run_ga(params, cache);
}

SearchResult run_ga(const GaParams& params, FitnessCache& cache) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<size_t> locus(0, params.genome_length - 1);
  std::uniform_int_distribution<size_t> allele(0, params.alleles.size() - 1);

  std::vector<Genome> population;
  for (int i = 0; i < params.population; ++i) population.push_back(random_genome(params, rng));

  SearchResult result;
  const auto evaluate = [&](const std::vector<Genome>& pop) {
    std::vector<double> f;
    f.reserve(pop.size());
    for (const auto& g : pop) f.push_back(cache.fitness(g));
    return f;
  };

  for (int gen = 1; gen <= params.generations; ++gen) {
    const std::vector<double> fitness = evaluate(population);

    std::vector<size_t> order(population.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return fitness[a] > fitness[b]; });
    std::vector<Genome> sorted;
    std::vector<double> sorted_fitness;
    for (size_t i : order) {
      sorted.push_back(population[i]);
      sorted_fitness.push_back(fitness[i]);
    }
    const double total = std::accumulate(sorted_fitness.begin(), sorted_fitness.end(), 0.0);

    GenerationLog entry;
    entry.generation = gen;
    entry.population = population;
    entry.fitness = fitness;
    const size_t b = best_index(population, fitness);
    entry.best = population[b];
    entry.best_fitness = fitness[b];
    entry.roulette_fallback = !(total > 0.0);

    std::vector<Genome> next(sorted.begin(), sorted.begin() + params.elite);
    entry.elites = next;
    while (static_cast<int>(next.size()) < params.population) {
      const Genome& p1 = sorted[roulette(sorted_fitness, total, rng)];
      const Genome& p2 = sorted[roulette(sorted_fitness, total, rng)];
      Genome child;
      child.bits.resize(params.genome_length);
      for (size_t l = 0; l < params.genome_length; ++l) {
        child.bits[l] = coin(rng) ? p1.bits[l] : p2.bits[l];
      }
      if (unit(rng) < params.mutation) {
        const size_t at = locus(rng);
        child.bits[at] = params.alleles[allele(rng)];
      }
      next.push_back(std::move(child));
    }
    result.log.push_back(std::move(entry));
    population = std::move(next);
  }

  const std::vector<double> fitness = evaluate(population);
  const size_t b = best_index(population, fitness);
  GenerationLog last;
  last.generation = params.generations + 1;
  last.population = population;
  last.fitness = fitness;
  last.best = population[b];
  last.best_fitness = fitness[b];
  result.log.push_back(std::move(last));
  result.best = cache.score(population[b]);
  result.unique_evaluations = cache.unique_evaluations();
  return result;
}

ExhaustiveResult exhaustive_search(size_t length, const std::vector<int>& alleles,
                                   const Evaluator& evaluator, double threshold) {
  if (length == 0 || alleles.empty()) {
    throw DomainError("exhaustive search needs a nonempty manifold");
  }
  double count = std::pow(static_cast<double>(alleles.size()), static_cast<double>(length));
  if (count > static_cast<double>(kMaxExhaustiveConfigs)) {
    throw DomainError(fmt::format("manifold of {} configurations exceeds the {} limit",
                                  count, kMaxExhaustiveConfigs));
  }
  FitnessCache cache(evaluator, threshold);
  ExhaustiveResult result;
  std::vector<size_t> digits(length, 0);
  const size_t total = static_cast<size_t>(count);
  for (size_t n = 0; n < total; ++n) {
    Genome g;
    for (size_t d : digits) g.bits.push_back(alleles[d]);
    result.table.push_back(cache.score(g));
    for (size_t pos = length; pos-- > 0;) {
      if (++digits[pos] < alleles.size()) break;
      digits[pos] = 0;
    }
  }
  size_t best = 0;
  for (size_t i = 1; i < result.table.size(); ++i) {
    const auto& a = result.table[i];
    const auto& b = result.table[best];
    if (a.fitness > b.fitness ||
        (a.fitness == b.fitness && a.genome.mean_bits() > b.genome.mean_bits())) {
      best = i;
    }
  }
  result.best = result.table[best];
  return result;
}

Evaluator make_surrogate_evaluator(size_t length, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sens(0.2, 1.5);
  std::uniform_real_distribution<double> cost(0.02, 0.08);
  std::vector<double> sensitivity(length), layer_cost(length);
  for (size_t l = 0; l < length; ++l) {
    sensitivity[l] = sens(rng);
    layer_cost[l] = cost(rng);
  }
  return [sensitivity, layer_cost](const Genome& g) {
    if (g.bits.size() != sensitivity.size()) {
      throw DomainError("genome length does not match the surrogate landscape");
    }
    const auto penalty = [](int bits) {
      switch (bits) {
        case 16:
          return 0.0;
        case 8:
          return 0.004;
        case 4:
          return 0.05;
        case 2:
          return 0.40;
        default:
          return 1.0;
      }
    };
    Evaluation e;
    double p = 0.95;
    double t = 1.0;
    for (size_t l = 0; l < g.bits.size(); ++l) {
      p -= sensitivity[l] * penalty(g.bits[l]);
      t += layer_cost[l] * (g.bits[l] < 16 ? 1.0 : 0.0);
    }
    e.accuracy = std::clamp(p, 0.0, 1.0);
    e.latency_ms = t;
    e.compression = 32.0 / g.mean_bits();
    return e;
  };
}

}  // namespace qindex
