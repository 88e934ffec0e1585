#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qindex {

// Per-layer bit-widths drawn from the allele set.
struct Genome {
  std::vector<int> bits;

  std::string label() const;  // "8-8-8-4"
  double mean_bits() const;
  auto operator<=>(const Genome&) const = default;
};

struct GaParams {
  int population = 20;
  int generations = 30;
  double mutation = 0.15;
  int elite = 5;
  uint64_t seed = 0;
  size_t genome_length = 4;
  std::vector<int> alleles{16, 8, 4, 2};

  // Throws DomainError unless elite < population, mutation in [0,1], ...
  void validate() const;
};

// Raw measurements behind one genome's fitness.
struct Evaluation {
  double compression = 1.0;
  double accuracy = 0.0;
  double latency_ms = 1.0;
};

using Evaluator = std::function<Evaluation(const Genome&)>;

// Evaluator failure, carrying the genome that triggered it.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const Genome& genome, const std::string& what);
  const Genome& genome() const { return genome_; }

 private:
  Genome genome_;
};

struct ScoredGenome {
  Genome genome;
  Evaluation evaluation;
  double fitness = 0.0;
};

// Memoised refined-index fitness: C * max(P - thresh, 0) / log2(T + 1).
class FitnessCache {
 public:
  FitnessCache(Evaluator evaluator, double threshold);

  const ScoredGenome& score(const Genome& genome);
  double fitness(const Genome& genome) { return score(genome).fitness; }
  size_t unique_evaluations() const { return cache_.size(); }
  double threshold() const { return threshold_; }

 private:
  Evaluator evaluator_;
  double threshold_;
  std::map<Genome, ScoredGenome> cache_;
};

struct GenerationLog {
  int generation = 0;  // 1-based; generations + 1 is the returned population
  std::vector<Genome> population;
  std::vector<double> fitness;  // aligned with population
  std::vector<Genome> elites;
  Genome best;
  double best_fitness = 0.0;
  bool roulette_fallback = false;  // all-zero fitness, uniform parents
};

struct SearchResult {
  ScoredGenome best;
  std::vector<GenerationLog> log;
  size_t unique_evaluations = 0;
};

// Genetic search over alleles^L: random initial population; per generation
// evaluate, sort by fitness, keep the top `elite` unchanged, and fill the
// rest with uniform-crossover children of roulette-selected parents, each
// mutated at one random locus with probability `mutation`. Returns the
// argmax of the final population.
SearchResult run_ga(const GaParams& params, const Evaluator& evaluator,
                    double threshold);
SearchResult run_ga(const GaParams& params, FitnessCache& cache);

struct ExhaustiveResult {
  ScoredGenome best;
  std::vector<ScoredGenome> table;  // lexicographic over allele order
};

inline constexpr size_t kMaxExhaustiveConfigs = 65536;

// Scores every genome; ties go to the higher mean bit-width. Refuses
// manifolds larger than kMaxExhaustiveConfigs.
ExhaustiveResult exhaustive_search(size_t length, const std::vector<int>& alleles,
                                   const Evaluator& evaluator, double threshold);

// Seeded synthetic landscape: each layer gets a random sensitivity, accuracy
// drops by sensitivity-weighted per-bit-width penalties, compression is
// 32 / mean(bits) and latency grows mildly with the number of quantized
// layers. Used to check the search against the exhaustive oracle.
Evaluator make_surrogate_evaluator(size_t length, uint64_t seed);

}  // namespace qindex
