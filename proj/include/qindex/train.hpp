#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qindex/dataset.hpp"
#include "qindex/network.hpp"

namespace qindex {

// Fraction of samples whose argmax logit (lowest index on ties) equals the
// label. Throws DomainError on an empty dataset.
double evaluate_accuracy(const ForwardFn& model, const Dataset& data,
                         size_t batch_size = 256);
double evaluate_accuracy(const NetworkDef& net, const WeightStore& weights,
                         const Dataset& data, size_t batch_size = 256);

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  size_t batch_size = 128;
  uint64_t seed = 0;
  double weight_decay = 1e-4;  // L2 term added to the gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Held-out share of the training data used to pick the best epoch. With 0
  // the final epoch is returned.
  double validation_fraction = 0.1;
  bool augment = false;
  int64_t augment_pad = 4;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainResult {
  WeightStore weights;
  int best_epoch = 0;  // 0 means the initialisation
  std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch Adam on softmax cross-entropy, starting from
// init_weights(net, config.seed). Returns the weights of the epoch with the
// highest validation accuracy (earliest on ties). Deterministic per seed.
// Throws TrainingError if the loss becomes non-finite.
TrainResult train_baseline(const NetworkDef& net, const Dataset& data,
                           const TrainConfig& config,
                           const EpochCallback& on_epoch = {});

}  // namespace qindex
