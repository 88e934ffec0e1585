#include "qindex/train.hpp"

#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>

#include "qindex/errors.hpp"

namespace qindex {

double evaluate_accuracy(const ForwardFn& model, const Dataset& data,
                         size_t batch_size) {
  if (data.size() == 0) throw DomainError("cannot evaluate on an empty dataset");
  if (batch_size == 0) throw DomainError("batch size must be positive");
  size_t correct = 0;
  for (size_t begin = 0; begin < data.size(); begin += batch_size) {
    const size_t end = std::min(begin + batch_size, data.size());
    const auto pred = argmax_rows(model(data.batch(begin, end)));
    for (size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == data.labels[begin + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double evaluate_accuracy(const NetworkDef& net, const WeightStore& weights,
                         const Dataset& data, size_t batch_size) {
  return evaluate_accuracy(
      [&](const Tensor& batch) { return forward(net, weights, batch); }, data,
      batch_size);
}

namespace {

struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
};

void adam_update(std::span<float> param, std::span<const float> grad, AdamState& st,
                 const TrainConfig& c, int64_t step) {
  if (st.m.empty()) {
    st.m.assign(param.size(), 0.0f);
    st.v.assign(param.size(), 0.0f);
  }
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
  const float b1 = static_cast<float>(c.beta1), b2 = static_cast<float>(c.beta2);
  const float lr = static_cast<float>(c.learning_rate / bc1);
  const float inv_bc2 = static_cast<float>(1.0 / bc2);
  const float eps = static_cast<float>(c.epsilon);
  const float wd = static_cast<float>(c.weight_decay);
  for (size_t i = 0; i < param.size(); ++i) {
    const float g = grad[i] + wd * param[i];
    st.m[i] = b1 * st.m[i] + (1.0f - b1) * g;
    st.v[i] = b2 * st.v[i] + (1.0f - b2) * g * g;
    param[i] -= lr * st.m[i] / (std::sqrt(st.v[i] * inv_bc2) + eps);
  }
}

}  // namespace

TrainResult train_baseline(const NetworkDef& net, const Dataset& data,
                           const TrainConfig& config, const EpochCallback& on_epoch) {
  if (data.size() == 0) throw DomainError("cannot train on an empty dataset");
  if (config.epochs < 0 || config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw DomainError("epochs, batch size and learning rate must be positive");
  }
  data.validate();
  if (data.num_classes != net.num_classes) {
    throw DomainError(fmt::format("dataset has {} classes, network {}", data.num_classes,
                                  net.num_classes));
  }

  TrainResult result;
  WeightStore weights = init_weights(net, config.seed);
  result.weights = weights;
  if (config.epochs == 0) return result;

  auto [train, holdout] = split_holdout(data, config.validation_fraction, config.seed);
  if (train.size() == 0) throw DomainError("validation split leaves no training data");

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::map<size_t, std::pair<AdamState, AdamState>> adam;
  int64_t step = 0;
  double best_val = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = sample_indices(train.size(), train.size(), rng());
    double loss_sum = 0.0;
    int64_t correct = 0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const size_t end = std::min(begin + config.batch_size, order.size());
      const std::span<const size_t> idx(order.data() + begin, end - begin);
      Dataset mb = train.subset(idx);
      if (config.augment) augment_crop_flip(mb.images, config.augment_pad, rng);
      auto lg = loss_and_gradients(net, weights, mb.images, mb.labels);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError(
            fmt::format("loss became non-finite in epoch {}", epoch), epoch);
      }
      ++step;
      for (auto& [layer, p] : weights.layers) {
        auto& g = lg.gradients.layers.at(layer);
        auto& st = adam[layer];
        adam_update(p.weight.data(), g.weight.data(), st.first, config, step);
        adam_update(p.bias.data(), g.bias.data(), st.second, config, step);
      }
      loss_sum += lg.loss * static_cast<double>(end - begin);
      correct += lg.correct;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    stats.validation_accuracy = holdout.size() > 0
                                    ? evaluate_accuracy(net, weights, holdout)
                                    : stats.train_accuracy;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    const bool better = holdout.size() == 0 || stats.validation_accuracy > best_val;
    if (better) {
      best_val = stats.validation_accuracy;
      result.best_epoch = epoch;
      result.weights = weights;
    }
  }
  return result;
}

}  // namespace qindex
