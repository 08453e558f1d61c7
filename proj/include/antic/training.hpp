#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "antic/dataset.hpp"
#include "antic/encoding.hpp"
#include "antic/errors.hpp"
#include "antic/nn/adam.hpp"
#include "antic/rng.hpp"

namespace antic {

struct TrainConfig {
  std::size_t hidden = 128;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  int epochs = 60;
  double dropout = 0.5;
  double grad_clip = 0.0;  // 0 disables clipping
  std::uint64_t seed = 1;
};

namespace detail {

using BatchLoss = std::function<nn::VarPtr(nn::Tape&, const std::vector<const TrainingExample*>&,
                                           const nn::Dropout&)>;

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Shuffled mini-batch epochs with Adam; returns the mean loss per epoch.
inline std::vector<double> train_loop(const std::vector<TrainingExample>& examples,
                                      const TrainConfig& cfg, std::vector<nn::Param> params,
                                      const BatchLoss& batch_loss, Rng& rng,
                                      const EpochCallback& on_epoch = {}) {
  if (examples.empty()) throw DataError("training: no examples");
  nn::Adam opt(params, nn::AdamConfig{.learning_rate = cfg.learning_rate});
  nn::Dropout drop{cfg.dropout, &rng};
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> epoch_losses;
  epoch_losses.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<const TrainingExample*> batch;
      for (std::size_t i = start; i < std::min(start + cfg.batch_size, order.size()); ++i)
        batch.push_back(&examples[order[i]]);
      nn::Tape tape;
      nn::VarPtr loss = batch_loss(tape, batch, drop);
      double value = loss->val(0, 0);
      if (!std::isfinite(value))
        throw NumericError("loss is not finite at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches + 1) + " (diverged; try a lower learning rate)");
      tape.backward(loss);
      opt.clip_gradients(cfg.grad_clip);
      opt.step();
      opt.zero_grads();
      loss_sum += value;
      ++batches;
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(batches));
    if (on_epoch) on_epoch(epoch, epoch_losses.back());
  }
  return epoch_losses;
}

}  // namespace detail

}  // namespace antic
