#pragma once

#include <vector>

#include "antic/checkpoint.hpp"
#include "antic/encoding.hpp"
#include "antic/training.hpp"

namespace antic {

// Gaussian over the next segment's length, in standardized units.
struct GaussianPrediction {
  double mu = 0.0;
  double sigma = 1.0;
};

// Gaussian over a segment length in frames.
struct GaussianFrames {
  double mean = 0.0;
  double std = 1.0;
};

inline GaussianFrames destandardize(const GaussianPrediction& g, const LengthStats& stats) {
  return {g.mu * stats.std + stats.mean, g.sigma * stats.std};
}

// p(l_{n+1} | prefix, c_{n+1}): a two-branch network. Branch 1 encodes the
// observed segments with the same trunk as the action model; branch 2 embeds
// the one-hot future action. Their concatenation feeds two output layers, one
// per Gaussian statistic; the sigma layer's exponential activation keeps the
// standard deviation positive.
class LengthModel {
 public:
  LengthModel() = default;

  LengthModel(int num_classes, std::size_t hidden, const LengthStats& stats, Rng& rng)
      : num_classes_(num_classes),
        stats_(stats),
        encoder_(static_cast<std::size_t>(num_classes) + 1, hidden, rng),
        future_fc_(hidden, static_cast<std::size_t>(num_classes), nn::Activation::Relu, rng),
        mu_head_(1, 2 * hidden, nn::Activation::Identity, rng),
        sigma_head_(1, 2 * hidden, nn::Activation::Exponential, rng) {}

  int num_classes() const { return num_classes_; }
  std::size_t hidden_dim() const { return encoder_.hidden_dim(); }
  const LengthStats& stats() const { return stats_; }

  GaussianPrediction forward(const SegmentSequence& prefix, int future_label) const {
    auto inputs = encode_prefix(prefix, stats_, num_classes_);
    nn::Matrix h1 = encoder_.forward_plain(inputs);
    nn::Matrix h2 = future_fc_.forward_plain(encode_label_onehot(future_label, num_classes_));
    nn::Matrix joint(h1.rows() + h2.rows(), 1);
    for (std::size_t i = 0; i < h1.rows(); ++i) joint[i] = h1[i];
    for (std::size_t i = 0; i < h2.rows(); ++i) joint[h1.rows() + i] = h2[i];
    GaussianPrediction g;
    g.mu = mu_head_.forward_plain(joint)(0, 0);
    g.sigma = sigma_head_.forward_plain(joint)(0, 0);
    return g;
  }

  GaussianFrames forward_frames(const SegmentSequence& prefix, int future_label) const {
    return destandardize(forward(prefix, future_label), stats_);
  }

  // Mean of log(sigma) + (l - mu)^2 / (2 sigma^2) over an encoded batch,
  // targets in standardized units.
  nn::VarPtr batch_loss(nn::Tape& tape, const EncodedBatch& batch,
                        const nn::Dropout& drop) const {
    auto encoded = encoder_.forward(tape, batch.step_inputs, batch.step_mask, drop);
    auto future = drop.apply(tape, future_fc_.forward(tape, nn::make_var(batch.target_onehot)));
    auto joint = tape.concat_rows(encoded, future);
    auto mu = mu_head_.forward(tape, joint);
    auto sigma = sigma_head_.forward(tape, joint);
    return tape.gaussian_nll(mu, sigma, batch.target_lengths_std);
  }

  double loss(const std::vector<TrainingExample>& examples) const {
    if (examples.empty()) throw ContractViolation("length loss: empty batch");
    double sum = 0.0;
    for (const auto& ex : examples) {
      GaussianPrediction g = forward(ex.prefix, ex.target_label);
      double d = standardize_length(static_cast<double>(ex.target_length), stats_) - g.mu;
      sum += std::log(g.sigma) + d * d / (2.0 * g.sigma * g.sigma);
    }
    return sum / static_cast<double>(examples.size());
  }

  std::vector<nn::Param> parameters() {
    std::vector<nn::Param> params;
    encoder_.collect("encoder", params);
    future_fc_.collect("future_fc", params);
    mu_head_.collect("mu_head", params);
    sigma_head_.collect("sigma_head", params);
    return params;
  }

  Checkpoint to_checkpoint(std::uint64_t vocab_hash) {
    Checkpoint ck;
    ck.kind = Checkpoint::Kind::LengthRnn;
    ck.vocab_hash = vocab_hash;
    ck.stats = stats_;
    ck.meta["num_classes"] = num_classes_;
    ck.meta["hidden"] = static_cast<long>(hidden_dim());
    for (const auto& p : parameters()) ck.arrays.emplace_back(p.name, p.var->val);
    return ck;
  }

  static LengthModel from_checkpoint(const Checkpoint& ck) {
    if (ck.kind != Checkpoint::Kind::LengthRnn)
      throw DataError("checkpoint is not a length model");
    Rng scratch(0);
    LengthModel m(static_cast<int>(ck.meta_at("num_classes")),
                  static_cast<std::size_t>(ck.meta_at("hidden")), ck.stats, scratch);
    for (auto& p : m.parameters()) {
      const nn::Matrix& stored = ck.array_at(p.name);
      if (!stored.same_shape(p.var->val))
        throw DataError("checkpoint array shape mismatch for " + p.name);
      p.var->val = stored;
    }
    return m;
  }

 private:
  int num_classes_ = 0;
  LengthStats stats_;
  nn::SequenceEncoder encoder_;
  nn::Dense future_fc_;
  nn::Dense mu_head_;
  nn::Dense sigma_head_;
};

inline LengthModel train_length_model(const std::vector<TrainingExample>& examples,
                                      int num_classes, const LengthStats& stats,
                                      const TrainConfig& cfg,
                                      std::vector<double>* epoch_losses = nullptr,
                                      const detail::EpochCallback& on_epoch = {}) {
  if (examples.empty()) throw DataError("train_length_model: no training examples");
  Rng rng(cfg.seed);
  LengthModel model(num_classes, cfg.hidden, stats, rng);
  auto losses = detail::train_loop(
      examples, cfg, model.parameters(),
      [&](nn::Tape& tape, const std::vector<const TrainingExample*>& batch,
          const nn::Dropout& drop) {
        return model.batch_loss(tape, encode_batch(batch, stats, num_classes), drop);
      },
      rng, on_epoch);
  if (epoch_losses) *epoch_losses = std::move(losses);
  return model;
}

}  // namespace antic
