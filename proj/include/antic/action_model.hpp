#pragma once

#include <string>
#include <vector>

#include "antic/checkpoint.hpp"
#include "antic/encoding.hpp"
#include "antic/training.hpp"

namespace antic {

// Distribution over the next segment's action label given the observed
// segment prefix: encoder trunk plus a score head, normalized by softmax.
class ActionModel {
 public:
  ActionModel() = default;

  ActionModel(int num_classes, std::size_t hidden, const LengthStats& stats, Rng& rng)
      : num_classes_(num_classes),
        stats_(stats),
        encoder_(static_cast<std::size_t>(num_classes) + 1, hidden, rng),
        score_fc_(static_cast<std::size_t>(num_classes), hidden, nn::Activation::Identity, rng) {}

  int num_classes() const { return num_classes_; }
  std::size_t hidden_dim() const { return encoder_.hidden_dim(); }
  const LengthStats& stats() const { return stats_; }

  // p(c_{n+1} | prefix): softmax over predicted scores.
  std::vector<double> forward(const SegmentSequence& prefix) const {
    auto inputs = encode_prefix(prefix, stats_, num_classes_);
    nn::Matrix scores = score_fc_.forward_plain(encoder_.forward_plain(inputs));
    nn::Matrix probs = nn::Tape::softmax_columns(scores);
    std::vector<double> out(probs.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = probs[i];
    return out;
  }

  // Mean cross entropy of the ground-truth labels in an encoded batch.
  nn::VarPtr batch_loss(nn::Tape& tape, const EncodedBatch& batch,
                        const nn::Dropout& drop) const {
    auto encoded = encoder_.forward(tape, batch.step_inputs, batch.step_mask, drop);
    auto scores = score_fc_.forward(tape, encoded);
    return tape.cross_entropy_from_scores(scores, batch.target_labels);
  }

  // Inference-mode loss over a list of examples (no dropout, no record).
  double loss(const std::vector<TrainingExample>& examples) const {
    if (examples.empty()) throw ContractViolation("action loss: empty batch");
    double sum = 0.0;
    for (const auto& ex : examples) {
      auto p = forward(ex.prefix);
      sum -= std::log(p[static_cast<std::size_t>(ex.target_label)]);
    }
    return sum / static_cast<double>(examples.size());
  }

  std::vector<nn::Param> parameters() {
    std::vector<nn::Param> params;
    encoder_.collect("encoder", params);
    score_fc_.collect("score_fc", params);
    return params;
  }

  Checkpoint to_checkpoint(std::uint64_t vocab_hash) {
    Checkpoint ck;
    ck.kind = Checkpoint::Kind::ActionRnn;
    ck.vocab_hash = vocab_hash;
    ck.stats = stats_;
    ck.meta["num_classes"] = num_classes_;
    ck.meta["hidden"] = static_cast<long>(hidden_dim());
    for (const auto& p : parameters()) ck.arrays.emplace_back(p.name, p.var->val);
    return ck;
  }

  static ActionModel from_checkpoint(const Checkpoint& ck) {
    if (ck.kind != Checkpoint::Kind::ActionRnn)
      throw DataError("checkpoint is not an action model");
    Rng scratch(0);
    ActionModel m(static_cast<int>(ck.meta_at("num_classes")),
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
  nn::Dense score_fc_;
};

// Trains from scratch; deterministic in cfg.seed. Appends the mean loss of
// each epoch to *epoch_losses when given.
inline ActionModel train_action_model(const std::vector<TrainingExample>& examples,
                                      int num_classes, const LengthStats& stats,
                                      const TrainConfig& cfg,
                                      std::vector<double>* epoch_losses = nullptr,
                                      const detail::EpochCallback& on_epoch = {}) {
  if (examples.empty()) throw DataError("train_action_model: no training examples");
  Rng rng(cfg.seed);
  ActionModel model(num_classes, cfg.hidden, stats, rng);
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
