#pragma once

#include <vector>

#include "antic/core.hpp"
#include "antic/dataset.hpp"
#include "antic/nn/matrix.hpp"

namespace antic {

// Per-segment input vector: one-hot label (K entries) followed by the
// standardized segment length.
inline nn::Matrix encode_segment(const ActionSegment& seg, const LengthStats& stats,
                                 int num_classes) {
  if (seg.label < 0 || seg.label >= num_classes)
    throw ContractViolation("encode_segment: label out of range");
  if (seg.length < 1) throw ContractViolation("encode_segment: length must be >= 1");
  nn::Matrix v(static_cast<std::size_t>(num_classes) + 1, 1);
  v[static_cast<std::size_t>(seg.label)] = 1.0;
  v[static_cast<std::size_t>(num_classes)] =
      standardize_length(static_cast<double>(seg.length), stats);
  return v;
}

inline std::vector<nn::Matrix> encode_prefix(const SegmentSequence& prefix,
                                             const LengthStats& stats, int num_classes) {
  if (prefix.empty()) throw ContractViolation("encode_prefix: empty prefix");
  std::vector<nn::Matrix> out;
  out.reserve(prefix.size());
  for (const auto& seg : prefix.segments) out.push_back(encode_segment(seg, stats, num_classes));
  return out;
}

inline nn::Matrix encode_label_onehot(int label, int num_classes) {
  if (label < 0 || label >= num_classes)
    throw ContractViolation("encode_label_onehot: label out of range");
  nn::Matrix v(static_cast<std::size_t>(num_classes), 1);
  v[static_cast<std::size_t>(label)] = 1.0;
  return v;
}

// Left-padded batch of training examples. step_inputs[t] is (K+1) x B with
// zero columns on padded steps; step_mask[t][j] is 1 on real steps.
struct EncodedBatch {
  std::vector<nn::Matrix> step_inputs;
  std::vector<std::vector<double>> step_mask;
  std::vector<int> target_labels;
  std::vector<double> target_lengths_std;
  nn::Matrix target_onehot;  // K x B, the future action fed to the length model
};

inline EncodedBatch encode_batch(const std::vector<const TrainingExample*>& batch,
                                 const LengthStats& stats, int num_classes) {
  if (batch.empty()) throw ContractViolation("encode_batch: empty batch");
  const std::size_t b = batch.size();
  std::size_t max_len = 0;
  for (const auto* ex : batch) max_len = std::max(max_len, ex->prefix.size());
  if (max_len == 0) throw ContractViolation("encode_batch: empty prefix in batch");

  EncodedBatch enc;
  enc.step_inputs.assign(max_len, nn::Matrix(static_cast<std::size_t>(num_classes) + 1, b));
  enc.step_mask.assign(max_len, std::vector<double>(b, 0.0));
  enc.target_labels.resize(b);
  enc.target_lengths_std.resize(b);
  enc.target_onehot = nn::Matrix(static_cast<std::size_t>(num_classes), b);

  for (std::size_t j = 0; j < b; ++j) {
    const auto& ex = *batch[j];
    if (ex.prefix.empty()) throw ContractViolation("encode_batch: example with empty prefix");
    const std::size_t pad = max_len - ex.prefix.size();
    for (std::size_t t = 0; t < ex.prefix.size(); ++t) {
      const auto& seg = ex.prefix.segments[t];
      if (seg.label < 0 || seg.label >= num_classes)
        throw ContractViolation("encode_batch: label out of range");
      enc.step_inputs[pad + t](static_cast<std::size_t>(seg.label), j) = 1.0;
      enc.step_inputs[pad + t](static_cast<std::size_t>(num_classes), j) =
          standardize_length(static_cast<double>(seg.length), stats);
      enc.step_mask[pad + t][j] = 1.0;
    }
    enc.target_labels[j] = ex.target_label;
    enc.target_lengths_std[j] = standardize_length(static_cast<double>(ex.target_length), stats);
    enc.target_onehot(static_cast<std::size_t>(ex.target_label), j) = 1.0;
  }
  return enc;
}

}  // namespace antic
