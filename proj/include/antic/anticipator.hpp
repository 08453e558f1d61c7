#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "antic/action_model.hpp"
#include "antic/dataset.hpp"
#include "antic/length_model.hpp"
#include "antic/ngram.hpp"
#include "antic/rng.hpp"

namespace antic {

// The factorized next-segment distribution: a label distribution given the
// prefix, and a length Gaussian (in frames) given the prefix and the chosen
// label. Implementations must be safe for concurrent read-only queries.
class FutureDistributionSource {
 public:
  virtual ~FutureDistributionSource() = default;
  virtual int num_classes() const = 0;
  virtual std::vector<double> label_distribution(const SegmentSequence& prefix) const = 0;
  virtual GaussianFrames length_distribution(const SegmentSequence& prefix,
                                             int future_label) const = 0;
};

class NeuralSource final : public FutureDistributionSource {
 public:
  NeuralSource(ActionModel action, LengthModel length)
      : action_(std::move(action)), length_(std::move(length)) {
    if (action_.num_classes() != length_.num_classes())
      throw ContractViolation("action/length models disagree on the vocabulary size");
  }

  int num_classes() const override { return action_.num_classes(); }

  std::vector<double> label_distribution(const SegmentSequence& prefix) const override {
    return action_.forward(prefix);
  }

  GaussianFrames length_distribution(const SegmentSequence& prefix,
                                     int future_label) const override {
    return length_.forward_frames(prefix, future_label);
  }

  const ActionModel& action_model() const { return action_; }
  const LengthModel& length_model() const { return length_; }

 private:
  ActionModel action_;
  LengthModel length_;
};

class NGramSource final : public FutureDistributionSource {
 public:
  NGramSource(NGramModel model, ClassGaussianTable lengths, LengthStats fallback)
      : model_(std::move(model)), lengths_(std::move(lengths)), fallback_(fallback) {}

  int num_classes() const override { return model_.num_classes(); }

  std::vector<double> label_distribution(const SegmentSequence& prefix) const override {
    return model_.distribution(model_.context_of(prefix));
  }

  GaussianFrames length_distribution(const SegmentSequence&, int future_label) const override {
    const ClassGaussian& g = lengths_.at(future_label);
    if (g.support == 0) return {fallback_.mean, fallback_.std};
    return {g.mean, g.std};
  }

  const NGramModel& model() const { return model_; }

 private:
  NGramModel model_;
  ClassGaussianTable lengths_;
  LengthStats fallback_;
};

namespace detail {

// Gaussian length draw in frames; non-positive draws are rejected a few
// times, then clamped to one frame.
inline double sample_length(const GaussianFrames& g, Rng& rng) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    double l = rng.normal(g.mean, g.std);
    if (l > 0.0) return l;
  }
  return 1.0;
}

inline int argmax_label(const std::vector<double>& probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

}  // namespace detail

// The last observed segment may continue past the observation boundary.
// Samples (or, with rng == nullptr, takes the mean of) its full length from
// p(l_n | c_{1:n-1}, l_{1:n-1}, c_n) and keeps the observed length if the
// draw does not exceed it. Returns a real-valued length >= the observed one.
inline double update_last_segment_length(const FutureDistributionSource& source,
                                         const SegmentSequence& observed, Rng* rng) {
  if (observed.empty()) throw ContractViolation("update_last_segment_length: empty prefix");
  const ActionSegment& last = observed.segments.back();
  const double observed_len = static_cast<double>(last.length);
  SegmentSequence preceding;
  if (observed.size() >= 2)
    preceding.segments.assign(observed.segments.begin(), observed.segments.end() - 1);
  else
    preceding = observed;  // no preceding context: condition on the segment itself
  GaussianFrames g = source.length_distribution(preceding, last.label);
  double drawn = rng ? detail::sample_length(g, *rng) : g.mean;
  return std::max(drawn, observed_len);
}

namespace detail {

inline std::vector<int> predict_frames(const FutureDistributionSource& source,
                                       const SegmentSequence& observed, long horizon, Rng* rng,
                                       double* lstar_out) {
  if (horizon < 1) throw ContractViolation("prediction horizon must be >= 1 frame");
  if (observed.empty()) throw ContractViolation("prediction needs a non-empty observation");

  double lstar = update_last_segment_length(source, observed, rng);
  if (lstar_out) *lstar_out = lstar;
  const ActionSegment& last = observed.segments.back();
  long lstar_frames = std::max(last.length, static_cast<long>(std::llround(lstar)));

  SegmentSequence prefix = observed;
  prefix.segments.back().length = lstar_frames;

  SegmentSequence future;
  long covered = lstar_frames - last.length;
  if (covered > 0) future.segments.push_back({last.label, covered});
  while (covered < horizon) {
    std::vector<double> probs = source.label_distribution(prefix);
    int label = rng ? rng->categorical(probs) : argmax_label(probs);
    GaussianFrames g = source.length_distribution(prefix, label);
    double drawn = rng ? sample_length(g, *rng) : g.mean;
    long length = std::max<long>(1, std::llround(drawn));
    future.segments.push_back({label, length});
    prefix.segments.push_back({label, length});
    covered += length;
  }
  return segments_to_frames(future, horizon);
}

}  // namespace detail

// One sampled future timeline of exactly `horizon` frames (Eqs. of the
// alternating label/length sampling with the last-segment update applied
// first).
inline std::vector<int> sample_prediction(const FutureDistributionSource& source,
                                          const SegmentSequence& observed, long horizon,
                                          Rng& rng, double* lstar_out = nullptr) {
  return detail::predict_frames(source, observed, horizon, &rng, lstar_out);
}

// Deterministic timeline: argmax label (ties to the lowest id) and mean
// length at every step.
inline std::vector<int> mode_prediction(const FutureDistributionSource& source,
                                        const SegmentSequence& observed, long horizon,
                                        double* lstar_out = nullptr) {
  return detail::predict_frames(source, observed, horizon, nullptr, lstar_out);
}

// Sampled and mode futures of one video under one observation fraction.
// Arrays hold exactly `horizon` frames.
struct PredictionResult {
  std::string video_id;
  double observe_fraction = 0.0;
  long observed_frames = 0;
  long total_frames = 0;
  long horizon = 0;
  std::vector<std::vector<int>> samples;
  std::vector<int> mode;
  std::vector<double> lstar_samples;  // updated last-segment length, one per sample
  double lstar_mode = 0.0;
};

// Runs one sampling pass per sample at the largest horizon and truncates it
// for the smaller prediction fractions, so results are prefix-consistent
// within a sample. observation_frames supplies the labels of the observed
// part (ground truth or externally predicted); fractions are relative to
// total_frames.
inline std::vector<PredictionResult> anticipate(const FutureDistributionSource& source,
                                                const std::string& video_id,
                                                const std::vector<int>& observation_frames,
                                                long total_frames, double observe_fraction,
                                                std::vector<double> predict_fractions,
                                                int num_samples, std::uint64_t seed) {
  if (predict_fractions.empty()) throw ContractViolation("anticipate: no prediction fractions");
  if (observe_fraction <= 0.0 || observe_fraction >= 1.0)
    throw ContractViolation("observe fraction must lie in (0,1)");
  for (double p : predict_fractions) {
    if (p <= 0.0 || p >= 1.0) throw ContractViolation("predict fraction must lie in (0,1)");
    if (observe_fraction + p > 1.0)
      throw ContractViolation("observe + predict fractions must not exceed 1");
  }
  if (num_samples < 1) throw ContractViolation("anticipate: need at least one sample");

  const long observed = static_cast<long>(
      std::floor(observe_fraction * static_cast<double>(total_frames)));
  if (observed <= 0) throw DataError(video_id + ": observed portion is empty");
  if (static_cast<long>(observation_frames.size()) < observed)
    throw DataError(video_id + ": observation track shorter than the observed portion");
  std::vector<int> head(observation_frames.begin(), observation_frames.begin() + observed);
  SegmentSequence prefix = frames_to_segments(head);

  long max_horizon = 0;
  for (double p : predict_fractions)
    max_horizon = std::max<long>(
        max_horizon, static_cast<long>(std::floor(p * static_cast<double>(total_frames))));
  if (max_horizon < 1) throw DataError(video_id + ": prediction horizon of 0 frames");

  std::vector<std::vector<int>> master(static_cast<std::size_t>(num_samples));
  std::vector<double> lstars(static_cast<std::size_t>(num_samples));
  for (int s = 0; s < num_samples; ++s) {
    Rng rng(sample_stream_seed(seed, video_id, static_cast<std::uint64_t>(s)));
    master[static_cast<std::size_t>(s)] =
        sample_prediction(source, prefix, max_horizon, rng, &lstars[static_cast<std::size_t>(s)]);
  }
  double lstar_mode = 0.0;
  std::vector<int> mode = mode_prediction(source, prefix, max_horizon, &lstar_mode);

  std::vector<PredictionResult> results;
  results.reserve(predict_fractions.size());
  for (double p : predict_fractions) {
    long horizon = static_cast<long>(std::floor(p * static_cast<double>(total_frames)));
    PredictionResult r;
    r.video_id = video_id;
    r.observe_fraction = observe_fraction;
    r.observed_frames = observed;
    r.total_frames = total_frames;
    r.horizon = horizon;
    r.lstar_samples = lstars;
    r.lstar_mode = lstar_mode;
    r.mode.assign(mode.begin(), mode.begin() + horizon);
    r.samples.reserve(master.size());
    for (const auto& m : master)
      r.samples.emplace_back(m.begin(), m.begin() + horizon);
    results.push_back(std::move(r));
  }
  return results;
}

// ---- prediction dump ----
//
// One file per (video, observation fraction). Header lines carry the window
// geometry; each block is one frame-label track in the annotation format.

inline void write_prediction_file(const std::filesystem::path& path, const PredictionResult& r,
                                  const LabelVocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write prediction file: " + path.string());
  out << "# video " << r.video_id << "\n";
  out << "# observe_fraction " << r.observe_fraction << "\n";
  out << "# observed_frames " << r.observed_frames << "\n";
  out << "# total_frames " << r.total_frames << "\n";
  out << "# horizon " << r.horizon << "\n";
  out << "# samples " << r.samples.size() << "\n";
  out << "# block mode\n";
  for (int f : r.mode) out << vocab.name(f) << "\n";
  for (std::size_t s = 0; s < r.samples.size(); ++s) {
    out << "# block sample " << s << "\n";
    for (int f : r.samples[s]) out << vocab.name(f) << "\n";
  }
}

inline PredictionResult read_prediction_file(const std::filesystem::path& path,
                                             const LabelVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prediction file: " + path.string());
  PredictionResult r;
  std::string line;
  std::vector<int>* block = nullptr;
  long declared_samples = -1;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::istringstream hs(t.substr(1));
      std::string key;
      hs >> key;
      if (key == "video") {
        hs >> r.video_id;
      } else if (key == "observe_fraction") {
        hs >> r.observe_fraction;
      } else if (key == "observed_frames") {
        hs >> r.observed_frames;
      } else if (key == "total_frames") {
        hs >> r.total_frames;
      } else if (key == "horizon") {
        hs >> r.horizon;
      } else if (key == "samples") {
        hs >> declared_samples;
      } else if (key == "block") {
        std::string which;
        hs >> which;
        if (which == "mode") {
          block = &r.mode;
        } else if (which == "sample") {
          r.samples.emplace_back();
          block = &r.samples.back();
        } else {
          throw DataError(path.string() + ": unknown block '" + which + "'");
        }
      }
      continue;
    }
    if (!block) throw DataError(path.string() + ": label line outside any block");
    block->push_back(vocab.id(t));
  }
  if (declared_samples >= 0 && declared_samples != static_cast<long>(r.samples.size()))
    throw DataError(path.string() + ": sample count mismatch");
  if (static_cast<long>(r.mode.size()) != r.horizon)
    throw DataError(path.string() + ": mode block length != horizon");
  for (const auto& s : r.samples)
    if (static_cast<long>(s.size()) != r.horizon)
      throw DataError(path.string() + ": sample block length != horizon");
  return r;
}

}  // namespace antic
