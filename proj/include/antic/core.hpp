#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "antic/errors.hpp"
#include "antic/util.hpp"

namespace antic {

// Ordered set of action class names; id = position in the list.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;

  explicit LabelVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      auto [it, fresh] = index_.emplace(names_[i], static_cast<int>(i));
      if (!fresh) throw DataError("duplicate class name in vocabulary: " + names_[i]);
    }
  }

  int size() const { return static_cast<int>(names_.size()); }

  const std::string& name(int id) const {
    if (id < 0 || id >= size()) throw ContractViolation("label id out of range");
    return names_[static_cast<std::size_t>(id)];
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  int id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown class name: " + name);
    return it->second;
  }

  const std::vector<std::string>& names() const { return names_; }

  // Stable identity of the vocabulary, stored in checkpoints so that a model
  // is never applied to a corpus with different class ids.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& n : names_) {
      h = fnv1a64(n.data(), n.size(), h);
      h = fnv1a64("\n", 1, h);
    }
    return h;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> index_;
};

// One maximal run of frames sharing a label.
struct ActionSegment {
  int label = 0;
  long length = 1;  // frames

  bool operator==(const ActionSegment&) const = default;
};

struct SegmentSequence {
  std::vector<ActionSegment> segments;

  long total_frames() const {
    long t = 0;
    for (const auto& s : segments) t += s.length;
    return t;
  }
  std::size_t size() const { return segments.size(); }
  bool empty() const { return segments.empty(); }

  bool operator==(const SegmentSequence&) const = default;
};

// Corpus mean/std of segment lengths, used for standardization.
struct LengthStats {
  double mean = 0.0;
  double std = 1.0;
};

inline SegmentSequence frames_to_segments(const std::vector<int>& frames) {
  if (frames.empty()) throw DataError("frames_to_segments: empty frame list");
  SegmentSequence seq;
  int cur = frames[0];
  long run = 1;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i] == cur) {
      ++run;
    } else {
      seq.segments.push_back({cur, run});
      cur = frames[i];
      run = 1;
    }
  }
  seq.segments.push_back({cur, run});
  return seq;
}

// Expands segments to exactly `horizon` frames. Truncates an overshooting
// sequence; if the sequence is shorter than the horizon the last label pads
// the remainder and *truncated (padded) is set.
inline std::vector<int> segments_to_frames(const SegmentSequence& seq, long horizon,
                                           bool* padded = nullptr) {
  if (horizon < 0) throw ContractViolation("segments_to_frames: negative horizon");
  if (padded) *padded = false;
  std::vector<int> out;
  if (horizon == 0) return out;
  if (seq.empty()) throw ContractViolation("segments_to_frames: empty sequence with horizon > 0");
  out.reserve(static_cast<std::size_t>(horizon));
  for (const auto& s : seq.segments) {
    for (long k = 0; k < s.length && static_cast<long>(out.size()) < horizon; ++k)
      out.push_back(s.label);
    if (static_cast<long>(out.size()) == horizon) return out;
  }
  if (padded) *padded = true;
  out.resize(static_cast<std::size_t>(horizon), seq.segments.back().label);
  return out;
}

// Mean and population (divisor N) standard deviation over all segment lengths.
inline LengthStats compute_length_stats(const std::vector<SegmentSequence>& corpus) {
  double sum = 0.0;
  long n = 0;
  for (const auto& seq : corpus)
    for (const auto& s : seq.segments) {
      sum += static_cast<double>(s.length);
      ++n;
    }
  if (n < 2) throw DataError("compute_length_stats: need at least 2 segments");
  double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& seq : corpus)
    for (const auto& s : seq.segments) {
      double d = static_cast<double>(s.length) - mean;
      ss += d * d;
    }
  double var = ss / static_cast<double>(n);
  if (var <= 0.0) throw DataError("compute_length_stats: all segment lengths identical");
  return {mean, std::sqrt(var)};
}

inline double standardize_length(double frames, const LengthStats& stats) {
  if (stats.std <= 0.0) throw ContractViolation("standardize_length: std must be > 0");
  return (frames - stats.mean) / stats.std;
}

inline double destandardize_length(double z, const LengthStats& stats) {
  if (stats.std <= 0.0) throw ContractViolation("destandardize_length: std must be > 0");
  return z * stats.std + stats.mean;
}

}  // namespace antic
