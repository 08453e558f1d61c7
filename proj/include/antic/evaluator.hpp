#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "antic/anticipator.hpp"
#include "antic/core.hpp"
#include "antic/dataset.hpp"
#include "antic/errors.hpp"

namespace antic {

// Per-class correct/total frame counts inside evaluated windows.
struct ClassAccuracyTally {
  std::vector<long> correct;
  std::vector<long> total;

  explicit ClassAccuracyTally(int num_classes = 0)
      : correct(static_cast<std::size_t>(num_classes), 0),
        total(static_cast<std::size_t>(num_classes), 0) {}

  void merge(const ClassAccuracyTally& other) {
    if (other.correct.size() != correct.size())
      throw ContractViolation("tally merge: class count mismatch");
    for (std::size_t c = 0; c < correct.size(); ++c) {
      correct[c] += other.correct[c];
      total[c] += other.total[c];
    }
  }
};

inline ClassAccuracyTally tally_window(std::span<const int> predicted,
                                       std::span<const int> groundtruth, int num_classes) {
  if (predicted.size() != groundtruth.size())
    throw ContractViolation("tally_window: length mismatch");
  ClassAccuracyTally t(num_classes);
  for (std::size_t i = 0; i < groundtruth.size(); ++i) {
    int gt = groundtruth[i];
    if (gt < 0 || gt >= num_classes) throw ContractViolation("tally_window: label out of range");
    ++t.total[static_cast<std::size_t>(gt)];
    if (predicted[i] == gt) ++t.correct[static_cast<std::size_t>(gt)];
  }
  return t;
}

// Mean over classes that occur in the ground truth.
inline double moc_from_tally(const ClassAccuracyTally& tally) {
  double sum = 0.0;
  int classes = 0;
  for (std::size_t c = 0; c < tally.total.size(); ++c) {
    if (tally.total[c] == 0) continue;
    sum += static_cast<double>(tally.correct[c]) / static_cast<double>(tally.total[c]);
    ++classes;
  }
  if (classes == 0) throw ContractViolation("moc_from_tally: no ground-truth classes");
  return sum / static_cast<double>(classes);
}

// One video's predictions and ground truth inside a single evaluation window.
struct WindowPredictions {
  std::vector<std::vector<int>> samples;
  std::vector<int> mode;
  std::vector<int> groundtruth;
};

// MoC of the generated samples: per-class accuracy is pooled over the test
// set per sample index, averaged across samples per class, then averaged
// over classes present in the ground truth.
inline double moc_averaged_over_samples(const std::vector<WindowPredictions>& windows,
                                        int num_classes) {
  if (windows.empty()) throw ContractViolation("moc_averaged_over_samples: no windows");
  const std::size_t num_samples = windows.front().samples.size();
  if (num_samples == 0) throw ContractViolation("moc_averaged_over_samples: no samples");
  for (const auto& w : windows)
    if (w.samples.size() != num_samples)
      throw ContractViolation("moc_averaged_over_samples: inconsistent sample counts");

  std::vector<double> class_acc(static_cast<std::size_t>(num_classes), 0.0);
  ClassAccuracyTally any(num_classes);
  for (std::size_t s = 0; s < num_samples; ++s) {
    ClassAccuracyTally t(num_classes);
    for (const auto& w : windows) t.merge(tally_window(w.samples[s], w.groundtruth, num_classes));
    for (std::size_t c = 0; c < class_acc.size(); ++c)
      if (t.total[c] > 0)
        class_acc[c] += static_cast<double>(t.correct[c]) / static_cast<double>(t.total[c]);
    if (s == 0) any = t;
  }
  double sum = 0.0;
  int classes = 0;
  for (std::size_t c = 0; c < class_acc.size(); ++c) {
    if (any.total[c] == 0) continue;
    sum += class_acc[c] / static_cast<double>(num_samples);
    ++classes;
  }
  if (classes == 0) throw ContractViolation("moc_averaged_over_samples: no ground-truth classes");
  return sum / static_cast<double>(classes);
}

inline double frame_accuracy(std::span<const int> predicted, std::span<const int> groundtruth) {
  if (predicted.size() != groundtruth.size() || groundtruth.empty())
    throw ContractViolation("frame_accuracy: bad window");
  long correct = 0;
  for (std::size_t i = 0; i < groundtruth.size(); ++i) correct += predicted[i] == groundtruth[i];
  return static_cast<double>(correct) / static_cast<double>(groundtruth.size());
}

// MoC after keeping, per video, only the sample with the highest overall
// frame-wise accuracy (ties to the lowest sample index).
inline double moc_top1(const std::vector<WindowPredictions>& windows, int num_classes) {
  if (windows.empty()) throw ContractViolation("moc_top1: no windows");
  ClassAccuracyTally t(num_classes);
  for (const auto& w : windows) {
    if (w.samples.empty()) throw ContractViolation("moc_top1: window without samples");
    std::size_t best = 0;
    double best_acc = -1.0;
    for (std::size_t s = 0; s < w.samples.size(); ++s) {
      double acc = frame_accuracy(w.samples[s], w.groundtruth);
      if (acc > best_acc) {
        best_acc = acc;
        best = s;
      }
    }
    t.merge(tally_window(w.samples[best], w.groundtruth, num_classes));
  }
  return moc_from_tally(t);
}

inline double moc_mode(const std::vector<WindowPredictions>& windows, int num_classes) {
  if (windows.empty()) throw ContractViolation("moc_mode: no windows");
  ClassAccuracyTally t(num_classes);
  for (const auto& w : windows) t.merge(tally_window(w.mode, w.groundtruth, num_classes));
  return moc_from_tally(t);
}

// Sensitivity-analysis variant: MoC computed per video, then averaged over
// videos (per-video pooling instead of test-set pooling).
struct WindowMetrics {
  double samples_avg = 0.0;
  double mode = 0.0;
  double top1 = 0.0;
};

inline WindowMetrics evaluate_windows(const std::vector<WindowPredictions>& windows,
                                      int num_classes, bool per_video = false) {
  WindowMetrics m;
  if (!per_video) {
    m.samples_avg = moc_averaged_over_samples(windows, num_classes);
    m.mode = moc_mode(windows, num_classes);
    m.top1 = moc_top1(windows, num_classes);
    return m;
  }
  double sum_avg = 0.0, sum_mode = 0.0, sum_top1 = 0.0;
  for (const auto& w : windows) {
    std::vector<WindowPredictions> one{w};
    sum_avg += moc_averaged_over_samples(one, num_classes);
    sum_mode += moc_mode(one, num_classes);
    sum_top1 += moc_top1(one, num_classes);
  }
  const double n = static_cast<double>(windows.size());
  return {sum_avg / n, sum_mode / n, sum_top1 / n};
}

// Protocol 2: predict only the label of the next segment from every
// ground-truth prefix (positions i > 1) and report plain accuracy.
inline double next_action_accuracy(const FutureDistributionSource& source,
                                   const std::vector<VideoAnnotation>& corpus) {
  long correct = 0, total = 0;
  for (const auto& video : corpus) {
    const auto& segs = video.segments.segments;
    SegmentSequence prefix;
    for (std::size_t i = 1; i < segs.size(); ++i) {
      prefix.segments.assign(segs.begin(), segs.begin() + static_cast<long>(i));
      std::vector<double> probs = source.label_distribution(prefix);
      int predicted = static_cast<int>(
          std::max_element(probs.begin(), probs.end()) - probs.begin());
      correct += predicted == segs[i].label;
      ++total;
    }
  }
  if (total == 0) throw DataError("next_action_accuracy: no videos with >= 2 segments");
  return static_cast<double>(correct) / static_cast<double>(total);
}

// ---- metric table (observe% x predict% grid) ----

struct MetricCell {
  WindowMetrics mean;
  WindowMetrics stddev;  // zero unless aggregated over repetitions
  int repetitions = 1;
};

struct MetricTable {
  // key: (observe fraction, predict fraction), ordered
  std::map<std::pair<double, double>, MetricCell> cells;
  double next_action = -1.0;  // < 0 when not evaluated

  std::string to_csv() const {
    std::ostringstream out;
    out << "observe,predict,moc_samples_avg,moc_mode,moc_top1";
    bool with_std = false;
    for (const auto& [key, cell] : cells) with_std |= cell.repetitions > 1;
    if (with_std) out << ",moc_samples_avg_std,moc_mode_std,moc_top1_std,repetitions";
    out << "\n";
    out.precision(6);
    out << std::fixed;
    for (const auto& [key, cell] : cells) {
      out << key.first << "," << key.second << "," << cell.mean.samples_avg << ","
          << cell.mean.mode << "," << cell.mean.top1;
      if (with_std)
        out << "," << cell.stddev.samples_avg << "," << cell.stddev.mode << ","
            << cell.stddev.top1 << "," << cell.repetitions;
      out << "\n";
    }
    if (next_action >= 0.0) out << "next_action_accuracy," << next_action << ",,,\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [key, cell] : cells) {
      nlohmann::json row = {{"observe", key.first},
                            {"predict", key.second},
                            {"moc_samples_avg", cell.mean.samples_avg},
                            {"moc_mode", cell.mean.mode},
                            {"moc_top1", cell.mean.top1}};
      if (cell.repetitions > 1) {
        row["repetitions"] = cell.repetitions;
        row["moc_samples_avg_std"] = cell.stddev.samples_avg;
        row["moc_mode_std"] = cell.stddev.mode;
        row["moc_top1_std"] = cell.stddev.top1;
      }
      rows.push_back(row);
    }
    nlohmann::json j = {{"cells", rows}};
    if (next_action >= 0.0) j["next_action_accuracy"] = next_action;
    return j;
  }
};

// Mean and population stddev over repeated measurements of the same grid.
inline MetricTable aggregate_tables(const std::vector<MetricTable>& tables) {
  if (tables.empty()) throw ContractViolation("aggregate_tables: nothing to aggregate");
  MetricTable out;
  for (const auto& [key, first_cell] : tables.front().cells) {
    (void)first_cell;
    std::vector<WindowMetrics> reps;
    for (const auto& t : tables) {
      auto it = t.cells.find(key);
      if (it == t.cells.end()) throw ContractViolation("aggregate_tables: grids disagree");
      reps.push_back(it->second.mean);
    }
    auto stat = [&](auto proj) {
      double mean = 0.0;
      for (const auto& r : reps) mean += proj(r);
      mean /= static_cast<double>(reps.size());
      double ss = 0.0;
      for (const auto& r : reps) ss += (proj(r) - mean) * (proj(r) - mean);
      return std::pair<double, double>(mean, std::sqrt(ss / static_cast<double>(reps.size())));
    };
    MetricCell cell;
    cell.repetitions = static_cast<int>(reps.size());
    std::tie(cell.mean.samples_avg, cell.stddev.samples_avg) =
        stat([](const WindowMetrics& m) { return m.samples_avg; });
    std::tie(cell.mean.mode, cell.stddev.mode) =
        stat([](const WindowMetrics& m) { return m.mode; });
    std::tie(cell.mean.top1, cell.stddev.top1) =
        stat([](const WindowMetrics& m) { return m.top1; });
    out.cells[key] = cell;
  }
  double na = 0.0;
  bool has_na = true;
  for (const auto& t : tables) has_na &= t.next_action >= 0.0;
  if (has_na) {
    for (const auto& t : tables) na += t.next_action;
    out.next_action = na / static_cast<double>(tables.size());
  }
  return out;
}

}  // namespace antic
