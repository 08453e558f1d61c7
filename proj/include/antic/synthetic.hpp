#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "antic/dataset.hpp"
#include "antic/rng.hpp"

namespace antic {

// Second-order Markov label chain with per-class Gaussian segment lengths.
// Contexts are (prev2, prev1) label ids with kStart for positions before the
// first segment.
struct SyntheticGeneratorSpec {
  static constexpr int kStart = -1;

  std::vector<std::string> class_names;
  std::map<std::pair<int, int>, std::vector<double>> transitions;
  std::optional<std::vector<double>> default_row;
  std::vector<std::pair<double, double>> length_laws;  // per class: mean, std (frames)
  int segments_per_video = 10;
  int videos = 100;
  std::uint64_t seed = 1;
  std::vector<std::pair<std::string, int>> splits;  // optional, ordered: name -> count

  int num_classes() const { return static_cast<int>(class_names.size()); }

  void validate() const {
    if (class_names.empty()) throw DataError("synthetic spec: no classes");
    if (segments_per_video < 1 || videos < 1)
      throw DataError("synthetic spec: videos and segments_per_video must be >= 1");
    if (length_laws.size() != class_names.size())
      throw DataError("synthetic spec: need one length law per class");
    for (std::size_t c = 0; c < length_laws.size(); ++c) {
      if (length_laws[c].first < 1.0)
        throw DataError("synthetic spec: length mean of class " + class_names[c] +
                        " must be >= 1 frame");
      if (length_laws[c].second < 0.0)
        throw DataError("synthetic spec: negative length std for class " + class_names[c]);
    }
    auto check_row = [&](const std::vector<double>& row, const std::string& what) {
      if (row.size() != class_names.size())
        throw DataError("synthetic spec: row size mismatch for " + what);
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw DataError("synthetic spec: negative probability in " + what);
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw DataError("synthetic spec: row for " + what + " sums to " + std::to_string(sum));
    };
    for (const auto& [ctx, row] : transitions)
      check_row(row, "context (" + context_name(ctx.first) + "," + context_name(ctx.second) + ")");
    if (default_row) check_row(*default_row, "default");
    int split_total = 0;
    for (const auto& [name, count] : splits) {
      if (count < 0) throw DataError("synthetic spec: negative split count for " + name);
      split_total += count;
    }
    if (split_total > videos) throw DataError("synthetic spec: split counts exceed video count");
  }

  const std::vector<double>& row_for(int prev2, int prev1) const {
    auto it = transitions.find({prev2, prev1});
    if (it != transitions.end()) return it->second;
    if (default_row) return *default_row;
    throw DataError("synthetic spec: no transition row for context (" + context_name(prev2) +
                    "," + context_name(prev1) + ") and no default row");
  }

  std::string context_name(int id) const {
    return id == kStart ? "<s>" : class_names[static_cast<std::size_t>(id)];
  }
};

// Each video draws from its own seed substream, so the corpus is a pure
// function of (spec, seed) regardless of generation order.
inline std::vector<VideoAnnotation> generate_synthetic_corpus(const SyntheticGeneratorSpec& spec) {
  spec.validate();
  std::vector<VideoAnnotation> out;
  out.reserve(static_cast<std::size_t>(spec.videos));
  int width = std::max<int>(5, static_cast<int>(std::to_string(spec.videos - 1).size()));
  for (int v = 0; v < spec.videos; ++v) {
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(v)));
    int prev2 = SyntheticGeneratorSpec::kStart;
    int prev1 = SyntheticGeneratorSpec::kStart;
    std::vector<int> frames;
    for (int s = 0; s < spec.segments_per_video; ++s) {
      const auto& row = spec.row_for(prev2, prev1);
      int label = rng.categorical(row);
      const auto& law = spec.length_laws[static_cast<std::size_t>(label)];
      long length = std::max<long>(1, std::llround(rng.normal(law.first, law.second)));
      frames.insert(frames.end(), static_cast<std::size_t>(length), label);
      prev2 = prev1;
      prev1 = label;
    }
    std::ostringstream id;
    id << "video_" << std::setw(width) << std::setfill('0') << v;
    out.push_back(VideoAnnotation::from_frames(id.str(), std::move(frames)));
  }
  return out;
}

// ---- spec file (JSON) ----
//
// {
//   "classes": ["A", "B"],
//   "videos": 100, "segments_per_video": 10, "seed": 7,
//   "lengths": {"A": [20, 4], "B": [35, 7]},
//   "transitions": {"<s> <s>": {"A": 1.0}, "A B": {"A": 0.5, "B": 0.5},
//                   "default": {"A": 1.0}},
//   "splits": {"train": 80, "test": 20}       // optional
// }
inline SyntheticGeneratorSpec parse_synthetic_spec(const nlohmann::ordered_json& j) {
  SyntheticGeneratorSpec spec;
  try {
    spec.class_names = j.at("classes").get<std::vector<std::string>>();
    LabelVocabulary vocab(spec.class_names);
    spec.videos = j.at("videos").get<int>();
    spec.segments_per_video = j.at("segments_per_video").get<int>();
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.length_laws.resize(spec.class_names.size());
    const auto& lengths = j.at("lengths");
    for (const auto& name : spec.class_names) {
      if (!lengths.contains(name)) throw DataError("synthetic spec: no length law for " + name);
      auto arr = lengths.at(name).get<std::vector<double>>();
      if (arr.size() != 2) throw DataError("synthetic spec: length law must be [mean, std]");
      spec.length_laws[static_cast<std::size_t>(vocab.id(name))] = {arr[0], arr[1]};
    }
    auto parse_row = [&](const nlohmann::ordered_json& row_json) {
      std::vector<double> row(spec.class_names.size(), 0.0);
      for (const auto& [name, p] : row_json.items()) row[static_cast<std::size_t>(vocab.id(name))] = p.get<double>();
      return row;
    };
    auto token_id = [&](const std::string& tok) {
      return tok == "<s>" ? SyntheticGeneratorSpec::kStart : vocab.id(tok);
    };
    for (const auto& [key, row_json] : j.at("transitions").items()) {
      if (key == "default") {
        spec.default_row = parse_row(row_json);
        continue;
      }
      std::istringstream ks(key);
      std::string t1, t2, extra;
      if (!(ks >> t1 >> t2) || (ks >> extra))
        throw DataError("synthetic spec: transition key must be two tokens: '" + key + "'");
      spec.transitions[{token_id(t1), token_id(t2)}] = parse_row(row_json);
    }
    if (j.contains("splits"))
      for (const auto& [name, count] : j.at("splits").items())
        spec.splits.emplace_back(name, count.get<int>());
  } catch (const nlohmann::ordered_json::exception& e) {
    throw DataError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline SyntheticGeneratorSpec load_synthetic_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open synthetic spec: " + file.string());
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::ordered_json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  return parse_synthetic_spec(j);
}

// Writes a corpus in the standard annotation layout. Split files partition
// the videos in order; all videos are always listed in splits/all.txt.
inline void write_corpus(const std::filesystem::path& dir,
                         const std::vector<VideoAnnotation>& videos,
                         const LabelVocabulary& vocab,
                         const std::vector<std::pair<std::string, int>>& splits = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "groundTruth");
  fs::create_directories(dir / "splits");
  {
    std::ofstream map_out(dir / "mapping.txt");
    for (int i = 0; i < vocab.size(); ++i) map_out << i << " " << vocab.name(i) << "\n";
  }
  {
    std::ofstream all(dir / "splits" / "all.txt");
    for (const auto& v : videos) all << v.id << "\n";
  }
  std::size_t cursor = 0;
  for (const auto& [name, count] : splits) {
    std::ofstream split_out(dir / "splits" / (name + ".txt"));
    for (int i = 0; i < count && cursor < videos.size(); ++i, ++cursor)
      split_out << videos[cursor].id << "\n";
  }
  for (const auto& v : videos) {
    std::ofstream out(dir / "groundTruth" / (v.id + ".txt"));
    for (int f : v.frames) out << vocab.name(f) << "\n";
  }
}

}  // namespace antic
