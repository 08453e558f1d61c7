#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "antic/core.hpp"
#include "antic/errors.hpp"

namespace antic {

namespace fs = std::filesystem;

// One annotated video: a frame-level label track plus its run-length form.
struct VideoAnnotation {
  std::string id;
  std::vector<int> frames;
  SegmentSequence segments;

  static VideoAnnotation from_frames(std::string id, std::vector<int> frames) {
    VideoAnnotation v;
    v.id = std::move(id);
    v.segments = frames_to_segments(frames);
    v.frames = std::move(frames);
    return v;
  }
};

struct Corpus {
  LabelVocabulary vocab;
  std::vector<VideoAnnotation> videos;
};

// Prefix of segments plus the segment that follows it.
struct TrainingExample {
  SegmentSequence prefix;
  int target_label = 0;
  long target_length = 1;
};

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// mapping.txt: either one class name per line (line number = id) or
// "<id> <name>" pairs as shipped with the public annotation releases.
inline LabelVocabulary load_vocabulary(const fs::path& mapping_file) {
  std::ifstream in(mapping_file);
  if (!in) throw DataError("cannot open vocabulary file: " + mapping_file.string());
  std::vector<std::string> names;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    auto sp = t.find_first_of(" \t");
    if (sp != std::string::npos) {
      std::string first = t.substr(0, sp);
      bool numeric = !first.empty() && first.find_first_not_of("0123456789") == std::string::npos;
      std::string rest = trim(t.substr(sp));
      if (numeric && !rest.empty()) {
        if (std::stoul(first) != names.size())
          throw DataError(mapping_file.string() + ":" + std::to_string(lineno) +
                          ": class ids must be contiguous from 0");
        names.push_back(rest);
        continue;
      }
    }
    names.push_back(t);
  }
  if (names.empty()) throw DataError("empty vocabulary file: " + mapping_file.string());
  return LabelVocabulary(std::move(names));
}

// splits/<name>.txt: one video id per line; a trailing ".txt" is tolerated.
inline std::vector<std::string> load_split(const fs::path& split_file) {
  std::ifstream in(split_file);
  if (!in) throw DataError("cannot open split file: " + split_file.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.size() > 4 && t.substr(t.size() - 4) == ".txt") t = t.substr(0, t.size() - 4);
    ids.push_back(t);
  }
  return ids;
}

// One label token per line, line i = frame i.
inline std::vector<int> load_frame_file(const fs::path& file, const LabelVocabulary& vocab) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open annotation file: " + file.string());
  std::vector<int> frames;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (!vocab.contains(t))
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": unknown label token '" +
                      t + "'");
    frames.push_back(vocab.id(t));
  }
  return frames;
}

// Loads the listed videos from <data_dir>/groundTruth/<id>.txt in
// lexicographic id order.
inline std::vector<VideoAnnotation> load_videos(const fs::path& data_dir,
                                                std::vector<std::string> ids,
                                                const LabelVocabulary& vocab) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<VideoAnnotation> videos;
  videos.reserve(ids.size());
  for (const auto& id : ids) {
    fs::path file = data_dir / "groundTruth" / (id + ".txt");
    std::vector<int> frames = load_frame_file(file, vocab);
    if (frames.empty()) throw DataError("annotation file has no frames: " + file.string());
    videos.push_back(VideoAnnotation::from_frames(id, std::move(frames)));
  }
  return videos;
}

// Standard layout: groundTruth/, splits/<split>.txt, mapping.txt.
inline Corpus load_corpus(const fs::path& data_dir, const std::string& split_name) {
  Corpus c;
  c.vocab = load_vocabulary(data_dir / "mapping.txt");
  auto ids = load_split(data_dir / "splits" / (split_name + ".txt"));
  c.videos = load_videos(data_dir, std::move(ids), c.vocab);
  return c;
}

// The n-1 (prefix -> next segment) examples of one video; a single-segment
// video yields none.
inline std::vector<TrainingExample> build_training_examples(const VideoAnnotation& video) {
  std::vector<TrainingExample> out;
  const auto& segs = video.segments.segments;
  if (segs.size() < 2) return out;
  out.reserve(segs.size() - 1);
  for (std::size_t i = 1; i < segs.size(); ++i) {
    TrainingExample ex;
    ex.prefix.segments.assign(segs.begin(), segs.begin() + static_cast<long>(i));
    ex.target_label = segs[i].label;
    ex.target_length = segs[i].length;
    out.push_back(std::move(ex));
  }
  return out;
}

struct ExampleSet {
  std::vector<TrainingExample> examples;
  long single_segment_videos = 0;
};

inline ExampleSet build_all_training_examples(const std::vector<VideoAnnotation>& videos) {
  ExampleSet set;
  for (const auto& v : videos) {
    auto ex = build_training_examples(v);
    if (ex.empty()) ++set.single_segment_videos;
    set.examples.insert(set.examples.end(), std::make_move_iterator(ex.begin()),
                        std::make_move_iterator(ex.end()));
  }
  return set;
}

// Leading part of a frame track cut at floor(fraction * total).
struct ObservationSplit {
  SegmentSequence observed;     // last segment cut to its observed portion
  long observed_frames = 0;     // = observed.total_frames()
  std::vector<int> hidden_frames;
};

inline ObservationSplit split_observation(const std::vector<int>& frames, double fraction) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw ContractViolation("observe fraction must lie in (0,1)");
  const long total = static_cast<long>(frames.size());
  const long observed = static_cast<long>(std::floor(fraction * static_cast<double>(total)));
  if (observed <= 0)
    throw DataError("observed portion is empty (" + std::to_string(total) + " frames at " +
                    std::to_string(fraction) + ")");
  ObservationSplit s;
  s.observed_frames = observed;
  std::vector<int> head(frames.begin(), frames.begin() + observed);
  s.observed = frames_to_segments(head);
  s.hidden_frames.assign(frames.begin() + observed, frames.end());
  return s;
}

inline ObservationSplit split_observation(const VideoAnnotation& video, double fraction) {
  return split_observation(video.frames, fraction);
}

}  // namespace antic
