#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "antic/dataset.hpp"
#include "antic/synthetic.hpp"
#include "test_helpers.hpp"

using namespace antic;
using testutil::TempDir;
using testutil::write_file;

TEST_CASE("load_corpus reads the standard layout in id order") {
  TempDir dir("ingest");
  write_file(dir.path() / "mapping.txt", "0 walk\n1 run\n");
  write_file(dir.path() / "splits" / "s1.txt", "vid_b\nvid_a\n");
  write_file(dir.path() / "groundTruth" / "vid_a.txt", "walk\nwalk\nrun\n");
  write_file(dir.path() / "groundTruth" / "vid_b.txt", "run\nrun\nrun\nwalk\n");

  Corpus c = load_corpus(dir.path(), "s1");
  REQUIRE(c.videos.size() == 2);
  CHECK(c.videos[0].id == "vid_a");  // lexicographic, not split order
  CHECK(c.videos[1].id == "vid_b");
  CHECK(c.videos[0].frames == std::vector<int>{0, 0, 1});
  CHECK(c.videos[1].segments.segments == std::vector<ActionSegment>{{1, 3}, {0, 1}});
  CHECK(c.vocab.size() == 2);
}

TEST_CASE("vocabulary file accepts plain names and id-name pairs") {
  TempDir dir("vocab");
  write_file(dir.path() / "plain.txt", "walk\nrun\n");
  write_file(dir.path() / "pairs.txt", "0 walk\n1 run\n");
  CHECK(load_vocabulary(dir.path() / "plain.txt").hash() ==
        load_vocabulary(dir.path() / "pairs.txt").hash());
  write_file(dir.path() / "gap.txt", "0 walk\n2 run\n");
  CHECK_THROWS_AS(load_vocabulary(dir.path() / "gap.txt"), DataError);
}

TEST_CASE("split ids may carry a .txt suffix") {
  TempDir dir("suffix");
  write_file(dir.path() / "splits" / "s.txt", "vid_a.txt\n");
  auto ids = load_split(dir.path() / "splits" / "s.txt");
  REQUIRE(ids == std::vector<std::string>{"vid_a"});
}

TEST_CASE("empty split list loads an empty corpus") {
  TempDir dir("empty");
  write_file(dir.path() / "mapping.txt", "walk\n");
  write_file(dir.path() / "splits" / "none.txt", "");
  Corpus c = load_corpus(dir.path(), "none");
  CHECK(c.videos.empty());
}

TEST_CASE("unknown label tokens are reported with file and line") {
  TempDir dir("badtoken");
  write_file(dir.path() / "mapping.txt", "walk\n");
  write_file(dir.path() / "groundTruth" / "v.txt",
             "walk\nwalk\nwalk\nwalk\nwalk\nwalk\nfly\n");
  try {
    load_frame_file(dir.path() / "groundTruth" / "v.txt", load_vocabulary(dir.path() / "mapping.txt"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find(":7") != std::string::npos);
    CHECK(msg.find("fly") != std::string::npos);
    CHECK(msg.find("v.txt") != std::string::npos);
  }
}

TEST_CASE("missing annotation file is an I/O error") {
  TempDir dir("missing");
  write_file(dir.path() / "mapping.txt", "walk\n");
  write_file(dir.path() / "splits" / "s.txt", "ghost\n");
  CHECK_THROWS_AS(load_corpus(dir.path(), "s"), DataError);
}

TEST_CASE("build_training_examples yields n-1 prefix examples") {
  VideoAnnotation v;
  v.segments.segments = {{0, 2}, {1, 3}, {2, 4}};
  auto ex = build_training_examples(v);
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].prefix.segments == std::vector<ActionSegment>{{0, 2}});
  CHECK(ex[0].target_label == 1);
  CHECK(ex[0].target_length == 3);
  CHECK(ex[1].prefix.segments == std::vector<ActionSegment>{{0, 2}, {1, 3}});
  CHECK(ex[1].target_label == 2);
  CHECK(ex[1].target_length == 4);

  VideoAnnotation single;
  single.segments.segments = {{0, 5}};
  CHECK(build_training_examples(single).empty());
}

TEST_CASE("every example prefix is a strict prefix of the segment list") {
  std::mt19937 gen(5);
  VideoAnnotation v;
  int prev = -1;
  for (int i = 0; i < 20; ++i) {
    int label = static_cast<int>(gen() % 6);
    if (label == prev) label = (label + 1) % 6;
    v.segments.segments.push_back({label, static_cast<long>(gen() % 30 + 1)});
    prev = label;
  }
  auto ex = build_training_examples(v);
  REQUIRE(ex.size() == 19);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    REQUIRE(ex[i].prefix.size() == i + 1);
    for (std::size_t j = 0; j <= i; ++j)
      REQUIRE(ex[i].prefix.segments[j] == v.segments.segments[j]);
    REQUIRE(ex[i].target_label == v.segments.segments[i + 1].label);
  }
}

TEST_CASE("split_observation cuts at floor(fraction * frames)") {
  std::vector<int> frames(100, 0);
  ObservationSplit s = split_observation(frames, 0.2);
  CHECK(s.observed_frames == 20);
  CHECK(s.hidden_frames.size() == 80);

  // mid-segment cut: [(0,10),(1,10)] at 0.75 -> observed [(0,10),(1,5)]
  std::vector<int> two;
  two.insert(two.end(), 10, 0);
  two.insert(two.end(), 10, 1);
  ObservationSplit m = split_observation(two, 0.75);
  CHECK(m.observed.segments == std::vector<ActionSegment>{{0, 10}, {1, 5}});
  CHECK(m.observed.segments.back().length == 5);  // the observed portion only

  CHECK_THROWS_AS(split_observation(std::vector<int>(3, 0), 0.1), DataError);
  CHECK_THROWS_AS(split_observation(frames, 0.0), ContractViolation);
  CHECK_THROWS_AS(split_observation(frames, 1.0), ContractViolation);
}

TEST_CASE("observed plus hidden frames reconstruct every video") {
  SyntheticGeneratorSpec spec;
  spec.class_names = {"a", "b", "c"};
  spec.length_laws = {{8, 2}, {12, 3}, {6, 1}};
  spec.transitions[{SyntheticGeneratorSpec::kStart, SyntheticGeneratorSpec::kStart}] = {1, 0, 0};
  spec.default_row = std::vector<double>{0.0, 0.5, 0.5};
  spec.transitions[{0, 1}] = {0.5, 0.0, 0.5};
  spec.transitions[{1, 1}] = {0.5, 0.0, 0.5};  // unreachable but harmless
  spec.videos = 30;
  spec.segments_per_video = 6;
  spec.seed = 9;
  auto corpus = generate_synthetic_corpus(spec);
  for (const auto& v : corpus) {
    for (double f : {0.2, 0.3, 0.5}) {
      ObservationSplit s = split_observation(v, f);
      CHECK(s.observed_frames + static_cast<long>(s.hidden_frames.size()) ==
            static_cast<long>(v.frames.size()));
      CHECK(s.observed.total_frames() == s.observed_frames);
      std::vector<int> rebuilt = segments_to_frames(s.observed, s.observed_frames);
      rebuilt.insert(rebuilt.end(), s.hidden_frames.begin(), s.hidden_frames.end());
      CHECK(rebuilt == v.frames);
    }
  }
}

TEST_CASE("degenerate synthetic spec emits the exact periodic sequence") {
  SyntheticGeneratorSpec spec;
  spec.class_names = {"a", "b", "c"};
  spec.length_laws = {{2, 0}, {3, 0}, {4, 0}};
  spec.transitions[{SyntheticGeneratorSpec::kStart, SyntheticGeneratorSpec::kStart}] = {1, 0, 0};
  spec.default_row = std::vector<double>{0, 0, 1};  // fallback, overridden below
  spec.transitions[{SyntheticGeneratorSpec::kStart, 0}] = {0, 1, 0};
  spec.transitions[{0, 1}] = {0, 0, 1};
  spec.transitions[{1, 2}] = {1, 0, 0};
  spec.transitions[{2, 0}] = {0, 1, 0};
  spec.videos = 4;
  spec.segments_per_video = 7;
  spec.seed = 123;
  auto corpus = generate_synthetic_corpus(spec);
  std::vector<ActionSegment> expected = {{0, 2}, {1, 3}, {2, 4}, {0, 2}, {1, 3}, {2, 4}, {0, 2}};
  for (const auto& v : corpus) REQUIRE(v.segments.segments == expected);
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  SyntheticGeneratorSpec spec;
  spec.class_names = {"a", "b"};
  spec.length_laws = {{5, 2}, {9, 3}};
  spec.default_row = std::vector<double>{0.5, 0.5};
  spec.videos = 12;
  spec.segments_per_video = 5;
  spec.seed = 77;
  auto c1 = generate_synthetic_corpus(spec);
  auto c2 = generate_synthetic_corpus(spec);
  REQUIRE(c1.size() == c2.size());
  for (std::size_t i = 0; i < c1.size(); ++i) {
    CHECK(c1[i].id == c2[i].id);
    CHECK(c1[i].frames == c2[i].frames);
  }
  spec.seed = 78;
  auto c3 = generate_synthetic_corpus(spec);
  bool any_diff = false;
  for (std::size_t i = 0; i < c1.size(); ++i) any_diff |= c1[i].frames != c3[i].frames;
  CHECK(any_diff);
}

TEST_CASE("empirical transition frequencies approach the table") {
  // law of large numbers at 1000 videos; counted with an independent loop
  SyntheticGeneratorSpec spec;
  spec.class_names = {"a", "b", "c", "d"};
  spec.length_laws = {{4, 1}, {5, 1}, {6, 1}, {7, 1}};
  const int S = SyntheticGeneratorSpec::kStart;
  spec.transitions[{S, S}] = {1, 0, 0, 0};
  spec.transitions[{S, 0}] = {0, 1, 0, 0};
  spec.transitions[{0, 1}] = {0, 0, 0.7, 0.3};
  spec.transitions[{1, 2}] = {1, 0, 0, 0};
  spec.transitions[{1, 3}] = {1, 0, 0, 0};
  spec.transitions[{2, 0}] = {0, 1, 0, 0};
  spec.transitions[{3, 0}] = {0, 1, 0, 0};
  spec.videos = 1000;
  spec.segments_per_video = 10;
  spec.seed = 2024;
  auto corpus = generate_synthetic_corpus(spec);

  std::map<std::pair<int, int>, std::vector<long>> counts;
  for (const auto& v : corpus) {
    int p2 = S, p1 = S;
    for (const auto& seg : v.segments.segments) {
      auto& row = counts[{p2, p1}];
      if (row.empty()) row.assign(4, 0);
      ++row[static_cast<std::size_t>(seg.label)];
      p2 = p1;
      p1 = seg.label;
    }
  }
  for (const auto& [ctx, row] : counts) {
    const auto& expected = spec.transitions.at(ctx);
    long total = 0;
    for (long c : row) total += c;
    for (std::size_t k = 0; k < row.size(); ++k) {
      double freq = static_cast<double>(row[k]) / static_cast<double>(total);
      INFO("context (" << ctx.first << "," << ctx.second << ") label " << k);
      CHECK(std::abs(freq - expected[k]) <= 0.02);
    }
  }
}

TEST_CASE("synthetic spec validation rejects bad rows") {
  SyntheticGeneratorSpec spec;
  spec.class_names = {"a", "b"};
  spec.length_laws = {{5, 1}, {5, 1}};
  spec.default_row = std::vector<double>{0.6, 0.5};  // sums to 1.1
  CHECK_THROWS_AS(spec.validate(), DataError);
  spec.default_row = std::vector<double>{0.5, 0.5};
  spec.length_laws[0].first = 0.2;  // mean below one frame
  CHECK_THROWS_AS(spec.validate(), DataError);
}

TEST_CASE("synthetic spec file round trip with splits") {
  TempDir dir("spec");
  write_file(dir.path() / "spec.json", R"({
    "classes": ["x", "y"],
    "videos": 10,
    "segments_per_video": 4,
    "seed": 5,
    "lengths": {"x": [4, 1], "y": [6, 2]},
    "transitions": {"<s> <s>": {"x": 1.0}, "default": {"x": 0.5, "y": 0.5}},
    "splits": {"train": 7, "test": 3}
  })");
  SyntheticGeneratorSpec spec = load_synthetic_spec(dir.path() / "spec.json");
  CHECK(spec.videos == 10);
  CHECK(spec.transitions.size() == 1);
  REQUIRE(spec.splits.size() == 2);
  CHECK(spec.splits[0].first == "train");  // declaration order preserved
  CHECK(spec.splits[1].first == "test");

  auto corpus = generate_synthetic_corpus(spec);
  LabelVocabulary vocab(spec.class_names);
  write_corpus(dir.path() / "out", corpus, vocab, spec.splits);
  Corpus train = load_corpus(dir.path() / "out", "train");
  Corpus test = load_corpus(dir.path() / "out", "test");
  Corpus all = load_corpus(dir.path() / "out", "all");
  CHECK(train.videos.size() == 7);
  CHECK(test.videos.size() == 3);
  CHECK(all.videos.size() == 10);
  CHECK(test.videos.front().id == "video_00007");
  // the reloaded frames match the generated ones exactly
  for (std::size_t i = 0; i < all.videos.size(); ++i)
    REQUIRE(all.videos[i].frames == corpus[i].frames);
}
