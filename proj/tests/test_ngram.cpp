#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "antic/ngram.hpp"
#include "antic/synthetic.hpp"
#include "test_helpers.hpp"

using namespace antic;

namespace {

VideoAnnotation video_of(const std::vector<std::pair<int, long>>& segs) {
  VideoAnnotation v;
  for (auto [label, len] : segs) v.segments.segments.push_back({label, len});
  v.frames = segments_to_frames(v.segments, v.segments.total_frames());
  return v;
}

// independent counting oracle over every context length
std::map<std::vector<int>, std::map<int, std::uint64_t>> oracle_counts(
    const std::vector<VideoAnnotation>& corpus, int context_len) {
  std::map<std::vector<int>, std::map<int, std::uint64_t>> counts;
  for (const auto& v : corpus) {
    const auto& segs = v.segments.segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      std::vector<int> ctx;
      for (int k = context_len; k >= 1; --k) {
        long idx = static_cast<long>(i) - k;
        ctx.push_back(idx >= 0 ? segs[static_cast<std::size_t>(idx)].label
                               : NGramModel::kStartToken);
      }
      ++counts[ctx][segs[i].label];
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("tri-gram counts on a single short video") {
  auto corpus = std::vector<VideoAnnotation>{video_of({{0, 2}, {1, 3}, {2, 1}})};
  NGramModel model = fit_ngram(corpus, 3, 3);
  const int S = NGramModel::kStartToken;

  const auto& table = model.counts(2);
  REQUIRE(table.size() == 3);
  CHECK(table.at({S, S})[0] == 1);  // (start,start) -> a
  CHECK(table.at({S, 0})[1] == 1);  // (start,a) -> b
  CHECK(table.at({0, 1})[2] == 1);  // (a,b) -> c
}

TEST_CASE("empty corpus yields empty counts and a uniform distribution") {
  NGramModel model = fit_ngram({}, 4, 3);
  CHECK(model.counts(0).empty());
  CHECK(model.counts(2).empty());
  auto d = model.distribution({NGramModel::kStartToken, NGramModel::kStartToken});
  for (double p : d) CHECK(p == Catch::Approx(0.25));
}

TEST_CASE("counts match the brute-force oracle exactly on random corpora") {
  std::mt19937 gen(81);
  for (int rep = 0; rep < 20; ++rep) {
    int k = 3 + static_cast<int>(gen() % 4);
    std::vector<VideoAnnotation> corpus;
    int n_videos = 1 + static_cast<int>(gen() % 8);
    for (int v = 0; v < n_videos; ++v) {
      std::vector<std::pair<int, long>> segs;
      int prev = -1;
      int n_segs = 1 + static_cast<int>(gen() % 12);
      for (int s = 0; s < n_segs; ++s) {
        int label = static_cast<int>(gen() % static_cast<unsigned>(k));
        if (label == prev) label = (label + 1) % k;
        segs.emplace_back(label, static_cast<long>(gen() % 9 + 1));
        prev = label;
      }
      corpus.push_back(video_of(segs));
    }
    int order = 2 + static_cast<int>(gen() % 3);
    NGramModel model = fit_ngram(corpus, k, order);
    for (int len = 0; len < order; ++len) {
      auto oracle = oracle_counts(corpus, len);
      const auto& table = model.counts(len);
      REQUIRE(table.size() == oracle.size());
      for (const auto& [ctx, row] : table)
        for (int c = 0; c < k; ++c) {
          std::uint64_t expected = 0;
          auto it = oracle.find(ctx);
          if (it != oracle.end()) {
            auto jt = it->second.find(c);
            if (jt != it->second.end()) expected = jt->second;
          }
          REQUIRE(row[static_cast<std::size_t>(c)] == expected);  // integer-exact
        }
    }
  }
}

TEST_CASE("seen contexts normalize their counts") {
  // context (a,b) observed with continuations {c:3, d:1}
  std::vector<VideoAnnotation> corpus;
  for (int i = 0; i < 3; ++i) corpus.push_back(video_of({{0, 2}, {1, 2}, {2, 2}}));
  corpus.push_back(video_of({{0, 2}, {1, 2}, {3, 2}}));
  NGramModel model = fit_ngram(corpus, 4, 3);
  auto d = model.distribution({0, 1});
  CHECK(d[2] == Catch::Approx(0.75));
  CHECK(d[3] == Catch::Approx(0.25));
  CHECK(d[0] == 0.0);
}

TEST_CASE("unseen contexts back off recursively to the unigram") {
  auto corpus = std::vector<VideoAnnotation>{video_of({{0, 2}, {1, 3}})};
  NGramModel model = fit_ngram(corpus, 4, 3);
  // context (c,d) never seen, nor (d); unigram is {a:1, b:1}
  auto d = model.distribution({2, 3});
  CHECK(d[0] == Catch::Approx(0.5));
  CHECK(d[1] == Catch::Approx(0.5));
  CHECK(d[2] == 0.0);
  CHECK(d[3] == 0.0);

  // (d, a) unseen as a pair but (a) is a seen length-1 context
  auto d2 = model.distribution({3, 0});
  CHECK(d2[1] == Catch::Approx(1.0));  // after a comes b, from the bigram table

  CHECK_THROWS_AS(model.distribution({0}), ContractViolation);
}

TEST_CASE("every reachable distribution sums to one") {
  std::mt19937 gen(83);
  std::vector<VideoAnnotation> corpus;
  for (int v = 0; v < 10; ++v) {
    std::vector<std::pair<int, long>> segs;
    for (int s = 0; s < 10; ++s)
      segs.emplace_back(static_cast<int>((s + v + (gen() % 2)) % 5), 2);
    std::vector<std::pair<int, long>> clean;
    for (auto& sg : segs)
      if (clean.empty() || clean.back().first != sg.first) clean.push_back(sg);
    corpus.push_back(video_of(clean));
  }
  NGramModel model = fit_ngram(corpus, 5, 3);
  for (int a = -1; a < 5; ++a)
    for (int b = -1; b < 5; ++b) {
      auto d = model.distribution({a, b});
      double sum = 0.0;
      for (double p : d) {
        REQUIRE(p >= 0.0);
        sum += p;
      }
      REQUIRE(sum == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("tri-gram rows track a second-order generator") {
  const int S = SyntheticGeneratorSpec::kStart;
  SyntheticGeneratorSpec spec;
  spec.class_names = {"a", "b", "c", "d"};
  spec.length_laws = {{4, 1}, {5, 1}, {6, 1}, {7, 1}};
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
  NGramModel model = fit_ngram(corpus, 4, 3);
  for (const auto& [ctx, row] : spec.transitions) {
    auto d = model.distribution({ctx.first, ctx.second});
    for (std::size_t c = 0; c < 4; ++c) {
      INFO("context (" << ctx.first << "," << ctx.second << ") label " << c);
      CHECK(std::abs(d[c] - row[c]) <= 0.02);
    }
  }
}

TEST_CASE("class gaussians use population std with a degenerate floor") {
  std::vector<VideoAnnotation> corpus{video_of({{0, 2}, {1, 7}, {0, 4}}),
                                      video_of({{1, 7}, {2, 9}})};
  ClassGaussianTable table = fit_class_gaussians(corpus, 4);
  CHECK(table.at(0).mean == Catch::Approx(3.0));
  CHECK(table.at(0).std == Catch::Approx(1.0));
  CHECK(table.at(0).support == 2);
  CHECK(table.at(1).mean == Catch::Approx(7.0));
  CHECK(table.at(1).std == 1.0);  // zero variance floors to one frame
  CHECK(table.at(2).support == 1);
  CHECK(table.at(2).std == 1.0);  // single segment floors to one frame
  CHECK(table.at(3).support == 0);  // absent class is flagged

  CHECK_THROWS_AS(fit_class_gaussians({}, 4), DataError);
}

TEST_CASE("class gaussians match a two-pass oracle on random corpora") {
  std::mt19937 gen(85);
  std::vector<VideoAnnotation> corpus;
  std::vector<std::vector<double>> by_class(3);
  for (int v = 0; v < 20; ++v) {
    std::vector<std::pair<int, long>> segs;
    int prev = -1;
    for (int s = 0; s < 15; ++s) {
      int label = static_cast<int>(gen() % 3);
      if (label == prev) label = (label + 1) % 3;
      long len = static_cast<long>(gen() % 200 + 1);
      segs.emplace_back(label, len);
      by_class[static_cast<std::size_t>(label)].push_back(static_cast<double>(len));
      prev = label;
    }
    corpus.push_back(video_of(segs));
  }
  ClassGaussianTable table = fit_class_gaussians(corpus, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (double l : by_class[c]) mean += l;
    mean /= static_cast<double>(by_class[c].size());
    double var = 0.0;
    for (double l : by_class[c]) var += (l - mean) * (l - mean);
    var /= static_cast<double>(by_class[c].size());
    CHECK(table.at(static_cast<int>(c)).mean == Catch::Approx(mean).epsilon(1e-9));
    CHECK(table.at(static_cast<int>(c)).std == Catch::Approx(std::sqrt(var)).epsilon(1e-9));
  }
}

TEST_CASE("ngram checkpoints round trip") {
  auto corpus = std::vector<VideoAnnotation>{video_of({{0, 2}, {1, 3}, {2, 4}, {1, 2}})};
  NGramModel model = fit_ngram(corpus, 3, 3);
  ClassGaussianTable table = fit_class_gaussians(corpus, 3);
  LengthStats stats{2.75, 0.8};

  Checkpoint ck = model.to_checkpoint(0xabc, stats);
  append_class_gaussians(ck, table);
  testutil::TempDir dir("ng");
  ck.save(dir.path() / "ngram.ckpt");
  Checkpoint loaded = Checkpoint::load(dir.path() / "ngram.ckpt");
  CHECK(loaded.kind == Checkpoint::Kind::Ngram);
  CHECK(loaded.vocab_hash == 0xabc);
  CHECK(loaded.stats.mean == stats.mean);

  NGramModel restored = NGramModel::from_checkpoint(loaded);
  CHECK(restored.order() == 3);
  for (int len = 0; len < 3; ++len) {
    const auto& a = model.counts(len);
    const auto& b = restored.counts(len);
    REQUIRE(a.size() == b.size());
    for (const auto& [ctx, row] : a) REQUIRE(b.at(ctx) == row);
  }
  ClassGaussianTable rtable = class_gaussians_from_checkpoint(loaded);
  for (int c = 0; c < 3; ++c) {
    CHECK(rtable.at(c).mean == table.at(c).mean);
    CHECK(rtable.at(c).std == table.at(c).std);
    CHECK(rtable.at(c).support == table.at(c).support);
  }
}
