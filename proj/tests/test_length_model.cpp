#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "antic/length_model.hpp"
#include "antic/synthetic.hpp"
#include "test_helpers.hpp"

using namespace antic;
using testutil::TempDir;

namespace {

const int S = SyntheticGeneratorSpec::kStart;

struct Fixture {
  std::vector<TrainingExample> examples;
  LengthStats stats;
  int num_classes;
  SyntheticGeneratorSpec spec;
};

Fixture make_fixture(SyntheticGeneratorSpec spec) {
  auto corpus = generate_synthetic_corpus(spec);
  std::vector<SegmentSequence> seqs;
  for (const auto& v : corpus) seqs.push_back(v.segments);
  Fixture f;
  f.stats = compute_length_stats(seqs);
  f.num_classes = spec.num_classes();
  f.examples = build_all_training_examples(corpus).examples;
  f.spec = std::move(spec);
  return f;
}

SyntheticGeneratorSpec three_class_spec(double sigma_factor, int videos, std::uint64_t seed) {
  SyntheticGeneratorSpec spec;
  spec.class_names = {"a", "b", "c"};
  spec.length_laws = {{20, 20 * sigma_factor}, {40, 40 * sigma_factor}, {60, 60 * sigma_factor}};
  spec.transitions[{S, S}] = {1, 0, 0};
  spec.transitions[{S, 0}] = {0, 0.5, 0.5};
  spec.transitions[{0, 1}] = {0, 0, 1};
  spec.transitions[{0, 2}] = {0, 1, 0};
  spec.transitions[{1, 2}] = {1, 0, 0};
  spec.transitions[{2, 1}] = {1, 0, 0};
  spec.transitions[{2, 0}] = {0, 1, 0};
  spec.transitions[{1, 0}] = {0, 0, 1};
  spec.videos = videos;
  spec.segments_per_video = 7;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("sigma head with zero output parameters predicts sigma 1") {
  Rng rng(61);
  LengthStats stats{30.0, 5.0};
  LengthModel model(3, 8, stats, rng);
  for (auto& p : model.parameters())
    if (p.name.rfind("sigma_head", 0) == 0) p.var->val.fill(0.0);
  GaussianPrediction g = model.forward(SegmentSequence{{{0, 30}}}, 1);
  CHECK(g.sigma == 1.0);  // exp(0)
}

TEST_CASE("sigma stays positive for arbitrary inputs") {
  Rng rng(62);
  LengthStats stats{30.0, 5.0};
  LengthModel model(4, 10, stats, rng);
  std::mt19937 gen(63);
  for (int rep = 0; rep < 100; ++rep) {
    SegmentSequence prefix;
    for (int i = 0; i < 1 + static_cast<int>(gen() % 6); ++i)
      prefix.segments.push_back({static_cast<int>(gen() % 4), static_cast<long>(gen() % 500 + 1)});
    GaussianPrediction g = model.forward(prefix, static_cast<int>(gen() % 4));
    REQUIRE(g.sigma > 0.0);
  }
}

TEST_CASE("destandardization maps the Gaussian affinely") {
  LengthStats stats{50.0, 10.0};
  GaussianFrames f = destandardize(GaussianPrediction{0.5, 0.25}, stats);
  CHECK(f.mean == Catch::Approx(55.0));
  CHECK(f.std == Catch::Approx(2.5));
}

TEST_CASE("batched length loss matches the scalar oracle") {
  Fixture f = make_fixture(three_class_spec(0.2, 10, 71));
  Rng rng(64);
  LengthModel model(f.num_classes, 8, f.stats, rng);
  std::vector<const TrainingExample*> batch;
  for (const auto& ex : f.examples) batch.push_back(&ex);
  nn::Tape tape;
  nn::Dropout off;
  double batched =
      model.batch_loss(tape, encode_batch(batch, f.stats, f.num_classes), off)->val(0, 0);

  double oracle = 0.0;
  for (const auto& ex : f.examples) {
    GaussianPrediction g = model.forward(ex.prefix, ex.target_label);
    double target = standardize_length(static_cast<double>(ex.target_length), f.stats);
    oracle += std::log(g.sigma) + (target - g.mu) * (target - g.mu) / (2.0 * g.sigma * g.sigma);
  }
  oracle /= static_cast<double>(f.examples.size());
  CHECK(batched == Catch::Approx(oracle).epsilon(1e-12));
  CHECK(batched == Catch::Approx(model.loss(f.examples)).epsilon(1e-12));
}

TEST_CASE("length loss gradients match finite differences") {
  Fixture f = make_fixture(three_class_spec(0.2, 3, 72));
  Rng rng(65);
  LengthModel model(f.num_classes, 4, f.stats, rng);
  std::vector<const TrainingExample*> batch;
  for (const auto& ex : f.examples) batch.push_back(&ex);
  EncodedBatch enc = encode_batch(batch, f.stats, f.num_classes);
  nn::Dropout off;

  auto loss_value = [&] {
    nn::Tape tape;
    return model.batch_loss(tape, enc, off)->val(0, 0);
  };
  nn::Tape tape;
  auto loss = model.batch_loss(tape, enc, off);
  tape.backward(loss);

  double worst = 0.0;
  for (auto& p : model.parameters())
    for (std::size_t i = 0; i < p.var->val.size(); ++i) {
      double saved = p.var->val[i];
      p.var->val[i] = saved + 1e-5;
      double up = loss_value();
      p.var->val[i] = saved - 1e-5;
      double down = loss_value();
      p.var->val[i] = saved;
      double fd = (up - down) / 2e-5;
      double err = std::abs(p.var->grad[i] - fd) /
                   std::max({std::abs(p.var->grad[i]), std::abs(fd), 1e-6});
      worst = std::max(worst, err);
    }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("training on near-deterministic lengths drives sigma down", "[train]") {
  // per-class zero-variance lengths but distinct means, so corpus std > 0
  SyntheticGeneratorSpec spec = three_class_spec(0.0, 150, 74);
  Fixture f = make_fixture(spec);
  TrainConfig cfg;
  cfg.hidden = 32;
  cfg.epochs = 25;
  cfg.dropout = 0.2;
  cfg.seed = 10;
  LengthModel model = train_length_model(f.examples, f.num_classes, f.stats, cfg);

  double mean_sigma = 0.0;
  for (const auto& ex : f.examples) {
    GaussianFrames g = model.forward_frames(ex.prefix, ex.target_label);
    mean_sigma += g.std;
  }
  mean_sigma /= static_cast<double>(f.examples.size());
  INFO("mean destandardized sigma " << mean_sigma << " corpus mean " << f.stats.mean);
  CHECK(mean_sigma <= 0.1 * f.stats.mean);
}

TEST_CASE("training recovers per-class means and spreads", "[train]") {
  SyntheticGeneratorSpec spec = three_class_spec(0.2, 250, 74);
  Fixture f = make_fixture(spec);
  TrainConfig cfg;
  cfg.hidden = 32;
  cfg.epochs = 20;
  cfg.dropout = 0.25;
  cfg.seed = 10;
  LengthModel model = train_length_model(f.examples, f.num_classes, f.stats, cfg);

  std::vector<double> mu_sum(3, 0.0), sigma_sum(3, 0.0);
  std::vector<long> count(3, 0);
  for (const auto& ex : f.examples) {
    GaussianFrames g = model.forward_frames(ex.prefix, ex.target_label);
    mu_sum[static_cast<std::size_t>(ex.target_label)] += g.mean;
    sigma_sum[static_cast<std::size_t>(ex.target_label)] += g.std;
    ++count[static_cast<std::size_t>(ex.target_label)];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    REQUIRE(count[c] > 0);
    double mu = mu_sum[c] / static_cast<double>(count[c]);
    double sd = sigma_sum[c] / static_cast<double>(count[c]);
    double true_mean = f.spec.length_laws[c].first;
    double true_std = f.spec.length_laws[c].second;
    INFO("class " << c << " mu " << mu << " (true " << true_mean << ") sigma " << sd
                  << " (true " << true_std << ")");
    CHECK(std::abs(mu - true_mean) <= 0.10 * true_mean);
    CHECK(std::abs(sd - true_std) <= 0.25 * true_std);
  }
}

TEST_CASE("length training is deterministic and checkpoints round trip", "[train]") {
  Fixture f = make_fixture(three_class_spec(0.2, 12, 75));
  TrainConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 3;
  cfg.seed = 11;
  LengthModel m1 = train_length_model(f.examples, f.num_classes, f.stats, cfg);
  LengthModel m2 = train_length_model(f.examples, f.num_classes, f.stats, cfg);

  TempDir dir("lckpt");
  m1.to_checkpoint(0xfeed).save(dir.path() / "l1.ckpt");
  m2.to_checkpoint(0xfeed).save(dir.path() / "l2.ckpt");
  CHECK(testutil::read_file(dir.path() / "l1.ckpt") ==
        testutil::read_file(dir.path() / "l2.ckpt"));

  LengthModel loaded = LengthModel::from_checkpoint(Checkpoint::load(dir.path() / "l1.ckpt"));
  CHECK(loaded.stats().mean == f.stats.mean);
  CHECK(loaded.stats().std == f.stats.std);
  GaussianPrediction a = m1.forward(f.examples[0].prefix, f.examples[0].target_label);
  GaussianPrediction b = loaded.forward(f.examples[0].prefix, f.examples[0].target_label);
  CHECK(a.mu == b.mu);
  CHECK(a.sigma == b.sigma);

  CHECK_THROWS_AS(train_length_model({}, 3, f.stats, cfg), DataError);
}
