#include <catch2/catch_amalgamated.hpp>

#include "antic/action_model.hpp"
#include "antic/checkpoint.hpp"
#include "antic/length_model.hpp"
#include "antic/util.hpp"
#include "test_helpers.hpp"

using namespace antic;
using testutil::TempDir;

TEST_CASE("checkpoint container round trips bit-exactly") {
  Checkpoint ck;
  ck.kind = Checkpoint::Kind::LengthRnn;
  ck.vocab_hash = 0xdeadbeefcafef00dULL;
  ck.stats = {123.456789012345, 0.000123456789};
  ck.meta["num_classes"] = 48;
  ck.meta["hidden"] = 128;
  nn::Matrix m(3, 5);
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = std::ldexp(static_cast<double>(i) + 0.1234567890123, -static_cast<int>(i));
  ck.arrays.emplace_back("w", m);
  ck.arrays.emplace_back("b", nn::Matrix(3, 1, -0.0));

  TempDir dir("ck");
  ck.save(dir.path() / "m.ckpt");
  Checkpoint back = Checkpoint::load(dir.path() / "m.ckpt");
  CHECK(back.kind == ck.kind);
  CHECK(back.vocab_hash == ck.vocab_hash);
  CHECK(back.stats.mean == ck.stats.mean);
  CHECK(back.stats.std == ck.stats.std);
  CHECK(back.meta == ck.meta);
  REQUIRE(back.arrays.size() == 2);
  CHECK(back.arrays[0].first == "w");
  for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(back.arrays[0].second[i] == m[i]);

  // identical contents serialize to identical bytes
  ck.save(dir.path() / "m2.ckpt");
  CHECK(testutil::read_file(dir.path() / "m.ckpt") == testutil::read_file(dir.path() / "m2.ckpt"));
}

TEST_CASE("corrupt checkpoints are rejected") {
  TempDir dir("bad");
  testutil::write_file(dir.path() / "garbage.ckpt", "not a checkpoint at all");
  CHECK_THROWS_AS(Checkpoint::load(dir.path() / "garbage.ckpt"), DataError);

  Checkpoint ck;
  ck.arrays.emplace_back("w", nn::Matrix(4, 4, 1.0));
  ck.save(dir.path() / "ok.ckpt");
  std::string bytes = testutil::read_file(dir.path() / "ok.ckpt");
  testutil::write_file(dir.path() / "truncated.ckpt", bytes.substr(0, bytes.size() - 16));
  CHECK_THROWS_AS(Checkpoint::load(dir.path() / "truncated.ckpt"), DataError);

  CHECK_THROWS_AS(Checkpoint::load(dir.path() / "absent.ckpt"), DataError);
}

TEST_CASE("model loaders enforce the checkpoint kind") {
  Rng rng(1);
  LengthStats stats{20.0, 5.0};
  ActionModel action(3, 4, stats, rng);
  LengthModel length(3, 4, stats, rng);
  Checkpoint ack = action.to_checkpoint(1);
  Checkpoint lck = length.to_checkpoint(1);
  CHECK_THROWS_AS(ActionModel::from_checkpoint(lck), DataError);
  CHECK_THROWS_AS(LengthModel::from_checkpoint(ack), DataError);
}

TEST_CASE("missing arrays and metadata are reported") {
  Checkpoint ck;
  ck.meta["num_classes"] = 3;
  CHECK_THROWS_AS(ck.meta_at("hidden"), DataError);
  CHECK_THROWS_AS(ck.array_at("w"), DataError);
  CHECK(ck.meta_at("num_classes") == 3);
}

TEST_CASE("git blob hashing matches the reference value") {
  // `echo -n 'hello world' | git hash-object --stdin`
  CHECK(git_blob_sha1("hello world") == "95d09f2b10159347eece71399a7e2e907ea3df4f");
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  // long input crosses several SHA-1 blocks
  std::string big(100000, 'x');
  CHECK(git_blob_sha1(big).size() == 40);
}

TEST_CASE("fnv1a64 is stable and order sensitive") {
  CHECK(fnv1a64("abc") == fnv1a64("abc"));
  CHECK(fnv1a64("abc") != fnv1a64("acb"));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
}
