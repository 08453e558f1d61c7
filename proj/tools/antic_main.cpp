// antic: train, sample and score probabilistic models of future activity
// timelines. Subcommands: synth, ingest-check, train, predict, eval.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "antic/action_model.hpp"
#include "antic/anticipator.hpp"
#include "antic/config.hpp"
#include "antic/core.hpp"
#include "antic/dataset.hpp"
#include "antic/evaluator.hpp"
#include "antic/length_model.hpp"
#include "antic/ngram.hpp"
#include "antic/synthetic.hpp"
#include "antic/util.hpp"

namespace fs = std::filesystem;
using namespace antic;

namespace {

std::string obs_dir_name(double fraction) {
  return "obs" + std::to_string(static_cast<int>(std::lround(fraction * 100.0)));
}

int effective_jobs(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n) on `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  jobs = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::unique_ptr<FutureDistributionSource> load_source(const fs::path& model_dir,
                                                      std::uint64_t vocab_hash,
                                                      LengthStats* stats_out = nullptr) {
  auto check_hash = [&](const Checkpoint& ck, const fs::path& file) {
    if (ck.vocab_hash != vocab_hash)
      throw DataError(file.string() +
                      ": checkpoint vocabulary does not match the corpus vocabulary");
  };
  fs::path action_file = model_dir / "action.ckpt";
  fs::path ngram_file = model_dir / "ngram.ckpt";
  if (fs::exists(action_file)) {
    Checkpoint ack = Checkpoint::load(action_file);
    check_hash(ack, action_file);
    fs::path length_file = model_dir / "length.ckpt";
    Checkpoint lck = Checkpoint::load(length_file);
    check_hash(lck, length_file);
    if (stats_out) *stats_out = ack.stats;
    return std::make_unique<NeuralSource>(ActionModel::from_checkpoint(ack),
                                          LengthModel::from_checkpoint(lck));
  }
  if (fs::exists(ngram_file)) {
    Checkpoint ck = Checkpoint::load(ngram_file);
    check_hash(ck, ngram_file);
    if (stats_out) *stats_out = ck.stats;
    return std::make_unique<NGramSource>(NGramModel::from_checkpoint(ck),
                                         class_gaussians_from_checkpoint(ck), ck.stats);
  }
  throw DataError("no checkpoint (action.ckpt or ngram.ckpt) in " + model_dir.string());
}

// ---- synth ----

int cmd_synth(const fs::path& spec_file, const fs::path& out_dir, std::uint64_t* seed_override) {
  SyntheticGeneratorSpec spec = load_synthetic_spec(spec_file);
  if (seed_override) spec.seed = *seed_override;
  auto videos = generate_synthetic_corpus(spec);
  LabelVocabulary vocab(spec.class_names);
  fs::create_directories(out_dir);
  write_corpus(out_dir, videos, vocab, spec.splits);

  long frames = 0, segments = 0;
  for (const auto& v : videos) {
    frames += static_cast<long>(v.frames.size());
    segments += static_cast<long>(v.segments.size());
  }
  std::map<std::string, std::string> hashes;
  hashes["mapping.txt"] = hash_file(out_dir / "mapping.txt");
  for (const auto& entry : fs::directory_iterator(out_dir / "splits"))
    hashes["splits/" + entry.path().filename().string()] = hash_file(entry.path());
  for (const auto& v : videos)
    hashes["groundTruth/" + v.id + ".txt"] = hash_file(out_dir / "groundTruth" / (v.id + ".txt"));
  std::ifstream spec_in(spec_file);
  nlohmann::ordered_json spec_json;
  spec_in >> spec_json;
  if (seed_override) spec_json["seed"] = *seed_override;
  nlohmann::ordered_json manifest = {{"tool", "antic"},
                             {"manifest_version", 1},
                             {"command", "synth"},
                             {"seed", spec.seed},
                             {"spec", spec_json},
                             {"outputs", hashes}};
  std::ofstream mf(out_dir / "manifest.json");
  mf << manifest.dump(2) << "\n";

  std::cout << "wrote " << videos.size() << " videos (" << segments << " segments, " << frames
            << " frames) to " << out_dir.string() << "\n";
  return 0;
}

// ---- ingest-check ----

int cmd_ingest_check(const fs::path& data_dir, const std::string& split) {
  Corpus corpus = load_corpus(data_dir, split);
  long frames = 0, segments = 0, single = 0;
  long min_len = std::numeric_limits<long>::max(), max_len = 0;
  for (const auto& v : corpus.videos) {
    frames += static_cast<long>(v.frames.size());
    segments += static_cast<long>(v.segments.size());
    if (v.segments.size() < 2) ++single;
    for (const auto& s : v.segments.segments) {
      min_len = std::min(min_len, s.length);
      max_len = std::max(max_len, s.length);
    }
  }
  std::cout << "videos: " << corpus.videos.size() << "\n";
  std::cout << "classes: " << corpus.vocab.size() << "\n";
  std::cout << "frames: " << frames << "\n";
  std::cout << "segments: " << segments << "\n";
  std::cout << "single-segment videos (no training examples): " << single << "\n";
  if (!corpus.videos.empty()) {
    std::cout << "segments per video (mean): "
              << static_cast<double>(segments) / static_cast<double>(corpus.videos.size())
              << "\n";
    std::cout << "segment length range: [" << min_len << ", " << max_len << "]\n";
    LengthStats stats = [&] {
      std::vector<SegmentSequence> seqs;
      for (const auto& v : corpus.videos) seqs.push_back(v.segments);
      return compute_length_stats(seqs);
    }();
    std::cout << "segment length mean/std: " << stats.mean << " / " << stats.std << "\n";
  }
  std::cout << "vocabulary hash: " << std::hex << corpus.vocab.hash() << std::dec << "\n";
  return 0;
}

// ---- train ----

int cmd_train(const RunConfig& cfg, const fs::path& out_dir) {
  Corpus corpus = load_corpus(cfg.data_dir, cfg.split);
  if (corpus.videos.empty()) throw DataError("training split is empty");
  std::vector<SegmentSequence> seqs;
  for (const auto& v : corpus.videos) seqs.push_back(v.segments);
  LengthStats stats = compute_length_stats(seqs);
  std::uint64_t vocab_hash = corpus.vocab.hash();
  fs::create_directories(out_dir);
  std::map<std::string, std::string> hashes;

  if (cfg.model == "rnn") {
    ExampleSet set = build_all_training_examples(corpus.videos);
    if (set.examples.empty()) throw DataError("no training examples (all videos single-segment)");
    std::cout << "training examples: " << set.examples.size() << " (skipped "
              << set.single_segment_videos << " single-segment videos)\n";

    auto train_one = [&](const char* name, int epochs, std::uint64_t seed, auto train_fn) {
      TrainConfig tc;
      tc.hidden = cfg.hidden;
      tc.learning_rate = cfg.learning_rate;
      tc.batch_size = cfg.batch_size;
      tc.epochs = epochs;
      tc.dropout = cfg.dropout;
      tc.grad_clip = cfg.grad_clip;
      tc.seed = seed;
      fs::path log_path = out_dir / (std::string(name) + "_train_log.txt");
      std::ofstream log(log_path);
      auto model = train_fn(set.examples, corpus.vocab.size(), stats, tc,
                            [&](int epoch, double loss) {
                              log << epoch << " " << loss << "\n";
                              std::cout << name << " epoch " << epoch << "/" << epochs
                                        << " loss " << loss << "\n";
                            });
      log.close();
      hashes[log_path.filename().string()] = hash_file(log_path);
      return model;
    };

    ActionModel action = train_one(
        "action", cfg.action_epochs, mix_seed(cfg.seed, fnv1a64("action")),
        [](const auto& ex, int k, const LengthStats& st, const TrainConfig& tc, auto cb) {
          return train_action_model(ex, k, st, tc, nullptr, cb);
        });
    LengthModel length = train_one(
        "length", cfg.length_epochs, mix_seed(cfg.seed, fnv1a64("length")),
        [](const auto& ex, int k, const LengthStats& st, const TrainConfig& tc, auto cb) {
          return train_length_model(ex, k, st, tc, nullptr, cb);
        });

    action.to_checkpoint(vocab_hash).save(out_dir / "action.ckpt");
    length.to_checkpoint(vocab_hash).save(out_dir / "length.ckpt");
    hashes["action.ckpt"] = hash_file(out_dir / "action.ckpt");
    hashes["length.ckpt"] = hash_file(out_dir / "length.ckpt");
  } else {
    int order = cfg.model.back() - '0';
    NGramModel model = fit_ngram(corpus.videos, corpus.vocab.size(), order);
    ClassGaussianTable table = fit_class_gaussians(corpus.videos, corpus.vocab.size());
    Checkpoint ck = model.to_checkpoint(vocab_hash, stats);
    append_class_gaussians(ck, table);
    ck.save(out_dir / "ngram.ckpt");
    hashes["ngram.ckpt"] = hash_file(out_dir / "ngram.ckpt");
    std::cout << "fitted " << order << "-gram counts and per-class length Gaussians\n";
  }

  write_manifest(out_dir / "manifest.json", "train", cfg, hashes);
  std::cout << "checkpoints written to " << out_dir.string() << "\n";
  return 0;
}

// ---- predict ----

int cmd_predict(const RunConfig& cfg, const fs::path& model_dir, const fs::path& out_dir) {
  Corpus corpus = load_corpus(cfg.data_dir, cfg.split);
  if (corpus.videos.empty()) throw DataError("prediction split is empty");
  auto source = load_source(model_dir, corpus.vocab.hash());

  // In predicted-observation mode the observed labels come from a parallel
  // directory in the same per-frame format; fractions stay relative to the
  // ground-truth video length.
  const bool noisy = cfg.observation_source == "predicted";
  std::vector<std::vector<int>> observation_tracks(corpus.videos.size());
  for (std::size_t i = 0; i < corpus.videos.size(); ++i) {
    if (noisy) {
      fs::path file = fs::path(cfg.predicted_labels_dir) / (corpus.videos[i].id + ".txt");
      observation_tracks[i] = load_frame_file(file, corpus.vocab);
    } else {
      observation_tracks[i] = corpus.videos[i].frames;
    }
  }

  fs::create_directories(out_dir);
  std::map<std::string, std::string> hashes;
  std::mutex hash_mutex;
  const std::uint64_t rep_tag = fnv1a64("repetition");

  for (int rep = 0; rep < cfg.repeats; ++rep) {
    fs::path rep_dir = cfg.repeats == 1 ? out_dir : out_dir / ("rep" + std::to_string(rep));
    std::uint64_t rep_seed =
        cfg.repeats == 1 ? cfg.seed : mix_seed(mix_seed(cfg.seed, rep_tag),
                                               static_cast<std::uint64_t>(rep));
    for (double obs : cfg.observe_fractions) fs::create_directories(rep_dir / obs_dir_name(obs));
    parallel_for(corpus.videos.size(), effective_jobs(cfg.jobs), [&](std::size_t i) {
      const auto& video = corpus.videos[i];
      for (double obs : cfg.observe_fractions) {
        auto results = anticipate(*source, video.id, observation_tracks[i],
                                  static_cast<long>(video.frames.size()), obs,
                                  cfg.predict_fractions, cfg.num_samples, rep_seed);
        const PredictionResult* widest = &results.front();
        for (const auto& r : results)
          if (r.horizon > widest->horizon) widest = &r;
        fs::path file = rep_dir / obs_dir_name(obs) / (video.id + ".txt");
        write_prediction_file(file, *widest, corpus.vocab);
        std::string rel = fs::relative(file, out_dir).string();
        std::lock_guard lock(hash_mutex);
        hashes[rel] = hash_file(file);
      }
    });
  }

  write_manifest(out_dir / "manifest.json", "predict", cfg, hashes);
  std::cout << "predictions for " << corpus.videos.size() << " videos written to "
            << out_dir.string() << "\n";
  return 0;
}

// ---- eval ----

MetricTable evaluate_rep(const fs::path& rep_dir, const Corpus& corpus, const RunConfig& cfg,
                         bool per_video) {
  MetricTable table;
  for (double obs : cfg.observe_fractions) {
    fs::path dir = rep_dir / obs_dir_name(obs);
    if (!fs::exists(dir)) throw DataError("missing prediction directory: " + dir.string());
    // windows per predict fraction, filled video by video
    std::map<double, std::vector<WindowPredictions>> windows;
    for (const auto& video : corpus.videos) {
      PredictionResult r = read_prediction_file(dir / (video.id + ".txt"), corpus.vocab);
      const long total = static_cast<long>(video.frames.size());
      if (r.total_frames != total)
        throw DataError(video.id + ": prediction was made for a different video length");
      const long observed = static_cast<long>(std::floor(obs * static_cast<double>(total)));
      if (r.observed_frames != observed)
        throw DataError(video.id + ": prediction observed_frames does not match the fraction");
      for (double p : cfg.predict_fractions) {
        long horizon = static_cast<long>(std::floor(p * static_cast<double>(total)));
        if (horizon < 1)
          throw DataError(video.id + ": prediction window of 0 frames at fraction " +
                          std::to_string(p));
        if (horizon > r.horizon)
          throw DataError(video.id + ": dump horizon too short for fraction " +
                          std::to_string(p));
        WindowPredictions w;
        w.groundtruth.assign(video.frames.begin() + observed,
                             video.frames.begin() + observed + horizon);
        w.mode.assign(r.mode.begin(), r.mode.begin() + horizon);
        w.samples.reserve(r.samples.size());
        for (const auto& s : r.samples) w.samples.emplace_back(s.begin(), s.begin() + horizon);
        windows[p].push_back(std::move(w));
      }
    }
    for (auto& [p, wins] : windows) {
      MetricCell cell;
      cell.mean = evaluate_windows(wins, corpus.vocab.size(), per_video);
      table.cells[{obs, p}] = cell;
    }
  }
  return table;
}

int cmd_eval(const RunConfig& cfg, const fs::path& pred_dir, const fs::path& out_dir,
             bool per_video, const fs::path& model_dir) {
  Corpus corpus = load_corpus(cfg.data_dir, cfg.split);
  if (corpus.videos.empty()) throw DataError("evaluation split is empty");

  std::vector<fs::path> rep_dirs;
  std::regex rep_re("^rep([0-9]+)$");
  std::vector<std::pair<int, fs::path>> found;
  if (fs::exists(pred_dir))
    for (const auto& entry : fs::directory_iterator(pred_dir)) {
      std::smatch m;
      std::string name = entry.path().filename().string();
      if (entry.is_directory() && std::regex_match(name, m, rep_re))
        found.emplace_back(std::stoi(m[1]), entry.path());
    }
  std::sort(found.begin(), found.end());
  for (const auto& [idx, p] : found) rep_dirs.push_back(p);
  if (rep_dirs.empty()) rep_dirs.push_back(pred_dir);

  std::vector<MetricTable> tables;
  for (const auto& rd : rep_dirs) tables.push_back(evaluate_rep(rd, corpus, cfg, per_video));
  MetricTable table = tables.size() == 1 ? tables.front() : aggregate_tables(tables);

  if (!model_dir.empty()) {
    auto source = load_source(model_dir, corpus.vocab.hash());
    table.next_action = next_action_accuracy(*source, corpus.videos);
  }

  fs::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "metrics.csv");
    csv << table.to_csv();
  }
  {
    std::ofstream js(out_dir / "metrics.json");
    js << table.to_json().dump(2) << "\n";
  }
  std::map<std::string, std::string> hashes;
  hashes["metrics.csv"] = hash_file(out_dir / "metrics.csv");
  hashes["metrics.json"] = hash_file(out_dir / "metrics.json");
  write_manifest(out_dir / "manifest.json", "eval", cfg, hashes);

  std::cout << table.to_csv();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"activity anticipation toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus from a spec file");
  std::string synth_spec, synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--spec", synth_spec, "generator spec (JSON)")->required();
  synth->add_option("--out", synth_out, "output corpus directory")->required();
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "override the spec seed");

  // ingest-check
  auto* ingest = app.add_subcommand("ingest-check", "load a corpus and print statistics");
  std::string ig_data, ig_split = "all";
  ingest->add_option("--data", ig_data, "dataset directory")->required();
  ingest->add_option("--split", ig_split, "split name (splits/<name>.txt)");

  auto add_config_opt = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file,
                    "JSON config (or a manifest; CLI flags override its keys)");
  };
  auto add_common_opts = [&](CLI::App* cmd, bool training, bool prediction) {
    cmd->add_option("--data", cfg.data_dir, "dataset directory");
    cmd->add_option("--split", cfg.split, "split name");
    cmd->add_option("--seed", cfg.seed, "random seed");
    if (training) {
      cmd->add_option("--model", cfg.model, "rnn | ngram-2 | ngram-3 | ngram-4");
      cmd->add_option("--hidden", cfg.hidden, "hidden size of FC and GRU layers");
      cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
      cmd->add_option("--batch", cfg.batch_size, "batch size");
      cmd->add_option("--action-epochs", cfg.action_epochs, "action model epochs");
      cmd->add_option("--length-epochs", cfg.length_epochs, "length model epochs");
      cmd->add_option("--dropout", cfg.dropout, "dropout probability");
      cmd->add_option("--grad-clip", cfg.grad_clip, "global-norm gradient clip (0 = off)");
    }
    if (prediction) {
      cmd->add_option("--observe", cfg.observe_fractions, "observation fractions")
          ->delimiter(',');
      cmd->add_option("--predict", cfg.predict_fractions, "prediction fractions")
          ->delimiter(',');
      cmd->add_option("--samples", cfg.num_samples, "samples per video");
      cmd->add_option("--obs-source", cfg.observation_source, "groundtruth | predicted");
      cmd->add_option("--obs-dir", cfg.predicted_labels_dir,
                      "directory of predicted frame labels (observation_source=predicted)");
      cmd->add_option("--jobs", cfg.jobs, "worker threads (0 = hardware)");
      cmd->add_option("--repeats", cfg.repeats, "independent sampling repetitions");
    }
  };

  // train
  auto* train = app.add_subcommand("train", "fit a model and write checkpoints");
  std::string train_out;
  add_common_opts(train, true, false);
  add_config_opt(train);
  train->add_option("--out", train_out, "output directory")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "generate future timelines for a split");
  std::string predict_model_dir, predict_out;
  add_common_opts(predict, false, true);
  add_config_opt(predict);
  predict->add_option("--model-dir", predict_model_dir, "directory with checkpoints")
      ->required();
  predict->add_option("--out", predict_out, "output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "score a prediction dump against ground truth");
  std::string eval_pred, eval_out, eval_model_dir;
  bool eval_per_video = false;
  add_common_opts(eval, false, true);
  add_config_opt(eval);
  eval->add_option("--pred", eval_pred, "prediction dump directory")->required();
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_option("--model-dir", eval_model_dir,
                   "checkpoints for the next-segment accuracy protocol");
  eval->add_flag("--per-video", eval_per_video,
                 "pool accuracies per video instead of over the test set");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    // A config file fills every key the command line left untouched.
    if (!config_file.empty()) {
      RunConfig file_cfg = cfg;  // CLI-provided values, to re-apply below
      RunConfig base;
      base.apply_json(load_config_json(config_file));
      CLI::App* active = app.get_subcommands().front();
      auto keep_cli = [&](const std::string& flag) {
        auto* opt = active->get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
      };
      RunConfig merged = base;
      if (keep_cli("--data")) merged.data_dir = file_cfg.data_dir;
      if (keep_cli("--split")) merged.split = file_cfg.split;
      if (keep_cli("--model")) merged.model = file_cfg.model;
      if (keep_cli("--hidden")) merged.hidden = file_cfg.hidden;
      if (keep_cli("--lr")) merged.learning_rate = file_cfg.learning_rate;
      if (keep_cli("--batch")) merged.batch_size = file_cfg.batch_size;
      if (keep_cli("--action-epochs")) merged.action_epochs = file_cfg.action_epochs;
      if (keep_cli("--length-epochs")) merged.length_epochs = file_cfg.length_epochs;
      if (keep_cli("--dropout")) merged.dropout = file_cfg.dropout;
      if (keep_cli("--grad-clip")) merged.grad_clip = file_cfg.grad_clip;
      if (keep_cli("--seed")) merged.seed = file_cfg.seed;
      if (keep_cli("--observe")) merged.observe_fractions = file_cfg.observe_fractions;
      if (keep_cli("--predict")) merged.predict_fractions = file_cfg.predict_fractions;
      if (keep_cli("--samples")) merged.num_samples = file_cfg.num_samples;
      if (keep_cli("--obs-source")) merged.observation_source = file_cfg.observation_source;
      if (keep_cli("--obs-dir")) merged.predicted_labels_dir = file_cfg.predicted_labels_dir;
      if (keep_cli("--jobs")) merged.jobs = file_cfg.jobs;
      if (keep_cli("--repeats")) merged.repeats = file_cfg.repeats;
      cfg = merged;
    }

    if (synth->parsed())
      return cmd_synth(synth_spec, synth_out, synth_seed_opt->count() ? &synth_seed : nullptr);
    if (ingest->parsed()) return cmd_ingest_check(ig_data, ig_split);
    if (train->parsed()) {
      cfg.validate();
      if (cfg.data_dir.empty()) throw UsageError("train: --data (or config data_dir) required");
      return cmd_train(cfg, train_out);
    }
    if (predict->parsed()) {
      cfg.validate();
      if (cfg.data_dir.empty())
        throw UsageError("predict: --data (or config data_dir) required");
      return cmd_predict(cfg, predict_model_dir, predict_out);
    }
    if (eval->parsed()) {
      cfg.validate();
      if (cfg.data_dir.empty()) throw UsageError("eval: --data (or config data_dir) required");
      return cmd_eval(cfg, eval_pred, eval_out, eval_per_video, eval_model_dir);
    }
    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
