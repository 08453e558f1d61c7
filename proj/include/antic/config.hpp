#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "antic/errors.hpp"
#include "antic/util.hpp"

namespace antic {

// Everything a run needs; defaults follow the reference training setup
// (Adam at 0.001, batch 32, 60/30 epochs, dropout 0.5, 25 samples,
// observe 20/30%, predict 10/20/30/50%).
struct RunConfig {
  std::string data_dir;
  std::string split = "all";
  std::string model = "rnn";  // rnn | ngram-2 | ngram-3 | ngram-4
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  int action_epochs = 60;
  int length_epochs = 30;
  double dropout = 0.5;
  std::size_t hidden = 128;
  double grad_clip = 0.0;  // 0 disables
  std::uint64_t seed = 1;
  std::vector<double> observe_fractions = {0.2, 0.3};
  std::vector<double> predict_fractions = {0.1, 0.2, 0.3, 0.5};
  int num_samples = 25;
  std::string observation_source = "groundtruth";  // groundtruth | predicted
  std::string predicted_labels_dir;
  int jobs = 0;  // 0 = hardware concurrency
  int repeats = 1;

  nlohmann::json to_json() const {
    return {{"data_dir", data_dir},
            {"split", split},
            {"model", model},
            {"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"action_epochs", action_epochs},
            {"length_epochs", length_epochs},
            {"dropout", dropout},
            {"hidden", hidden},
            {"grad_clip", grad_clip},
            {"seed", seed},
            {"observe_fractions", observe_fractions},
            {"predict_fractions", predict_fractions},
            {"num_samples", num_samples},
            {"observation_source", observation_source},
            {"predicted_labels_dir", predicted_labels_dir},
            {"jobs", jobs},
            {"repeats", repeats}};
  }

  // Overlays present keys onto *this; unknown keys are rejected.
  void apply_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "data_dir",       "split",          "model",
        "learning_rate",  "batch_size",     "action_epochs",
        "length_epochs",  "dropout",        "hidden",
        "grad_clip",      "seed",           "observe_fractions",
        "predict_fractions", "num_samples", "observation_source",
        "predicted_labels_dir", "jobs",     "repeats"};
    for (const auto& [key, value] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw DataError("config: unknown key '" + key + "'");
      (void)value;
    }
    try {
      if (j.contains("data_dir")) data_dir = j.at("data_dir").get<std::string>();
      if (j.contains("split")) split = j.at("split").get<std::string>();
      if (j.contains("model")) model = j.at("model").get<std::string>();
      if (j.contains("learning_rate")) learning_rate = j.at("learning_rate").get<double>();
      if (j.contains("batch_size")) batch_size = j.at("batch_size").get<std::size_t>();
      if (j.contains("action_epochs")) action_epochs = j.at("action_epochs").get<int>();
      if (j.contains("length_epochs")) length_epochs = j.at("length_epochs").get<int>();
      if (j.contains("dropout")) dropout = j.at("dropout").get<double>();
      if (j.contains("hidden")) hidden = j.at("hidden").get<std::size_t>();
      if (j.contains("grad_clip")) grad_clip = j.at("grad_clip").get<double>();
      if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("observe_fractions"))
        observe_fractions = j.at("observe_fractions").get<std::vector<double>>();
      if (j.contains("predict_fractions"))
        predict_fractions = j.at("predict_fractions").get<std::vector<double>>();
      if (j.contains("num_samples")) num_samples = j.at("num_samples").get<int>();
      if (j.contains("observation_source"))
        observation_source = j.at("observation_source").get<std::string>();
      if (j.contains("predicted_labels_dir"))
        predicted_labels_dir = j.at("predicted_labels_dir").get<std::string>();
      if (j.contains("jobs")) jobs = j.at("jobs").get<int>();
      if (j.contains("repeats")) repeats = j.at("repeats").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("config: ") + e.what());
    }
  }

  void validate() const {
    if (model != "rnn" && model != "ngram-2" && model != "ngram-3" && model != "ngram-4")
      throw UsageError("model must be rnn, ngram-2, ngram-3 or ngram-4");
    if (learning_rate <= 0.0) throw UsageError("learning rate must be > 0");
    if (batch_size < 1) throw UsageError("batch size must be >= 1");
    if (action_epochs < 1 || length_epochs < 1) throw UsageError("epochs must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout must lie in [0,1)");
    if (hidden < 1) throw UsageError("hidden size must be >= 1");
    if (num_samples < 1) throw UsageError("num_samples must be >= 1");
    if (repeats < 1) throw UsageError("repeats must be >= 1");
    for (double f : observe_fractions)
      if (f <= 0.0 || f >= 1.0) throw UsageError("observe fractions must lie in (0,1)");
    for (double p : predict_fractions) {
      if (p <= 0.0 || p >= 1.0) throw UsageError("predict fractions must lie in (0,1)");
      for (double f : observe_fractions)
        if (f + p > 1.0) throw UsageError("observe + predict fractions must not exceed 1");
    }
    if (observation_source != "groundtruth" && observation_source != "predicted")
      throw UsageError("observation_source must be groundtruth or predicted");
    if (observation_source == "predicted" && predicted_labels_dir.empty())
      throw UsageError("observation_source=predicted requires predicted_labels_dir");
  }
};

// A config file is either a bare config object or a run manifest (its
// "config" member is used then).
inline nlohmann::json load_config_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open config file: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  if (j.contains("config") && j.at("config").is_object()) return j.at("config");
  return j;
}

// Every command leaves a manifest: the effective config, the seed, and a
// git-style blob hash per output file. Rerunning the command described by a
// manifest reproduces the outputs byte for byte.
inline void write_manifest(const std::filesystem::path& path, const std::string& command,
                           const RunConfig& cfg,
                           const std::map<std::string, std::string>& output_hashes) {
  nlohmann::json j = {{"tool", "antic"},
                      {"manifest_version", 1},
                      {"command", command},
                      {"seed", cfg.seed},
                      {"config", cfg.to_json()},
                      {"outputs", output_hashes}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

inline std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return git_blob_sha1(ss.str());
}

}  // namespace antic
