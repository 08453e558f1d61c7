#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "antic/checkpoint.hpp"
#include "antic/dataset.hpp"

namespace antic {

// Label-context n-gram counts with recursive backoff. Contexts shorter than
// a full video prefix are padded with a start token that lies outside the
// vocabulary.
class NGramModel {
 public:
  static constexpr int kStartToken = -1;

  using Context = std::vector<int>;
  using CountTable = std::map<Context, std::vector<std::uint64_t>>;

  NGramModel() = default;
  NGramModel(int num_classes, int order) : num_classes_(num_classes), order_(order) {
    if (order < 2) throw ContractViolation("ngram order must be >= 2");
    if (num_classes < 1) throw ContractViolation("ngram needs a non-empty vocabulary");
    tables_.resize(static_cast<std::size_t>(order));  // context lengths 0 .. order-1
  }

  int order() const { return order_; }
  int num_classes() const { return num_classes_; }

  void fit(const std::vector<VideoAnnotation>& corpus) {
    for (const auto& video : corpus) {
      const auto& segs = video.segments.segments;
      for (std::size_t i = 0; i < segs.size(); ++i)
        for (int len = 0; len < order_; ++len) {
          Context ctx = context_at(segs, i, len);
          auto& row = tables_[static_cast<std::size_t>(len)][ctx];
          if (row.empty()) row.assign(static_cast<std::size_t>(num_classes_), 0);
          ++row[static_cast<std::size_t>(segs[i].label)];
        }
    }
  }

  // Normalized counts for the full-order context; unseen contexts back off
  // by dropping the oldest label, down to the unigram. The unigram of an
  // empty model is uniform.
  std::vector<double> distribution(const Context& context) const {
    if (context.size() != static_cast<std::size_t>(order_ - 1))
      throw ContractViolation("ngram: context length must be order-1");
    Context ctx = context;
    while (true) {
      const auto& table = tables_[ctx.size()];
      auto it = table.find(ctx);
      if (it != table.end()) return normalize(it->second);
      if (ctx.empty()) break;
      ctx.erase(ctx.begin());
    }
    return std::vector<double>(static_cast<std::size_t>(num_classes_),
                               1.0 / static_cast<double>(num_classes_));
  }

  // Most recent (order-1) labels of a prefix, start-padded.
  Context context_of(const SegmentSequence& prefix) const {
    Context ctx(static_cast<std::size_t>(order_ - 1), kStartToken);
    const auto& segs = prefix.segments;
    for (int k = 0; k < order_ - 1; ++k) {
      long idx = static_cast<long>(segs.size()) - (order_ - 1) + k;
      if (idx >= 0) ctx[static_cast<std::size_t>(k)] = segs[static_cast<std::size_t>(idx)].label;
    }
    return ctx;
  }

  const CountTable& counts(int context_length) const {
    return tables_.at(static_cast<std::size_t>(context_length));
  }

  Checkpoint to_checkpoint(std::uint64_t vocab_hash, const LengthStats& stats) const {
    Checkpoint ck;
    ck.kind = Checkpoint::Kind::Ngram;
    ck.vocab_hash = vocab_hash;
    ck.stats = stats;
    ck.meta["num_classes"] = num_classes_;
    ck.meta["order"] = order_;
    for (int len = 0; len < order_; ++len) {
      const auto& table = tables_[static_cast<std::size_t>(len)];
      std::size_t entries = 0;
      for (const auto& [ctx, row] : table)
        for (std::uint64_t c : row) entries += (c > 0);
      nn::Matrix m(entries, static_cast<std::size_t>(len) + 2);
      std::size_t r = 0;
      for (const auto& [ctx, row] : table)
        for (std::size_t label = 0; label < row.size(); ++label) {
          if (row[label] == 0) continue;
          for (int k = 0; k < len; ++k)
            m(r, static_cast<std::size_t>(k)) = static_cast<double>(ctx[static_cast<std::size_t>(k)]);
          m(r, static_cast<std::size_t>(len)) = static_cast<double>(label);
          m(r, static_cast<std::size_t>(len) + 1) = static_cast<double>(row[label]);
          ++r;
        }
      ck.arrays.emplace_back("counts.len" + std::to_string(len), std::move(m));
    }
    return ck;
  }

  static NGramModel from_checkpoint(const Checkpoint& ck) {
    if (ck.kind != Checkpoint::Kind::Ngram) throw DataError("checkpoint is not an n-gram model");
    NGramModel model(static_cast<int>(ck.meta_at("num_classes")),
                     static_cast<int>(ck.meta_at("order")));
    for (int len = 0; len < model.order_; ++len) {
      const nn::Matrix& m = ck.array_at("counts.len" + std::to_string(len));
      for (std::size_t r = 0; r < m.rows(); ++r) {
        Context ctx(static_cast<std::size_t>(len));
        for (int k = 0; k < len; ++k)
          ctx[static_cast<std::size_t>(k)] = static_cast<int>(m(r, static_cast<std::size_t>(k)));
        auto& row = model.tables_[static_cast<std::size_t>(len)][ctx];
        if (row.empty()) row.assign(static_cast<std::size_t>(model.num_classes_), 0);
        row[static_cast<std::size_t>(m(r, static_cast<std::size_t>(len)))] =
            static_cast<std::uint64_t>(m(r, static_cast<std::size_t>(len) + 1));
      }
    }
    return model;
  }

 private:
  Context context_at(const std::vector<ActionSegment>& segs, std::size_t pos, int len) const {
    Context ctx(static_cast<std::size_t>(len), kStartToken);
    for (int k = 0; k < len; ++k) {
      long idx = static_cast<long>(pos) - len + k;
      if (idx >= 0) ctx[static_cast<std::size_t>(k)] = segs[static_cast<std::size_t>(idx)].label;
    }
    return ctx;
  }

  std::vector<double> normalize(const std::vector<std::uint64_t>& counts) const {
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return out;
  }

  int num_classes_ = 0;
  int order_ = 2;
  std::vector<CountTable> tables_;
};

inline NGramModel fit_ngram(const std::vector<VideoAnnotation>& corpus, int num_classes,
                            int order) {
  NGramModel model(num_classes, order);
  model.fit(corpus);
  return model;
}

// Per-class Gaussian length fit (population std). Degenerate classes (one
// segment or zero variance) get a 1-frame std floor; absent classes are
// flagged by support == 0 and fall back to the corpus stats at prediction.
struct ClassGaussian {
  double mean = 0.0;
  double std = 1.0;
  long support = 0;
};

struct ClassGaussianTable {
  std::vector<ClassGaussian> by_class;

  const ClassGaussian& at(int label) const {
    return by_class.at(static_cast<std::size_t>(label));
  }
};

inline ClassGaussianTable fit_class_gaussians(const std::vector<VideoAnnotation>& corpus,
                                              int num_classes) {
  if (corpus.empty()) throw DataError("fit_class_gaussians: empty corpus");
  std::vector<double> sum(static_cast<std::size_t>(num_classes), 0.0);
  std::vector<long> n(static_cast<std::size_t>(num_classes), 0);
  for (const auto& v : corpus)
    for (const auto& s : v.segments.segments) {
      sum[static_cast<std::size_t>(s.label)] += static_cast<double>(s.length);
      ++n[static_cast<std::size_t>(s.label)];
    }
  ClassGaussianTable table;
  table.by_class.resize(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    auto& entry = table.by_class[static_cast<std::size_t>(c)];
    entry.support = n[static_cast<std::size_t>(c)];
    if (entry.support == 0) continue;
    entry.mean = sum[static_cast<std::size_t>(c)] / static_cast<double>(entry.support);
  }
  std::vector<double> ss(static_cast<std::size_t>(num_classes), 0.0);
  for (const auto& v : corpus)
    for (const auto& s : v.segments.segments) {
      double d = static_cast<double>(s.length) - table.by_class[static_cast<std::size_t>(s.label)].mean;
      ss[static_cast<std::size_t>(s.label)] += d * d;
    }
  for (int c = 0; c < num_classes; ++c) {
    auto& entry = table.by_class[static_cast<std::size_t>(c)];
    if (entry.support == 0) continue;
    double var = ss[static_cast<std::size_t>(c)] / static_cast<double>(entry.support);
    entry.std = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return table;
}

inline void append_class_gaussians(Checkpoint& ck, const ClassGaussianTable& table) {
  nn::Matrix m(table.by_class.size(), 3);
  for (std::size_t c = 0; c < table.by_class.size(); ++c) {
    m(c, 0) = table.by_class[c].mean;
    m(c, 1) = table.by_class[c].std;
    m(c, 2) = static_cast<double>(table.by_class[c].support);
  }
  ck.arrays.emplace_back("class_gaussians", std::move(m));
}

inline ClassGaussianTable class_gaussians_from_checkpoint(const Checkpoint& ck) {
  const nn::Matrix& m = ck.array_at("class_gaussians");
  ClassGaussianTable table;
  table.by_class.resize(m.rows());
  for (std::size_t c = 0; c < m.rows(); ++c) {
    table.by_class[c].mean = m(c, 0);
    table.by_class[c].std = m(c, 1);
    table.by_class[c].support = static_cast<long>(m(c, 2));
  }
  return table;
}

}  // namespace antic
