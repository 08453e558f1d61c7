#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "antic/core.hpp"
#include "antic/errors.hpp"
#include "antic/nn/matrix.hpp"

namespace antic {

// Versioned binary model container: kind tag, vocabulary hash, the length
// statistics the model was trained with, integer metadata, and named double
// arrays. Written little-endian; identical contents give identical bytes.
struct Checkpoint {
  enum class Kind : std::uint8_t { ActionRnn = 0, LengthRnn = 1, Ngram = 2 };

  Kind kind = Kind::ActionRnn;
  std::uint64_t vocab_hash = 0;
  LengthStats stats;
  std::map<std::string, long> meta;
  std::vector<std::pair<std::string, nn::Matrix>> arrays;

  long meta_at(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw DataError("checkpoint: missing metadata key '" + key + "'");
    return it->second;
  }

  const nn::Matrix& array_at(const std::string& name) const {
    for (const auto& [n, m] : arrays)
      if (n == name) return m;
    throw DataError("checkpoint: missing array '" + name + "'");
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_u32(out, kByteOrderTag);
    std::uint8_t k = static_cast<std::uint8_t>(kind);
    out.write(reinterpret_cast<const char*>(&k), 1);
    write_u64(out, vocab_hash);
    write_f64(out, stats.mean);
    write_f64(out, stats.std);
    write_u32(out, static_cast<std::uint32_t>(meta.size()));
    for (const auto& [key, value] : meta) {
      write_str(out, key);
      write_u64(out, static_cast<std::uint64_t>(value));
    }
    write_u32(out, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& [name, m] : arrays) {
      write_str(out, name);
      write_u32(out, static_cast<std::uint32_t>(m.rows()));
      write_u32(out, static_cast<std::uint32_t>(m.cols()));
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
    if (!out) throw DataError("write failure on checkpoint: " + path.string());
  }

  static Checkpoint load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != std::string(kMagic, 8))
      throw DataError("not a model checkpoint: " + path.string());
    if (read_u32(in) != kVersion) throw DataError("unsupported checkpoint version");
    if (read_u32(in) != kByteOrderTag) throw DataError("checkpoint byte order mismatch");
    Checkpoint ck;
    std::uint8_t k;
    in.read(reinterpret_cast<char*>(&k), 1);
    if (k > 2) throw DataError("unknown checkpoint kind");
    ck.kind = static_cast<Kind>(k);
    ck.vocab_hash = read_u64(in);
    ck.stats.mean = read_f64(in);
    ck.stats.std = read_f64(in);
    std::uint32_t nmeta = read_u32(in);
    for (std::uint32_t i = 0; i < nmeta; ++i) {
      std::string key = read_str(in);
      ck.meta[key] = static_cast<long>(read_u64(in));
    }
    std::uint32_t narr = read_u32(in);
    for (std::uint32_t i = 0; i < narr; ++i) {
      std::string name = read_str(in);
      std::uint32_t rows = read_u32(in);
      std::uint32_t cols = read_u32(in);
      nn::Matrix m(rows, cols);
      in.read(reinterpret_cast<char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
      ck.arrays.emplace_back(std::move(name), std::move(m));
    }
    if (!in) throw DataError("truncated checkpoint: " + path.string());
    return ck;
  }

 private:
  static constexpr const char* kMagic = "ANTCKPT\0";
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint32_t kByteOrderTag = 0x01020304;

  static void write_u32(std::ostream& o, std::uint32_t v) {
    o.write(reinterpret_cast<const char*>(&v), 4);
  }
  static void write_u64(std::ostream& o, std::uint64_t v) {
    o.write(reinterpret_cast<const char*>(&v), 8);
  }
  static void write_f64(std::ostream& o, double v) {
    o.write(reinterpret_cast<const char*>(&v), 8);
  }
  static void write_str(std::ostream& o, const std::string& s) {
    std::uint16_t len = static_cast<std::uint16_t>(s.size());
    o.write(reinterpret_cast<const char*>(&len), 2);
    o.write(s.data(), len);
  }
  static std::uint32_t read_u32(std::istream& i) {
    std::uint32_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 4);
    return v;
  }
  static std::uint64_t read_u64(std::istream& i) {
    std::uint64_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 8);
    return v;
  }
  static double read_f64(std::istream& i) {
    double v = 0;
    i.read(reinterpret_cast<char*>(&v), 8);
    return v;
  }
  static std::string read_str(std::istream& i) {
    std::uint16_t len = 0;
    i.read(reinterpret_cast<char*>(&len), 2);
    std::string s(len, '\0');
    i.read(s.data(), len);
    return s;
  }
};

}  // namespace antic
