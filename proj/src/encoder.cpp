#include "dial/encoder.hpp"

#include "dial/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace dial {

void EncoderConfig::validate() const {
  if (dim < 2) throw ConfigError("encoder.dim must be >= 2");
  if (ngram_min < 1 || ngram_min > ngram_max) throw ConfigError("encoder n-gram range invalid");
  if (hash_buckets < static_cast<std::uint32_t>(dim))
    throw ConfigError("encoder.hash_buckets must be >= encoder.dim");
  if (!(row_norm >= 0.0)) throw ConfigError("encoder.row_norm must be >= 0");
}

double SparseFeatures::norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.second * e.second;
  return std::sqrt(s);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// Byte offsets of UTF-8 code point starts, plus a trailing end offset.
std::vector<std::size_t> codepoint_offsets(std::string_view s) {
  std::vector<std::size_t> offs;
  offs.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i)
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) offs.push_back(i);
  offs.push_back(s.size());
  return offs;
}

}  // namespace

SparseFeatures featurize(std::string_view text, const EncoderConfig& cfg) {
  std::string lower(text);
  for (auto& c : lower)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');

  const auto offs = codepoint_offsets(lower);
  const std::size_t n_cp = offs.size() - 1;
  std::map<std::uint32_t, double> counts;
  for (int n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    const auto len = static_cast<std::size_t>(n);
    if (n_cp < len) break;
    for (std::size_t i = 0; i + len <= n_cp; ++i) {
      std::string_view gram(lower.data() + offs[i], offs[i + len] - offs[i]);
      counts[static_cast<std::uint32_t>(fnv1a64(gram) % cfg.hash_buckets)] += 1.0;
    }
  }

  SparseFeatures f;
  f.entries.assign(counts.begin(), counts.end());
  double norm = 0.0;
  for (const auto& e : f.entries) norm += e.second * e.second;
  norm = std::sqrt(norm);
  for (auto& e : f.entries) e.second /= norm;
  return f;
}

std::vector<SparseFeatures> featurize_all(const RecordStore& store, const EncoderConfig& cfg) {
  std::vector<SparseFeatures> out;
  out.reserve(store.size());
  for (const auto& rec : store.records()) out.push_back(featurize(serialize_record(rec), cfg));
  return out;
}

namespace {

constexpr char kEmbMagic[8] = {'D', 'I', 'A', 'L', 'E', 'M', 'B', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                 static_cast<unsigned char>(v >> 16),
                                 static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw FormatError(path + ": truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_embedding_file(const std::string& path, const Mat<float>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(kEmbMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(rows.rows()));
  put_u32(out, static_cast<std::uint32_t>(rows.cols()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = 0; j < rows.cols(); ++j)
      put_u32(out, std::bit_cast<std::uint32_t>(rows(i, j)));
  if (!out) throw FormatError("write failed: " + path);
}

Mat<float> read_embedding_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kEmbMagic, 8) != 0)
    throw FormatError(path + ": bad magic (expected DIALEMB1)");
  const auto n = get_u32(in, path);
  const auto d = get_u32(in, path);
  Mat<float> rows(n, d);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j) {
      const float v = std::bit_cast<float>(get_u32(in, path));
      if (!std::isfinite(v))
        throw DataError(path + ": non-finite value at row " + std::to_string(i));
      rows(i, j) = v;
    }
  return rows;
}

}  // namespace dial
