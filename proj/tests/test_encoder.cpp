#include "dial/encoder.hpp"
#include "dial/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace dial;
using dial::testing::TempDir;

namespace {

// Reference FNV-1a, byte by byte.
std::uint64_t fnv_ref(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

EncoderConfig small_cfg() {
  EncoderConfig c;
  c.dim = 8;
  c.hash_buckets = 1u << 10;
  return c;
}

}  // namespace

TEST(Featurize, ShortInputs) {
  auto cfg = small_cfg();
  EXPECT_TRUE(featurize("ab", cfg).empty());
  EXPECT_TRUE(featurize("", cfg).empty());
  auto f = featurize("abc", cfg);
  ASSERT_EQ(f.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(f.entries[0].second, 1.0);
  EXPECT_EQ(f.entries[0].first, fnv_ref("abc") % cfg.hash_buckets);
}

TEST(Featurize, MatchesHandEnumeration) {
  auto cfg = small_cfg();
  // abc, bcd, abcd
  const std::string text = "ABcd";
  std::map<std::uint32_t, double> want;
  for (const char* g : {"abc", "bcd", "abcd"}) want[static_cast<std::uint32_t>(fnv_ref(g) % cfg.hash_buckets)] += 1.0;
  double n = 0.0;
  for (auto& [k, v] : want) n += v * v;
  auto f = featurize(text, cfg);
  ASSERT_EQ(f.entries.size(), want.size());
  std::size_t i = 0;
  for (auto& [k, v] : want) {
    EXPECT_EQ(f.entries[i].first, k);
    EXPECT_NEAR(f.entries[i].second, v / std::sqrt(n), 1e-15);
    ++i;
  }
  EXPECT_NEAR(f.norm(), 1.0, 1e-12);
}

TEST(Encode, OneHotProjection) {
  auto cfg = small_cfg();
  EncoderParams<double> p;
  p.projection = Mat<double>::Zero(cfg.dim, cfg.hash_buckets);
  const auto bucket = static_cast<Eigen::Index>(fnv_ref("abc") % cfg.hash_buckets);
  p.projection(0, bucket) = 1.0;
  auto f = featurize("abc", cfg);
  auto v = project(p.projection, f);
  EXPECT_DOUBLE_EQ(v[0], 1.0);
  EXPECT_DOUBLE_EQ(v.tail(cfg.dim - 1).norm(), 0.0);
  EXPECT_DOUBLE_EQ(encode(Record{2, {}}, p, cfg).norm(), 0.0);
}

TEST(Encode, ShapeAndDeterminism) {
  auto cfg = small_cfg();
  RecordStore store(Side::R, {"t"}, {{1, {{"t", "same text"}}}, {2, {{"t", "same text"}}}, {3, {{"t", "other"}}}});
  auto a = EncoderParams<float>::init(cfg, 5);
  auto b = EncoderParams<float>::init(cfg, 5);
  EXPECT_EQ(a.projection, b.projection);
  for (Eigen::Index i = 0; i < a.projection.rows(); ++i)
    EXPECT_NEAR(a.projection.row(i).norm(), cfg.effective_row_norm(), 1e-2);
  auto m = encode_all(store, a, cfg);
  EXPECT_EQ(m.size(), 3);
  EXPECT_EQ(m.dim(), cfg.dim);
  EXPECT_EQ(m.col(0), m.col(1));
  EXPECT_NE(m.col(0), m.col(2));
}

TEST(Encode, RowNormValidation) {
  auto cfg = small_cfg();
  cfg.row_norm = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.row_norm = 0.0;
  EXPECT_DOUBLE_EQ(cfg.effective_row_norm(), 32.0);
}

TEST(EmbeddingFile, RoundTripAndErrors) {
  TempDir d("emb");
  Mat<float> rows(3, 4);
  rows << 1, 2, 3, 4, 5, 6, 7, 8, -1, 0.5f, 0, 2;
  write_embedding_file(d.file("e.bin"), rows);
  RecordStore three(Side::S, {"t"}, {{1, {{"t", "a"}}}, {2, {{"t", "b"}}}, {3, {{"t", "c"}}}});
  auto m = load_precomputed<float>(d.file("e.bin"), three);
  EXPECT_EQ(m.size(), 3);
  EXPECT_EQ(m.dim(), 4);
  EXPECT_EQ(m.vectors.transpose(), rows);

  write_embedding_file(d.file("two.bin"), rows.topRows(2));
  EXPECT_THROW(load_precomputed<float>(d.file("two.bin"), three), ShapeError);

  rows(1, 1) = std::numeric_limits<float>::quiet_NaN();
  write_embedding_file(d.file("nan.bin"), rows);
  EXPECT_THROW(read_embedding_file(d.file("nan.bin")), DataError);

  dial::testing::write_file(d.file("bad.bin"), "NOTMAGIC\x01\0\0\0\x01\0\0\0");
  EXPECT_THROW(read_embedding_file(d.file("bad.bin")), FormatError);
}
