#pragma once

#include "dial/data.hpp"
#include "dial/error.hpp"
#include "dial/types.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dial {

enum class EncoderProvider { hashed_ngram, precomputed };

struct EncoderConfig {
  EncoderProvider provider = EncoderProvider::hashed_ngram;
  int dim = 64;
  int ngram_min = 3;
  int ngram_max = 5;
  std::uint32_t hash_buckets = 1u << 16;
  bool trainable = false;
  // Norm of each projection row at initialization; 0 picks sqrt(hash_buckets),
  // i.e. entries of unit variance.
  double row_norm = 0.0;

  double effective_row_norm() const { return row_norm > 0.0 ? row_norm : std::sqrt(static_cast<double>(hash_buckets)); }
  std::string precomputed_R;  // DIALEMB1 files for the precomputed provider
  std::string precomputed_S;

  void validate() const;
};

// Sparse ℓ2-normalized hashed n-gram counts, sorted by bucket.
struct SparseFeatures {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double norm() const;
  bool empty() const { return entries.empty(); }
};

std::uint64_t fnv1a64(std::string_view bytes);

SparseFeatures featurize(std::string_view text, const EncoderConfig& cfg);

// Encoder state: a d x hash_buckets projection (hashed_ngram provider only).
template <typename Scalar>
struct EncoderParams {
  Mat<Scalar> projection;

  int dim() const { return static_cast<int>(projection.rows()); }

  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    EncoderParams p;
    p.projection.resize(cfg.dim, cfg.hash_buckets);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < p.projection.cols(); ++j)
      for (Eigen::Index i = 0; i < p.projection.rows(); ++i)
        p.projection(i, j) = static_cast<Scalar>(normal(rng));
    for (Eigen::Index i = 0; i < p.projection.rows(); ++i) {
      const Scalar n = p.projection.row(i).norm();
      p.projection.row(i) *= static_cast<Scalar>(cfg.effective_row_norm()) / n;
    }
    return p;
  }
};

// Base record embeddings for one side. Column i is the embedding of record i
// (the column-major analogue of the n x d row layout used on disk).
template <typename Scalar>
struct EmbeddingMatrix {
  Side side = Side::R;
  Mat<Scalar> vectors;  // d x n

  Eigen::Index dim() const { return vectors.rows(); }
  Eigen::Index size() const { return vectors.cols(); }
  auto col(Eigen::Index i) const { return vectors.col(i); }
};

template <typename Scalar>
Vec<Scalar> project(const Mat<Scalar>& projection, const SparseFeatures& f) {
  Vec<Scalar> out = Vec<Scalar>::Zero(projection.rows());
  for (const auto& [bucket, value] : f.entries)
    out.noalias() += static_cast<Scalar>(value) * projection.col(bucket);
  return out;
}

template <typename Scalar>
Vec<Scalar> encode(const Record& rec, const EncoderParams<Scalar>& params, const EncoderConfig& cfg) {
  return project(params.projection, featurize(serialize_record(rec), cfg));
}

std::vector<SparseFeatures> featurize_all(const RecordStore& store, const EncoderConfig& cfg);

template <typename Scalar>
EmbeddingMatrix<Scalar> project_all(Side side, const std::vector<SparseFeatures>& features,
                                    const EncoderParams<Scalar>& params) {
  EmbeddingMatrix<Scalar> m;
  m.side = side;
  m.vectors.resize(params.dim(), static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i)
    m.vectors.col(static_cast<Eigen::Index>(i)) = project(params.projection, features[i]);
  return m;
}

template <typename Scalar>
EmbeddingMatrix<Scalar> encode_all(const RecordStore& store, const EncoderParams<Scalar>& params,
                                   const EncoderConfig& cfg) {
  return project_all(store.side(), featurize_all(store, cfg), params);
}

// DIALEMB1: "DIALEMB1", u32 n, u32 d (little endian), then n*d little-endian
// float32 values, row-major, row i <-> record i.
void write_embedding_file(const std::string& path, const Mat<float>& rows_n_by_d);
Mat<float> read_embedding_file(const std::string& path);  // returns n x d

template <typename Scalar>
EmbeddingMatrix<Scalar> load_precomputed(const std::string& path, const RecordStore& store) {
  Mat<float> rows = read_embedding_file(path);
  if (static_cast<std::size_t>(rows.rows()) != store.size())
    throw ShapeError(path + ": " + std::to_string(rows.rows()) + " rows for a store of " +
                     std::to_string(store.size()) + " records");
  EmbeddingMatrix<Scalar> m;
  m.side = store.side();
  m.vectors = rows.transpose().template cast<Scalar>();
  return m;
}

template <typename Scalar>
void save_embeddings(const std::string& path, const EmbeddingMatrix<Scalar>& m) {
  write_embedding_file(path, m.vectors.transpose().template cast<float>());
}

}  // namespace dial
