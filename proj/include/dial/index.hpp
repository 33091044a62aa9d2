#pragma once

#include "dial/clustering.hpp"
#include "dial/data.hpp"
#include "dial/error.hpp"
#include "dial/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dial {

enum class IndexBackend { exact, ivf };

struct IndexConfig {
  int k = 3;
  // Candidate-set cap. 0 means cand_factor * |S|.
  std::size_t cand_size = 0;
  double cand_factor = 3.0;
  IndexBackend backend = IndexBackend::exact;
  std::size_t ivf_nlist = 0;   // 0: ceil(sqrt(n))
  std::size_t ivf_nprobe = 0;  // 0: max(1, nlist / 8)
  int kmeans_iterations = 20;

  void validate() const {
    if (k < 1) throw ConfigError("index.k must be >= 1");
    if (!(cand_factor > 0.0) && cand_size == 0) throw ConfigError("index cand size must be >= 1");
    if (ivf_nlist != 0 && ivf_nprobe > ivf_nlist) throw ConfigError("index.ivf_nprobe > ivf_nlist");
  }

  std::size_t cap_for(std::size_t s_size) const {
    if (cand_size != 0) return cand_size;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cand_factor * static_cast<double>(s_size))));
  }
};

struct Neighbor {
  std::size_t id = 0;  // column of the indexed matrix
  double dist = 0.0;   // squared ℓ2
};

inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
}

// Squared-ℓ2 k-NN index over the columns of a d x n matrix. The exact backend
// scans everything; the ivf backend scans the nprobe cells whose k-means
// centroids are closest to the query.
template <typename Scalar>
class KnnIndex {
public:
  static KnnIndex build(Mat<Scalar> vectors, const IndexConfig& cfg, std::uint64_t seed) {
    if (vectors.cols() < 1) throw ShapeError("cannot index an empty matrix");
    KnnIndex idx;
    idx.backend_ = cfg.backend;
    idx.data_ = std::move(vectors);
    if (cfg.backend == IndexBackend::ivf) {
      const auto n = static_cast<std::size_t>(idx.data_.cols());
      std::size_t nlist = cfg.ivf_nlist != 0
                              ? cfg.ivf_nlist
                              : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
      nlist = std::clamp<std::size_t>(nlist, 1, n);
      std::size_t nprobe = cfg.ivf_nprobe != 0 ? cfg.ivf_nprobe : std::max<std::size_t>(1, nlist / 8);
      idx.nprobe_ = std::min(nprobe, nlist);
      Rng rng(seed);
      auto km = kmeans<Scalar>(idx.data_, nlist, cfg.kmeans_iterations, rng);
      idx.centroids_ = std::move(km.centroids);
      idx.cells_.assign(static_cast<std::size_t>(idx.centroids_.cols()), {});
      for (std::size_t i = 0; i < n; ++i) idx.cells_[km.assignment[i]].push_back(i);
    }
    return idx;
  }

  std::size_t size() const { return static_cast<std::size_t>(data_.cols()); }
  Eigen::Index dim() const { return data_.rows(); }
  std::size_t nlist() const { return cells_.size(); }
  std::size_t nprobe() const { return nprobe_; }
  IndexBackend backend() const { return backend_; }

  std::vector<Neighbor> probe(const Eigen::Ref<const Vec<Scalar>>& query, int k) const {
    std::vector<Neighbor> cand;
    if (backend_ == IndexBackend::exact) {
      cand.resize(size());
      for (std::size_t i = 0; i < size(); ++i) cand[i] = {i, distance(i, query)};
    } else {
      std::vector<Neighbor> cells(nlist());
      for (std::size_t c = 0; c < nlist(); ++c)
        cells[c] = {c, static_cast<double>((centroids_.col(static_cast<Eigen::Index>(c)) - query).squaredNorm())};
      const auto probes = std::min(nprobe_, cells.size());
      std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(probes), cells.end(),
                        neighbor_less);
      for (std::size_t p = 0; p < probes; ++p)
        for (auto i : cells_[cells[p].id]) cand.push_back({i, distance(i, query)});
    }
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                      neighbor_less);
    cand.resize(keep);
    return cand;
  }

private:
  double distance(std::size_t i, const Eigen::Ref<const Vec<Scalar>>& q) const {
    return static_cast<double>((data_.col(static_cast<Eigen::Index>(i)) - q).squaredNorm());
  }

  IndexBackend backend_ = IndexBackend::exact;
  Mat<Scalar> data_;
  Mat<Scalar> centroids_;
  std::vector<std::vector<std::size_t>> cells_;
  std::size_t nprobe_ = 0;
};

struct ScoredPair {
  PairId pair;
  std::size_t r_index = 0;
  std::size_t s_index = 0;
  double dist = 0.0;
  int member = 0;
};

struct CandidateEntry {
  PairId pair;
  std::size_t r_index = 0;
  std::size_t s_index = 0;
  double min_dist = 0.0;
};

// Deduplicated, distance-sorted candidate pairs, capped at the configured size.
struct CandidateSet {
  std::vector<CandidateEntry> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  std::unordered_set<PairId, PairIdHash> pair_set() const {
    std::unordered_set<PairId, PairIdHash> s;
    s.reserve(pairs.size());
    for (const auto& e : pairs) s.insert(e.pair);
    return s;
  }
};

inline bool candidate_less(const CandidateEntry& a, const CandidateEntry& b) {
  if (a.min_dist != b.min_dist) return a.min_dist < b.min_dist;
  return a.pair < b.pair;
}

// Pools retrieved pairs: keep the minimum distance per pair, sort ascending by
// (dist, r_id, s_id), then truncate to `cap` (no cap when nullopt).
inline CandidateSet merge_retrieved(const std::vector<ScoredPair>& retrieved, std::optional<std::size_t> cap) {
  std::unordered_map<PairId, CandidateEntry, PairIdHash> best;
  best.reserve(retrieved.size());
  for (const auto& sp : retrieved) {
    auto [it, inserted] = best.try_emplace(sp.pair, CandidateEntry{sp.pair, sp.r_index, sp.s_index, sp.dist});
    if (!inserted && sp.dist < it->second.min_dist) it->second.min_dist = sp.dist;
  }
  CandidateSet out;
  out.pairs.reserve(best.size());
  for (auto& kv : best) out.pairs.push_back(kv.second);
  std::sort(out.pairs.begin(), out.pairs.end(), candidate_less);
  if (cap && out.pairs.size() > *cap) out.pairs.resize(*cap);
  return out;
}

// One embedding space to retrieve in: R-side and S-side vectors (d x |R|, d x |S|).
template <typename Scalar>
struct RetrievalSpace {
  Mat<Scalar> r_vectors;
  Mat<Scalar> s_vectors;
};

// Index R per space, probe with every S vector for k neighbours, and return
// the raw ScoredPairs tagged with the space (committee member) index.
template <typename Scalar>
std::vector<ScoredPair> retrieve_pairs(const std::vector<RetrievalSpace<Scalar>>& spaces,
                                       const RecordStore& R, const RecordStore& S,
                                       const IndexConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<ScoredPair> out;
  for (std::size_t m = 0; m < spaces.size(); ++m) {
    const auto& sp = spaces[m];
    auto index = KnnIndex<Scalar>::build(sp.r_vectors, cfg, mix64(seed ^ m));
    for (Eigen::Index s = 0; s < sp.s_vectors.cols(); ++s) {
      for (const auto& nb : index.probe(sp.s_vectors.col(s), cfg.k)) {
        const auto si = static_cast<std::size_t>(s);
        out.push_back({PairId{R[nb.id].id, S[si].id}, nb.id, si, nb.dist, static_cast<int>(m)});
      }
    }
  }
  return out;
}

}  // namespace dial
