#pragma once

#include "dial/index.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace dial::testing {

// Brute-force k-NN with plain loops: squared ℓ2, ties broken by the smaller id.
inline std::vector<Neighbor> brute_knn(const Mat<double>& data, const Vec<double>& q, int k) {
  std::vector<Neighbor> all;
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < data.rows(); ++j) s += (data(j, i) - q[j]) * (data(j, i) - q[j]);
    all.push_back({static_cast<std::size_t>(i), s});
  }
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.dist < b.dist; });
  all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(k)));
  return all;
}

struct OracleInstance {
  Mat<double> data;
  Mat<double> queries;
  int k = 1;
};

// Odd seeds use small integer coordinates, which produce many exact distance ties.
inline OracleInstance oracle_instance(std::uint64_t seed, Eigen::Index max_n = 1000, Eigen::Index max_d = 64) {
  Rng rng(seed);
  OracleInstance in;
  const auto n = std::uniform_int_distribution<Eigen::Index>(1, max_n)(rng);
  const auto d = std::uniform_int_distribution<Eigen::Index>(1, max_d)(rng);
  in.k = std::uniform_int_distribution<int>(1, 12)(rng);
  const Eigen::Index nq = 5;
  in.data.resize(d, n);
  in.queries.resize(d, nq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> grid(-2, 2);
  const bool ties = seed % 2 == 1;
  auto draw = [&] { return ties ? static_cast<double>(grid(rng)) : gauss(rng); };
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < d; ++i) in.data(i, j) = draw();
  for (Eigen::Index j = 0; j < nq; ++j)
    for (Eigen::Index i = 0; i < d; ++i) in.queries(i, j) = draw();
  // One query that coincides with a stored vector.
  in.queries.col(0) = in.data.col(n / 2);
  return in;
}

inline bool same_neighbors(const std::vector<Neighbor>& a, const std::vector<Neighbor>& b, double tol = 1e-9) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].id != b[i].id || std::abs(a[i].dist - b[i].dist) > tol) return false;
  return true;
}

// Number of queries (over exact and full-probe ivf) whose result differs from the brute-force oracle.
inline int oracle_mismatches(const OracleInstance& in, std::uint64_t seed) {
  IndexConfig exact;
  auto ex = KnnIndex<double>::build(in.data, exact, seed);
  IndexConfig ivf;
  ivf.backend = IndexBackend::ivf;
  ivf.ivf_nlist = std::min<std::size_t>(8, static_cast<std::size_t>(in.data.cols()));
  ivf.ivf_nprobe = ivf.ivf_nlist;
  auto iv = KnnIndex<double>::build(in.data, ivf, seed);
  int bad = 0;
  for (Eigen::Index q = 0; q < in.queries.cols(); ++q) {
    const Vec<double> query = in.queries.col(q);
    const auto want = brute_knn(in.data, query, in.k);
    bad += !same_neighbors(ex.probe(query, in.k), want);
    bad += !same_neighbors(iv.probe(query, in.k), want);
  }
  return bad;
}

}  // namespace dial::testing
