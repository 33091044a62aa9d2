#pragma once

#include "dial/types.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

namespace dial {

// k-means++ seeding over the columns of `points`. The first seed is uniform;
// each later seed is drawn with probability proportional to its squared
// distance to the nearest chosen seed. When every remaining point sits on a
// chosen seed (all D^2 = 0) the next seed is drawn uniformly from the unchosen
// points. Returns min(count, n) distinct column indices in selection order.
template <typename Derived>
std::vector<std::size_t> kmeanspp_seed(const Eigen::MatrixBase<Derived>& points, std::size_t count,
                                       Rng& rng) {
  const auto n = static_cast<std::size_t>(points.cols());
  std::vector<std::size_t> chosen;
  if (n == 0 || count == 0) return chosen;
  count = std::min(count, n);
  chosen.reserve(count);

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  auto take = [&](std::size_t idx) {
    chosen.push_back(idx);
    taken[idx] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (points.col(static_cast<Eigen::Index>(i)) -
                        points.col(static_cast<Eigen::Index>(idx)))
                           .template cast<double>()
                           .squaredNorm();
      d2[i] = std::min(d2[i], d);
    }
    d2[idx] = 0.0;
  };

  take(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  while (chosen.size() < count) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i]) total += d2[i];
    if (total > 0.0) {
      const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      std::size_t pick = n;
      std::size_t last_positive = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || d2[i] <= 0.0) continue;
        last_positive = i;
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      take(pick == n ? last_positive : pick);
    } else {
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) rest.push_back(i);
      take(rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)]);
    }
  }
  return chosen;
}

template <typename Scalar>
struct KMeansResult {
  Mat<Scalar> centroids;             // d x k
  std::vector<std::size_t> assignment;  // one cell per point
};

template <typename Scalar>
std::size_t nearest_centroid(const Mat<Scalar>& centroids, const Eigen::Ref<const Vec<Scalar>>& x) {
  std::size_t best = 0;
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index c = 0; c < centroids.cols(); ++c) {
    const Scalar d = (centroids.col(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

// Lloyd iterations from a k-means++ start. Empty cells keep their centroid.
template <typename Scalar>
KMeansResult<Scalar> kmeans(const Mat<Scalar>& points, std::size_t k, int iterations, Rng& rng) {
  KMeansResult<Scalar> res;
  const auto n = static_cast<std::size_t>(points.cols());
  k = std::min(k, n);
  const auto seeds = kmeanspp_seed(points, k, rng);
  res.centroids.resize(points.rows(), static_cast<Eigen::Index>(seeds.size()));
  for (std::size_t c = 0; c < seeds.size(); ++c)
    res.centroids.col(static_cast<Eigen::Index>(c)) = points.col(static_cast<Eigen::Index>(seeds[c]));
  res.assignment.assign(n, 0);

  for (int it = 0; it <= iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = nearest_centroid<Scalar>(res.centroids, points.col(static_cast<Eigen::Index>(i)));
      changed = changed || c != res.assignment[i];
      res.assignment[i] = c;
    }
    if (it == iterations || (it > 0 && !changed)) break;
    Mat<Scalar> sums = Mat<Scalar>::Zero(points.rows(), res.centroids.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(res.centroids.cols()), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.col(static_cast<Eigen::Index>(res.assignment[i])) += points.col(static_cast<Eigen::Index>(i));
      ++counts[res.assignment[i]];
    }
    for (Eigen::Index c = 0; c < res.centroids.cols(); ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        res.centroids.col(c) = sums.col(c) / static_cast<Scalar>(counts[static_cast<std::size_t>(c)]);
  }
  return res;
}

}  // namespace dial
