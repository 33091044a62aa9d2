#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <functional>
#include <random>

namespace dial {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RecordId = std::int64_t;

// A pair (r, s) in R x S, identified by record ids. Ordered lexicographically.
struct PairId {
  RecordId r_id = 0;
  RecordId s_id = 0;

  friend auto operator<=>(const PairId&, const PairId&) = default;
  friend bool operator==(const PairId&, const PairId&) = default;
};

struct PairIdHash {
  std::size_t operator()(const PairId& p) const noexcept {
    auto h = static_cast<std::uint64_t>(p.r_id) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(p.s_id) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent rng streams from
// (global_seed, round, purpose) tuples.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t round,
                                    std::uint64_t purpose, std::uint64_t sub = 0) {
  return mix64(mix64(mix64(mix64(global_seed) ^ round) ^ purpose) ^ sub);
}

// Purpose tags for rng streams.
namespace stream {
inline constexpr std::uint64_t seed_set = 1;
inline constexpr std::uint64_t encoder = 2;
inline constexpr std::uint64_t matcher = 3;
inline constexpr std::uint64_t committee = 4;
inline constexpr std::uint64_t index = 5;
inline constexpr std::uint64_t selection = 6;
inline constexpr std::uint64_t qbc = 7;
}  // namespace stream

}  // namespace dial
