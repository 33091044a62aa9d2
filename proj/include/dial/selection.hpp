#pragma once

#include "dial/blocker.hpp"
#include "dial/clustering.hpp"
#include "dial/data.hpp"
#include "dial/index.hpp"
#include "dial/matcher.hpp"
#include "dial/types.hpp"

#include <string>
#include <vector>

namespace dial {

enum class Strategy { uncertainty, random, greedy, qbc, partition2, partition4, badge };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

struct SelectionConfig {
  Strategy strategy = Strategy::uncertainty;
  std::size_t budget = 128;
  int qbc_committee_size = 5;

  void validate() const {
    if (budget < 1) throw ConfigError("selection.budget must be >= 1");
    if (qbc_committee_size < 1) throw ConfigError("selection.qbc_committee_size must be >= 1");
  }
};

// One eligible candidate with everything the selectors look at.
struct PoolItem {
  PairId pair;
  std::size_t r_index = 0;
  std::size_t s_index = 0;
  double min_dist = 0.0;
  double prob = 0.5;
};

// cand minus pairs already in T minus pairs of the test split.
std::vector<PoolItem> build_pool(const CandidateSet& cand, const std::vector<double>& probs, const LabeledSet& T,
                                 const GoldStandard& gold);

// Binary entropy in nats; p is clamped to [1e-12, 1 - 1e-12].
double entropy(double p);

// Hard-vote disagreement of an m-member committee: q (1 - q) with q = votes / m.
double vote_variance(std::size_t votes_for_match, std::size_t members);

std::vector<PairId> select_uncertainty(const std::vector<PoolItem>& pool, std::size_t budget);
std::vector<PairId> select_random(const std::vector<PoolItem>& pool, std::size_t budget, Rng& rng);
std::vector<PairId> select_greedy(const std::vector<PoolItem>& pool, std::size_t budget);

// Top-`budget` by entropy of the committee-mean probability; member_probs[k][i]
// is member k's probability for pool[i].
std::vector<PairId> select_by_mean_entropy(const std::vector<PoolItem>& pool,
                                           const std::vector<std::vector<double>>& member_probs,
                                           std::size_t budget);

struct PartitionSelection {
  std::vector<PairId> to_label;
  std::vector<std::pair<PairId, LabelValue>> auto_label;
};

// High-confidence sampling with partition (variant 2 or 4).
PartitionSelection select_partition(const std::vector<PoolItem>& pool, std::size_t budget, int variant);

// BADGE gradient embedding of one pair w.r.t. the output layer (w2, b2):
// (p - 1[p > 0.5]) * [tanh(W1 x + b1); 1].
template <typename Scalar>
Vec<Scalar> badge_embedding(const Eigen::Ref<const Vec<Scalar>>& x, const MatcherHead<Scalar>& head) {
  const Vec<Scalar> h = head.hidden_activation(x);
  const double p = sigmoid_prob(static_cast<double>(head.w2.values.col(0).dot(h) + head.b2.values(0, 0)));
  const double factor = p - (p > 0.5 ? 1.0 : 0.0);
  Vec<Scalar> g(h.size() + 1);
  g.head(h.size()) = static_cast<Scalar>(factor) * h;
  g[h.size()] = static_cast<Scalar>(factor);
  return g;
}

template <typename Scalar>
std::vector<PairId> select_badge(const std::vector<PoolItem>& pool, const MatcherHead<Scalar>& head,
                                 const Mat<Scalar>& embR, const Mat<Scalar>& embS, std::size_t budget, Rng& rng) {
  if (pool.size() <= budget) {
    std::vector<PairId> all;
    for (const auto& it : pool) all.push_back(it.pair);
    return all;
  }
  Mat<Scalar> G(head.hidden() + 1, static_cast<Eigen::Index>(pool.size()));
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Vec<Scalar> x = paired_features(embR.col(static_cast<Eigen::Index>(pool[i].r_index)),
                                          embS.col(static_cast<Eigen::Index>(pool[i].s_index)));
    G.col(static_cast<Eigen::Index>(i)) = badge_embedding<Scalar>(x, head);
  }
  std::vector<PairId> out;
  for (auto i : kmeanspp_seed(G, budget, rng)) out.push_back(pool[i].pair);
  return out;
}

// Bootstrap resample of T (same size, with replacement), redrawn until both
// classes are present.
std::vector<MatcherExample> bootstrap_resample(const std::vector<MatcherExample>& examples, Rng& rng);

// Query-by-committee with soft disagreement: trains `cfg.qbc_committee_size`
// matchers on bootstrap resamples of T and ranks the pool by the entropy of
// their mean probability.
template <typename Scalar>
std::vector<PairId> select_qbc(const std::vector<PoolItem>& pool, const std::vector<MatcherExample>& examples,
                               const Mat<Scalar>& embR, const Mat<Scalar>& embS, const MatcherConfig& mcfg,
                               const SelectionConfig& scfg, std::uint64_t seed) {
  Rng rng(seed);
  CandidateSet view;
  view.pairs.reserve(pool.size());
  for (const auto& it : pool) view.pairs.push_back({it.pair, it.r_index, it.s_index, it.min_dist});
  std::vector<std::vector<double>> member_probs;
  for (int k = 0; k < scfg.qbc_committee_size; ++k) {
    const auto sample = bootstrap_resample(examples, rng);
    const auto head = train_matcher<Scalar>(sample, embR, embS, mcfg, rng());
    member_probs.push_back(predict_all(view, head, embR, embS));
  }
  return select_by_mean_entropy(pool, member_probs, scfg.budget);
}

}  // namespace dial
