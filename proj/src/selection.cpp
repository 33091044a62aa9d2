#include "dial/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dial {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::uncertainty: return "uncertainty";
    case Strategy::random: return "random";
    case Strategy::greedy: return "greedy";
    case Strategy::qbc: return "qbc";
    case Strategy::partition2: return "partition2";
    case Strategy::partition4: return "partition4";
    case Strategy::badge: return "badge";
  }
  return "uncertainty";
}

Strategy parse_strategy(const std::string& name) {
  for (auto s : {Strategy::uncertainty, Strategy::random, Strategy::greedy, Strategy::qbc, Strategy::partition2,
                 Strategy::partition4, Strategy::badge})
    if (name == to_string(s)) return s;
  throw ConfigError("unknown selection strategy '" + name + "'");
}

std::vector<PoolItem> build_pool(const CandidateSet& cand, const std::vector<double>& probs, const LabeledSet& T,
                                 const GoldStandard& gold) {
  if (probs.size() != cand.size()) throw ShapeError("build_pool: probabilities do not cover cand");
  std::vector<PoolItem> pool;
  pool.reserve(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const auto& e = cand.pairs[i];
    if (T.contains(e.pair) || gold.in_test(e.pair)) continue;
    pool.push_back({e.pair, e.r_index, e.s_index, e.min_dist, probs[i]});
  }
  return pool;
}

double entropy(double p) {
  p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

double vote_variance(std::size_t votes_for_match, std::size_t members) {
  if (members == 0) return 0.0;
  const double q = static_cast<double>(votes_for_match) / static_cast<double>(members);
  return q * (1.0 - q);
}

namespace {

std::vector<PairId> take_pairs(const std::vector<PoolItem>& pool, const std::vector<std::size_t>& order,
                               std::size_t budget) {
  std::vector<PairId> out;
  const auto n = std::min(budget, order.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[order[i]].pair);
  return out;
}

// Most uncertain first: entropy descending, then |p - 0.5| ascending, then PairId.
std::vector<std::size_t> rank_by_entropy(const std::vector<PoolItem>& pool, const std::vector<double>& probs,
                                         std::vector<std::size_t> order) {
  std::vector<double> h(pool.size());
  for (auto i : order) h[i] = entropy(probs[i]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (h[a] != h[b]) return h[a] > h[b];
    const double ca = std::abs(probs[a] - 0.5), cb = std::abs(probs[b] - 0.5);
    if (ca != cb) return ca < cb;
    return pool[a].pair < pool[b].pair;
  });
  return order;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<double> pool_probs(const std::vector<PoolItem>& pool) {
  std::vector<double> p;
  p.reserve(pool.size());
  for (const auto& it : pool) p.push_back(it.prob);
  return p;
}

}  // namespace

std::vector<PairId> select_uncertainty(const std::vector<PoolItem>& pool, std::size_t budget) {
  return take_pairs(pool, rank_by_entropy(pool, pool_probs(pool), all_indices(pool.size())), budget);
}

std::vector<PairId> select_random(const std::vector<PoolItem>& pool, std::size_t budget, Rng& rng) {
  return take_pairs(pool, sample_indices(pool.size(), std::min(budget, pool.size()), rng), budget);
}

std::vector<PairId> select_greedy(const std::vector<PoolItem>& pool, std::size_t budget) {
  auto order = all_indices(pool.size());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pool[a].min_dist != pool[b].min_dist) return pool[a].min_dist < pool[b].min_dist;
    return pool[a].pair < pool[b].pair;
  });
  return take_pairs(pool, order, budget);
}

std::vector<PairId> select_by_mean_entropy(const std::vector<PoolItem>& pool,
                                           const std::vector<std::vector<double>>& member_probs,
                                           std::size_t budget) {
  std::vector<double> mean(pool.size(), 0.0);
  for (const auto& probs : member_probs) {
    if (probs.size() != pool.size()) throw ShapeError("select_by_mean_entropy: member does not cover pool");
    for (std::size_t i = 0; i < pool.size(); ++i) mean[i] += probs[i];
  }
  if (!member_probs.empty())
    for (auto& m : mean) m /= static_cast<double>(member_probs.size());
  return take_pairs(pool, rank_by_entropy(pool, mean, all_indices(pool.size())), budget);
}

PartitionSelection select_partition(const std::vector<PoolItem>& pool, std::size_t budget, int variant) {
  if (variant != 2 && variant != 4) throw ConfigError("partition variant must be 2 or 4");
  const auto probs = pool_probs(pool);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < pool.size(); ++i) (probs[i] > 0.5 ? pos : neg).push_back(i);
  // Least confident first.
  pos = rank_by_entropy(pool, probs, pos);
  neg = rank_by_entropy(pool, probs, neg);

  const std::size_t half = (budget + 1) / 2;
  const std::size_t quarter = (budget + 3) / 4;
  std::vector<char> used(pool.size(), 0);
  PartitionSelection out;

  auto take_lc = [&](const std::vector<std::size_t>& side, std::size_t count, std::vector<std::size_t>& dst) {
    for (auto i : side) {
      if (dst.size() >= count) break;
      if (!used[i]) {
        used[i] = 1;
        dst.push_back(i);
      }
    }
  };
  auto take_hc = [&](const std::vector<std::size_t>& side, std::size_t count, std::vector<std::size_t>& dst) {
    for (auto it = side.rbegin(); it != side.rend() && dst.size() < count; ++it) {
      if (!used[*it]) {
        used[*it] = 1;
        dst.push_back(*it);
      }
    }
  };

  std::vector<std::size_t> label;
  if (variant == 2) {
    std::vector<std::size_t> p_lc, n_lc;
    // Each side gets half the budget; a short side cedes its remainder to the other.
    const auto n_take = std::min(neg.size(), budget - std::min(half, pos.size()));
    take_lc(pos, budget - n_take, p_lc);
    take_lc(neg, n_take, n_lc);
    label.insert(label.end(), p_lc.begin(), p_lc.end());
    label.insert(label.end(), n_lc.begin(), n_lc.end());

    std::vector<std::size_t> p_hc, n_hc;
    take_hc(pos, quarter, p_hc);
    take_hc(neg, quarter, n_hc);
    for (auto i : p_hc) out.auto_label.emplace_back(pool[i].pair, LabelValue::duplicate);
    for (auto i : n_hc) out.auto_label.emplace_back(pool[i].pair, LabelValue::non_duplicate);
  } else {
    std::vector<std::size_t> p_hc, p_lc, n_hc, n_lc;
    take_lc(pos, quarter, p_lc);
    take_lc(neg, quarter, n_lc);
    take_hc(pos, quarter, p_hc);
    take_hc(neg, quarter, n_hc);
    for (const auto* set : {&p_hc, &p_lc, &n_hc, &n_lc}) label.insert(label.end(), set->begin(), set->end());
    // Fill any shortfall with the least confident leftovers of either side.
    if (label.size() < budget) {
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (!used[i]) rest.push_back(i);
      for (auto i : rank_by_entropy(pool, probs, rest)) {
        if (label.size() >= budget) break;
        label.push_back(i);
      }
    }
  }
  if (label.size() > budget) label.resize(budget);
  for (auto i : label) out.to_label.push_back(pool[i].pair);
  return out;
}

std::vector<MatcherExample> bootstrap_resample(const std::vector<MatcherExample>& examples, Rng& rng) {
  const bool has_pos = std::any_of(examples.begin(), examples.end(), [](const auto& e) { return e.duplicate; });
  const bool has_neg = std::any_of(examples.begin(), examples.end(), [](const auto& e) { return !e.duplicate; });
  if (!has_pos || !has_neg) throw InsufficientLabelsError("bootstrap needs both classes in T");
  std::uniform_int_distribution<std::size_t> pick(0, examples.size() - 1);
  for (;;) {
    std::vector<MatcherExample> out;
    out.reserve(examples.size());
    bool p = false, n = false;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      out.push_back(examples[pick(rng)]);
      (out.back().duplicate ? p : n) = true;
    }
    if (p && n) return out;
  }
}

}  // namespace dial
