#pragma once

#include "dial/error.hpp"
#include "dial/index.hpp"
#include "dial/optim.hpp"
#include "dial/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <vector>

namespace dial {

enum class BlockerObjective { contrastive, classification, triplet };
enum class Similarity { neg_sq_l2, scaled_cosine };
// random: negatives constructed from randomly sampled records of R and S.
// labeled: the labeled non-duplicates of T replace the constructed negatives.
enum class NegativeSource { random, labeled };

struct CommitteeConfig {
  int size = 3;
  double keep_prob = 0.5;
  int batch_size = 16;
  int epochs = 200;
  BlockerObjective objective = BlockerObjective::contrastive;
  double margin = 1.0;
  Similarity similarity = Similarity::neg_sq_l2;
  double cosine_scale = 10.0;
  NegativeSource negatives = NegativeSource::random;
  OptimConfig optim;
  int threads = 1;

  void validate() const {
    if (size < 1) throw ConfigError("committee.size must be >= 1");
    if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("committee.keep_prob must be in (0,1]");
    if (batch_size < 1) throw ConfigError("committee.batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("committee.epochs must be >= 0");
    optim.validate();
  }
};

struct IndexPair {
  std::size_t r = 0;
  std::size_t s = 0;
};

// One committee member: E_k(x) = tanh(U (M ⊙ E(x)) + V).
template <typename Scalar>
struct CommitteeMember {
  Vec<Scalar> mask;  // entries in {0, 1}, fixed at creation
  ParamBlock<Scalar> U;
  ParamBlock<Scalar> V;
  // Linear pair scorer over [E_k(r); E_k(s); |E_k(r) - E_k(s)|; 1], used only
  // by the classification objective.
  ParamBlock<Scalar> scorer;

  Eigen::Index dim() const { return mask.size(); }

  Vec<Scalar> embed(const Eigen::Ref<const Vec<Scalar>>& x) const {
    return (U.values * mask.cwiseProduct(x) + V.values.col(0)).array().tanh().matrix();
  }

  Mat<Scalar> embed_all(const Mat<Scalar>& X) const {
    Mat<Scalar> Z = U.values * (mask.asDiagonal() * X);
    Z.colwise() += V.values.col(0);
    return Z.array().tanh().matrix();
  }
};

template <typename Scalar>
CommitteeMember<Scalar> init_member(Eigen::Index d, double keep_prob, std::uint64_t seed) {
  Rng rng(seed);
  CommitteeMember<Scalar> m;
  m.mask.resize(d);
  std::bernoulli_distribution keep(keep_prob);
  do {
    for (Eigen::Index i = 0; i < d; ++i) m.mask[i] = keep(rng) ? Scalar(1) : Scalar(0);
  } while (m.mask.sum() == Scalar(0));

  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> u(-bound, bound);
  Mat<Scalar> U(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) U(i, j) = static_cast<Scalar>(u(rng));
  m.U = ParamBlock<Scalar>(std::move(U));
  m.V = ParamBlock<Scalar>(Mat<Scalar>::Zero(d, 1));

  const double sbound = 1.0 / std::sqrt(3.0 * static_cast<double>(d));
  std::uniform_real_distribution<double> us(-sbound, sbound);
  Mat<Scalar> w = Mat<Scalar>::Zero(3 * d + 1, 1);
  for (Eigen::Index i = 0; i < 3 * d; ++i) w(i, 0) = static_cast<Scalar>(us(rng));
  m.scorer = ParamBlock<Scalar>(std::move(w));
  return m;
}

template <typename Scalar>
std::vector<CommitteeMember<Scalar>> init_committee(const CommitteeConfig& cfg, Eigen::Index d,
                                                    std::uint64_t seed) {
  cfg.validate();
  std::vector<CommitteeMember<Scalar>> committee;
  committee.reserve(static_cast<std::size_t>(cfg.size));
  for (int k = 0; k < cfg.size; ++k)
    committee.push_back(init_member<Scalar>(d, cfg.keep_prob, mix64(seed + static_cast<std::uint64_t>(k))));
  return committee;
}

// A training batch for one member: duplicates D_p plus the shuffled random
// records rand(R), rand(S). With `labeled`, rand_r[i] / rand_s[i] are the two
// sides of a labeled non-duplicate instead.
struct NegativeBatch {
  std::vector<IndexPair> positives;
  std::vector<std::size_t> rand_r;
  std::vector<std::size_t> rand_s;
  bool labeled = false;

  std::size_t b() const { return rand_r.size(); }
  // Similarity terms in the denominator for each positive (itself included).
  std::size_t terms_per_positive() const { return labeled ? 1 + b() : 1 + 3 * b(); }
};

// `count` indices from [0, n): without replacement when n >= count, else with.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  if (n == 0) return out;
  if (n >= count) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
      out.push_back(all[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < count; ++i) out.push_back(pick(rng));
  }
  return out;
}

inline NegativeBatch make_random_batch(std::vector<IndexPair> positives, std::size_t n_r, std::size_t n_s,
                                       std::size_t b, Rng& rng) {
  NegativeBatch batch;
  batch.positives = std::move(positives);
  batch.rand_r = sample_indices(n_r, b, rng);
  batch.rand_s = sample_indices(n_s, b, rng);
  return batch;
}

inline NegativeBatch make_labeled_batch(std::vector<IndexPair> positives, const std::vector<IndexPair>& negatives,
                                        std::size_t b, Rng& rng) {
  if (negatives.empty()) throw InsufficientLabelsError("labeled-negative blocker needs |T_n| >= 1");
  NegativeBatch batch;
  batch.positives = std::move(positives);
  batch.labeled = true;
  for (auto j : sample_indices(negatives.size(), b, rng)) {
    batch.rand_r.push_back(negatives[j].r);
    batch.rand_s.push_back(negatives[j].s);
  }
  return batch;
}

// D_p drawn from T_p (with replacement only when |T_p| < b) plus fresh random records.
inline NegativeBatch build_negative_batch(const std::vector<IndexPair>& t_pos, std::size_t n_r, std::size_t n_s,
                                          std::size_t b, Rng& rng) {
  if (t_pos.empty()) throw InsufficientLabelsError("blocker training needs |T_p| >= 1");
  std::vector<IndexPair> dp;
  for (auto j : sample_indices(t_pos.size(), b, rng)) dp.push_back(t_pos[j]);
  return make_random_batch(std::move(dp), n_r, n_s, b, rng);
}

template <typename Scalar>
struct MemberGrads {
  Mat<Scalar> dU;
  Vec<Scalar> dV;
  Vec<Scalar> dscorer;
};

// Instrumentation: similarity terms evaluated per positive.
struct LossTrace {
  std::vector<std::size_t> terms_per_positive;
};

namespace detail {

// Column layout of the gathered batch: [r_p... | s_p... | rand_r... | rand_s...].
struct BatchLayout {
  std::size_t P, b;
  std::size_t rp(std::size_t p) const { return p; }
  std::size_t sp(std::size_t p) const { return P + p; }
  std::size_t rn(std::size_t i) const { return 2 * P + i; }
  std::size_t sn(std::size_t i) const { return 2 * P + b + i; }
  std::size_t cols() const { return 2 * P + 2 * b; }
};

template <typename Scalar>
struct Forward {
  BatchLayout layout;
  Mat<Scalar> X;  // masked base inputs, d x cols
  Mat<Scalar> E;  // member embeddings, d x cols
};

template <typename Scalar>
Forward<Scalar> forward(const NegativeBatch& batch, const CommitteeMember<Scalar>& m, const Mat<Scalar>& baseR,
                        const Mat<Scalar>& baseS) {
  Forward<Scalar> f;
  f.layout = {batch.positives.size(), batch.b()};
  const auto d = m.dim();
  f.X.resize(d, static_cast<Eigen::Index>(f.layout.cols()));
  auto put = [&](std::size_t col, const auto& v) { f.X.col(static_cast<Eigen::Index>(col)) = m.mask.cwiseProduct(v); };
  for (std::size_t p = 0; p < f.layout.P; ++p) {
    put(f.layout.rp(p), baseR.col(static_cast<Eigen::Index>(batch.positives[p].r)));
    put(f.layout.sp(p), baseS.col(static_cast<Eigen::Index>(batch.positives[p].s)));
  }
  for (std::size_t i = 0; i < f.layout.b; ++i) {
    put(f.layout.rn(i), baseR.col(static_cast<Eigen::Index>(batch.rand_r[i])));
    put(f.layout.sn(i), baseS.col(static_cast<Eigen::Index>(batch.rand_s[i])));
  }
  Mat<Scalar> Z = m.U.values * f.X;
  Z.colwise() += m.V.values.col(0);
  f.E = Z.array().tanh().matrix();
  return f;
}

template <typename Scalar>
void backward(const Forward<Scalar>& f, const Mat<Scalar>& dE, MemberGrads<Scalar>& g) {
  const Mat<Scalar> dZ = (dE.array() * (Scalar(1) - f.E.array().square())).matrix();
  g.dU = dZ * f.X.transpose();
  g.dV = dZ.rowwise().sum();
}

// Negative (left, right) column pairs contrasted against positive p.
template <typename Fn>
void for_each_negative(const NegativeBatch& batch, const BatchLayout& L, std::size_t p, Fn&& fn) {
  for (std::size_t i = 0; i < L.b; ++i) {
    if (!batch.labeled) {
      fn(L.rn(i), L.sp(p));
      fn(L.rp(p), L.sn(i));
    }
    fn(L.rn(i), L.sn(i));
  }
}

// sim(u, v) with gradient accumulation weight * dsim/du into du, dsim/dv into dv.
template <typename Scalar>
Scalar similarity(const Mat<Scalar>& E, std::size_t a, std::size_t b, const CommitteeConfig& cfg) {
  const auto u = E.col(static_cast<Eigen::Index>(a));
  const auto v = E.col(static_cast<Eigen::Index>(b));
  if (cfg.similarity == Similarity::neg_sq_l2) return -(u - v).squaredNorm();
  const Scalar nu = u.norm(), nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) return Scalar(0);
  return static_cast<Scalar>(cfg.cosine_scale) * u.dot(v) / (nu * nv);
}

template <typename Scalar>
void similarity_grad(const Mat<Scalar>& E, std::size_t a, std::size_t b, const CommitteeConfig& cfg,
                     Scalar weight, Mat<Scalar>& dE) {
  const auto u = E.col(static_cast<Eigen::Index>(a));
  const auto v = E.col(static_cast<Eigen::Index>(b));
  if (cfg.similarity == Similarity::neg_sq_l2) {
    const Vec<Scalar> diff = u - v;
    dE.col(static_cast<Eigen::Index>(a)) -= Scalar(2) * weight * diff;
    dE.col(static_cast<Eigen::Index>(b)) += Scalar(2) * weight * diff;
    return;
  }
  const Scalar nu = u.norm(), nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) return;
  const Scalar s = static_cast<Scalar>(cfg.cosine_scale);
  const Scalar c = u.dot(v) / (nu * nv);
  dE.col(static_cast<Eigen::Index>(a)) += weight * s * (v / (nu * nv) - c * u / (nu * nu));
  dE.col(static_cast<Eigen::Index>(b)) += weight * s * (u / (nu * nv) - c * v / (nv * nv));
}

template <typename Scalar>
Scalar softplus(Scalar x) {
  return x > Scalar(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

}  // namespace detail

// Negated contrastive objective, summed over the positives of the batch:
//   sum_p [ logsumexp_j sim_j - sim(r_p, s_p) ]
// where j runs over the positive and its 3b (or b, labeled) negatives.
template <typename Scalar>
Scalar contrastive_loss(const NegativeBatch& batch, const CommitteeMember<Scalar>& m, const Mat<Scalar>& baseR,
                        const Mat<Scalar>& baseS, const CommitteeConfig& cfg, MemberGrads<Scalar>* grads = nullptr,
                        LossTrace* trace = nullptr) {
  using namespace detail;
  const auto f = forward(batch, m, baseR, baseS);
  const auto& L = f.layout;
  Mat<Scalar> dE;
  if (grads) dE = Mat<Scalar>::Zero(f.E.rows(), f.E.cols());

  Scalar total = 0;
  std::vector<std::pair<std::size_t, std::size_t>> terms;
  std::vector<Scalar> a;
  for (std::size_t p = 0; p < L.P; ++p) {
    terms.clear();
    terms.emplace_back(L.rp(p), L.sp(p));
    for_each_negative(batch, L, p, [&](std::size_t x, std::size_t y) { terms.emplace_back(x, y); });
    if (trace) trace->terms_per_positive.push_back(terms.size());

    a.resize(terms.size());
    Scalar amax = -std::numeric_limits<Scalar>::infinity();
    for (std::size_t j = 0; j < terms.size(); ++j) {
      a[j] = similarity(f.E, terms[j].first, terms[j].second, cfg);
      amax = std::max(amax, a[j]);
    }
    Scalar sum = 0;
    for (auto aj : a) sum += std::exp(aj - amax);
    const Scalar lse = amax + std::log(sum);
    total += lse - a[0];

    if (grads) {
      for (std::size_t j = 0; j < terms.size(); ++j) {
        const Scalar w = std::exp(a[j] - lse) - (j == 0 ? Scalar(1) : Scalar(0));
        similarity_grad(f.E, terms[j].first, terms[j].second, cfg, w, dE);
      }
    }
  }
  if (grads) {
    backward(f, dE, *grads);
    grads->dscorer = Vec<Scalar>::Zero(m.scorer.values.rows());
  }
  return total;
}

// Hinge on euclidean distances with both anchors; the negative partner of
// positive p is rand_s[p mod b] (anchor r_p) and rand_r[p mod b] (anchor s_p).
template <typename Scalar>
Scalar triplet_loss(const NegativeBatch& batch, const CommitteeMember<Scalar>& m, const Mat<Scalar>& baseR,
                    const Mat<Scalar>& baseS, const CommitteeConfig& cfg, MemberGrads<Scalar>* grads = nullptr) {
  using namespace detail;
  const auto f = forward(batch, m, baseR, baseS);
  const auto& L = f.layout;
  Mat<Scalar> dE;
  if (grads) dE = Mat<Scalar>::Zero(f.E.rows(), f.E.cols());
  const auto margin = static_cast<Scalar>(cfg.margin);

  auto dist = [&](std::size_t x, std::size_t y) {
    return (f.E.col(static_cast<Eigen::Index>(x)) - f.E.col(static_cast<Eigen::Index>(y))).norm();
  };
  auto dist_grad = [&](std::size_t x, std::size_t y, Scalar w) {
    const Vec<Scalar> diff = f.E.col(static_cast<Eigen::Index>(x)) - f.E.col(static_cast<Eigen::Index>(y));
    const Scalar n = diff.norm();
    if (n == Scalar(0)) return;
    dE.col(static_cast<Eigen::Index>(x)) += w * diff / n;
    dE.col(static_cast<Eigen::Index>(y)) -= w * diff / n;
  };

  Scalar total = 0;
  for (std::size_t p = 0; p < L.P; ++p) {
    const std::size_t j = p % L.b;
    const Scalar d_pos = dist(L.rp(p), L.sp(p));
    const Scalar h1 = d_pos - dist(L.rp(p), L.sn(j)) + margin;
    const Scalar h2 = d_pos - dist(L.sp(p), L.rn(j)) + margin;
    if (h1 > Scalar(0)) {
      total += h1;
      if (grads) {
        dist_grad(L.rp(p), L.sp(p), Scalar(1));
        dist_grad(L.rp(p), L.sn(j), Scalar(-1));
      }
    }
    if (h2 > Scalar(0)) {
      total += h2;
      if (grads) {
        dist_grad(L.sp(p), L.rp(p), Scalar(1));
        dist_grad(L.sp(p), L.rn(j), Scalar(-1));
      }
    }
  }
  if (grads) {
    backward(f, dE, *grads);
    grads->dscorer = Vec<Scalar>::Zero(m.scorer.values.rows());
  }
  return total;
}

// Binary cross-entropy of the member's linear pair scorer: each positive
// contributes itself (label 1) and its constructed negatives (label 0).
template <typename Scalar>
Scalar classification_loss(const NegativeBatch& batch, const CommitteeMember<Scalar>& m, const Mat<Scalar>& baseR,
                           const Mat<Scalar>& baseS, const CommitteeConfig& /*cfg*/,
                           MemberGrads<Scalar>* grads = nullptr) {
  using namespace detail;
  const auto f = forward(batch, m, baseR, baseS);
  const auto& L = f.layout;
  const auto d = m.dim();
  const auto& w = m.scorer.values;
  const auto w1 = w.col(0).segment(0, d);
  const auto w2 = w.col(0).segment(d, d);
  const auto w3 = w.col(0).segment(2 * d, d);
  const Scalar bias = w(3 * d, 0);

  Mat<Scalar> dE;
  if (grads) {
    dE = Mat<Scalar>::Zero(f.E.rows(), f.E.cols());
    grads->dscorer = Vec<Scalar>::Zero(w.rows());
  }

  Scalar total = 0;
  auto term = [&](std::size_t x, std::size_t y, bool positive) {
    const auto u = f.E.col(static_cast<Eigen::Index>(x));
    const auto v = f.E.col(static_cast<Eigen::Index>(y));
    const Vec<Scalar> diff = u - v;
    const Vec<Scalar> adiff = diff.cwiseAbs();
    const Scalar score = w1.dot(u) + w2.dot(v) + w3.dot(adiff) + bias;
    total += positive ? softplus(-score) : softplus(score);
    if (!grads) return;
    const Scalar g = sigmoid(score) - (positive ? Scalar(1) : Scalar(0));
    grads->dscorer.segment(0, d) += g * u;
    grads->dscorer.segment(d, d) += g * v;
    grads->dscorer.segment(2 * d, d) += g * adiff;
    grads->dscorer[3 * d] += g;
    const Vec<Scalar> sgn = diff.array().sign().matrix();
    dE.col(static_cast<Eigen::Index>(x)) += g * (w1 + sgn.cwiseProduct(w3));
    dE.col(static_cast<Eigen::Index>(y)) += g * (w2 - sgn.cwiseProduct(w3));
  };

  for (std::size_t p = 0; p < L.P; ++p) {
    term(L.rp(p), L.sp(p), true);
    for_each_negative(batch, L, p, [&](std::size_t x, std::size_t y) { term(x, y, false); });
  }
  if (grads) {
    Vec<Scalar> keep = grads->dscorer;
    backward(f, dE, *grads);
    grads->dscorer = keep;
  }
  return total;
}

template <typename Scalar>
Scalar member_loss(const NegativeBatch& batch, const CommitteeMember<Scalar>& m, const Mat<Scalar>& baseR,
                   const Mat<Scalar>& baseS, const CommitteeConfig& cfg, MemberGrads<Scalar>* grads = nullptr) {
  switch (cfg.objective) {
    case BlockerObjective::contrastive: return contrastive_loss(batch, m, baseR, baseS, cfg, grads);
    case BlockerObjective::triplet: return triplet_loss(batch, m, baseR, baseS, cfg, grads);
    case BlockerObjective::classification: return classification_loss(batch, m, baseR, baseS, cfg, grads);
  }
  return Scalar(0);
}

struct MemberTrainReport {
  double first_epoch_loss = 0.0;  // mean per-positive loss over the first epoch
  double last_epoch_loss = 0.0;   // ... and over the last epoch
  std::int64_t steps = 0;
};

// Trains one member for cfg.epochs epochs of ceil(|T_p| / b) batches, with the
// positives reshuffled every epoch. The base embeddings are read-only.
template <typename Scalar>
MemberTrainReport train_member(CommitteeMember<Scalar>& m, const std::vector<IndexPair>& t_pos,
                               const std::vector<IndexPair>& t_neg, const Mat<Scalar>& baseR,
                               const Mat<Scalar>& baseS, const CommitteeConfig& cfg, std::uint64_t seed) {
  if (t_pos.empty()) throw InsufficientLabelsError("blocker training needs |T_p| >= 1");
  if (cfg.negatives == NegativeSource::labeled && t_neg.empty())
    throw InsufficientLabelsError("labeled-negative blocker needs |T_n| >= 1");
  MemberTrainReport report;
  if (cfg.epochs == 0) return report;

  Rng rng(seed);
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches = (t_pos.size() + b - 1) / b;
  OptimConfig opt = cfg.optim;
  opt.total_steps = static_cast<std::int64_t>(batches) * cfg.epochs;
  const bool train_scorer = cfg.objective == BlockerObjective::classification;

  std::vector<std::size_t> order(t_pos.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  MemberGrads<Scalar> g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_pos = 0;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      std::vector<IndexPair> dp;
      if (t_pos.size() < b) {
        for (auto j : sample_indices(t_pos.size(), b, rng)) dp.push_back(t_pos[j]);
      } else {
        for (std::size_t j = bi * b; j < std::min(t_pos.size(), (bi + 1) * b); ++j) dp.push_back(t_pos[order[j]]);
      }
      const auto P = dp.size();
      NegativeBatch batch = cfg.negatives == NegativeSource::labeled
                                ? make_labeled_batch(std::move(dp), t_neg, b, rng)
                                : make_random_batch(std::move(dp), static_cast<std::size_t>(baseR.cols()),
                                                    static_cast<std::size_t>(baseS.cols()), b, rng);
      const Scalar loss = member_loss(batch, m, baseR, baseS, cfg, &g);
      epoch_loss += static_cast<double>(loss);
      epoch_pos += P;

      const Scalar inv = Scalar(1) / static_cast<Scalar>(P);
      m.U.grads = g.dU * inv;
      m.V.grads = g.dV * inv;
      if (train_scorer) {
        m.scorer.grads = g.dscorer * inv;
        adamw_step<Scalar>({&m.U, &m.V, &m.scorer}, opt);
      } else {
        adamw_step<Scalar>({&m.U, &m.V}, opt);
      }
      ++report.steps;
    }
    const double mean = epoch_loss / static_cast<double>(std::max<std::size_t>(1, epoch_pos));
    if (epoch == 0) report.first_epoch_loss = mean;
    report.last_epoch_loss = mean;
  }
  return report;
}

// Trains every member independently (in parallel when cfg.threads > 1); each
// member draws from its own rng stream, so results do not depend on threading.
template <typename Scalar>
std::vector<MemberTrainReport> train_committee(std::vector<CommitteeMember<Scalar>>& committee,
                                               const std::vector<IndexPair>& t_pos,
                                               const std::vector<IndexPair>& t_neg, const Mat<Scalar>& baseR,
                                               const Mat<Scalar>& baseS, const CommitteeConfig& cfg,
                                               std::uint64_t seed) {
  cfg.validate();
  if (t_pos.empty()) throw InsufficientLabelsError("blocker training needs |T_p| >= 1");
  std::vector<MemberTrainReport> reports(committee.size());
  auto work = [&](std::size_t k) {
    reports[k] = train_member(committee[k], t_pos, t_neg, baseR, baseS, cfg, mix64(seed ^ (0xC0FFEEULL + k)));
  };
  if (cfg.threads <= 1 || committee.size() <= 1) {
    for (std::size_t k = 0; k < committee.size(); ++k) work(k);
  } else {
    std::vector<std::exception_ptr> errors(committee.size());
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), committee.size());
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < committee.size(); k += workers) {
          try {
            work(k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return reports;
}

// Retrieval spaces for the committee; with cosine similarity the member
// embeddings are normalised so ℓ2 ranking matches cosine ranking.
template <typename Scalar>
std::vector<RetrievalSpace<Scalar>> committee_spaces(const std::vector<CommitteeMember<Scalar>>& committee,
                                                     const Mat<Scalar>& baseR, const Mat<Scalar>& baseS,
                                                     const CommitteeConfig& cfg) {
  std::vector<RetrievalSpace<Scalar>> spaces;
  spaces.reserve(committee.size());
  for (const auto& m : committee) {
    RetrievalSpace<Scalar> sp{m.embed_all(baseR), m.embed_all(baseS)};
    if (cfg.similarity == Similarity::scaled_cosine) {
      sp.r_vectors.colwise().normalize();
      sp.s_vectors.colwise().normalize();
    }
    spaces.push_back(std::move(sp));
  }
  return spaces;
}

}  // namespace dial
