#pragma once

#include "dial/encoder.hpp"
#include "dial/error.hpp"
#include "dial/index.hpp"
#include "dial/optim.hpp"
#include "dial/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dial {

struct MatcherConfig {
  int hidden = 64;
  int epochs = 20;
  int batch_size = 16;
  OptimConfig optim;

  void validate() const {
    if (hidden < 1) throw ConfigError("matcher.hidden must be >= 1");
    if (epochs < 0) throw ConfigError("matcher.epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("matcher.batch_size must be >= 1");
    optim.validate();
  }
};

inline constexpr double kProbFloor = 1e-12;

// [E(r); E(s); |E(r) - E(s)|; E(r) ⊙ E(s)]
template <typename DerivedR, typename DerivedS>
auto paired_features(const Eigen::MatrixBase<DerivedR>& er, const Eigen::MatrixBase<DerivedS>& es) {
  using Scalar = typename DerivedR::Scalar;
  const auto d = er.size();
  Vec<Scalar> x(4 * d);
  x.segment(0, d) = er;
  x.segment(d, d) = es;
  x.segment(2 * d, d) = (er - es).cwiseAbs();
  x.segment(3 * d, d) = er.cwiseProduct(es);
  return x;
}

// F_W(x) = w2 · tanh(W1 x + b1) + b2
template <typename Scalar>
struct MatcherHead {
  ParamBlock<Scalar> W1;  // h x in
  ParamBlock<Scalar> b1;  // h x 1
  ParamBlock<Scalar> w2;  // h x 1
  ParamBlock<Scalar> b2;  // 1 x 1

  Eigen::Index input_dim() const { return W1.values.cols(); }
  Eigen::Index hidden() const { return W1.values.rows(); }

  static MatcherHead zeros(Eigen::Index in_dim, Eigen::Index hidden) {
    MatcherHead h;
    h.W1 = ParamBlock<Scalar>(Mat<Scalar>::Zero(hidden, in_dim));
    h.b1 = ParamBlock<Scalar>(Mat<Scalar>::Zero(hidden, 1));
    h.w2 = ParamBlock<Scalar>(Mat<Scalar>::Zero(hidden, 1));
    h.b2 = ParamBlock<Scalar>(Mat<Scalar>::Zero(1, 1));
    return h;
  }

  // W1 ~ U(±1/sqrt(in)), w2 ~ U(±1/sqrt(h)), biases zero.
  static MatcherHead init(Eigen::Index in_dim, Eigen::Index hidden, std::uint64_t seed) {
    MatcherHead h = zeros(in_dim, hidden);
    Rng rng(seed);
    std::uniform_real_distribution<double> u1(-1.0 / std::sqrt(static_cast<double>(in_dim)),
                                              1.0 / std::sqrt(static_cast<double>(in_dim)));
    for (Eigen::Index j = 0; j < in_dim; ++j)
      for (Eigen::Index i = 0; i < hidden; ++i) h.W1.values(i, j) = static_cast<Scalar>(u1(rng));
    std::uniform_real_distribution<double> u2(-1.0 / std::sqrt(static_cast<double>(hidden)),
                                              1.0 / std::sqrt(static_cast<double>(hidden)));
    for (Eigen::Index i = 0; i < hidden; ++i) h.w2.values(i, 0) = static_cast<Scalar>(u2(rng));
    return h;
  }

  Vec<Scalar> hidden_activation(const Eigen::Ref<const Vec<Scalar>>& x) const {
    return (W1.values * x + b1.values.col(0)).array().tanh().matrix();
  }

  Scalar score(const Eigen::Ref<const Vec<Scalar>>& x) const {
    return w2.values.col(0).dot(hidden_activation(x)) + b2.values(0, 0);
  }

  // Scores for every column of X.
  Vec<Scalar> score_all(const Mat<Scalar>& X) const {
    Mat<Scalar> H = W1.values * X;
    H.colwise() += b1.values.col(0);
    H = H.array().tanh().matrix();
    Vec<Scalar> f = H.transpose() * w2.values.col(0);
    f.array() += b2.values(0, 0);
    return f;
  }
};

inline double sigmoid_prob(double score) {
  const double p = score >= 0 ? 1.0 / (1.0 + std::exp(-score)) : std::exp(score) / (1.0 + std::exp(score));
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

template <typename Scalar>
double predict_prob(const Eigen::Ref<const Vec<Scalar>>& x, const MatcherHead<Scalar>& head) {
  return sigmoid_prob(static_cast<double>(head.score(x)));
}

template <typename Scalar>
struct MatcherGrads {
  Mat<Scalar> dW1;
  Vec<Scalar> db1;
  Vec<Scalar> dw2;
  Scalar db2 = 0;
  Mat<Scalar> dX;  // filled only on request
};

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Cross-entropy summed over the columns of X:
//   sum_{y=1} log(1 + exp(-F)) + sum_{y=0} log(1 + exp(F)).
template <typename Scalar>
Scalar matcher_loss(const MatcherHead<Scalar>& head, const Mat<Scalar>& X, const std::vector<char>& y,
                    MatcherGrads<Scalar>* grads = nullptr, bool want_dX = false) {
  if (static_cast<std::size_t>(X.cols()) != y.size()) throw ShapeError("matcher_loss: label count mismatch");
  Mat<Scalar> H = head.W1.values * X;
  H.colwise() += head.b1.values.col(0);
  H = H.array().tanh().matrix();
  Vec<Scalar> f = H.transpose() * head.w2.values.col(0);
  f.array() += head.b2.values(0, 0);

  Scalar total = 0;
  Vec<Scalar> g(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double fi = static_cast<double>(f[i]);
    const bool pos = y[static_cast<std::size_t>(i)] != 0;
    total += static_cast<Scalar>(pos ? softplus(-fi) : softplus(fi));
    const double p = fi >= 0 ? 1.0 / (1.0 + std::exp(-fi)) : std::exp(fi) / (1.0 + std::exp(fi));
    g[i] = static_cast<Scalar>(p - (pos ? 1.0 : 0.0));
  }
  if (grads) {
    grads->dw2 = H * g;
    grads->db2 = g.sum();
    const Mat<Scalar> dZ =
        ((head.w2.values.col(0) * g.transpose()).array() * (Scalar(1) - H.array().square())).matrix();
    grads->dW1 = dZ * X.transpose();
    grads->db1 = dZ.rowwise().sum();
    if (want_dX) grads->dX = head.W1.values.transpose() * dZ;
  }
  return total;
}

struct MatcherExample {
  std::size_t r = 0;  // index into R
  std::size_t s = 0;  // index into S
  bool duplicate = false;
};

// The encoder projection when it is fine-tuned together with the matcher.
template <typename Scalar>
struct TrainableProjection {
  ParamBlock<Scalar> projection;
  const std::vector<SparseFeatures>* features_r = nullptr;
  const std::vector<SparseFeatures>* features_s = nullptr;
};

struct MatcherTrainReport {
  double initial_loss = 0.0;  // full-set loss before the first step
  double final_loss = 0.0;    // ... and after the last
  std::int64_t steps = 0;
};

namespace detail {

template <typename Scalar>
Mat<Scalar> example_features(const std::vector<MatcherExample>& ex, const std::vector<std::size_t>& rows,
                             const Mat<Scalar>& embR, const Mat<Scalar>& embS) {
  const auto d = embR.rows();
  Mat<Scalar> X(4 * d, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& e = ex[rows[i]];
    X.col(static_cast<Eigen::Index>(i)) =
        paired_features(embR.col(static_cast<Eigen::Index>(e.r)), embS.col(static_cast<Eigen::Index>(e.s)));
  }
  return X;
}

template <typename Scalar>
Scalar full_loss(const MatcherHead<Scalar>& head, const std::vector<MatcherExample>& ex, const Mat<Scalar>& embR,
                 const Mat<Scalar>& embS) {
  std::vector<std::size_t> all(ex.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<char> y;
  for (const auto& e : ex) y.push_back(e.duplicate ? 1 : 0);
  return matcher_loss(head, example_features(ex, all, embR, embS), y);
}

}  // namespace detail

// Trains a freshly initialised head (or a copy of `warm`) on the labeled
// examples with mini-batch AdamW and a linear schedule. With `encoder`, the
// projection receives the matcher-loss gradient too and `embR`/`embS` are
// ignored for the batches.
template <typename Scalar>
MatcherHead<Scalar> train_matcher(const std::vector<MatcherExample>& examples, const Mat<Scalar>& embR,
                                  const Mat<Scalar>& embS, const MatcherConfig& cfg, std::uint64_t seed,
                                  TrainableProjection<Scalar>* encoder = nullptr,
                                  MatcherTrainReport* report = nullptr,
                                  const MatcherHead<Scalar>* warm = nullptr) {
  cfg.validate();
  const auto npos = std::count_if(examples.begin(), examples.end(), [](const auto& e) { return e.duplicate; });
  if (npos == 0 || npos == static_cast<std::ptrdiff_t>(examples.size()))
    throw InsufficientLabelsError("matcher training needs at least one duplicate and one non-duplicate");

  const auto d = embR.rows();
  Rng rng(seed);
  const auto init_seed = rng();
  MatcherHead<Scalar> head = warm ? *warm : MatcherHead<Scalar>::init(4 * d, cfg.hidden, init_seed);

  const auto n = examples.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches = (n + bs - 1) / bs;
  OptimConfig opt = cfg.optim;
  opt.total_steps = static_cast<std::int64_t>(batches) * cfg.epochs;

  auto current_embeddings = [&](Mat<Scalar>& r, Mat<Scalar>& s) {
    r = project_all(Side::R, *encoder->features_r, EncoderParams<Scalar>{encoder->projection.values}).vectors;
    s = project_all(Side::S, *encoder->features_s, EncoderParams<Scalar>{encoder->projection.values}).vectors;
  };

  if (report) {
    if (encoder) {
      Mat<Scalar> r, s;
      current_embeddings(r, s);
      report->initial_loss = static_cast<double>(detail::full_loss(head, examples, r, s));
    } else {
      report->initial_loss = static_cast<double>(detail::full_loss(head, examples, embR, embS));
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  MatcherGrads<Scalar> g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t bi = 0; bi < batches; ++bi) {
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(bi * bs),
                                    order.begin() + static_cast<std::ptrdiff_t>(std::min(n, (bi + 1) * bs)));
      std::vector<char> y;
      for (auto i : rows) y.push_back(examples[i].duplicate ? 1 : 0);
      const Scalar inv = Scalar(1) / static_cast<Scalar>(rows.size());

      if (!encoder) {
        const Mat<Scalar> X = detail::example_features(examples, rows, embR, embS);
        matcher_loss(head, X, y, &g);
      } else {
        const Mat<Scalar>& P = encoder->projection.values;
        Mat<Scalar> er(d, static_cast<Eigen::Index>(rows.size())), es(d, static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          er.col(static_cast<Eigen::Index>(i)) = project(P, (*encoder->features_r)[examples[rows[i]].r]);
          es.col(static_cast<Eigen::Index>(i)) = project(P, (*encoder->features_s)[examples[rows[i]].s]);
        }
        Mat<Scalar> X(4 * d, static_cast<Eigen::Index>(rows.size()));
        for (Eigen::Index i = 0; i < X.cols(); ++i) X.col(i) = paired_features(er.col(i), es.col(i));
        matcher_loss(head, X, y, &g, true);

        encoder->projection.grads.setZero();
        for (Eigen::Index i = 0; i < X.cols(); ++i) {
          const auto dx = g.dX.col(i);
          const Vec<Scalar> sgn = (er.col(i) - es.col(i)).array().sign().matrix();
          const Vec<Scalar> d_er = dx.segment(0, d) + sgn.cwiseProduct(dx.segment(2 * d, d)) +
                                   es.col(i).cwiseProduct(dx.segment(3 * d, d));
          const Vec<Scalar> d_es = dx.segment(d, d) - sgn.cwiseProduct(dx.segment(2 * d, d)) +
                                   er.col(i).cwiseProduct(dx.segment(3 * d, d));
          for (const auto& [bucket, v] : (*encoder->features_r)[examples[rows[static_cast<std::size_t>(i)]].r].entries)
            encoder->projection.grads.col(bucket) += inv * static_cast<Scalar>(v) * d_er;
          for (const auto& [bucket, v] : (*encoder->features_s)[examples[rows[static_cast<std::size_t>(i)]].s].entries)
            encoder->projection.grads.col(bucket) += inv * static_cast<Scalar>(v) * d_es;
        }
      }

      head.W1.grads = g.dW1 * inv;
      head.b1.grads = g.db1 * inv;
      head.w2.grads = g.dw2 * inv;
      head.b2.grads(0, 0) = g.db2 * inv;
      if (encoder)
        adamw_step<Scalar>({&head.W1, &head.b1, &head.w2, &head.b2, &encoder->projection}, opt);
      else
        adamw_step<Scalar>({&head.W1, &head.b1, &head.w2, &head.b2}, opt);
      if (report) ++report->steps;
    }
  }

  if (report) {
    if (encoder) {
      Mat<Scalar> r, s;
      current_embeddings(r, s);
      report->final_loss = static_cast<double>(detail::full_loss(head, examples, r, s));
    } else {
      report->final_loss = static_cast<double>(detail::full_loss(head, examples, embR, embS));
    }
  }
  return head;
}

// Duplicate probability for every candidate, aligned with cand.pairs.
template <typename Scalar>
std::vector<double> predict_all(const CandidateSet& cand, const MatcherHead<Scalar>& head, const Mat<Scalar>& embR,
                                const Mat<Scalar>& embS) {
  std::vector<double> out;
  out.reserve(cand.size());
  const auto d = embR.rows();
  constexpr std::size_t chunk = 1024;
  for (std::size_t start = 0; start < cand.size(); start += chunk) {
    const auto len = std::min(chunk, cand.size() - start);
    Mat<Scalar> X(4 * d, static_cast<Eigen::Index>(len));
    for (std::size_t i = 0; i < len; ++i) {
      const auto& e = cand.pairs[start + i];
      X.col(static_cast<Eigen::Index>(i)) = paired_features(embR.col(static_cast<Eigen::Index>(e.r_index)),
                                                            embS.col(static_cast<Eigen::Index>(e.s_index)));
    }
    const Vec<Scalar> f = head.score_all(X);
    for (Eigen::Index i = 0; i < f.size(); ++i) out.push_back(sigmoid_prob(static_cast<double>(f[i])));
  }
  return out;
}

}  // namespace dial
