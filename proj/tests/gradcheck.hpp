#pragma once

#include "dial/blocker.hpp"
#include "dial/matcher.hpp"
#include "dial/optim.hpp"

#include <vector>

// Random small instances for finite-difference checks of every loss, in double.
namespace dial::testing {

inline Eigen::VectorXd flatten(const std::vector<const Mat<double>*>& parts) {
  Eigen::Index n = 0;
  for (auto* p : parts) n += p->size();
  Eigen::VectorXd out(n);
  Eigen::Index o = 0;
  for (auto* p : parts) {
    out.segment(o, p->size()) = p->reshaped();
    o += p->size();
  }
  return out;
}

inline void unflatten(const Eigen::VectorXd& v, const std::vector<Mat<double>*>& parts) {
  Eigen::Index o = 0;
  for (auto* p : parts) {
    p->reshaped() = v.segment(o, p->size());
    o += p->size();
  }
}

inline Mat<double> random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat<double> m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

// Worst relative error over all head parameters and the inputs.
inline double matcher_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index d = 3 + static_cast<Eigen::Index>(seed % 4), in = 4 * d, h = 5, n = 7;
  auto head = MatcherHead<double>::init(in, h, rng());
  head.b1.values = random_mat(h, 1, rng, 0.3);
  head.b2.values = random_mat(1, 1, rng, 0.3);
  Mat<double> X = random_mat(in, n, rng);
  std::vector<char> y(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<char>(i % 2);

  MatcherGrads<double> g;
  matcher_loss(head, X, y, &g, true);
  Mat<double> gw1 = g.dW1, gb1 = g.db1, gw2 = g.dw2, gb2 = Mat<double>::Constant(1, 1, g.db2), gx = g.dX;
  auto theta = flatten({&head.W1.values, &head.b1.values, &head.w2.values, &head.b2.values, &X});
  auto analytic = flatten({&gw1, &gb1, &gw2, &gb2, &gx});
  auto loss = [&](const Eigen::VectorXd& t) {
    auto hh = head;
    Mat<double> XX = X;
    unflatten(t, {&hh.W1.values, &hh.b1.values, &hh.w2.values, &hh.b2.values, &XX});
    return matcher_loss(hh, XX, y);
  };
  return check_gradient(loss, theta, analytic);
}

struct BlockerInstance {
  CommitteeMember<double> member;
  Mat<double> baseR, baseS;
  NegativeBatch batch;
  CommitteeConfig cfg;
};

inline BlockerInstance blocker_instance(BlockerObjective obj, bool labeled, std::uint64_t seed) {
  Rng rng(seed);
  BlockerInstance in;
  const Eigen::Index d = 6;
  const std::size_t nr = 10, ns = 12, P = 3, b = 2 + seed % 2;
  in.cfg.objective = obj;
  in.member = init_member<double>(d, 0.7, rng());
  in.member.U.values = random_mat(d, d, rng, 0.5);
  in.member.V.values = random_mat(d, 1, rng, 0.2);
  in.member.scorer.values = random_mat(3 * d + 1, 1, rng, 0.3);
  in.baseR = random_mat(d, static_cast<Eigen::Index>(nr), rng);
  in.baseS = random_mat(d, static_cast<Eigen::Index>(ns), rng);
  std::vector<IndexPair> pos;
  for (std::size_t p = 0; p < P; ++p) pos.push_back({p, p + 1});
  if (labeled) {
    std::vector<IndexPair> neg{{5, 6}, {7, 2}, {9, 11}, {4, 0}};
    in.batch = make_labeled_batch(pos, neg, b, rng);
  } else {
    in.batch = make_random_batch(pos, nr, ns, b, rng);
  }
  return in;
}

// Worst relative error of one objective's gradient w.r.t. U, V (and the scorer).
inline double blocker_gradcheck(BlockerObjective obj, bool labeled, std::uint64_t seed) {
  auto in = blocker_instance(obj, labeled, seed);
  const bool with_scorer = obj == BlockerObjective::classification;
  MemberGrads<double> g;
  member_loss(in.batch, in.member, in.baseR, in.baseS, in.cfg, &g);
  Mat<double> dU = g.dU, dV = g.dV, ds = with_scorer ? Mat<double>(g.dscorer) : Mat<double>(0, 1);
  Mat<double> scorer = with_scorer ? in.member.scorer.values : Mat<double>(0, 1);
  auto theta = flatten({&in.member.U.values, &in.member.V.values, &scorer});
  auto analytic = flatten({&dU, &dV, &ds});
  auto loss = [&](const Eigen::VectorXd& t) {
    auto m = in.member;
    Mat<double> sc = scorer;
    unflatten(t, {&m.U.values, &m.V.values, &sc});
    if (with_scorer) m.scorer.values = sc;
    return member_loss(in.batch, m, in.baseR, in.baseS, in.cfg);
  };
  return check_gradient(loss, theta, analytic);
}

}  // namespace dial::testing
