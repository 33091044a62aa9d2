#include "dial/error.hpp"
#include "dial/matcher.hpp"
#include "gradcheck.hpp"

#include <gtest/gtest.h>

using namespace dial;

TEST(MatcherHead, ZeroHeadScoresZero) {
  auto h = MatcherHead<double>::zeros(8, 4);
  EXPECT_EQ(h.score(Vec<double>::Ones(8)), 0.0);
  EXPECT_DOUBLE_EQ(predict_prob<double>(Vec<double>::Ones(8), h), 0.5);
}

TEST(MatcherHead, Saturation) {
  auto h = MatcherHead<double>::zeros(4, 3);
  h.w2.values(0, 0) = 1.0;
  h.W1.values(0, 0) = 1.0;
  Vec<double> x = Vec<double>::Zero(4);
  x[0] = 50.0;
  EXPECT_NEAR(h.score(x), 1.0, 1e-12);
}

TEST(MatcherHead, MatchesScalarOracle) {
  Rng rng(3);
  auto h = MatcherHead<double>::init(12, 5, 11);
  h.b1.values = dial::testing::random_mat(5, 1, rng);
  h.b2.values(0, 0) = 0.25;
  Mat<double> X = dial::testing::random_mat(12, 4, rng);
  auto all = h.score_all(X);
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    double f = h.b2.values(0, 0);
    for (Eigen::Index j = 0; j < 5; ++j) {
      double a = h.b1.values(j, 0);
      for (Eigen::Index i = 0; i < 12; ++i) a += h.W1.values(j, i) * X(i, c);
      f += h.w2.values(j, 0) * std::tanh(a);
    }
    EXPECT_NEAR(h.score(X.col(c)), f, 1e-12);
    EXPECT_NEAR(all[c], f, 1e-12);
  }
}

TEST(MatcherHead, PairedFeatures) {
  Vec<double> r(2), s(2);
  r << 1, -2;
  s << 3, 0.5;
  Vec<double> want(8);
  want << 1, -2, 3, 0.5, 2, 2.5, 3, -1;
  EXPECT_EQ(paired_features(r, s), want);
}

TEST(Sigmoid, Values) {
  EXPECT_DOUBLE_EQ(sigmoid_prob(0.0), 0.5);
  EXPECT_NEAR(sigmoid_prob(std::log(3.0)), 0.75, 1e-15);
  EXPECT_LT(sigmoid_prob(1e6), 1.0);
  EXPECT_NEAR(sigmoid_prob(1e6), 1.0, 1e-11);
  EXPECT_GT(sigmoid_prob(-1e6), 0.0);
}

TEST(MatcherLoss, GradientCheck) {
  for (std::uint64_t s = 0; s < 10; ++s) EXPECT_LT(dial::testing::matcher_gradcheck(s), 1e-4) << "seed " << s;
}

TEST(MatcherLoss, HandValue) {
  auto h = MatcherHead<double>::zeros(2, 1);
  h.b2.values(0, 0) = std::log(3.0);
  Mat<double> X = Mat<double>::Zero(2, 2);
  // y=1: log(1 + 1/3); y=0: log(1 + 3)
  EXPECT_NEAR(matcher_loss(h, X, {1, 0}), std::log(4.0 / 3.0) + std::log(4.0), 1e-14);
}

namespace {

// R0 == S0 (duplicate), R1 orthogonal to S1.
void two_pair_embeddings(Mat<double>& R, Mat<double>& S) {
  R = Mat<double>::Zero(4, 2);
  S = Mat<double>::Zero(4, 2);
  R(0, 0) = S(0, 0) = 1.0;
  R(1, 0) = S(1, 0) = 0.5;
  R(2, 1) = 1.0;
  S(3, 1) = 1.0;
}

}  // namespace

TEST(TrainMatcher, SeparatesTwoExamples) {
  Mat<double> R, S;
  two_pair_embeddings(R, S);
  std::vector<MatcherExample> ex{{0, 0, true}, {1, 1, false}};
  MatcherConfig cfg;
  cfg.epochs = 200;
  cfg.hidden = 8;
  cfg.optim.lr = 1e-2;
  auto head = train_matcher(ex, R, S, cfg, 42);
  EXPECT_GT(predict_prob<double>(paired_features(R.col(0), S.col(0)), head), 0.9);
  EXPECT_LT(predict_prob<double>(paired_features(R.col(1), S.col(1)), head), 0.1);
}

TEST(TrainMatcher, ZeroLearningRateKeepsInit) {
  Mat<double> R, S;
  two_pair_embeddings(R, S);
  std::vector<MatcherExample> ex{{0, 0, true}, {1, 1, false}};
  MatcherConfig cfg;
  cfg.hidden = 6;
  cfg.optim.lr = 0.0;
  auto head = train_matcher(ex, R, S, cfg, 9);
  auto init = MatcherHead<double>::init(16, 6, Rng(9)());
  EXPECT_EQ(head.W1.values, init.W1.values);
  EXPECT_EQ(head.w2.values, init.w2.values);
  EXPECT_EQ(head.b1.values, init.b1.values);
}

TEST(TrainMatcher, NeedsBothClasses) {
  Mat<double> R, S;
  two_pair_embeddings(R, S);
  EXPECT_THROW(train_matcher<double>({{0, 0, true}}, R, S, MatcherConfig{}, 1), InsufficientLabelsError);
}

TEST(PredictAll, PointwiseAgreement) {
  Mat<double> R, S;
  two_pair_embeddings(R, S);
  auto head = MatcherHead<double>::init(16, 4, 5);
  CandidateSet cand;
  cand.pairs = {{{1, 1}, 0, 0, 0.0}, {{1, 2}, 0, 1, 0.1}, {{2, 2}, 1, 1, 0.2}};
  auto p = predict_all(cand, head, R, S);
  ASSERT_EQ(p.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& e = cand.pairs[i];
    EXPECT_NEAR(p[i],
                predict_prob<double>(paired_features(R.col(static_cast<Eigen::Index>(e.r_index)),
                                                     S.col(static_cast<Eigen::Index>(e.s_index))),
                                     head),
                1e-12);
  }
  EXPECT_TRUE(predict_all(CandidateSet{}, head, R, S).empty());
}
