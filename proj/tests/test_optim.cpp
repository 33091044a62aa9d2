#include "dial/error.hpp"
#include "dial/optim.hpp"

#include <gtest/gtest.h>

using namespace dial;

namespace {

ParamBlock<double> scalar_block(double v, double g) {
  ParamBlock<double> b(Mat<double>::Constant(1, 1, v));
  b.grads(0, 0) = g;
  return b;
}

}  // namespace

TEST(AdamW, ZeroGradNoDecayIsFixedPoint) {
  OptimConfig cfg;
  cfg.weight_decay = 0.0;
  auto b = scalar_block(1.5, 0.0);
  for (int i = 0; i < 5; ++i) adamw_step(b, cfg);
  EXPECT_DOUBLE_EQ(b.values(0, 0), 1.5);
}

TEST(AdamW, FirstStepByHand) {
  OptimConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  const double g = 0.3;
  auto b = scalar_block(2.0, g);
  adamw_step(b, cfg);
  // m_hat = g, v_hat = g^2 after bias correction.
  const double want = 2.0 - 0.1 * g / (std::sqrt(g * g) + cfg.eps);
  EXPECT_NEAR(b.values(0, 0), want, 1e-15);
  EXPECT_EQ(b.step, 1);
}

TEST(AdamW, TwoStepsAgainstScalarRecurrence) {
  OptimConfig cfg;
  cfg.lr = 0.05;
  cfg.weight_decay = 0.1;
  const double g1 = 0.7, g2 = -0.2;
  auto b = scalar_block(1.0, g1);
  adamw_step(b, cfg);
  b.grads(0, 0) = g2;
  adamw_step(b, cfg);

  double x = 1.0, m = 0.0, v = 0.0;
  int t = 0;
  for (double g : {g1, g2}) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    x = x * (1 - 0.05 * 0.1) - 0.05 * mh / (std::sqrt(vh) + 1e-8);
  }
  EXPECT_NEAR(b.values(0, 0), x, 1e-14);
}

TEST(AdamW, DecayOnlyShrinksMultiplicatively) {
  OptimConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.5;
  ParamBlock<double> b(Mat<double>::Constant(2, 3, 4.0));
  adamw_step(b, cfg);
  EXPECT_TRUE(b.values.isApprox(Mat<double>::Constant(2, 3, 4.0 * (1 - 0.01 * 0.5)), 1e-15));
}

TEST(AdamW, LinearSchedule) {
  OptimConfig cfg;
  cfg.lr = 1.0;
  cfg.total_steps = 4;
  EXPECT_DOUBLE_EQ(cfg.lr_at(0), 1.0);
  EXPECT_DOUBLE_EQ(cfg.lr_at(1), 0.75);
  EXPECT_DOUBLE_EQ(cfg.lr_at(4), 0.0);
  EXPECT_DOUBLE_EQ(cfg.lr_at(9), 0.0);
}

TEST(AdamW, ZeroLearningRateFreezes) {
  OptimConfig cfg;
  cfg.lr = 0.0;
  auto b = scalar_block(3.0, 10.0);
  adamw_step(b, cfg);
  EXPECT_DOUBLE_EQ(b.values(0, 0), 3.0);
}

TEST(AdamW, NonFiniteGradientAbortsStep) {
  OptimConfig cfg;
  auto a = scalar_block(1.0, 0.5);
  auto b = scalar_block(1.0, std::numeric_limits<double>::infinity());
  EXPECT_THROW(adamw_step(std::vector<ParamBlock<double>*>{&a, &b}, cfg), NumericError);
  EXPECT_DOUBLE_EQ(a.values(0, 0), 1.0);
  EXPECT_EQ(a.step, 0);
}

TEST(AdamW, ConfigValidation) {
  OptimConfig cfg;
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(GradientCheck, Quadratic) {
  Eigen::VectorXd theta(3);
  theta << 0.5, -2.0, 7.0;
  auto loss = [](const Eigen::VectorXd& t) { return t.squaredNorm(); };
  EXPECT_LT(check_gradient(loss, theta, 2.0 * theta), 1e-9);
}

TEST(GradientCheck, DetectsWrongGradient) {
  Eigen::VectorXd theta(2);
  theta << 0.5, -0.25;
  auto loss = [](const Eigen::VectorXd& t) { return t.squaredNorm(); };
  // numeric (1, -0.5) against analytic (2, -1): worst error 1 / max(1, 1).
  const double err = check_gradient(loss, theta, 4.0 * theta);
  EXPECT_NEAR(err, 1.0, 1e-6);
}
