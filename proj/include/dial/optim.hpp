#pragma once

#include "dial/error.hpp"
#include "dial/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace dial {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  // Linear decay to zero over this many steps; 0 disables the schedule.
  std::int64_t total_steps = 0;

  void validate() const {
    if (!(lr >= 0.0)) throw ConfigError("optim.lr must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw ConfigError("optim betas must lie in [0,1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("optim.weight_decay must be >= 0");
  }

  // Learning rate applied at 0-based step t.
  double lr_at(std::int64_t t) const {
    if (total_steps <= 0) return lr;
    const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(total_steps);
    return lr * std::max(0.0, frac);
  }
};

// Values, gradients and AdamW moment accumulators for one parameter tensor.
template <typename Scalar>
struct ParamBlock {
  Mat<Scalar> values;
  Mat<Scalar> grads;
  Mat<Scalar> m;
  Mat<Scalar> v;
  std::int64_t step = 0;

  ParamBlock() = default;
  explicit ParamBlock(Mat<Scalar> init)
      : values(std::move(init)),
        grads(Mat<Scalar>::Zero(values.rows(), values.cols())),
        m(Mat<Scalar>::Zero(values.rows(), values.cols())),
        v(Mat<Scalar>::Zero(values.rows(), values.cols())) {}

  void zero_grad() { grads.setZero(); }
};

// One decoupled-weight-decay Adam update. Throws NumericError (leaving the
// block untouched) if any gradient is non-finite.
template <typename Scalar>
void adamw_step(ParamBlock<Scalar>& block, const OptimConfig& cfg) {
  if (!block.grads.allFinite()) throw NumericError("non-finite gradient in optimizer step");
  const double lr_t = cfg.lr_at(block.step);
  const auto t = static_cast<double>(block.step + 1);
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);

  block.m = b1 * block.m + (Scalar(1) - b1) * block.grads;
  block.v = b2 * block.v + (Scalar(1) - b2) * block.grads.cwiseAbs2();
  const auto bc1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, t));
  const auto bc2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, t));
  const auto lr = static_cast<Scalar>(lr_t);
  const auto decay = static_cast<Scalar>(1.0 - lr_t * cfg.weight_decay);

  block.values.array() =
      decay * block.values.array() -
      lr * (block.m.array() / bc1) / ((block.v.array() / bc2).sqrt() + static_cast<Scalar>(cfg.eps));
  ++block.step;
}

template <typename Scalar>
void adamw_step(std::vector<ParamBlock<Scalar>*> blocks, const OptimConfig& cfg) {
  for (auto* b : blocks)
    if (!b->grads.allFinite()) throw NumericError("non-finite gradient in optimizer step");
  for (auto* b : blocks) adamw_step(*b, cfg);
}

struct GradientCheckOptions {
  double h = 1e-5;
  // Number of coordinates checked; 0 checks every coordinate.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

// Central-difference check of an analytic gradient. Returns the maximum over
// the checked coordinates of |analytic - numeric| / max(1, |numeric|).
inline double check_gradient(const std::function<double(const Eigen::VectorXd&)>& loss_fn,
                             const Eigen::VectorXd& params, const Eigen::VectorXd& analytic,
                             const GradientCheckOptions& opt = {}) {
  if (params.size() != analytic.size()) throw ShapeError("check_gradient: size mismatch");
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) coords[static_cast<std::size_t>(i)] = i;
  if (opt.max_coords != 0 && opt.max_coords < coords.size()) {
    Rng rng(opt.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opt.max_coords);
  }
  Eigen::VectorXd theta = params;
  double worst = 0.0;
  for (auto i : coords) {
    const double orig = theta[i];
    theta[i] = orig + opt.h;
    const double up = loss_fn(theta);
    theta[i] = orig - opt.h;
    const double down = loss_fn(theta);
    theta[i] = orig;
    const double numeric = (up - down) / (2.0 * opt.h);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace dial
