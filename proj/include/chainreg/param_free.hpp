// Copyright 2026 The chainreg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>

namespace chainreg {

namespace kt {

// Offset of the Krichevsky-Trofimov bet from its base point:
//   theta - theta_1 = -grad_sum * wealth / (G^2 (t + 1)).
// Shared by CoinBetting and the batched node storage of the locally adaptive
// learner so both produce bit-identical iterates.
inline double offset(double grad_sum, double wealth, std::int64_t steps, double lipschitz) {
  return -grad_sum * wealth / (lipschitz * lipschitz * static_cast<double>(steps + 1));
}

// One update of (grad_sum, wealth) with an already clamped gradient.
inline void advance(double& grad_sum, double& wealth, std::int64_t steps, double lipschitz,
                    double gradient) {
  wealth -= gradient * offset(grad_sum, wealth, steps, lipschitz);
  grad_sum += gradient;
}

}  // namespace kt

// Parameter-free one-dimensional learner (KT coin betting).
//
// Predicts theta_{t+1} = theta_1 + beta_t * W_t with the betting fraction
// beta_t = -sum_s g_s / (G^2 (t + 1)). Since |beta_t g| < 1 for |g| <= G the
// wealth stays positive. Gradients outside [-G, G] are clamped and counted;
// zero gradients are skipped entirely, so `steps` counts nonzero rounds only.
class CoinBetting {
 public:
  CoinBetting(double base, double lipschitz, double initial_wealth = 1.0);

  double predict() const { return base_ + kt::offset(grad_sum_, wealth_, steps_, lipschitz_); }
  void step(double gradient);

  double base() const { return base_; }
  double grad_sum() const { return grad_sum_; }
  double wealth() const { return wealth_; }
  std::int64_t steps() const { return steps_; }
  double lipschitz() const { return lipschitz_; }
  double initial_wealth() const { return initial_wealth_; }
  std::int64_t clamped() const { return clamped_; }

 private:
  double base_;
  double lipschitz_;
  double initial_wealth_;
  double grad_sum_ = 0.0;
  double wealth_;
  std::int64_t steps_ = 0;
  std::int64_t clamped_ = 0;
};

// Instance constants for which the KT bettor satisfies
//   sum_t g_t (theta_t - u) <= |u - theta_1| (C1 sqrt(sum_t g_t^2) + C2 G).
// Validated empirically by the property suite, not proved.
inline double coin_betting_c1(std::int64_t horizon, double comparator_distance) {
  return 3.0 * std::sqrt(std::log(1.0 + 20.0 * static_cast<double>(horizon) *
                                            (1.0 + comparator_distance)));
}
inline double coin_betting_c2(double initial_wealth, double lipschitz) {
  return 3.0 * (1.0 + initial_wealth / lipschitz);
}

// theta <- theta - D / sqrt(sum_s g_s^2) * g. Used by the global baseline only.
class AdaptiveGradientDescent {
 public:
  explicit AdaptiveGradientDescent(double theta = 0.0, double scale = 1.0);

  double predict() const { return theta_; }
  void step(double gradient);

  double sum_squares() const { return sum_squares_; }

 private:
  double theta_;
  double scale_;
  double sum_squares_ = 0.0;
};

}  // namespace chainreg
