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
#include <span>
#include <vector>

namespace chainreg {

namespace adapt_ml_prod {

inline constexpr double kMaxRate = 0.5;

// One Adapt-ML-Prod step for a single expert with normalized instantaneous
// regret r in [-1, 1]. The potential is kept as a logarithm:
//   log P <- (eta' / eta) (log P + log(1 + eta r)),
//   eta'  =  min(1/2, sqrt(log N / (1 + sum_s r_s^2))).
// The unnormalized weight of the expert is eta' * P.
inline void step(double& log_potential, double& rate, double& sum_squares, double regret,
                 double log_experts) {
  sum_squares += regret * regret;
  const double next_rate = std::fmin(kMaxRate, std::sqrt(log_experts / (1.0 + sum_squares)));
  log_potential = (next_rate / rate) * (log_potential + std::log1p(rate * regret));
  rate = next_rate;
}

inline double log_weight(double log_potential, double rate) {
  return std::log(rate) + log_potential;
}

}  // namespace adapt_ml_prod

// Internal weights of a second-order experts algorithm (Adapt-ML-Prod).
//
// Instantaneous regrets <g, w> - g_i are divided by `regret_scale` (2 G B for
// gradients bounded by G B) and clamped into [-1, 1]; clamps are counted.
class SleepingWeights {
 public:
  SleepingWeights(std::size_t num_experts, double lipschitz, double target_bound = 1.0);

  std::size_t size() const { return log_potential_.size(); }
  std::vector<double> tilde_weights() const;
  void update(std::span<const double> gradients);

  double rate(std::size_t i) const { return rate_[i]; }
  double sum_squares(std::size_t i) const { return sum_squares_[i]; }
  double log_potential(std::size_t i) const { return log_potential_[i]; }
  double regret_scale() const { return regret_scale_; }
  double lipschitz() const { return lipschitz_; }
  std::int64_t clamped() const { return clamped_; }

 private:
  double lipschitz_;
  double regret_scale_;
  double log_experts_;
  std::vector<double> log_potential_;
  std::vector<double> rate_;
  std::vector<double> sum_squares_;
  std::int64_t clamped_ = 0;
};

// Restricts weights to the awake experts and renormalizes them. Throws
// InvariantError when `active` is empty or carries no mass.
std::vector<double> sleeping_transform(std::span<const double> tilde_weights,
                                       std::span<const std::size_t> active);

// Normalizes log-weights into a probability vector (max-shifted).
std::vector<double> softmax(std::span<const double> log_weights);

struct WeightRound {
  std::vector<double> gradients;
  std::vector<double> tilde_weights;
};

// Instance constants of the certificate
//   sum_t (<g_t, w_t> - g_{i,t}) <= C3 sqrt(log N sum_t (<g_t, w_t> - g_{i,t})^2) + C4 G.
inline constexpr double kSleepingC3 = 4.0;
double sleeping_c4(std::int64_t horizon);

// Right-hand side of the certificate for expert i over a recorded history.
double sw_regret_certificate(std::span<const WeightRound> history, std::size_t expert,
                             double lipschitz);
// Left-hand side: realized regret of the weights against expert i.
double sw_realized_regret(std::span<const WeightRound> history, std::size_t expert);

}  // namespace chainreg
