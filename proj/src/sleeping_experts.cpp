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

#include "chainreg/sleeping_experts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainreg/errors.hpp"

namespace chainreg {

SleepingWeights::SleepingWeights(std::size_t num_experts, double lipschitz, double target_bound)
    : lipschitz_(lipschitz),
      regret_scale_(2.0 * lipschitz * target_bound),
      log_experts_(std::log(static_cast<double>(num_experts))),
      log_potential_(num_experts, 0.0),
      rate_(num_experts, adapt_ml_prod::kMaxRate),
      sum_squares_(num_experts, 0.0) {
  if (num_experts == 0) throw ConfigError("need at least one expert");
  if (!(lipschitz > 0.0)) throw ConfigError("weights need a positive gradient bound G");
  if (!(target_bound > 0.0)) throw ConfigError("weights need a positive target bound B");
}

std::vector<double> SleepingWeights::tilde_weights() const {
  std::vector<double> lw(size());
  for (std::size_t i = 0; i < size(); ++i)
    lw[i] = adapt_ml_prod::log_weight(log_potential_[i], rate_[i]);
  return softmax(lw);
}

void SleepingWeights::update(std::span<const double> gradients) {
  if (gradients.size() != size()) throw DomainError("gradient vector has the wrong size");
  // A single expert always holds all the mass (and log N = 0 would zero its rate).
  if (size() == 1) return;
  const std::vector<double> w = tilde_weights();
  double mixed = 0.0;
  for (std::size_t i = 0; i < size(); ++i) mixed += gradients[i] * w[i];
  for (std::size_t i = 0; i < size(); ++i) {
    double r = (mixed - gradients[i]) / regret_scale_;
    if (r > 1.0 || r < -1.0) {
      r = std::clamp(r, -1.0, 1.0);
      ++clamped_;
    }
    adapt_ml_prod::step(log_potential_[i], rate_[i], sum_squares_[i], r, log_experts_);
  }
}

std::vector<double> softmax(std::span<const double> log_weights) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) top = std::max(top, v);
  std::vector<double> out(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(log_weights[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> sleeping_transform(std::span<const double> tilde_weights,
                                       std::span<const std::size_t> active) {
  if (active.empty()) throw InvariantError("sleeping transform needs at least one awake expert");
  double mass = 0.0;
  for (std::size_t i : active) {
    if (i >= tilde_weights.size()) throw DomainError("awake expert index out of range");
    mass += tilde_weights[i];
  }
  if (!(mass > 0.0)) throw InvariantError("awake experts carry no weight");
  std::vector<double> w(tilde_weights.size(), 0.0);
  for (std::size_t i : active) w[i] = tilde_weights[i] / mass;
  return w;
}

double sleeping_c4(std::int64_t horizon) {
  const double t = std::max<double>(3.0, static_cast<double>(horizon));
  return 8.0 * (1.0 + std::log(std::log(t)));
}

namespace {

double instantaneous(const WeightRound& round, std::size_t expert) {
  double mixed = 0.0;
  for (std::size_t j = 0; j < round.gradients.size(); ++j)
    mixed += round.gradients[j] * round.tilde_weights[j];
  return mixed - round.gradients[expert];
}

}  // namespace

double sw_regret_certificate(std::span<const WeightRound> history, std::size_t expert,
                             double lipschitz) {
  double squares = 0.0;
  std::size_t n = 0;
  for (const WeightRound& round : history) {
    const double r = instantaneous(round, expert);
    squares += r * r;
    n = round.gradients.size();
  }
  const double log_n = n > 0 ? std::log(static_cast<double>(n)) : 0.0;
  return kSleepingC3 * std::sqrt(log_n * squares) +
         sleeping_c4(static_cast<std::int64_t>(history.size())) * lipschitz;
}

double sw_realized_regret(std::span<const WeightRound> history, std::size_t expert) {
  double total = 0.0;
  for (const WeightRound& round : history) total += instantaneous(round, expert);
  return total;
}

}  // namespace chainreg
