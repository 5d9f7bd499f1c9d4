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

#include <optional>
#include <string>
#include <string_view>

namespace chainreg {

enum class LossKind { kSquare, kAbsolute, kPinball };

// A convex loss together with the constants the learners rely on.
//
// `target_bound` (B) is the half-width of the range [-B, B] that contains the
// loss minimizer; `lipschitz` (G) bounds |loss'| on the predictions we make;
// `exp_concavity` (eta) is set only when exp(-eta * loss) is concave there.
struct LossSpec {
  LossKind kind = LossKind::kSquare;
  double tau = 0.5;  // pinball only
  double target_bound = 1.0;
  double lipschitz = 4.0;
  std::optional<double> exp_concavity;
};

struct LossConstants {
  double lipschitz;
  std::optional<double> exp_concavity;
};

// Standard constants: square -> (4B, 1/(8B^2)), absolute -> (1, none),
// pinball(tau) -> (max(tau, 1 - tau), none).
LossConstants default_constants(LossKind kind, double target_bound, double tau = 0.5);

// Builds a validated spec with default constants.
LossSpec make_loss(LossKind kind, double target_bound, double tau = 0.5);

// Parses `square`, `absolute` or `pinball:<tau>`.
LossSpec parse_loss(std::string_view text, double target_bound);

std::string loss_name(const LossSpec& spec);

double loss_value(const LossSpec& spec, double prediction, double target);

// A subgradient in the prediction. At the kink of absolute/pinball losses the
// returned subgradient is 0.
double loss_grad(const LossSpec& spec, double prediction, double target);

// min(B, max(-B, value)).
inline double clip(double value, double bound) {
  return value > bound ? bound : (value < -bound ? -bound : value);
}

}  // namespace chainreg
