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

#include "chainreg/losses.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "chainreg/errors.hpp"

namespace chainreg {

LossConstants default_constants(LossKind kind, double target_bound, double tau) {
  if (!(target_bound > 0.0)) throw ConfigError("target bound B must be positive");
  switch (kind) {
    case LossKind::kSquare:
      return {4.0 * target_bound, 1.0 / (8.0 * target_bound * target_bound)};
    case LossKind::kAbsolute:
      return {1.0, std::nullopt};
    case LossKind::kPinball:
      if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("pinball tau must lie in (0, 1)");
      return {std::max(tau, 1.0 - tau), std::nullopt};
  }
  throw ConfigError("unknown loss kind");
}

LossSpec make_loss(LossKind kind, double target_bound, double tau) {
  const LossConstants c = default_constants(kind, target_bound, tau);
  LossSpec spec;
  spec.kind = kind;
  spec.tau = tau;
  spec.target_bound = target_bound;
  spec.lipschitz = c.lipschitz;
  spec.exp_concavity = c.exp_concavity;
  return spec;
}

LossSpec parse_loss(std::string_view text, double target_bound) {
  if (text == "square") return make_loss(LossKind::kSquare, target_bound);
  if (text == "absolute") return make_loss(LossKind::kAbsolute, target_bound);
  constexpr std::string_view kPinball = "pinball:";
  if (text.substr(0, kPinball.size()) == kPinball) {
    const std::string tail(text.substr(kPinball.size()));
    std::size_t used = 0;
    double tau = 0.0;
    try {
      tau = std::stod(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tail.size()) throw ConfigError("bad pinball level: " + tail);
    return make_loss(LossKind::kPinball, target_bound, tau);
  }
  throw ConfigError("unknown loss '" + std::string(text) + "' (square | absolute | pinball:<tau>)");
}

std::string loss_name(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::kSquare:
      return "square";
    case LossKind::kAbsolute:
      return "absolute";
    case LossKind::kPinball: {
      char buf[32];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), spec.tau);
      (void)ec;
      return "pinball:" + std::string(buf, end);
    }
  }
  return "unknown";
}

double loss_value(const LossSpec& spec, double prediction, double target) {
  const double diff = prediction - target;
  switch (spec.kind) {
    case LossKind::kSquare:
      return diff * diff;
    case LossKind::kAbsolute:
      return std::abs(diff);
    case LossKind::kPinball:
      return diff < 0.0 ? -spec.tau * diff : (1.0 - spec.tau) * diff;
  }
  return 0.0;
}

double loss_grad(const LossSpec& spec, double prediction, double target) {
  const double diff = prediction - target;
  switch (spec.kind) {
    case LossKind::kSquare:
      return 2.0 * diff;
    case LossKind::kAbsolute:
      return diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    case LossKind::kPinball:
      return diff > 0.0 ? 1.0 - spec.tau : (diff < 0.0 ? -spec.tau : 0.0);
  }
  return 0.0;
}

}  // namespace chainreg
