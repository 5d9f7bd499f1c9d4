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

#include "chainreg/param_free.hpp"

#include <cmath>

#include "chainreg/errors.hpp"

namespace chainreg {

CoinBetting::CoinBetting(double base, double lipschitz, double initial_wealth)
    : base_(base), lipschitz_(lipschitz), initial_wealth_(initial_wealth), wealth_(initial_wealth) {
  if (!(lipschitz > 0.0)) throw ConfigError("coin betting needs a positive gradient bound G");
  if (!(initial_wealth > 0.0)) throw ConfigError("coin betting needs positive initial wealth");
}

void CoinBetting::step(double gradient) {
  // A zero gradient is not a round for this node: the iterate and the clock stay put.
  if (gradient == 0.0) return;
  if (gradient > lipschitz_) {
    gradient = lipschitz_;
    ++clamped_;
  } else if (gradient < -lipschitz_) {
    gradient = -lipschitz_;
    ++clamped_;
  }
  kt::advance(grad_sum_, wealth_, steps_, lipschitz_, gradient);
  ++steps_;
}

AdaptiveGradientDescent::AdaptiveGradientDescent(double theta, double scale)
    : theta_(theta), scale_(scale) {
  if (!(scale > 0.0)) throw ConfigError("gradient descent scale must be positive");
}

void AdaptiveGradientDescent::step(double gradient) {
  sum_squares_ += gradient * gradient;
  if (sum_squares_ > 0.0) theta_ -= scale_ / std::sqrt(sum_squares_) * gradient;
}

}  // namespace chainreg
