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

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "chainreg/dyadic_tree.hpp"

namespace chainreg {

// A pruning of a core tree: the leaves of a subtree sharing its root. Leaves
// are stored in depth-first (left to right) order.
struct Pruning {
  std::vector<NodeAddress> leaves;
};

// Number of prunings of a complete 2^d-ary tree with `depth` levels:
// P(1) = 1, P(h) = 1 + P(h - 1)^(2^d). Saturates at +inf in double.
double pruning_count(int depth, int dimension);

// Every pruning exactly once, the root-only pruning first. Throws SizeError
// (reporting the count) when more than `max_count` would be produced.
std::vector<Pruning> enumerate_prunings(int depth, int dimension, double max_count = 100);

// Largest ratio |f(x) - f(x')| / ||x - x'||_inf^alpha over all pairs of a
// uniform grid with `grid_points` points per axis spanning the cell. A lower
// estimate of the local Hölder constant on that cell.
double local_holder_constant(const std::function<double(std::span<const double>)>& f,
                             const Cell& cell, double alpha, int grid_points);

// |2^u - 1|^-1; u = 0 is a DomainError.
double phi(double u);

struct BoundConstants {
  double c1 = 1.0;  // coin-betting certificate constants
  double c2 = 1.0;
  double c3 = 1.0;  // weight certificate constants
  double c4 = 1.0;
  double lipschitz = 1.0;      // G
  double target_bound = 1.0;   // B
  double mixing_rate = 0.0;    // mu in (0, min(1/G, eta) / 2]; 0 when not exp-concave

  // Phi(d/2 - alpha) C1 + 4 C2 + 1 (requires d != 2 alpha).
  double psi1(int dimension, double alpha) const;
  // C1 / d + 4 C2 + 1.
  double psi2(int dimension) const;
  double beta1(std::int64_t horizon, std::uint64_t core_size) const;
  double beta2(std::int64_t horizon) const;
  double beta3(std::int64_t horizon, std::uint64_t core_size) const;
};

// mu = min(1/G, eta) / 2.
double default_mixing_rate(double lipschitz, double exp_concavity);

// Regret bound of the single chaining tree against C^alpha(X, L).
double theorem1_bound(int dimension, double alpha, double holder, double diameter,
                      double target_bound, double lipschitz, double c1, double c2,
                      std::int64_t horizon);

// Local Hölder constants L_n(f) per leaf and per-leaf visit counts |T_n|.
struct LeafProfile {
  std::vector<double> holder;
  std::vector<std::int64_t> counts;
};

// Locally adaptive bound for one pruning (convex or exp-concave form).
double theorem2_bound(const Pruning& pruning, const LeafProfile& profile,
                      const BoundConstants& constants, int dimension, double alpha,
                      double diameter, std::int64_t horizon, std::uint64_t core_size,
                      bool exp_concave);

// Order-level bound (constants suppressed), summed over leaves with s_n = L_n |X_n|^alpha:
// s_n^(1/(2 alpha)) sqrt(|T_n|) in general, and
// min(s_n sqrt(|T_n|), s_n^(2/(2 alpha+1)) |T_n|^(1/(2 alpha+1))) for exp-concave losses.
// Requires d <= 2 alpha.
double corollary1_bound(const Pruning& pruning, const LeafProfile& profile, int dimension,
                        double alpha, double diameter, bool exp_concave);

// Size-weighted power mean of the leaf Hölder constants,
// ((1/|X|) sum_n |X_n| L_n^(1/alpha))^alpha.
double average_holder_constant(const Pruning& pruning, const LeafProfile& profile, double alpha,
                               double diameter);

// Order-level bound in terms of the averaged constant; requires d <= 2 alpha.
double avg_holder_bound(const Pruning& pruning, const LeafProfile& profile, int dimension,
                        double alpha, double diameter, std::int64_t horizon, bool exp_concave);

// Sup-norm diameter of a node's cell: |X| 2^-(level - 1).
inline double cell_diameter(double diameter, const NodeAddress& node) {
  return diameter / static_cast<double>(std::uint64_t{1} << (node.level - 1));
}

}  // namespace chainreg
