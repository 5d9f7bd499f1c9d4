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

#include "chainreg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "chainreg/errors.hpp"

namespace chainreg {

double pruning_count(int depth, int dimension) {
  if (depth < 1) throw ConfigError("core depth must be >= 1");
  double count = 1.0;
  const double arity = std::ldexp(1.0, dimension);
  for (int h = 2; h <= depth; ++h) count = 1.0 + std::pow(count, arity);
  return count;
}

namespace {

std::vector<std::vector<NodeAddress>> prunings_below(const NodeAddress& node, int remaining) {
  std::vector<std::vector<NodeAddress>> out;
  out.push_back({node});
  if (remaining <= 1) return out;
  // Cartesian product of the children's prunings, first child varying slowest.
  std::vector<std::vector<NodeAddress>> combos{{}};
  for (unsigned c = 0; c < (1u << node.dim); ++c) {
    const auto child = prunings_below(node.child(c), remaining - 1);
    std::vector<std::vector<NodeAddress>> next;
    next.reserve(combos.size() * child.size());
    for (const auto& prefix : combos) {
      for (const auto& tail : child) {
        std::vector<NodeAddress> merged = prefix;
        merged.insert(merged.end(), tail.begin(), tail.end());
        next.push_back(std::move(merged));
      }
    }
    combos = std::move(next);
  }
  for (auto& c : combos) out.push_back(std::move(c));
  return out;
}

}  // namespace

std::vector<Pruning> enumerate_prunings(int depth, int dimension, double max_count) {
  const double count = pruning_count(depth, dimension);
  if (count > max_count) {
    throw SizeError("enumeration would produce " + std::to_string(count) +
                    " prunings (limit " + std::to_string(max_count) + ")");
  }
  std::vector<Pruning> out;
  for (auto& leaves : prunings_below(NodeAddress::root(dimension), depth))
    out.push_back(Pruning{std::move(leaves)});
  return out;
}

double local_holder_constant(const std::function<double(std::span<const double>)>& f,
                             const Cell& cell, double alpha, int grid_points) {
  if (grid_points < 2) throw ConfigError("need at least two grid points per axis");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  const int d = static_cast<int>(cell.lower.size());
  std::uint64_t total = 1;
  for (int i = 0; i < d; ++i) {
    total *= static_cast<std::uint64_t>(grid_points);
    if (total > 20000) throw SizeError("holder grid limited to 20000 points");
  }
  std::vector<std::vector<double>> points(total, std::vector<double>(d));
  std::vector<double> values(total);
  for (std::uint64_t p = 0; p < total; ++p) {
    std::uint64_t rest = p;
    for (int i = 0; i < d; ++i) {
      const auto idx = static_cast<double>(rest % grid_points);
      rest /= grid_points;
      points[p][i] = cell.lower[i] + (cell.upper[i] - cell.lower[i]) * idx / (grid_points - 1);
    }
    values[p] = f(points[p]);
  }
  double best = 0.0;
  for (std::uint64_t a = 0; a < total; ++a) {
    for (std::uint64_t b = a + 1; b < total; ++b) {
      double dist = 0.0;
      for (int i = 0; i < d; ++i) dist = std::max(dist, std::abs(points[a][i] - points[b][i]));
      if (dist == 0.0) continue;
      best = std::max(best, std::abs(values[a] - values[b]) / std::pow(dist, alpha));
    }
  }
  return best;
}

double phi(double u) {
  if (u == 0.0) throw DomainError("Phi is undefined at 0");
  return 1.0 / std::abs(std::exp2(u) - 1.0);
}

double BoundConstants::psi1(int dimension, double alpha) const {
  return phi(dimension / 2.0 - alpha) * c1 + 4.0 * c2 + 1.0;
}

double BoundConstants::psi2(int dimension) const { return c1 / dimension + 4.0 * c2 + 1.0; }

double BoundConstants::beta1(std::int64_t horizon, std::uint64_t core_size) const {
  const double t = static_cast<double>(horizon);
  return 2.0 * c3 * lipschitz *
         std::sqrt(std::log(2.0 * target_bound * t * static_cast<double>(core_size)));
}

double BoundConstants::beta2(std::int64_t horizon) const {
  const double t = static_cast<double>(horizon);
  return lipschitz * (c1 / 2.0 + c2 / (2.0 * std::sqrt(t)) + c4);
}

double BoundConstants::beta3(std::int64_t horizon, std::uint64_t core_size) const {
  if (!(mixing_rate > 0.0)) throw ConfigError("exp-concave bound needs a positive mixing rate");
  const double t = static_cast<double>(horizon);
  return c3 * c3 * std::log(2.0 * target_bound * t * static_cast<double>(core_size)) /
             (2.0 * mixing_rate) +
         c4 * lipschitz + lipschitz * (c1 + c2 / std::sqrt(t)) / 2.0;
}

double default_mixing_rate(double lipschitz, double exp_concavity) {
  return std::min(1.0 / lipschitz, exp_concavity) / 2.0;
}

namespace {

enum class Regime { kBelow, kCritical, kAbove };

Regime regime(int dimension, double alpha) {
  const double twice = 2.0 * alpha;
  if (std::abs(dimension - twice) <= 1e-12) return Regime::kCritical;
  return dimension < twice ? Regime::kBelow : Regime::kAbove;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
}

}  // namespace

double theorem1_bound(int dimension, double alpha, double holder, double diameter,
                      double target_bound, double lipschitz, double c1, double c2,
                      std::int64_t horizon) {
  check_alpha(alpha);
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  const double t = static_cast<double>(horizon);
  const double estimation = lipschitz * target_bound * (c1 * std::sqrt(t) + c2);
  double approx = 0.0;
  switch (regime(dimension, alpha)) {
    case Regime::kBelow:
      approx = (phi(dimension / 2.0 - alpha) * c1 + 4.0 * c2 + 1.0) * std::sqrt(t);
      break;
    case Regime::kCritical:
      approx = (c1 / dimension * std::log2(t) + 4.0 * c2 + 1.0) * std::sqrt(t);
      break;
    case Regime::kAbove:
      approx = (phi(dimension / 2.0 - alpha) * c1 + 4.0 * c2 + 1.0) *
               std::pow(t, 1.0 - alpha / dimension);
      break;
  }
  return estimation + lipschitz * holder * std::pow(diameter, alpha) * approx;
}

namespace {

void check_profile(const Pruning& pruning, const LeafProfile& profile) {
  if (profile.holder.size() != pruning.leaves.size() ||
      profile.counts.size() != pruning.leaves.size())
    throw DomainError("leaf profile does not match the pruning");
}

}  // namespace

double theorem2_bound(const Pruning& pruning, const LeafProfile& profile,
                      const BoundConstants& constants, int dimension, double alpha,
                      double diameter, std::int64_t horizon, std::uint64_t core_size,
                      bool exp_concave) {
  check_alpha(alpha);
  check_profile(pruning, profile);
  std::int64_t visits = 0;
  for (std::int64_t c : profile.counts) visits += c;
  if (visits != horizon) throw DomainError("leaf visit counts must sum to T");

  const Regime r = regime(dimension, alpha);
  double leaf_sum = 0.0;
  for (std::size_t i = 0; i < pruning.leaves.size(); ++i) {
    const double holder = profile.holder[i];
    if (holder == 0.0) continue;
    const double n = static_cast<double>(profile.counts[i]);
    double term = 0.0;
    switch (r) {
      case Regime::kBelow:
        term = constants.psi1(dimension, alpha) * std::sqrt(n);
        break;
      case Regime::kCritical:
        term = n > 0 ? constants.psi2(dimension) * std::log2(n) * std::sqrt(n) : 0.0;
        break;
      case Regime::kAbove:
        term = constants.psi1(dimension, alpha) * std::pow(n, 1.0 - alpha / dimension);
        break;
    }
    leaf_sum += holder * std::exp2(-alpha * (pruning.leaves[i].level - 1)) * term;
  }
  const double leaves = static_cast<double>(pruning.leaves.size());
  const double approx = constants.lipschitz * std::pow(diameter, alpha) * leaf_sum;
  if (exp_concave) return constants.beta3(horizon, core_size) * leaves + approx;
  const double t = static_cast<double>(horizon);
  return constants.beta1(horizon, core_size) * std::sqrt(t * leaves) +
         constants.beta2(horizon) * leaves + approx;
}

double corollary1_bound(const Pruning& pruning, const LeafProfile& profile, int dimension,
                        double alpha, double diameter, bool exp_concave) {
  check_alpha(alpha);
  check_profile(pruning, profile);
  if (dimension > 2.0 * alpha + 1e-12) throw DomainError("bound requires d <= 2 alpha");
  double total = 0.0;
  for (std::size_t i = 0; i < pruning.leaves.size(); ++i) {
    const double scale =
        profile.holder[i] * std::pow(cell_diameter(diameter, pruning.leaves[i]), alpha);
    const double n = static_cast<double>(profile.counts[i]);
    if (exp_concave) {
      total += std::min(scale * std::sqrt(n),
                        std::pow(scale, 2.0 / (2.0 * alpha + 1.0)) *
                            std::pow(n, 1.0 / (2.0 * alpha + 1.0)));
    } else {
      total += std::pow(scale, 1.0 / (2.0 * alpha)) * std::sqrt(n);
    }
  }
  return total;
}

double average_holder_constant(const Pruning& pruning, const LeafProfile& profile, double alpha,
                               double diameter) {
  check_alpha(alpha);
  check_profile(pruning, profile);
  double total = 0.0;
  for (std::size_t i = 0; i < pruning.leaves.size(); ++i) {
    total += cell_diameter(diameter, pruning.leaves[i]) * std::pow(profile.holder[i], 1.0 / alpha);
  }
  return std::pow(total / diameter, alpha);
}

double avg_holder_bound(const Pruning& pruning, const LeafProfile& profile, int dimension,
                        double alpha, double diameter, std::int64_t horizon, bool exp_concave) {
  if (dimension > 2.0 * alpha + 1e-12) throw DomainError("bound requires d <= 2 alpha");
  const double mean = average_holder_constant(pruning, profile, alpha, diameter);
  const double scale = std::pow(diameter, alpha) * mean;
  const double t = static_cast<double>(horizon);
  if (exp_concave)
    return std::pow(scale, 2.0 / (2.0 * alpha + 1.0)) * std::pow(t, 1.0 / (2.0 * alpha + 1.0));
  return std::pow(scale, 1.0 / (2.0 * alpha)) * std::sqrt(t);
}

}  // namespace chainreg
