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
#include <map>
#include <span>

#include "chainreg/dyadic_tree.hpp"
#include "chainreg/param_free.hpp"

namespace chainreg {

// Online chaining tree: every dyadic cell n up to `depth` carries a parameter
// theta_n and the prediction at x is the sum of theta_n over the cells on the
// path of x. Each node runs its own coin-betting learner and all nodes on the
// path are updated with the same scalar loss derivative.
//
// Nodes are created on first update; an absent node contributes its start
// value (root_init at the root, 0 below).
class ChainingTree {
 public:
  ChainingTree(BoxDomain domain, int depth, double root_init, double lipschitz,
               double initial_wealth = 1.0);

  double predict(std::span<const double> x) const;

  // Applies one coin-betting step with `loss_derivative` to every node on the
  // path of x (creating missing nodes). Off-path nodes have zero gradient and
  // are left alone.
  void update(std::span<const double> x, double loss_derivative);

  std::size_t node_count() const { return nodes_.size(); }
  // nullptr when the node was never materialized.
  const CoinBetting* node(const NodeAddress& address) const;
  // Current parameter of a node, materialized or not.
  double node_value(const NodeAddress& address) const;
  // Creates every node of the complete tree (guarded to 2^20 nodes).
  void materialize_all();
  std::int64_t clamped_gradients() const;

  const BoxDomain& domain() const { return domain_; }
  int depth() const { return depth_; }
  double root_init() const { return root_init_; }
  double lipschitz() const { return lipschitz_; }

 private:
  CoinBetting fresh_node(const NodeAddress& address) const;

  BoxDomain domain_;
  int depth_;
  double root_init_;
  double lipschitz_;
  double initial_wealth_;
  // Keyed by NodeAddress::key(): deterministic iteration, root first.
  std::map<std::uint64_t, CoinBetting> nodes_;
};

// Baseline: one global adaptive gradient descent on the concatenated vector of
// all node parameters of a chaining tree, with the scalar rate
// D / sqrt(sum_s ||g_s||^2).
class GlobalGradientTree {
 public:
  GlobalGradientTree(BoxDomain domain, int depth, double scale);

  double predict(std::span<const double> x) const;
  void update(std::span<const double> x, double loss_derivative);
  std::size_t node_count() const { return nodes_.size(); }

 private:
  BoxDomain domain_;
  int depth_;
  double scale_;
  double sum_squares_ = 0.0;
  std::map<std::uint64_t, double> nodes_;
};

}  // namespace chainreg
