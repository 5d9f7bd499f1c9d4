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
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "chainreg/dyadic_tree.hpp"
#include "chainreg/losses.hpp"

namespace chainreg {

// Uniform grid Gamma = {-B + k eps : k = 0..K-1} with K = ceil(2B / eps).
struct GridSpec {
  double bound = 1.0;
  double epsilon = 1.0;
  int size = 2;

  static GridSpec for_horizon(std::int64_t horizon, double bound);
  static GridSpec with_precision(double bound, double epsilon);
  double value(int k) const { return -bound + k * epsilon; }
};

enum class RootMode {
  kGrid,            // K chaining trees per core node, roots started on the grid
  kFollowTheLeader  // one tree per core node, root = running mean of targets (square loss)
};

struct LocallyAdaptiveOptions {
  RootMode mode = RootMode::kGrid;
  int core_depth = 0;  // 0: depth_for_horizon(T, d)
  int ct_depth = 0;    // 0: depth_for_horizon(T, d)
  double initial_wealth = 1.0;
  bool eager = false;  // materialize every expert up front (small trees only)
  std::size_t memory_budget_bytes = std::size_t{3} << 30;
};

// Per-round output of the locally adaptive learner, including the quantities
// the identity checks need.
struct LocalRound {
  double prediction = 0.0;       // f_t(x_t), always in [-B, B]
  double loss_derivative = 0.0;  // s = loss'(f_t(x_t))
  // Mass of the global internal weights on the awake experts.
  double active_mass = 0.0;
  // |sum of the sleeping weights - 1|.
  double weight_sum_error = 0.0;
  // max over experts of |(<g, w> - g_i) - (<g, w~> - g_i) 1{i awake}|.
  double identity_error = 0.0;
  std::int64_t coin_steps = 0;  // node-level optimizer calls this round
};

// Locally adaptive online regression on a core dyadic tree.
//
// Every core node n hosts K chaining trees rooted at the cell of n whose root
// parameters start on the grid. Each round the core path of x_t selects the
// awake experts, their clipped predictions are mixed with the renormalized
// internal weights, the weights take one second-order step on the linearized
// meta-gradient, and every awake tree takes one step with the derivative of
// the loss at its own unclipped prediction.
//
// Storage is lazy: a core node's experts exist once x_t first falls into its
// cell. The K trees of a node are visited on the same rounds, so they share one
// node index with K-wide parameter columns.
class LocallyAdaptive {
 public:
  LocallyAdaptive(BoxDomain domain, std::int64_t horizon, LossSpec loss,
                  LocallyAdaptiveOptions options = {});
  ~LocallyAdaptive();
  LocallyAdaptive(LocallyAdaptive&&) noexcept;
  LocallyAdaptive& operator=(LocallyAdaptive&&) noexcept;

  double predict(std::span<const double> x) const;

  // One full round on (x, y).
  LocalRound update(std::span<const double> x, double target);

  // Meta-gradient over all experts for the round at (x, y), taken at the
  // current state: s f_{n,k}(x) for awake experts and s f_t(x) otherwise.
  std::vector<double> gradient_vector(std::span<const double> x, double target) const;
  // Internal weights over all experts (dense; small trees only).
  std::vector<double> tilde_weights() const;
  // Expert indices awake at x, in core-path order then k.
  std::vector<std::size_t> awake_experts(std::span<const double> x) const;
  // Unclipped prediction of expert (core node, k) at x; x must lie in the node's cell.
  double expert_raw_prediction(const NodeAddress& core_node, int k,
                               std::span<const double> x) const;

  std::size_t expert_index(const NodeAddress& core_node, int k) const;

  const GridSpec& grid() const { return grid_; }
  const LossSpec& loss() const { return loss_; }
  const BoxDomain& domain() const { return domain_; }
  RootMode mode() const { return mode_; }
  // True when follow-the-leader roots were requested for a loss other than the
  // square loss and the learner fell back to grid roots.
  bool fell_back_to_grid() const { return fell_back_to_grid_; }
  int core_depth() const { return core_depth_; }
  int ct_depth() const { return ct_depth_; }
  int experts_per_node() const { return experts_per_node_; }
  std::uint64_t core_size() const { return core_size_; }
  std::uint64_t num_experts() const { return core_size_ * experts_per_node_; }
  std::size_t materialized_core_nodes() const { return live_blocks_.size(); }
  std::size_t materialized_tree_nodes() const;
  std::size_t memory_bytes() const { return bytes_; }
  std::int64_t clamped_gradients() const { return clamped_gradients_; }
  std::int64_t clamped_regrets() const { return clamped_regrets_; }

 private:
  struct Block;
  struct Evaluation;

  Block& block_for(const NodeAddress& core_node);
  const Block* find_block(const NodeAddress& core_node) const;
  void evaluate(std::span<const double> x, Evaluation& out) const;
  void materialize_all();
  double log_normalizer() const;

  BoxDomain domain_;
  LossSpec loss_;
  RootMode mode_;
  bool fell_back_to_grid_ = false;
  GridSpec grid_;
  int core_depth_;
  int ct_depth_;
  int experts_per_node_;
  std::uint64_t core_size_;
  double initial_wealth_;
  double log_experts_;
  std::size_t memory_budget_;
  std::size_t bytes_ = 0;
  std::int64_t clamped_gradients_ = 0;
  std::int64_t clamped_regrets_ = 0;

  // Indexed by breadth-first core node index; null until first visited.
  std::vector<std::unique_ptr<Block>> blocks_;
  std::vector<Block*> live_blocks_;
  std::unique_ptr<Evaluation> scratch_;
};

}  // namespace chainreg
