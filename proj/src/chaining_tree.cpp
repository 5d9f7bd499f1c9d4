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

#include "chainreg/chaining_tree.hpp"

#include <array>
#include <cmath>

#include "chainreg/errors.hpp"

namespace chainreg {

namespace {

constexpr int kMaxDepth = 64;

void check_depth(int depth, const BoxDomain& domain) {
  if (depth < 1) throw ConfigError("chaining tree depth must be >= 1");
  if (depth > kMaxDepth || domain.dimension() * (depth - 1) > NodeAddress::kMaxPathBits)
    throw SizeError("chaining tree too deep for packed addresses");
}

}  // namespace

ChainingTree::ChainingTree(BoxDomain domain, int depth, double root_init, double lipschitz,
                           double initial_wealth)
    : domain_(std::move(domain)),
      depth_(depth),
      root_init_(root_init),
      lipschitz_(lipschitz),
      initial_wealth_(initial_wealth) {
  domain_.validate();
  check_depth(depth_, domain_);
  if (!(lipschitz > 0.0)) throw ConfigError("chaining tree needs a positive gradient bound G");
  if (!(initial_wealth > 0.0)) throw ConfigError("chaining tree needs positive initial wealth");
}

CoinBetting ChainingTree::fresh_node(const NodeAddress& address) const {
  return CoinBetting(address.is_root() ? root_init_ : 0.0, lipschitz_, initial_wealth_);
}

double ChainingTree::predict(std::span<const double> x) const {
  std::array<NodeAddress, kMaxDepth> path;
  path_of(domain_, x, depth_, path);
  double sum = 0.0;
  for (int i = 0; i < depth_; ++i) {
    auto it = nodes_.find(path[i].key());
    if (it != nodes_.end()) {
      sum += it->second.predict();
    } else if (i == 0) {
      sum += root_init_;
    }
  }
  return sum;
}

void ChainingTree::update(std::span<const double> x, double loss_derivative) {
  std::array<NodeAddress, kMaxDepth> path;
  path_of(domain_, x, depth_, path);
  if (loss_derivative == 0.0) return;
  for (int i = 0; i < depth_; ++i) {
    auto it = nodes_.find(path[i].key());
    if (it == nodes_.end()) it = nodes_.emplace(path[i].key(), fresh_node(path[i])).first;
    it->second.step(loss_derivative);
  }
}

const CoinBetting* ChainingTree::node(const NodeAddress& address) const {
  auto it = nodes_.find(address.key());
  return it == nodes_.end() ? nullptr : &it->second;
}

double ChainingTree::node_value(const NodeAddress& address) const {
  if (const CoinBetting* n = node(address)) return n->predict();
  return address.is_root() ? root_init_ : 0.0;
}

void ChainingTree::materialize_all() {
  const std::uint64_t total = complete_tree_size(depth_, domain_.dimension());
  if (total > (std::uint64_t{1} << 20)) throw SizeError("refusing to materialize > 2^20 nodes");
  const int d = domain_.dimension();
  std::vector<NodeAddress> level{NodeAddress::root(d)};
  for (int m = 1; m <= depth_; ++m) {
    std::vector<NodeAddress> next;
    for (const NodeAddress& a : level) {
      nodes_.try_emplace(a.key(), fresh_node(a));
      if (m < depth_) {
        for (unsigned c = 0; c < (1u << d); ++c) next.push_back(a.child(c));
      }
    }
    level = std::move(next);
  }
}

std::int64_t ChainingTree::clamped_gradients() const {
  std::int64_t total = 0;
  for (const auto& [key, node] : nodes_) total += node.clamped();
  return total;
}

GlobalGradientTree::GlobalGradientTree(BoxDomain domain, int depth, double scale)
    : domain_(std::move(domain)), depth_(depth), scale_(scale) {
  domain_.validate();
  check_depth(depth_, domain_);
  if (!(scale > 0.0)) throw ConfigError("gradient descent scale must be positive");
}

double GlobalGradientTree::predict(std::span<const double> x) const {
  std::array<NodeAddress, kMaxDepth> path;
  path_of(domain_, x, depth_, path);
  double sum = 0.0;
  for (int i = 0; i < depth_; ++i) {
    auto it = nodes_.find(path[i].key());
    if (it != nodes_.end()) sum += it->second;
  }
  return sum;
}

void GlobalGradientTree::update(std::span<const double> x, double loss_derivative) {
  std::array<NodeAddress, kMaxDepth> path;
  path_of(domain_, x, depth_, path);
  // The global gradient has `depth` equal nonzero coordinates.
  sum_squares_ += static_cast<double>(depth_) * loss_derivative * loss_derivative;
  if (sum_squares_ == 0.0) return;
  const double rate = scale_ / std::sqrt(sum_squares_);
  for (int i = 0; i < depth_; ++i) nodes_[path[i].key()] -= rate * loss_derivative;
}

}  // namespace chainreg
