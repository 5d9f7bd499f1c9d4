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

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace chainreg {

// Axis-aligned box X = prod_i [lower_i, upper_i] in R^d.
struct BoxDomain {
  std::vector<double> lower;
  std::vector<double> upper;

  static BoxDomain unit(int dimension);
  static BoxDomain interval(double lo, double hi);

  int dimension() const { return static_cast<int>(lower.size()); }
  // Sup-norm diameter |X| = max_i (upper_i - lower_i).
  double diameter() const;
  bool contains(std::span<const double> x) const;
  // Throws ConfigError unless upper_i > lower_i for every axis.
  void validate() const;
};

// Identifies one cell of the regular 2^d-ary dyadic partition of a box.
//
// The child indices along the path from the root are packed root-first into
// `code`, d bits per level; bit i of a child index is 1 iff the point lies in
// the upper half of axis i. The root has level 1 and code 0.
struct NodeAddress {
  std::uint8_t level = 1;
  std::uint8_t dim = 1;
  std::uint64_t code = 0;

  static constexpr int kMaxPathBits = 63;

  static NodeAddress root(int dimension);
  static NodeAddress from_path(int dimension, std::span<const unsigned> path);

  std::vector<unsigned> path() const;
  NodeAddress child(unsigned index) const;
  NodeAddress parent() const;
  bool is_root() const { return level == 1; }
  // Last child index on the path (0 for the root).
  unsigned last_index() const;
  bool is_ancestor_of(const NodeAddress& other) const;

  // Unique across levels: the code with a sentinel bit above it.
  std::uint64_t key() const { return (std::uint64_t{1} << (dim * (level - 1))) | code; }
  // Breadth-first index in a complete tree (root = 0).
  std::uint64_t bfs_index() const;

  friend auto operator<=>(const NodeAddress&, const NodeAddress&) = default;
};

// Half-open box, closed on the faces it shares with the upper faces of the
// domain it was cut from.
struct Cell {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> upper_closed;

  double diameter() const;
  bool contains(std::span<const double> x) const;
  BoxDomain as_domain() const { return {lower, upper}; }
};

// Cells containing `x`, from the root down to `max_level`. Throws DomainError
// when x lies outside the domain.
std::vector<NodeAddress> path_of(const BoxDomain& domain, std::span<const double> x,
                                 int max_level);

// Allocation-free variant: writes max_level addresses into `out`.
void path_of(const BoxDomain& domain, std::span<const double> x, int max_level,
             std::span<NodeAddress> out);

Cell cell_of(const BoxDomain& domain, const NodeAddress& address);

// max(1, ceil(log2(T) / d)): the smallest depth with 2^(depth d) >= T.
int depth_for_horizon(std::int64_t horizon, int dimension);

// Number of nodes in a complete 2^d-ary tree with `depth` levels.
std::uint64_t complete_tree_size(int depth, int dimension);

}  // namespace chainreg
