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

#include "chainreg/dyadic_tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chainreg/errors.hpp"

namespace chainreg {

BoxDomain BoxDomain::unit(int dimension) {
  if (dimension < 1) throw ConfigError("dimension must be >= 1");
  return {std::vector<double>(dimension, 0.0), std::vector<double>(dimension, 1.0)};
}

BoxDomain BoxDomain::interval(double lo, double hi) { return {{lo}, {hi}}; }

double BoxDomain::diameter() const {
  double diam = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) diam = std::max(diam, upper[i] - lower[i]);
  return diam;
}

bool BoxDomain::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

void BoxDomain::validate() const {
  if (lower.empty() || lower.size() != upper.size())
    throw ConfigError("domain bounds must be non-empty and of equal dimension");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(std::isfinite(lower[i]) && std::isfinite(upper[i]) && upper[i] > lower[i]))
      throw ConfigError("domain axis " + std::to_string(i) + " is empty or unbounded");
  }
}

NodeAddress NodeAddress::root(int dimension) {
  if (dimension < 1 || dimension > kMaxPathBits) throw ConfigError("unsupported dimension");
  NodeAddress a;
  a.dim = static_cast<std::uint8_t>(dimension);
  return a;
}

NodeAddress NodeAddress::from_path(int dimension, std::span<const unsigned> path) {
  NodeAddress a = root(dimension);
  for (unsigned idx : path) a = a.child(idx);
  return a;
}

std::vector<unsigned> NodeAddress::path() const {
  std::vector<unsigned> out(level - 1);
  const std::uint64_t mask = (std::uint64_t{1} << dim) - 1;
  for (int i = level - 2, shift = 0; i >= 0; --i, shift += dim) {
    out[i] = static_cast<unsigned>((code >> shift) & mask);
  }
  return out;
}

NodeAddress NodeAddress::child(unsigned index) const {
  if (index >= (1u << dim)) throw DomainError("child index out of range");
  if (dim * level > kMaxPathBits) throw SizeError("address too deep to pack");
  NodeAddress c = *this;
  c.level = static_cast<std::uint8_t>(level + 1);
  c.code = (code << dim) | index;
  return c;
}

NodeAddress NodeAddress::parent() const {
  if (is_root()) throw DomainError("root has no parent");
  NodeAddress p = *this;
  p.level = static_cast<std::uint8_t>(level - 1);
  p.code = code >> dim;
  return p;
}

unsigned NodeAddress::last_index() const {
  if (is_root()) return 0;
  return static_cast<unsigned>(code & ((std::uint64_t{1} << dim) - 1));
}

bool NodeAddress::is_ancestor_of(const NodeAddress& other) const {
  if (other.dim != dim || other.level < level) return false;
  return (other.code >> (dim * (other.level - level))) == code;
}

std::uint64_t NodeAddress::bfs_index() const {
  // offset = sum_{m < level} 2^{d(m-1)}
  std::uint64_t offset = 0;
  for (int m = 1; m < level; ++m) offset += std::uint64_t{1} << (dim * (m - 1));
  return offset + code;
}

double Cell::diameter() const {
  double diam = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) diam = std::max(diam, upper[i] - lower[i]);
  return diam;
}

bool Cell::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i]) return false;
    if (upper_closed[i] ? x[i] > upper[i] : x[i] >= upper[i]) return false;
  }
  return true;
}

void path_of(const BoxDomain& domain, std::span<const double> x, int max_level,
             std::span<NodeAddress> out) {
  const int d = domain.dimension();
  if (max_level < 1) throw ConfigError("max_level must be >= 1");
  if (static_cast<int>(out.size()) < max_level) throw SizeError("path buffer too small");
  if (d * (max_level - 1) > NodeAddress::kMaxPathBits) throw SizeError("path too deep to pack");
  if (!domain.contains(x)) throw DomainError("point outside the input domain");

  // Small fixed buffers cover every dimension the packing allows.
  double lo[NodeAddress::kMaxPathBits];
  double hi[NodeAddress::kMaxPathBits];
  for (int i = 0; i < d; ++i) {
    lo[i] = domain.lower[i];
    hi[i] = domain.upper[i];
  }
  NodeAddress a = NodeAddress::root(d);
  out[0] = a;
  for (int level = 2; level <= max_level; ++level) {
    unsigned idx = 0;
    for (int i = 0; i < d; ++i) {
      const double mid = 0.5 * (lo[i] + hi[i]);
      if (x[i] >= mid) {
        idx |= 1u << i;
        lo[i] = mid;
      } else {
        hi[i] = mid;
      }
    }
    a.level = static_cast<std::uint8_t>(level);
    a.code = (a.code << d) | idx;
    out[level - 1] = a;
  }
}

std::vector<NodeAddress> path_of(const BoxDomain& domain, std::span<const double> x,
                                 int max_level) {
  if (max_level < 1) throw ConfigError("max_level must be >= 1");
  std::vector<NodeAddress> out(max_level);
  path_of(domain, x, max_level, out);
  return out;
}

Cell cell_of(const BoxDomain& domain, const NodeAddress& address) {
  const int d = domain.dimension();
  if (address.dim != d) throw DomainError("address dimension does not match the domain");
  Cell cell{domain.lower, domain.upper, std::vector<bool>(d, true)};
  const std::vector<unsigned> path = address.path();
  for (unsigned idx : path) {
    for (int i = 0; i < d; ++i) {
      const double mid = 0.5 * (cell.lower[i] + cell.upper[i]);
      if ((idx >> i) & 1u) {
        cell.lower[i] = mid;
      } else {
        cell.upper[i] = mid;
        cell.upper_closed[i] = false;
      }
    }
  }
  return cell;
}

int depth_for_horizon(std::int64_t horizon, int dimension) {
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  if (dimension < 1) throw ConfigError("dimension must be >= 1");
  // smallest depth with 2^(depth * d) >= T, i.e. ceil(log2(T) / d); exact in integers.
  int bits = 0;
  while ((std::int64_t{1} << bits) < horizon) ++bits;
  return std::max(1, (bits + dimension - 1) / dimension);
}

std::uint64_t complete_tree_size(int depth, int dimension) {
  if (dimension * (depth - 1) > NodeAddress::kMaxPathBits) throw SizeError("tree too large");
  std::uint64_t total = 0;
  for (int m = 1; m <= depth; ++m) total += std::uint64_t{1} << (dimension * (m - 1));
  return total;
}

}  // namespace chainreg
