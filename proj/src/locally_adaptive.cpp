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

#include "chainreg/locally_adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "chainreg/errors.hpp"
#include "chainreg/param_free.hpp"
#include "chainreg/sleeping_experts.hpp"

namespace chainreg {

namespace {

constexpr int kMaxLevels = 64;
constexpr std::int32_t kNoSlot = -1;
const double kDefaultLogWeight = std::log(adapt_ml_prod::kMaxRate);  // eta = 1/2, P = 1

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double top = std::max(a, b);
  return top + std::log(std::exp(a - top) + std::exp(b - top));
}

}  // namespace

GridSpec GridSpec::with_precision(double bound, double epsilon) {
  if (!(bound > 0.0)) throw ConfigError("grid bound B must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("grid precision must be positive");
  GridSpec g;
  g.bound = bound;
  g.epsilon = epsilon;
  const double ratio = 2.0 * bound / epsilon;
  // Guard against ratios that are integers up to rounding (e.g. 2 / 0.5).
  const double nearest = std::round(ratio);
  const double k = std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest) ? nearest
                                                                                 : std::ceil(ratio);
  if (k > 1e8) throw SizeError("grid too fine");
  g.size = std::max(1, static_cast<int>(k));
  return g;
}

GridSpec GridSpec::for_horizon(std::int64_t horizon, double bound) {
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  return with_precision(bound, 1.0 / std::sqrt(static_cast<double>(horizon)));
}

// Experts of one core node: K internal weights and K chaining trees that
// share their node index.
struct LocallyAdaptive::Block {
  NodeAddress node;
  std::vector<double> log_potential;
  std::vector<double> rate;
  std::vector<double> sum_squares;
  double log_mass = 0.0;  // log sum_k exp(log weight_k)

  std::unordered_map<std::uint64_t, std::int32_t> slot_of;
  std::vector<double> grad_sum;  // slot * K + k
  std::vector<double> wealth;
  std::vector<std::int32_t> steps;

  std::int64_t ftl_count = 0;  // follow-the-leader root statistics
  double ftl_sum = 0.0;

  double ftl_root() const { return ftl_count > 0 ? ftl_sum / static_cast<double>(ftl_count) : 0.0; }

  void refresh_log_mass() {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rate.size(); ++k)
      top = std::max(top, adapt_ml_prod::log_weight(log_potential[k], rate[k]));
    double total = 0.0;
    for (std::size_t k = 0; k < rate.size(); ++k)
      total += std::exp(adapt_ml_prod::log_weight(log_potential[k], rate[k]) - top);
    log_mass = top + std::log(total);
  }

  std::int32_t find_slot(std::uint64_t key) const {
    auto it = slot_of.find(key);
    return it == slot_of.end() ? kNoSlot : it->second;
  }
};

struct LocallyAdaptive::Evaluation {
  NodeAddress path[kMaxLevels];
  const Block* blocks[kMaxLevels];
  std::vector<std::int32_t> slots;  // core level * ct_depth + ct level
  std::vector<double> raw;          // core level * K + k
  std::vector<double> clipped;
  std::vector<double> log_weight;
  std::vector<double> weight;
  double log_active = 0.0;
  double prediction = 0.0;
};

LocallyAdaptive::LocallyAdaptive(BoxDomain domain, std::int64_t horizon, LossSpec loss,
                                 LocallyAdaptiveOptions options)
    : domain_(std::move(domain)),
      loss_(loss),
      mode_(options.mode),
      initial_wealth_(options.initial_wealth),
      memory_budget_(options.memory_budget_bytes) {
  domain_.validate();
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  if (!(loss_.target_bound > 0.0) || !(loss_.lipschitz > 0.0))
    throw ConfigError("loss constants B and G must be positive");
  if (!(initial_wealth_ > 0.0)) throw ConfigError("initial wealth must be positive");
  // Follow-the-leader roots are the running mean, i.e. the leader for the
  // square loss only; other losses use the grid.
  if (mode_ == RootMode::kFollowTheLeader && loss_.kind != LossKind::kSquare) {
    mode_ = RootMode::kGrid;
    fell_back_to_grid_ = true;
  }
  const int d = domain_.dimension();
  const int auto_depth = depth_for_horizon(horizon, d);
  core_depth_ = options.core_depth > 0 ? options.core_depth : auto_depth;
  ct_depth_ = options.ct_depth > 0 ? options.ct_depth : auto_depth;
  if (core_depth_ < 1 || ct_depth_ < 1) throw ConfigError("tree depths must be >= 1");
  if (core_depth_ + ct_depth_ - 1 > kMaxLevels ||
      d * (core_depth_ + ct_depth_ - 2) > NodeAddress::kMaxPathBits)
    throw SizeError("core and tree depths too large for packed addresses");
  grid_ = GridSpec::for_horizon(horizon, loss_.target_bound);
  experts_per_node_ = mode_ == RootMode::kGrid ? grid_.size : 1;
  core_size_ = complete_tree_size(core_depth_, d);
  if (core_size_ > (std::uint64_t{1} << 26)) throw SizeError("core tree too large");
  log_experts_ = std::log(static_cast<double>(num_experts()));
  blocks_.resize(core_size_);
  bytes_ = core_size_ * sizeof(void*);

  scratch_ = std::make_unique<Evaluation>();
  if (options.eager) materialize_all();
}

LocallyAdaptive::~LocallyAdaptive() = default;
LocallyAdaptive::LocallyAdaptive(LocallyAdaptive&&) noexcept = default;
LocallyAdaptive& LocallyAdaptive::operator=(LocallyAdaptive&&) noexcept = default;

std::size_t LocallyAdaptive::expert_index(const NodeAddress& core_node, int k) const {
  return static_cast<std::size_t>(core_node.bfs_index()) * experts_per_node_ + k;
}

const LocallyAdaptive::Block* LocallyAdaptive::find_block(const NodeAddress& core_node) const {
  return blocks_[core_node.bfs_index()].get();
}

LocallyAdaptive::Block& LocallyAdaptive::block_for(const NodeAddress& core_node) {
  auto& slot = blocks_[core_node.bfs_index()];
  if (!slot) {
    const std::size_t k = experts_per_node_;
    slot = std::make_unique<Block>();
    slot->node = core_node;
    slot->log_potential.assign(k, 0.0);
    slot->rate.assign(k, adapt_ml_prod::kMaxRate);
    slot->sum_squares.assign(k, 0.0);
    slot->refresh_log_mass();
    live_blocks_.push_back(slot.get());
    bytes_ += sizeof(Block) + 3 * k * sizeof(double);
  }
  return *slot;
}

std::size_t LocallyAdaptive::materialized_tree_nodes() const {
  std::size_t total = 0;
  for (const Block* b : live_blocks_) total += b->slot_of.size();
  return total;
}

void LocallyAdaptive::materialize_all() {
  const int d = domain_.dimension();
  const std::uint64_t per_tree = complete_tree_size(ct_depth_, d);
  if (core_size_ * per_tree * experts_per_node_ > (std::uint64_t{1} << 22))
    throw SizeError("eager materialization limited to 2^22 tree parameters");
  const int first_level = mode_ == RootMode::kGrid ? 0 : 1;
  std::vector<NodeAddress> level{NodeAddress::root(d)};
  for (int m = 1; m <= core_depth_; ++m) {
    std::vector<NodeAddress> next;
    for (const NodeAddress& node : level) {
      Block& b = block_for(node);
      // Walk the chaining tree below `node` breadth-first.
      std::vector<NodeAddress> ct_level{node};
      for (int j = 0; j < ct_depth_; ++j) {
        std::vector<NodeAddress> ct_next;
        for (const NodeAddress& a : ct_level) {
          if (j >= first_level && !b.slot_of.contains(a.key())) {
            const auto s = static_cast<std::int32_t>(b.slot_of.size());
            b.slot_of.emplace(a.key(), s);
            b.grad_sum.resize(b.grad_sum.size() + experts_per_node_, 0.0);
            b.wealth.resize(b.wealth.size() + experts_per_node_, initial_wealth_);
            b.steps.resize(b.steps.size() + experts_per_node_, 0);
          }
          if (j + 1 < ct_depth_)
            for (unsigned c = 0; c < (1u << d); ++c) ct_next.push_back(a.child(c));
        }
        ct_level = std::move(ct_next);
      }
      if (m < core_depth_)
        for (unsigned c = 0; c < (1u << d); ++c) next.push_back(node.child(c));
    }
    level = std::move(next);
  }
}

void LocallyAdaptive::evaluate(std::span<const double> x, Evaluation& out) const {
  const int levels = core_depth_ + ct_depth_ - 1;
  path_of(domain_, x, levels, std::span<NodeAddress>(out.path, levels));
  const int kn = experts_per_node_;
  const std::size_t awake = static_cast<std::size_t>(core_depth_) * kn;
  out.slots.assign(static_cast<std::size_t>(core_depth_) * ct_depth_, kNoSlot);
  out.raw.resize(awake);
  out.clipped.resize(awake);
  out.log_weight.resize(awake);
  out.weight.resize(awake);
  const double bound = loss_.target_bound;
  const double lip = loss_.lipschitz;

  for (int m = 0; m < core_depth_; ++m) {
    const Block* b = find_block(out.path[m]);
    out.blocks[m] = b;
    double* raw = out.raw.data() + static_cast<std::size_t>(m) * kn;
    double* lw = out.log_weight.data() + static_cast<std::size_t>(m) * kn;
    if (mode_ == RootMode::kGrid) {
      for (int k = 0; k < kn; ++k) raw[k] = grid_.value(k);
    } else {
      raw[0] = b ? b->ftl_root() : 0.0;
    }
    if (b) {
      const int first = mode_ == RootMode::kGrid ? 0 : 1;
      for (int j = first; j < ct_depth_; ++j) {
        const std::int32_t s = b->find_slot(out.path[m + j].key());
        out.slots[static_cast<std::size_t>(m) * ct_depth_ + j] = s;
        if (s == kNoSlot) continue;
        const std::size_t base = static_cast<std::size_t>(s) * kn;
        for (int k = 0; k < kn; ++k)
          raw[k] += kt::offset(b->grad_sum[base + k], b->wealth[base + k], b->steps[base + k], lip);
      }
      for (int k = 0; k < kn; ++k) lw[k] = adapt_ml_prod::log_weight(b->log_potential[k], b->rate[k]);
    } else {
      for (int k = 0; k < kn; ++k) lw[k] = kDefaultLogWeight;
    }
  }

  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < awake; ++a) {
    out.clipped[a] = clip(out.raw[a], bound);
    top = std::max(top, out.log_weight[a]);
  }
  double total = 0.0;
  for (std::size_t a = 0; a < awake; ++a) {
    out.weight[a] = std::exp(out.log_weight[a] - top);
    total += out.weight[a];
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw InvariantError("awake experts carry no weight");
  double prediction = 0.0;
  for (std::size_t a = 0; a < awake; ++a) {
    out.weight[a] /= total;
    prediction += out.weight[a] * out.clipped[a];
  }
  out.log_active = top + std::log(total);
  // Convex combination of values in [-B, B]; the clip only absorbs rounding.
  out.prediction = clip(prediction, bound);
}

double LocallyAdaptive::predict(std::span<const double> x) const {
  Evaluation eval;
  evaluate(x, eval);
  return eval.prediction;
}

double LocallyAdaptive::log_normalizer() const {
  double total = -std::numeric_limits<double>::infinity();
  for (const Block* b : live_blocks_) total = log_sum_exp(total, b->log_mass);
  const std::uint64_t idle = core_size_ - live_blocks_.size();
  if (idle > 0) {
    total = log_sum_exp(total, kDefaultLogWeight + std::log(static_cast<double>(idle) *
                                                           experts_per_node_));
  }
  return total;
}

LocalRound LocallyAdaptive::update(std::span<const double> x, double target) {
  Evaluation& eval = *scratch_;
  const int levels = core_depth_ + ct_depth_ - 1;
  path_of(domain_, x, levels, std::span<NodeAddress>(eval.path, levels));

  // Materialize the awake experts and the tree nodes this round touches.
  const int kn = experts_per_node_;
  const int first = mode_ == RootMode::kGrid ? 0 : 1;
  for (int m = 0; m < core_depth_; ++m) {
    Block& b = block_for(eval.path[m]);
    for (int j = first; j < ct_depth_; ++j) {
      const std::uint64_t key = eval.path[m + j].key();
      if (b.slot_of.contains(key)) continue;
      b.slot_of.emplace(key, static_cast<std::int32_t>(b.slot_of.size()));
      b.grad_sum.resize(b.grad_sum.size() + kn, 0.0);
      b.wealth.resize(b.wealth.size() + kn, initial_wealth_);
      b.steps.resize(b.steps.size() + kn, 0);
      bytes_ += kn * (2 * sizeof(double) + sizeof(std::int32_t)) + 48;
    }
  }
  if (bytes_ > memory_budget_) {
    throw SizeError("locally adaptive learner exceeded its memory budget (" +
                    std::to_string(bytes_) + " bytes, budget " +
                    std::to_string(memory_budget_) + ")");
  }

  const double log_z = log_normalizer();
  evaluate(x, eval);
  const std::size_t awake = static_cast<std::size_t>(core_depth_) * kn;
  const double bound = loss_.target_bound;
  const double lip = loss_.lipschitz;

  LocalRound round;
  round.prediction = eval.prediction;
  const double s = loss_grad(loss_, eval.prediction, target);
  round.loss_derivative = s;

  // Identity diagnostics: sleeping weights against the global internal weights.
  double weight_sum = 0.0;
  double inner_awake = 0.0;   // <g, w>
  double inner_global = 0.0;  // <g, w~> over awake experts
  double awake_mass = 0.0;
  for (std::size_t a = 0; a < awake; ++a) {
    weight_sum += eval.weight[a];
    inner_awake += eval.weight[a] * s * eval.clipped[a];
    const double tilde = std::exp(eval.log_weight[a] - log_z);
    awake_mass += tilde;
    inner_global += tilde * s * eval.clipped[a];
  }
  // Sleeping experts carry gradient s f_t and the remaining mass 1 - awake_mass.
  inner_global += (1.0 - awake_mass) * s * eval.prediction;
  round.active_mass = awake_mass;
  round.weight_sum_error = std::abs(weight_sum - 1.0);
  round.identity_error = std::max(std::abs(inner_awake - inner_global),
                                  std::abs(inner_awake - s * eval.prediction));

  // Weight step. Sleeping experts have instantaneous regret <g, w~> - s f_t = 0,
  // which leaves their Adapt-ML-Prod state unchanged, so only awake ones move.
  if (num_experts() > 1) {
    const double scale = 2.0 * lip * bound;
    for (int m = 0; m < core_depth_; ++m) {
      Block& b = *blocks_[eval.path[m].bfs_index()];
      for (int k = 0; k < kn; ++k) {
        double r = s * (eval.prediction - eval.clipped[static_cast<std::size_t>(m) * kn + k]) / scale;
        if (r > 1.0 || r < -1.0) {
          r = std::clamp(r, -1.0, 1.0);
          ++clamped_regrets_;
        }
        adapt_ml_prod::step(b.log_potential[k], b.rate[k], b.sum_squares[k], r, log_experts_);
      }
      b.refresh_log_mass();
    }
  }

  // Tree steps with each expert's own unclipped derivative.
  for (int m = 0; m < core_depth_; ++m) {
    Block& b = *blocks_[eval.path[m].bfs_index()];
    const double* raw = eval.raw.data() + static_cast<std::size_t>(m) * kn;
    for (int k = 0; k < kn; ++k) {
      double g = loss_grad(loss_, raw[k], target);
      if (g > lip || g < -lip) {
        g = std::clamp(g, -lip, lip);
        ++clamped_gradients_;
      }
      if (g == 0.0) continue;
      for (int j = first; j < ct_depth_; ++j) {
        const std::int32_t s_idx = eval.slots[static_cast<std::size_t>(m) * ct_depth_ + j];
        const std::size_t at = static_cast<std::size_t>(s_idx) * kn + k;
        kt::advance(b.grad_sum[at], b.wealth[at], b.steps[at], lip, g);
        ++b.steps[at];
      }
    }
    if (mode_ == RootMode::kFollowTheLeader) {
      ++b.ftl_count;
      b.ftl_sum += target;
    }
    round.coin_steps += static_cast<std::int64_t>(kn) * (ct_depth_ - first);
  }
  return round;
}

std::vector<std::size_t> LocallyAdaptive::awake_experts(std::span<const double> x) const {
  const std::vector<NodeAddress> path = path_of(domain_, x, core_depth_);
  std::vector<std::size_t> out;
  for (const NodeAddress& n : path)
    for (int k = 0; k < experts_per_node_; ++k) out.push_back(expert_index(n, k));
  return out;
}

std::vector<double> LocallyAdaptive::gradient_vector(std::span<const double> x,
                                                     double target) const {
  if (num_experts() > (std::uint64_t{1} << 24)) throw SizeError("dense gradient too large");
  Evaluation eval;
  evaluate(x, eval);
  const double s = loss_grad(loss_, eval.prediction, target);
  std::vector<double> g(num_experts(), s * eval.prediction);
  for (int m = 0; m < core_depth_; ++m)
    for (int k = 0; k < experts_per_node_; ++k)
      g[expert_index(eval.path[m], k)] =
          s * eval.clipped[static_cast<std::size_t>(m) * experts_per_node_ + k];
  return g;
}

std::vector<double> LocallyAdaptive::tilde_weights() const {
  if (num_experts() > (std::uint64_t{1} << 24)) throw SizeError("dense weights too large");
  std::vector<double> lw(num_experts(), kDefaultLogWeight);
  for (const Block* b : live_blocks_) {
    for (int k = 0; k < experts_per_node_; ++k)
      lw[expert_index(b->node, k)] = adapt_ml_prod::log_weight(b->log_potential[k], b->rate[k]);
  }
  return softmax(lw);
}

double LocallyAdaptive::expert_raw_prediction(const NodeAddress& core_node, int k,
                                              std::span<const double> x) const {
  if (k < 0 || k >= experts_per_node_) throw DomainError("expert index out of range");
  Evaluation eval;
  evaluate(x, eval);
  const int m = core_node.level - 1;
  if (m >= core_depth_ || !(eval.path[m] == core_node))
    throw DomainError("point is outside the expert's cell");
  return eval.raw[static_cast<std::size_t>(m) * experts_per_node_ + k];
}

}  // namespace chainreg
