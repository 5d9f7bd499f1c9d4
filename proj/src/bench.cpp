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

#include "chainreg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <ostream>
#include <string>

#include <json.hpp>

#include "chainreg/chaining_tree.hpp"
#include "chainreg/dyadic_tree.hpp"
#include "chainreg/errors.hpp"
#include "chainreg/locally_adaptive.hpp"

namespace chainreg {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double parse_number(std::string_view text, const char* what) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(std::string("cannot parse ") + what + " from '" + s + "'");
  }
  if (used != s.size()) throw ConfigError(std::string("trailing characters in ") + what + " '" + s + "'");
  return v;
}

double sincos(double x) { return std::sin(10.0 * x) + std::cos(5.0 * x) + 5.0; }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t counter) const {
  return splitmix64(splitmix64(splitmix64(seed_) ^ stream) ^ counter);
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t counter) const {
  return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t stream, std::uint64_t counter) const {
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform(2 * stream + 1, counter);
  const double u2 = uniform(2 * stream + 2, counter);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

TargetFunction TargetFunction::scaled(double l) {
  TargetFunction f;
  f.kind = FunctionKind::kScaled;
  f.scale = l;
  return f;
}

TargetFunction TargetFunction::parse(std::string_view text) {
  if (text == "sincos") return {};
  if (text == "flat") {
    TargetFunction f;
    f.kind = FunctionKind::kFlat;
    return f;
  }
  if (text.starts_with("scaled:")) return scaled(parse_number(text.substr(7), "scale"));
  if (text.starts_with("table:")) {
    TargetFunction f;
    f.kind = FunctionKind::kTable;
    std::string_view rest = text.substr(6);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto slash = item.find('/');
      if (slash == std::string_view::npos) throw ConfigError("table entries are x/y pairs");
      f.table_x.push_back(parse_number(item.substr(0, slash), "table x"));
      f.table_y.push_back(parse_number(item.substr(slash + 1), "table y"));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (f.table_x.size() < 2) throw ConfigError("a table needs at least two points");
    if (!std::is_sorted(f.table_x.begin(), f.table_x.end()))
      throw ConfigError("table x values must be increasing");
    return f;
  }
  throw ConfigError("unknown target function '" + std::string(text) + "'");
}

double TargetFunction::operator()(double x) const {
  switch (kind) {
    case FunctionKind::kSinCos:
      return sincos(x);
    case FunctionKind::kScaled:
      return sincos(scale * x);
    case FunctionKind::kFlat:
      return x < 0.5 ? 4.0 : 6.0;
    case FunctionKind::kTable: {
      if (x <= table_x.front()) return table_y.front();
      if (x >= table_x.back()) return table_y.back();
      const auto it = std::upper_bound(table_x.begin(), table_x.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - table_x.begin());
      const double w = (x - table_x[i - 1]) / (table_x[i] - table_x[i - 1]);
      return table_y[i - 1] + w * (table_y[i] - table_y[i - 1]);
    }
  }
  return 0.0;
}

std::string TargetFunction::name() const {
  switch (kind) {
    case FunctionKind::kSinCos:
      return "sincos";
    case FunctionKind::kScaled:
      return "scaled:" + format_double(scale);
    case FunctionKind::kFlat:
      return "flat";
    case FunctionKind::kTable: {
      std::string s = "table:";
      for (std::size_t i = 0; i < table_x.size(); ++i) {
        if (i) s += ',';
        s += format_double(table_x[i]) + "/" + format_double(table_y[i]);
      }
      return s;
    }
  }
  return "?";
}

Algo parse_algo(std::string_view text) {
  if (text == "ct") return Algo::kCt;
  if (text == "la") return Algo::kLa;
  if (text == "la-ftl" || text == "la_ftl") return Algo::kLaFtl;
  if (text == "ogd" || text == "ogd_global") return Algo::kOgd;
  throw ConfigError("unknown algorithm '" + std::string(text) + "'");
}

std::string algo_name(Algo algo) {
  switch (algo) {
    case Algo::kCt:
      return "ct";
    case Algo::kLa:
      return "la";
    case Algo::kLaFtl:
      return "la_ftl";
    case Algo::kOgd:
      return "ogd_global";
  }
  return "?";
}

LossSpec ExperimentConfig::loss_spec() const { return make_loss(loss, bound, tau); }

void ExperimentConfig::validate() const {
  if (horizon < 0) throw ConfigError("horizon T must be >= 0");
  if (!(sigma >= 0.0)) throw ConfigError("noise level sigma must be >= 0");
  if (!(upper > lower)) throw ConfigError("domain must have positive width");
  if (!(bound > 0.0)) throw ConfigError("target bound B must be positive");
  if (ct_depth < 0 || core_depth < 0) throw ConfigError("depth overrides must be >= 0");
  loss_spec();
  constexpr int kProbe = 4097;
  double sup = 0.0;
  for (int i = 0; i < kProbe; ++i) {
    const double x = lower + (upper - lower) * i / (kProbe - 1);
    sup = std::max(sup, std::abs(target(x)));
  }
  if (sup > bound) {
    throw ConfigError("target function reaches " + format_double(sup) + " > B = " +
                      format_double(bound));
  }
}

std::vector<Sample> generate_stream(const ExperimentConfig& config) {
  if (!(config.sigma >= 0.0)) throw ConfigError("noise level sigma must be >= 0");
  const CounterRng rng(config.seed);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(config.horizon, 0)));
  for (std::int64_t t = 0; t < config.horizon; ++t) {
    const auto c = static_cast<std::uint64_t>(t);
    const double x = config.lower + (config.upper - config.lower) * rng.uniform(0, c);
    const double noise = config.sigma > 0.0 ? config.sigma * rng.normal(1, c) : 0.0;
    out.push_back({x, config.target(x) + noise});
  }
  return out;
}

bool RunChecks::passed(double tolerance) const {
  return max_weight_sum_error <= tolerance && max_identity_error <= tolerance &&
         trace_consistent && within_cap && predictions_in_range;
}

bool trace_consistent(std::span<const TraceRow> rows) {
  double total = 0.0;
  for (const TraceRow& r : rows) {
    total += r.loss - r.comp_loss;
    if (total != r.cum_regret) return false;
  }
  return true;
}

namespace {

// Uniform interface over the four learners. Every learner predicts in [-B, B].
class Learner {
 public:
  Learner(const ExperimentConfig& config, const LossSpec& loss, const BoxDomain& domain)
      : algo_(config.algo), loss_(loss) {
    const std::int64_t horizon = std::max<std::int64_t>(config.horizon, 1);
    const int depth = config.ct_depth > 0 ? config.ct_depth : depth_for_horizon(horizon, 1);
    switch (algo_) {
      case Algo::kCt:
        ct_ = std::make_unique<ChainingTree>(domain, depth, 0.0, loss.lipschitz);
        break;
      case Algo::kOgd:
        ogd_ = std::make_unique<GlobalGradientTree>(domain, depth, loss.target_bound);
        break;
      case Algo::kLa:
      case Algo::kLaFtl: {
        LocallyAdaptiveOptions options;
        options.mode = algo_ == Algo::kLa ? RootMode::kGrid : RootMode::kFollowTheLeader;
        options.core_depth = config.core_depth;
        options.ct_depth = config.ct_depth;
        options.memory_budget_bytes = config.memory_budget_bytes;
        la_ = std::make_unique<LocallyAdaptive>(domain, horizon, loss, options);
        break;
      }
    }
  }

  // Returns the prediction made before seeing y.
  double round(double x, double y, RunChecks& checks) {
    const double xs[1] = {x};
    if (la_) {
      const LocalRound r = la_->update(xs, y);
      checks.max_weight_sum_error = std::max(checks.max_weight_sum_error, r.weight_sum_error);
      checks.max_identity_error = std::max(checks.max_identity_error, r.identity_error);
      return r.prediction;
    }
    // The trees' raw sums may leave [-B, B]; we predict the clipped value and
    // feed back the derivative there, which still upper-bounds the regret
    // against any comparator inside [-B, B].
    const double bound = loss_.target_bound;
    if (ct_) {
      const double p = clip(ct_->predict(xs), bound);
      ct_->update(xs, loss_grad(loss_, p, y));
      return p;
    }
    const double p = clip(ogd_->predict(xs), bound);
    ogd_->update(xs, loss_grad(loss_, p, y));
    return p;
  }

  void finish(RegretTrace& trace) const {
    if (ct_) {
      trace.tree_nodes = ct_->node_count();
      trace.clamped_gradients = ct_->clamped_gradients();
    } else if (ogd_) {
      trace.tree_nodes = ogd_->node_count();
    } else {
      trace.tree_nodes = la_->materialized_tree_nodes();
      trace.core_nodes = la_->materialized_core_nodes();
      trace.clamped_gradients = la_->clamped_gradients();
      trace.fell_back_to_grid = la_->fell_back_to_grid();
    }
  }

 private:
  Algo algo_;
  LossSpec loss_;
  std::unique_ptr<ChainingTree> ct_;
  std::unique_ptr<GlobalGradientTree> ogd_;
  std::unique_ptr<LocallyAdaptive> la_;
};

}  // namespace

RegretTrace run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  RegretTrace trace;
  trace.config = config;
  const LossSpec loss = config.loss_spec();
  const BoxDomain domain = BoxDomain::interval(config.lower, config.upper);
  trace.checks.worst_case_cap =
      2.0 * loss.target_bound * loss.lipschitz * static_cast<double>(config.horizon);
  if (config.horizon == 0) return trace;

  Learner learner(config, loss, domain);
  const std::vector<Sample> stream = generate_stream(config);
  if (config.keep_rows) trace.rows.reserve(stream.size());
  double cumulative = 0.0;
  // Independent running sum used for the consistency check when rows are dropped.
  double recomputed = 0.0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto [x, y] = stream[i];
    const double p = learner.round(x, y, trace.checks);
    const double l = loss_value(loss, p, y);
    const double c = loss_value(loss, config.target(x), y);
    cumulative += l - c;
    recomputed += l - c;
    trace.checks.max_abs_prediction = std::max(trace.checks.max_abs_prediction, std::abs(p));
    if (config.keep_rows)
      trace.rows.push_back({static_cast<std::int64_t>(i + 1), x, y, p, l, c, cumulative});
  }
  trace.final_regret = cumulative;
  trace.checks.predictions_in_range = trace.checks.max_abs_prediction <= loss.target_bound;
  trace.checks.trace_consistent =
      config.keep_rows ? trace_consistent(trace.rows) : recomputed == cumulative;
  trace.checks.within_cap = cumulative <= trace.checks.worst_case_cap;
  learner.finish(trace);
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "t,x,y,prediction,loss,comp_loss,cum_regret\n";
  for (const TraceRow& r : rows) {
    out << r.t << ',' << format_double(r.x) << ',' << format_double(r.y) << ','
        << format_double(r.prediction) << ',' << format_double(r.loss) << ','
        << format_double(r.comp_loss) << ',' << format_double(r.cum_regret) << '\n';
  }
}

std::string summary_json(const RegretTrace& trace, std::optional<double> slope) {
  const ExperimentConfig& c = trace.config;
  nlohmann::ordered_json j;
  j["config"] = {{"algo", algo_name(c.algo)},
                 {"loss", loss_name(c.loss_spec())},
                 {"T", c.horizon},
                 {"seed", c.seed},
                 {"sigma", c.sigma},
                 {"func", c.target.name()},
                 {"domain", {c.lower, c.upper}},
                 {"B", c.bound},
                 {"ct_depth", c.ct_depth},
                 {"core_depth", c.core_depth}};
  j["final_regret"] = trace.final_regret;
  j["tree_nodes"] = trace.tree_nodes;
  j["core_nodes"] = trace.core_nodes;
  j["clamped_gradients"] = trace.clamped_gradients;
  j["fell_back_to_grid"] = trace.fell_back_to_grid;
  j["wall_seconds"] = trace.wall_seconds;
  j["checks"] = {{"passed", trace.checks.passed()},
                 {"max_weight_sum_error", trace.checks.max_weight_sum_error},
                 {"max_identity_error", trace.checks.max_identity_error},
                 {"max_abs_prediction", trace.checks.max_abs_prediction},
                 {"trace_consistent", trace.checks.trace_consistent},
                 {"worst_case_cap", trace.checks.worst_case_cap},
                 {"within_cap", trace.checks.within_cap}};
  if (slope) j["slope"] = *slope;
  return j.dump(2);
}

SlopeFit slope_fit(std::span<const double> horizons, std::span<const double> regrets) {
  if (horizons.size() != regrets.size()) throw DomainError("slope fit needs paired points");
  std::vector<double> lx;
  std::vector<double> ly;
  SlopeFit fit;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(regrets[i] > 0.0) || !(horizons[i] > 0.0)) {
      ++fit.dropped;
      continue;
    }
    lx.push_back(std::log(horizons[i]));
    ly.push_back(std::log(regrets[i]));
  }
  if (fit.dropped > 0)
    std::cerr << "warning: slope fit dropped " << fit.dropped << " non-positive point(s)\n";
  if (lx.size() < 3) throw DomainError("slope fit needs at least 3 positive points");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (!(sxx > 0.0)) throw DomainError("slope fit needs at least two distinct horizons");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.used = static_cast<int>(lx.size());
  return fit;
}

std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            std::span<const double> grid, int seeds) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  if (seeds < 1) throw ConfigError("sweep needs at least one seed");
  std::vector<SweepRow> out;
  for (double value : grid) {
    ExperimentConfig config = base;
    config.keep_rows = false;
    if (axis == SweepAxis::kHorizon) {
      if (value < 1 || value != std::floor(value)) throw ConfigError("horizon grid values must be positive integers");
      config.horizon = static_cast<std::int64_t>(value);
    } else {
      config.target = TargetFunction::scaled(value);
    }
    std::vector<double> finals;
    SweepRow row;
    row.value = value;
    row.algo = base.algo;
    row.seeds = seeds;
    for (int s = 0; s < seeds; ++s) {
      config.seed = base.seed + static_cast<std::uint64_t>(s);
      const RegretTrace trace = run_experiment(config);
      finals.push_back(trace.final_regret);
      row.checks_passed = row.checks_passed && trace.checks.passed();
    }
    double mean = 0.0;
    for (double v : finals) mean += v;
    mean /= seeds;
    double var = 0.0;
    for (double v : finals) var += (v - mean) * (v - mean);
    row.mean = mean;
    row.stddev = seeds > 1 ? std::sqrt(var / (seeds - 1)) : 0.0;
    out.push_back(row);
  }
  return out;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, std::span<const SweepRow> rows) {
  out << (axis == SweepAxis::kHorizon ? "T" : "l") << ",algo,mean_regret,std,n_seeds\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.value) << ',' << algo_name(r.algo) << ',' << format_double(r.mean)
        << ',' << format_double(r.stddev) << ',' << r.seeds << '\n';
  }
}

std::vector<double> powers_of_two(int lo, int hi) {
  if (hi < lo) throw ConfigError("empty power-of-two range");
  std::vector<double> out;
  for (int e = lo; e <= hi; ++e) out.push_back(std::ldexp(1.0, e));
  return out;
}

std::vector<double> linear_grid(double lo, double hi, int n) {
  if (n < 1) throw ConfigError("grid needs at least one point");
  if (n == 1) return {lo};
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

std::vector<double> parse_grid(std::string_view text) {
  if (text.starts_with("2^")) {
    const auto dots = text.find("..");
    if (dots == std::string_view::npos || text.substr(dots + 2).substr(0, 2) != "2^")
      throw ConfigError("power grids look like 2^a..2^b");
    const double lo = parse_number(text.substr(2, dots - 2), "grid exponent");
    const double hi = parse_number(text.substr(dots + 4), "grid exponent");
    return powers_of_two(static_cast<int>(lo), static_cast<int>(hi));
  }
  if (std::count(text.begin(), text.end(), ':') == 2) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    const double lo = parse_number(text.substr(0, a), "grid start");
    const double hi = parse_number(text.substr(a + 1, b - a - 1), "grid end");
    const double n = parse_number(text.substr(b + 1), "grid size");
    return linear_grid(lo, hi, static_cast<int>(n));
  }
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number(text.substr(0, comma), "grid value"));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  if (out.empty()) throw ConfigError("grid is empty");
  return out;
}

}  // namespace chainreg
