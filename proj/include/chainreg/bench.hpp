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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainreg/losses.hpp"

namespace chainreg {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), hashed with the SplitMix64 finalizer. Draw t of a stream does not
// depend on how many other draws were made, so a stream of length T is a
// prefix of the stream of length T' > T on every platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const;
  // Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t stream, std::uint64_t counter) const;
  // Standard normal (Box-Muller on two streams derived from `stream`).
  double normal(std::uint64_t stream, std::uint64_t counter) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

enum class FunctionKind {
  kSinCos,  // sin(10x) + cos(5x) + 5
  kScaled,  // sincos(l x)
  kFlat,    // 4 on the left half of the domain, 6 on the right
  kTable    // piecewise linear through (x_i, y_i)
};

struct TargetFunction {
  FunctionKind kind = FunctionKind::kSinCos;
  double scale = 1.0;  // l for kScaled
  std::vector<double> table_x;
  std::vector<double> table_y;

  // `sincos`, `scaled:<l>`, `flat`, or `table:x0/y0,x1/y1,...`.
  static TargetFunction parse(std::string_view text);
  static TargetFunction scaled(double l);
  double operator()(double x) const;
  std::string name() const;
};

enum class Algo { kCt, kLa, kLaFtl, kOgd };

Algo parse_algo(std::string_view text);
std::string algo_name(Algo algo);

struct ExperimentConfig {
  Algo algo = Algo::kCt;
  LossKind loss = LossKind::kSquare;
  double tau = 0.5;
  std::int64_t horizon = 2000;
  std::uint64_t seed = 1;
  double sigma = 0.5;
  TargetFunction target;
  double lower = 0.0;
  double upper = 1.0;
  double bound = 7.0;  // B
  // 0 keeps the horizon-driven depths.
  int ct_depth = 0;
  int core_depth = 0;
  std::size_t memory_budget_bytes = std::size_t{3} << 30;
  bool keep_rows = true;

  // Throws ConfigError on an invalid combination, including B < sup |f| on a
  // probe grid of the domain.
  void validate() const;
  LossSpec loss_spec() const;
};

struct Sample {
  double x;
  double y;
};

// x_t ~ U[lower, upper], y_t = f(x_t) + sigma N(0, 1); round t uses counter t.
std::vector<Sample> generate_stream(const ExperimentConfig& config);

struct TraceRow {
  std::int64_t t;
  double x;
  double y;
  double prediction;
  double loss;
  double comp_loss;
  double cum_regret;
};

// Checks every run must pass. Violations are reported, never thrown, so that
// callers can decide how hard to fail.
struct RunChecks {
  double max_weight_sum_error = 0.0;  // locally adaptive only
  double max_identity_error = 0.0;    // locally adaptive only
  double max_abs_prediction = 0.0;
  bool trace_consistent = true;
  double worst_case_cap = 0.0;        // 2 B G T
  bool within_cap = true;
  bool predictions_in_range = true;
  bool passed(double tolerance = 1e-9) const;
};

struct RegretTrace {
  ExperimentConfig config;
  std::vector<TraceRow> rows;  // empty when keep_rows is false
  double final_regret = 0.0;
  std::size_t tree_nodes = 0;
  std::size_t core_nodes = 0;
  std::int64_t clamped_gradients = 0;
  bool fell_back_to_grid = false;
  double wall_seconds = 0.0;
  RunChecks checks;
};

RegretTrace run_experiment(const ExperimentConfig& config);

// Recomputes the cumulative regret column from (loss, comp_loss) and checks
// exact agreement.
bool trace_consistent(std::span<const TraceRow> rows);

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);
std::string summary_json(const RegretTrace& trace, std::optional<double> slope = std::nullopt);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  int used = 0;
  int dropped = 0;  // non-positive regrets left out
};

// Least-squares slope of log(regret) against log(T). Non-positive regrets are
// dropped; fewer than three remaining points is a DomainError.
SlopeFit slope_fit(std::span<const double> horizons, std::span<const double> regrets);

enum class SweepAxis { kHorizon, kScale };

struct SweepRow {
  double value = 0.0;
  Algo algo = Algo::kCt;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  int seeds = 0;
  bool checks_passed = true;
};

// Runs every grid value with seeds base_seed, base_seed + 1, ... and reports
// mean and spread of the final regret.
std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            std::span<const double> grid, int seeds);

void write_sweep_csv(std::ostream& out, SweepAxis axis, std::span<const SweepRow> rows);

// Grid helpers: {2^lo, ..., 2^hi} and n equally spaced values in [lo, hi].
std::vector<double> powers_of_two(int lo, int hi);
std::vector<double> linear_grid(double lo, double hi, int n);
// Comma-separated numbers; `a:b:n` is a linear grid and `2^a..2^b` powers of two.
std::vector<double> parse_grid(std::string_view text);

}  // namespace chainreg
