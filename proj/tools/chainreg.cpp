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

// Command line front end: single runs, sweeps, bound tables and a self test.

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chainreg/bench.hpp"
#include "chainreg/dyadic_tree.hpp"
#include "chainreg/errors.hpp"
#include "chainreg/oracle.hpp"
#include "chainreg/param_free.hpp"
#include "chainreg/sleeping_experts.hpp"

namespace {

using namespace chainreg;

struct CommonArgs {
  std::string algo = "ct";
  std::string loss = "square";
  std::int64_t horizon = 2000;
  std::uint64_t seed = 1;
  double sigma = 0.5;
  std::string func = "sincos";
  double bound = 7.0;
  int ct_depth = 0;
  int core_depth = 0;
  double memory_gib = 3.0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--algo", a.algo, "ct | la | la-ftl | ogd")->capture_default_str();
  cmd->add_option("--loss", a.loss, "square | absolute | pinball:<tau>")->capture_default_str();
  cmd->add_option("--seed", a.seed, "base seed")->capture_default_str();
  cmd->add_option("--sigma", a.sigma, "noise standard deviation")->capture_default_str();
  cmd->add_option("--func", a.func, "sincos | scaled:<l> | flat | table:x/y,...")
      ->capture_default_str();
  cmd->add_option("--b", a.bound, "target bound B")->capture_default_str();
  cmd->add_option("--ct-depth", a.ct_depth, "chaining tree depth (0: from T)");
  cmd->add_option("--core-depth", a.core_depth, "core tree depth (0: from T)");
  cmd->add_option("--memory-gib", a.memory_gib, "memory budget of the locally adaptive learner")
      ->capture_default_str();
}

ExperimentConfig to_config(const CommonArgs& a) {
  ExperimentConfig c;
  c.algo = parse_algo(a.algo);
  const LossSpec spec = parse_loss(a.loss, a.bound);
  c.loss = spec.kind;
  c.tau = spec.tau;
  c.horizon = a.horizon;
  c.seed = a.seed;
  c.sigma = a.sigma;
  c.target = TargetFunction::parse(a.func);
  c.bound = a.bound;
  c.ct_depth = a.ct_depth;
  c.core_depth = a.core_depth;
  c.memory_budget_bytes = static_cast<std::size_t>(a.memory_gib * double(1 << 30));
  return c;
}

// Small end-to-end smoke test of every module.
int selftest() {
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "ok   " : "FAIL ") << what << '\n';
    if (!ok) ++failures;
  };
  CoinBetting cb(0.0, 1.0);
  cb.step(1.0);
  check(cb.predict() == -0.5, "coin betting first step");
  check(depth_for_horizon(1024, 1) == 10, "depth for T = 1024");
  check(pruning_count(4, 1) == 26.0, "pruning count at depth 4");
  const auto w = sleeping_transform(std::vector<double>{0.25, 0.25, 0.5},
                                    std::vector<std::size_t>{0, 2});
  check(std::abs(w[0] - 1.0 / 3.0) < 1e-15 && w[1] == 0.0, "sleeping renormalization");
  for (const char* algo : {"ct", "la", "la-ftl", "ogd"}) {
    ExperimentConfig c;
    c.algo = parse_algo(algo);
    c.horizon = 256;
    c.keep_rows = false;
    const RegretTrace t = run_experiment(c);
    check(t.checks.passed() && std::isfinite(t.final_regret),
          std::string("run checks for ") + algo);
  }
  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chaining-tree online regression toolkit"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run one experiment and write its trace");
  add_common(run, run_args);
  run->add_option("--t", run_args.horizon, "horizon T")->capture_default_str();
  run->add_option("--out", run_out, "trace CSV path (summary JSON goes next to it)");

  CommonArgs sweep_args;
  std::string grid_text;
  int seeds = 5;
  std::string sweep_out;
  auto* sweep_t = app.add_subcommand("sweep-t", "Final regret against the horizon");
  auto* sweep_l = app.add_subcommand("sweep-l", "Final regret against the scale l");
  for (auto* cmd : {sweep_t, sweep_l}) {
    add_common(cmd, sweep_args);
    cmd->add_option("--grid", grid_text, "values: a,b,c | lo:hi:n | 2^a..2^b");
    cmd->add_option("--seeds", seeds, "seeds per grid value")->capture_default_str();
    cmd->add_option("--out", sweep_out, "CSV path (stdout when omitted)");
  }
  sweep_l->add_option("--t", sweep_args.horizon, "horizon T")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "Bound tables");
  oracle->require_subcommand(1);
  int depth = 3;
  double alpha = 1.0;
  double holder = 15.0;
  std::int64_t bound_t = 2000;
  double bound_b = 7.0;
  std::string bound_loss = "square";
  std::string bound_func = "sincos";
  auto* bound = oracle->add_subcommand("bound", "CSV of bound values per pruning");
  bound->add_option("--depth", depth, "core depth")->capture_default_str();
  bound->add_option("--alpha", alpha, "Hölder exponent")->capture_default_str();
  bound->add_option("--t", bound_t, "horizon T")->capture_default_str();
  bound->add_option("--b", bound_b, "target bound B")->capture_default_str();
  bound->add_option("--loss", bound_loss, "loss")->capture_default_str();
  bound->add_option("--func", bound_func, "function whose local constants are measured")
      ->capture_default_str();
  bound->add_option("--holder", holder, "global Hölder constant for the single tree bound")
      ->capture_default_str();

  auto* self = app.add_subcommand("selftest", "Quick end-to-end check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentConfig config = to_config(run_args);
      const RegretTrace trace = run_experiment(config);
      if (run_out.empty()) {
        write_trace_csv(std::cout, trace.rows);
      } else {
        std::ofstream csv(run_out);
        write_trace_csv(csv, trace.rows);
        std::ofstream json(run_out + ".summary.json");
        json << summary_json(trace) << '\n';
      }
      std::cerr << summary_json(trace) << '\n';
      return trace.checks.passed() ? 0 : 3;
    }
    if (sweep_t->parsed() || sweep_l->parsed()) {
      const SweepAxis axis = sweep_t->parsed() ? SweepAxis::kHorizon : SweepAxis::kScale;
      std::vector<double> grid;
      if (!grid_text.empty()) {
        grid = parse_grid(grid_text);
      } else {
        grid = axis == SweepAxis::kHorizon ? powers_of_two(9, 14)
                                           : linear_grid(std::ldexp(1.0, -6), 32.0, 20);
      }
      const std::vector<SweepRow> rows = sweep(to_config(sweep_args), axis, grid, seeds);
      if (sweep_out.empty()) {
        write_sweep_csv(std::cout, axis, rows);
      } else {
        std::ofstream csv(sweep_out);
        write_sweep_csv(csv, axis, rows);
      }
      if (axis == SweepAxis::kHorizon && rows.size() >= 3) {
        std::vector<double> ts, means;
        for (const SweepRow& r : rows) {
          ts.push_back(r.value);
          means.push_back(r.mean);
        }
        std::cerr << "slope " << slope_fit(ts, means).slope << '\n';
      }
      for (const SweepRow& r : rows)
        if (!r.checks_passed) return 3;
      return 0;
    }
    if (bound->parsed()) {
      const LossSpec loss = parse_loss(bound_loss, bound_b);
      const TargetFunction f = TargetFunction::parse(bound_func);
      const BoxDomain domain = BoxDomain::unit(1);
      const bool exp_concave = loss.exp_concavity.has_value();
      BoundConstants k;
      k.c1 = coin_betting_c1(bound_t, 2.0 * bound_b);
      k.c2 = coin_betting_c2(1.0, loss.lipschitz);
      k.c3 = kSleepingC3;
      k.c4 = sleeping_c4(bound_t);
      k.lipschitz = loss.lipschitz;
      k.target_bound = bound_b;
      if (exp_concave) k.mixing_rate = default_mixing_rate(loss.lipschitz, *loss.exp_concavity);
      const std::uint64_t core_size = complete_tree_size(depth, 1);
      std::cout << "pruning,leaves,theorem2,corollary1,avg_holder,avg_holder_bound,theorem1\n";
      const double t1 = theorem1_bound(1, alpha, holder, domain.diameter(), bound_b,
                                       loss.lipschitz, k.c1, k.c2, bound_t);
      const auto prunings = enumerate_prunings(depth, 1);
      for (std::size_t p = 0; p < prunings.size(); ++p) {
        LeafProfile profile;
        for (const NodeAddress& leaf : prunings[p].leaves) {
          const Cell cell = cell_of(domain, leaf);
          profile.holder.push_back(local_holder_constant(
              [&](std::span<const double> x) { return f(x[0]); }, cell, alpha, 257));
          // Expected visits under uniform inputs, rounded so they sum to T.
          profile.counts.push_back(static_cast<std::int64_t>(
              std::llround(bound_t * (cell.upper[0] - cell.lower[0]))));
        }
        std::int64_t total = 0;
        for (auto c : profile.counts) total += c;
        profile.counts.back() += bound_t - total;
        const double t2 = theorem2_bound(prunings[p], profile, k, 1, alpha, domain.diameter(),
                                         bound_t, core_size, exp_concave);
        const double c1 = corollary1_bound(prunings[p], profile, 1, alpha, domain.diameter(),
                                           exp_concave);
        const double avg = average_holder_constant(prunings[p], profile, alpha, domain.diameter());
        const double avg_bound = avg_holder_bound(prunings[p], profile, 1, alpha,
                                                  domain.diameter(), bound_t, exp_concave);
        std::cout << p << ',' << prunings[p].leaves.size() << ',' << t2 << ',' << c1 << ','
                  << avg << ',' << avg_bound << ',' << t1 << '\n';
      }
      return 0;
    }
    if (self->parsed()) return selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
