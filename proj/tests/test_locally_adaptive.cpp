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

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <doctest.h>

#include "chainreg/chaining_tree.hpp"
#include "chainreg/errors.hpp"
#include "chainreg/locally_adaptive.hpp"
#include "chainreg/sleeping_experts.hpp"

using namespace chainreg;

namespace {

double pt(double v, double (&buf)[1]) {
  buf[0] = v;
  return v;
}

}  // namespace

TEST_CASE("grid sizing") {
  const GridSpec g = GridSpec::for_horizon(4, 1.0);
  CHECK(g.epsilon == 0.5);
  CHECK(g.size == 4);
  CHECK(g.value(0) == -1.0);
  CHECK(g.value(3) == 0.5);
  const GridSpec one = GridSpec::for_horizon(1, 1.0);
  CHECK(one.size == 2);
  CHECK(GridSpec::with_precision(1.0, 0.3).size == 7);
  CHECK_THROWS_AS(GridSpec::for_horizon(0, 1.0), ConfigError);
}

TEST_CASE("construction and sizes") {
  LocallyAdaptive la(BoxDomain::unit(1), 4, make_loss(LossKind::kSquare, 1.0));
  CHECK(la.experts_per_node() == 4);
  CHECK(la.core_depth() == 2);
  CHECK(la.ct_depth() == 2);
  CHECK(la.core_size() == 3u);
  CHECK(la.num_experts() == 12u);
  for (double w : la.tilde_weights()) CHECK(w == doctest::Approx(1.0 / 12).epsilon(1e-15));
  LocallyAdaptive tiny(BoxDomain::unit(1), 1, make_loss(LossKind::kSquare, 1.0));
  CHECK(tiny.experts_per_node() == 2);
  CHECK(tiny.core_depth() == 1);
  LocallyAdaptive ftl(BoxDomain::unit(1), 16, make_loss(LossKind::kAbsolute, 1.0),
                      {.mode = RootMode::kFollowTheLeader});
  CHECK(ftl.mode() == RootMode::kGrid);
  CHECK(ftl.fell_back_to_grid());
  CHECK_THROWS_AS(LocallyAdaptive(BoxDomain::unit(1), 0, make_loss(LossKind::kSquare, 1.0)),
                  ConfigError);
}

TEST_CASE("fresh learner predicts the grid mean") {
  LocallyAdaptive la(BoxDomain::unit(1), 4, make_loss(LossKind::kSquare, 1.0));
  double x[1];
  pt(0.3, x);
  CHECK(la.predict(x) == doctest::Approx(-0.25).epsilon(1e-15));
  // The first round reports exactly that prediction.
  const LocalRound r = la.update(x, 0.2);
  CHECK(r.prediction == doctest::Approx(-0.25).epsilon(1e-15));
  const double outside[1] = {1.5};
  CHECK_THROWS_AS(la.predict(outside), DomainError);
}

TEST_CASE("a single expert is its own prediction") {
  // T = 1, B = 0.5: one grid value -0.5 at one core node.
  LocallyAdaptive la(BoxDomain::unit(1), 1, make_loss(LossKind::kSquare, 0.5));
  CHECK(la.num_experts() == 1u);
  double x[1];
  pt(0.7, x);
  CHECK(la.predict(x) == -0.5);
}

TEST_CASE("a round with zero loss derivative changes nothing") {
  LocallyAdaptive la(BoxDomain::unit(1), 1, make_loss(LossKind::kSquare, 0.5));
  double x[1];
  pt(0.4, x);
  const LocalRound r = la.update(x, -0.5);
  CHECK(r.loss_derivative == 0.0);
  CHECK(la.tilde_weights() == std::vector<double>{1.0});
  CHECK(la.expert_raw_prediction(NodeAddress::root(1), 0, x) == -0.5);
  CHECK(la.predict(x) == -0.5);

  // Same with many experts: all derivatives zero when every expert sits on y.
  LocallyAdaptive flat(BoxDomain::unit(1), 64, make_loss(LossKind::kAbsolute, 1.0));
  const auto before = flat.tilde_weights();
  const double p0 = flat.predict(x);
  // Absolute loss at the kink has derivative 0; target the prediction itself.
  const LocalRound z = flat.update(x, p0);
  CHECK(z.loss_derivative == 0.0);
  CHECK(flat.tilde_weights() == before);
}

TEST_CASE("gradient vector conventions") {
  LocallyAdaptive la(BoxDomain::unit(1), 16, make_loss(LossKind::kSquare, 1.0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x[1];
  for (int t = 0; t < 40; ++t) {
    pt(u(rng), x);
    la.update(x, 0.6 * std::sin(7 * x[0]));
  }
  pt(0.33, x);
  const double y = 0.1;
  const double f = la.predict(x);
  const double s = 2.0 * (f - y);
  const auto g = la.gradient_vector(x, y);
  const auto awake = la.awake_experts(x);
  std::vector<bool> is_awake(g.size(), false);
  for (std::size_t i : awake) is_awake[i] = true;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!is_awake[i]) CHECK(g[i] == s * f);
  const auto w = sleeping_transform(la.tilde_weights(), awake);
  double dot = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * w[i];
  CHECK(dot == doctest::Approx(s * f).epsilon(1e-12));
}

TEST_CASE("sleeping identity holds for every expert") {
  LocallyAdaptive la(BoxDomain::unit(1), 16, make_loss(LossKind::kSquare, 1.0));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0), noise(-0.2, 0.2);
  double x[1];
  for (int t = 0; t < 100; ++t) {
    pt(u(rng), x);
    const double y = 0.5 * std::cos(5 * x[0]) + noise(rng);
    const auto g = la.gradient_vector(x, y);
    const auto tw = la.tilde_weights();
    const auto awake = la.awake_experts(x);
    const auto w = sleeping_transform(tw, awake);
    std::vector<bool> is_awake(g.size(), false);
    for (std::size_t i : awake) is_awake[i] = true;
    double gw = 0.0, gtw = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      gw += g[i] * w[i];
      gtw += g[i] * tw[i];
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double lhs = gw - g[i];
      const double rhs = (gtw - g[i]) * (is_awake[i] ? 1.0 : 0.0);
      CHECK(std::abs(lhs - rhs) <= 1e-9);
    }
    const LocalRound r = la.update(x, y);
    CHECK(r.identity_error <= 1e-9);
    CHECK(r.weight_sum_error <= 1e-9);
    CHECK(std::abs(r.prediction) <= 1.0);
  }
}

TEST_CASE("dense replay of the weights matches") {
  // Feed the learner's own gradient vectors to a dense weight instance.
  const LossSpec loss = make_loss(LossKind::kSquare, 1.0);
  LocallyAdaptive la(BoxDomain::unit(1), 16, loss);
  SleepingWeights dense(la.num_experts(), loss.lipschitz, loss.target_bound);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0), noise(-0.3, 0.3);
  double x[1];
  for (int t = 0; t < 200; ++t) {
    pt(u(rng), x);
    const double y = 0.7 * std::sin(9 * x[0]) + noise(rng);
    dense.update(la.gradient_vector(x, y));
    la.update(x, y);
    const auto a = la.tilde_weights();
    const auto b = dense.tilde_weights();
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
  }
}

TEST_CASE("hosted trees match standalone chaining trees bit for bit") {
  const LossSpec loss = make_loss(LossKind::kSquare, 1.0);
  const BoxDomain domain = BoxDomain::unit(1);
  LocallyAdaptive la(domain, 32, loss);
  const int kn = la.experts_per_node();
  // Mirror two core nodes: the root and a level-3 node.
  const unsigned p3[] = {1, 0};
  const std::vector<NodeAddress> mirrored{NodeAddress::root(1), NodeAddress::from_path(1, p3)};
  std::map<std::pair<int, int>, ChainingTree> copies;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < kn; ++k)
      copies.emplace(std::pair{i, k},
                     ChainingTree(cell_of(domain, mirrored[i]).as_domain(), la.ct_depth(),
                                  la.grid().value(k), loss.lipschitz));
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0), noise(-0.3, 0.3);
  double x[1];
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    pt(u(rng), x);
    const double y = 0.8 * std::sin(6 * x[0]) + noise(rng);
    for (int i = 0; i < 2; ++i) {
      if (!cell_of(domain, mirrored[i]).contains(x)) continue;
      for (int k = 0; k < kn; ++k) {
        ChainingTree& ct = copies.at({i, k});
        const double raw = la.expert_raw_prediction(mirrored[i], k, x);
        REQUIRE(raw == ct.predict(x));
        ++checked;
        ct.update(x, loss_grad(loss, raw, y));
      }
    }
    la.update(x, y);
  }
  CHECK(checked > 300);
}

TEST_CASE("coin steps per round") {
  LocallyAdaptive la(BoxDomain::unit(1), 64, make_loss(LossKind::kSquare, 1.0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x[1];
  for (int t = 0; t < 20; ++t) {
    pt(u(rng), x);
    const LocalRound r = la.update(x, 0.3);
    CHECK(r.coin_steps ==
          static_cast<std::int64_t>(la.core_depth()) * la.experts_per_node() * la.ct_depth());
  }
  CHECK(la.awake_experts(x).size() ==
        static_cast<std::size_t>(la.core_depth() * la.experts_per_node()));
}

TEST_CASE("eager and lazy learners agree") {
  const LossSpec loss = make_loss(LossKind::kSquare, 1.0);
  for (RootMode mode : {RootMode::kGrid, RootMode::kFollowTheLeader}) {
    LocallyAdaptive lazy(BoxDomain::unit(1), 32, loss, {.mode = mode});
    LocallyAdaptive eager(BoxDomain::unit(1), 32, loss, {.mode = mode, .eager = true});
    CHECK(eager.materialized_core_nodes() == eager.core_size());
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0), noise(-0.3, 0.3);
    double x[1];
    for (int t = 0; t < 400; ++t) {
      pt(u(rng), x);
      const double y = 0.6 * std::sin(8 * x[0]) + noise(rng);
      const LocalRound a = lazy.update(x, y);
      const LocalRound b = eager.update(x, y);
      REQUIRE(a.prediction == doctest::Approx(b.prediction).epsilon(1e-12));
    }
  }
}

TEST_CASE("follow-the-leader roots track the mean") {
  const LossSpec loss = make_loss(LossKind::kSquare, 2.0);
  LocallyAdaptive la(BoxDomain::unit(1), 256, loss, {.mode = RootMode::kFollowTheLeader});
  CHECK(la.experts_per_node() == 1);
  double x[1];
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double last = 0.0;
  for (int t = 0; t < 256; ++t) {
    pt(u(rng), x);
    last = la.update(x, 1.25).prediction;
  }
  // The root expert sits on the running mean (plus whatever its deeper nodes
  // learned in the first round, before any mean existed). Fresh cells start at
  // 0, so the mixture approaches the target from below.
  CHECK(std::abs(la.expert_raw_prediction(NodeAddress::root(1), 0, x) - 1.25) < 1e-2);
  CHECK(last > 1.0);
  CHECK(last <= 1.25);
}

TEST_CASE("deterministic replay") {
  const LossSpec loss = make_loss(LossKind::kAbsolute, 1.0);
  LocallyAdaptive a(BoxDomain::unit(1), 64, loss), b(BoxDomain::unit(1), 64, loss);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x[1];
  for (int t = 0; t < 100; ++t) {
    pt(u(rng), x);
    const double y = std::sin(3 * x[0]) * 0.9;
    REQUIRE(a.update(x, y).prediction == b.update(x, y).prediction);
  }
  CHECK(a.tilde_weights() == b.tilde_weights());
}

TEST_CASE("memory budget") {
  LocallyAdaptive la(BoxDomain::unit(1), 1 << 12, make_loss(LossKind::kSquare, 1.0),
                     {.memory_budget_bytes = 1 << 20});
  double x[1];
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CHECK_THROWS_AS(
      [&] {
        for (int t = 0; t < 1000; ++t) {
          pt(u(rng), x);
          la.update(x, 0.1);
        }
      }(),
      SizeError);
}
