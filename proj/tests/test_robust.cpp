#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace robustiv;

namespace {

void expect_same(const GammaSet& a, const GammaSet& b) {
  for (std::size_t i = 0; i < kGammaSize; ++i) EXPECT_EQ(a.entries[i], b.entries[i]) << component_name(i);
}

void check_branch(const RobustResult& r) {
  ASSERT_FALSE(r.result.empty());
  if (!r.a1.empty()) {
    ASSERT_EQ(r.active_menus, std::vector<AssumptionMenu>{AssumptionMenu::A1});
    expect_same(r.result, r.a1);
  } else if (!r.a2.summary.empty()) {
    ASSERT_EQ(r.active_menus, (std::vector<AssumptionMenu>{AssumptionMenu::A2, AssumptionMenu::A3}));
    for (std::size_t i = 0; i < kGammaSize; ++i) {
      EXPECT_LE(r.result.entries[i].lo, std::min(r.a2.summary.entries[i].lo, r.a3.entries[i].lo));
      EXPECT_GE(r.result.entries[i].hi, std::max(r.a2.summary.entries[i].hi, r.a3.entries[i].hi));
    }
  } else {
    ASSERT_EQ(r.active_menus, std::vector<AssumptionMenu>{AssumptionMenu::A3});
    expect_same(r.result, r.a3);
  }
}

}  // namespace

TEST(Robust, BranchOnRandomSamples) {
  std::mt19937_64 g(81);
  std::array<int, 3> seen{};
  for (int rep = 0; rep < 120; ++rep) {
    auto s = rt::random_sample(g, 20 + rep * 3, rep % 3);
    AnalysisOptions o;
    o.grid_points = 11;
    auto r = robust_bound(s, o);
    check_branch(r);
    seen[r.is_active(AssumptionMenu::A1) ? 0 : r.is_active(AssumptionMenu::A2) ? 1 : 2]++;
  }
  EXPECT_GT(seen[2], 0);
}

TEST(Robust, BranchOnSimulatedDesigns) {
  for (double rho : {0.0, 0.33, -0.5}) {
    DgpConfig c;
    c.rho = rho;
    c.n = 20000;
    c.seed = 5;
    auto sim = simulate(c);
    AnalysisOptions o;
    o.grid_points = 21;
    auto r = robust_bound(sim.sample, o);
    check_branch(r);
    EXPECT_FALSE(r.is_active(AssumptionMenu::A1));
  }
}

TEST(Robust, A1WhenInequalitiesHold) {
  auto s = rt::make({{1, 1, 0}, {0, 0, 0}, {0, 0, 0}, {2, 0, 0}, {1, 1, 1}, {3, 1, 1}, {0, 0, 1}, {2, 0, 1}});
  auto r = robust_bound(s);
  check_branch(r);
  EXPECT_TRUE(r.is_active(AssumptionMenu::A1));
  EXPECT_EQ(r.diagnostics.first_stage_sign, FirstStageSign::Positive);
}

TEST(Robust, A3WhenOverlapRefutes) {
  auto s = rt::make({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {5, 1, 0}, {1, 0, 1}, {1, 0, 1}, {1, 0, 1}, {5, 1, 1}});
  auto r = robust_bound(s);
  check_branch(r);
  EXPECT_EQ(r.active_menus, std::vector<AssumptionMenu>{AssumptionMenu::A3});
  EXPECT_GT(r.diagnostics.overlap, 0.0);
}

TEST(Robust, DeterministicAcrossRunsAndThreads) {
  DgpConfig c;
  c.n = 30000;
  c.seed = 9;
  auto sim = simulate(c);
  AnalysisOptions a, b;
  a.threads = 1;
  b.threads = 6;
  auto x = robust_bound(sim.sample, a), y = robust_bound(sim.sample, b), z = robust_bound(sim.sample, a);
  EXPECT_EQ(x.active_menus, y.active_menus);
  expect_same(x.result, y.result);
  expect_same(x.result, z.result);
  EXPECT_EQ(x.disconnected, y.disconnected);
}
