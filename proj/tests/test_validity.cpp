#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"

using namespace robustiv;

namespace {

std::size_t count(const Sample& s, int d, int z, double lo, double hi) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.d(i) == d && s.z(i) == z && s.y(i) >= lo && s.y(i) <= hi) ++c;
  return c;
}

// sup over closed intervals with endpoints on the support, and the empty set
double brute_interval_slack(const Sample& s, int d) {
  auto sup = s.support();
  const double np = static_cast<double>(s.arm_size(1 - d)), nm = static_cast<double>(s.arm_size(d));
  double best = 0.0;
  for (std::size_t i = 0; i < sup.size(); ++i)
    for (std::size_t j = i; j < sup.size(); ++j)
      best = std::max(best, count(s, d, 1 - d, sup[i], sup[j]) / np - count(s, d, d, sup[i], sup[j]) / nm);
  return best;
}

double brute_borel_atoms(const Sample& s, int d) {
  const double np = static_cast<double>(s.arm_size(1 - d)), nm = static_cast<double>(s.arm_size(d));
  double acc = 0.0;
  for (double y : s.support()) acc += std::max(0.0, count(s, d, 1 - d, y, y) / np - count(s, d, d, y, y) / nm);
  return acc;
}

double brute_overlap_atoms(const Sample& s) {
  double best = -1.0;
  for (int d = 0; d < 2; ++d) {
    double acc = 0.0;
    for (double y : s.support())
      acc += std::max(count(s, d, 0, y, y) / static_cast<double>(s.arm_size(0)),
                      count(s, d, 1, y, y) / static_cast<double>(s.arm_size(1)));
    best = std::max(best, acc - 1.0);
  }
  return best;
}

// Z = 1 arm: D=1 {1,2,3,4}, D=0 {0,1,5,6}; Z = 0 arm: D=1 {2,9}, D=0 {0,1,2,3,4,7}
Sample hand() {
  std::vector<rt::Row> rows;
  for (double y : {1, 2, 3, 4}) rows.emplace_back(y, 1, 1);
  for (double y : {0, 1, 5, 6}) rows.emplace_back(y, 0, 1);
  for (double y : {5.5, 5.5}) rows.emplace_back(y, 1, 0);
  for (double y : {0, 1, 2, 3, 4, 7}) rows.emplace_back(y, 0, 0);
  return rt::make(rows);
}

}  // namespace

TEST(Slack, IntervalsMatchBruteForce) {
  std::mt19937_64 g(21);
  ValidityOptions opt;
  opt.set_class = SetClass::Intervals;
  for (int rep = 0; rep < 60; ++rep) {
    auto s = rt::random_sample(g, 10 + 3 * rep, rep % 3);
    auto sl = late_inequality_slack(s, opt);
    EXPECT_NEAR(sl.d0, brute_interval_slack(s, 0), 1e-12);
    EXPECT_NEAR(sl.d1, brute_interval_slack(s, 1), 1e-12);
  }
}

TEST(Slack, BorelOnAtomsMatchesBruteForceAndDominatesIntervals) {
  std::mt19937_64 g(22);
  ValidityOptions iv;
  iv.set_class = SetClass::Intervals;
  for (int rep = 0; rep < 60; ++rep) {
    auto s = rt::random_sample(g, 20 + 5 * rep, 1 + rep % 2);
    ASSERT_EQ(s.outcome_kind(), OutcomeKind::Discrete);
    auto b = late_inequality_slack(s);
    auto i = late_inequality_slack(s, iv);
    for (int d = 0; d < 2; ++d) {
      EXPECT_NEAR(b[d], brute_borel_atoms(s, d), 1e-12);
      EXPECT_GE(b[d], i[d] - 1e-12);
      EXPECT_GE(b[d], 0.0);
    }
    EXPECT_NEAR(overlap_statistic(s), brute_overlap_atoms(s), 1e-12);
  }
}

TEST(Slack, VanishesWhenInstrumentIsIndependent) {
  // identical arms
  std::vector<rt::Row> rows;
  for (int z = 0; z < 2; ++z)
    for (auto [y, d] : {std::pair{0.0, 0}, {1.0, 0}, {1.0, 1}, {3.0, 1}}) rows.emplace_back(y, d, z);
  auto s = rt::make(rows);
  auto sl = late_inequality_slack(s);
  EXPECT_EQ(sl.max(), 0.0);
  EXPECT_DOUBLE_EQ(overlap_statistic(s), -0.5);
}

TEST(Slack, HandExample) {
  auto s = hand();
  ValidityOptions iv;
  iv.set_class = SetClass::Intervals;
  // D=1: Z=0 mass on 5.5 (1/4) nowhere in the Z=1 cell
  EXPECT_DOUBLE_EQ(late_inequality_slack(s, iv).d1, 0.25);
  EXPECT_DOUBLE_EQ(late_inequality_slack(s).d1, 0.25);
}

TEST(ErCheck, RejectsDisplacedAlwaysTakers) {
  auto r = er_check_a3(hand());
  EXPECT_TRUE(r.reject_er);
  EXPECT_FALSE(r.instrument_swapped);
  EXPECT_EQ(*r.mu_10a, 5.5);
  EXPECT_EQ(*r.id_set_mu_11a, (Interval{1.5, 3.5}));
  EXPECT_EQ(*r.mu_01n, 3.0);
  EXPECT_EQ(*r.id_set_mu_00n, (Interval{1.5, 4.0}));
}

TEST(ErCheck, SwapsOnNegativeFirstStage) {
  auto s = hand();
  auto a = er_check_a3(s);
  auto b = er_check_a3(s.relabeled());
  EXPECT_TRUE(b.instrument_swapped);
  EXPECT_EQ(a.reject_er, b.reject_er);
  EXPECT_EQ(a.mu_10a, b.mu_10a);
  EXPECT_EQ(a.id_set_mu_00n, b.id_set_mu_00n);
}

TEST(ErCheck, AcceptsWhenMeansAttainable) {
  std::vector<rt::Row> rows;
  for (double y : {1, 2, 3, 4}) rows.emplace_back(y, 1, 1);
  for (double y : {0, 1}) rows.emplace_back(y, 0, 1);
  rows.emplace_back(2.0, 1, 0);
  for (double y : {0, 1, 1}) rows.emplace_back(y, 0, 0);
  EXPECT_FALSE(er_check_a3(rt::make(rows)).reject_er);
}

TEST(ErCheck, ZeroFirstStage) {
  auto s = rt::make({{0, 0, 0}, {1, 1, 0}, {0, 0, 1}, {2, 1, 1}});
  try {
    er_check_a3(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateFirstStage);
  }
}
