#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "robustiv/empirics.hpp"
#include "robustiv/options.hpp"
#include "robustiv/sample.hpp"
#include "robustiv/types.hpp"

namespace robustiv {

/// Entry for mu_a - mu_b where an absent operand is only known to lie in the outcome range.
inline GammaEntry difference_entry(const std::optional<Interval>& a, const std::optional<Interval>& b,
                                   const OutcomeRange& r) {
  if (!a && !b) return GammaEntry::full_range(r.lo - r.hi, r.hi - r.lo);
  Interval x = a ? *a : Interval{r.lo, r.hi};
  Interval y = b ? *b : Interval{r.lo, r.hi};
  return GammaEntry::interval(x.lo - y.hi, x.hi - y.lo);
}

/// Table of mu_{dzt} = E[Y_{dz} | T = t]; absent entries are unrestricted.
struct MuTable {
  std::array<std::optional<Interval>, 16> mu{};

  static std::size_t index(int d, int z, ComplianceType t) {
    return static_cast<std::size_t>(8 * d + 4 * z) + static_cast<std::size_t>(t);
  }
  std::optional<Interval>& at(int d, int z, ComplianceType t) { return mu[index(d, z, t)]; }
  const std::optional<Interval>& at(int d, int z, ComplianceType t) const { return mu[index(d, z, t)]; }

  /// theta_{zt} = mu_{1zt} - mu_{0zt}, delta_{dt} = mu_{d1t} - mu_{d0t}.
  void fill(GammaSet& g, const OutcomeRange& r) const {
    for (auto t : kAllTypes) {
      for (int z = 0; z < 2; ++z) g.theta(z, t) = difference_entry(at(1, z, t), at(0, z, t), r);
      for (int d = 0; d < 2; ++d) g.delta(d, t) = difference_entry(at(d, 1, t), at(d, 0, t), r);
    }
  }
};

namespace detail {

inline void require_positive_first_stage(const CellStats& cs) {
  if (classify_first_stage(cs.first_stage()) != FirstStageSign::Positive)
    throw Error(ErrorKind::NonPositiveFirstStage,
                "first stage " + std::to_string(cs.first_stage()) + " is not positive; swap the instrument");
}

inline TypeProbabilities a3_probabilities(const CellStats& cs) {
  return {cs.p[1][0], cs.p[1][1] - cs.p[1][0], 0.0, cs.p[0][1]};
}

inline std::vector<double> unique_sorted(std::span<const double> v) {
  std::vector<double> g(v.begin(), v.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

// P(Y <= g_k, D=d | Z=z) for every point of an ascending grid.
inline std::vector<double> sub_cdf_on(std::span<const double> cell, double arm,
                                      const std::vector<double>& grid) {
  std::vector<double> out(grid.size());
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    while (j < cell.size() && cell[j] <= grid[k]) ++j;
    out[k] = static_cast<double>(j) / arm;
  }
  return out;
}

}  // namespace detail

/// Pointwise bounds on the always-taker cdf in cell (1,1) and never-taker cdf in cell (0,0).
struct A3DistBounds {
  TypeProbabilities probs;
  SteppedCdf f11a_lb, f11a_ub;
  SteppedCdf f00n_lb, f00n_ub;
  SteppedCdf f10a, f01n;
  SteppedCdf s11, s00;  // observed sub-cdfs P(Y<=y, D=1|Z=1), P(Y<=y, D=0|Z=0)

  /// Complier Y_{11} cdf implied by a candidate always-taker cdf, on that cdf's grid.
  std::vector<double> f11c(const SteppedCdf& f11a) const {
    std::vector<double> out(f11a.size());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = (s11(f11a.grid()[k]) - probs.p_a * f11a.values()[k]) / probs.p_c;
    return out;
  }
  std::vector<double> f00c(const SteppedCdf& f00n) const {
    std::vector<double> out(f00n.size());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = (s00(f00n.grid()[k]) - probs.p_n * f00n.values()[k]) / probs.p_c;
    return out;
  }
};

inline A3DistBounds a3_dist_bounds(const Sample& s) {
  auto cs = cell_stats(s);
  detail::require_positive_first_stage(cs);
  A3DistBounds b;
  b.probs = detail::a3_probabilities(cs);
  const auto& p = b.probs;
  if (p.p_a <= 0.0) throw Error(ErrorKind::EmptyCell, "no always-takers: cell (1,0) is empty");
  if (p.p_n <= 0.0) throw Error(ErrorKind::EmptyCell, "no never-takers: cell (0,1) is empty");

  auto build = [&](int d, int z, double share, SteppedCdf& lb, SteppedCdf& ub, SteppedCdf& sub) {
    auto cell = s.sorted_cell(d, z);
    auto grid = detail::unique_sorted(cell);
    auto sv = detail::sub_cdf_on(cell, static_cast<double>(cs.n_arm[z]), grid);
    std::vector<double> lo(grid.size()), hi(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      lo[k] = std::clamp((sv[k] - p.p_c) / share, 0.0, 1.0);
      hi[k] = std::min(sv[k] / share, 1.0);
    }
    lb = SteppedCdf(grid, std::move(lo));
    ub = SteppedCdf(grid, std::move(hi));
    sub = SteppedCdf(std::move(grid), std::move(sv));
  };
  build(1, 1, p.p_a, b.f11a_lb, b.f11a_ub, b.s11);
  build(0, 0, p.p_n, b.f00n_lb, b.f00n_ub, b.s00);
  b.f10a = SteppedCdf::from_sorted(s.sorted_cell(1, 0));
  b.f01n = SteppedCdf::from_sorted(s.sorted_cell(0, 1));
  return b;
}

/// Mean bounds under RA + MON with a positive first stage.
/// Absent optionals mean the corresponding type has zero mass.
struct A3Means {
  TypeProbabilities probs;
  double alpha = 1.0;  // p_a / E[D|Z=1]
  double gamma = 1.0;  // p_n / E[1-D|Z=0]
  std::optional<double> mu_10a, mu_01n;
  MaybeEmptyInterval mu_11a, mu_00n, mu_11c, mu_00c;
};

inline A3Means a3_cell_means(const Sample& s, TrimRule rule = TrimRule::Fractional) {
  auto cs = cell_stats(s);
  detail::require_positive_first_stage(cs);
  A3Means m;
  m.probs = detail::a3_probabilities(cs);
  const auto& p = m.probs;
  m.alpha = p.p_a / cs.p[1][1];
  m.gamma = p.p_n / cs.p[0][0];
  if (p.p_a > 0.0) {
    m.mu_10a = cs.mean_or_throw(1, 0);
    SortedCell c11(s.sorted_cell(1, 1));
    m.mu_11a = Interval{c11.trimmed_mean(m.alpha, Tail::Lower, rule),
                        c11.trimmed_mean(m.alpha, Tail::Upper, rule)};
    m.mu_11c = Interval{(cs.ey[1][1] - p.p_a * m.mu_11a->hi) / p.p_c,
                        (cs.ey[1][1] - p.p_a * m.mu_11a->lo) / p.p_c};
  } else {
    const double v = cs.ey[1][1] / p.p_c;
    m.mu_11c = Interval{v, v};
  }
  if (p.p_n > 0.0) {
    m.mu_01n = cs.mean_or_throw(0, 1);
    SortedCell c00(s.sorted_cell(0, 0));
    m.mu_00n = Interval{c00.trimmed_mean(m.gamma, Tail::Lower, rule),
                        c00.trimmed_mean(m.gamma, Tail::Upper, rule)};
    m.mu_00c = Interval{(cs.ey[0][0] - p.p_n * m.mu_00n->hi) / p.p_c,
                        (cs.ey[0][0] - p.p_n * m.mu_00n->lo) / p.p_c};
  } else {
    const double v = cs.ey[0][0] / p.p_c;
    m.mu_00c = Interval{v, v};
  }
  return m;
}

struct A3Report {
  TypeProbabilities probs;
  double alpha = 1.0, gamma = 1.0;
  std::optional<double> mu_10a, mu_01n;
  MaybeEmptyInterval mu_11a_bounds, mu_00n_bounds;
  MaybeEmptyInterval delta_1a_bounds, delta_0n_bounds, total_c_bounds;
  double itt = 0.0;
};

inline A3Report a3_effect_bounds(const Sample& s, const std::optional<OutcomeRange>& range = std::nullopt,
                                   TrimRule rule = TrimRule::Fractional) {
  auto r = resolve_range(s, range);
  auto cs = cell_stats(s);
  auto m = a3_cell_means(s, rule);
  A3Report out;
  out.probs = m.probs;
  out.alpha = m.alpha;
  out.gamma = m.gamma;
  out.mu_10a = m.mu_10a;
  out.mu_01n = m.mu_01n;
  out.mu_11a_bounds = m.mu_11a;
  out.mu_00n_bounds = m.mu_00n;
  const Interval full{r.lo - r.hi, r.hi - r.lo};
  out.delta_1a_bounds = m.mu_11a ? Interval{m.mu_11a->lo - *m.mu_10a, m.mu_11a->hi - *m.mu_10a} : full;
  out.delta_0n_bounds = m.mu_00n ? Interval{*m.mu_01n - m.mu_00n->hi, *m.mu_01n - m.mu_00n->lo} : full;

  const auto& p = m.probs;
  auto mu11c = [&](double mu11a) { return (cs.ey[1][1] - p.p_a * mu11a) / p.p_c; };
  auto mu00c = [&](double mu00n) { return (cs.ey[0][0] - p.p_n * mu00n) / p.p_c; };
  std::vector<double> xs = m.mu_11a ? std::vector<double>{m.mu_11a->lo, m.mu_11a->hi} : std::vector<double>{0.0};
  std::vector<double> ys = m.mu_00n ? std::vector<double>{m.mu_00n->lo, m.mu_00n->hi} : std::vector<double>{0.0};
  double lo = INFINITY, hi = -INFINITY;
  for (double x : xs)
    for (double y : ys) {
      double v = mu11c(x) - mu00c(y);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  out.total_c_bounds = Interval{lo, hi};
  out.itt = cs.itt();
  return out;
}

struct IttCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool mu_in_bounds = true;  // false raises no error: the identity is pure algebra
};

/// ITT against p_a delta_1a + p_n delta_0n + p_c (delta_1c + theta_0c) at the supplied means.
inline IttCheck itt_decomposition(const Sample& s, double mu_11a, double mu_00n) {
  auto cs = cell_stats(s);
  detail::require_positive_first_stage(cs);
  auto p = detail::a3_probabilities(cs);
  IttCheck out;
  out.lhs = cs.itt();
  double rhs = 0.0;
  if (p.p_a > 0.0) rhs += p.p_a * (mu_11a - cs.mean_or_throw(1, 0));
  if (p.p_n > 0.0) rhs += p.p_n * (cs.mean_or_throw(0, 1) - mu_00n);
  const double mu11c = (cs.ey[1][1] - p.p_a * mu_11a) / p.p_c;
  const double mu00c = (cs.ey[0][0] - p.p_n * mu_00n) / p.p_c;
  rhs += p.p_c * (mu11c - mu00c);
  out.rhs = rhs;
  auto m = a3_cell_means(s);
  constexpr double tol = 1e-12;
  if (m.mu_11a && !m.mu_11a->contains(mu_11a, tol)) out.mu_in_bounds = false;
  if (m.mu_00n && !m.mu_00n->contains(mu_00n, tol)) out.mu_in_bounds = false;
  return out;
}

namespace detail {

inline GammaSet a3_positive_case(const Sample& s, const OutcomeRange& r, TrimRule rule) {
  auto m = a3_cell_means(s, rule);
  GammaSet g;
  g.menu = AssumptionMenu::A3;
  g.case_tag = "A3: first stage > 0";
  MuTable mu;
  using T = ComplianceType;
  if (m.mu_10a) mu.at(1, 0, T::a) = Interval{*m.mu_10a, *m.mu_10a};
  if (m.mu_01n) mu.at(0, 1, T::n) = Interval{*m.mu_01n, *m.mu_01n};
  mu.at(1, 1, T::a) = m.mu_11a;
  mu.at(0, 0, T::n) = m.mu_00n;
  mu.at(1, 1, T::c) = m.mu_11c;
  mu.at(0, 0, T::c) = m.mu_00c;
  mu.fill(g, r);
  g.set_probabilities(m.probs);

  auto rep = a3_effect_bounds(s, r, rule);
  g.linked_constraints.push_back("theta_0c + delta_1c = theta_1c + delta_0c = mu_11c - mu_00c in [" +
                                 std::to_string(rep.total_c_bounds->lo) + ", " +
                                 std::to_string(rep.total_c_bounds->hi) + "]");
  g.linked_constraints.push_back("mu_11c = (E[YD|Z=1] - p_a mu_11a) / p_c");
  g.linked_constraints.push_back("mu_00c = (E[Y(1-D)|Z=0] - p_n mu_00n) / p_c");
  return g;
}

}  // namespace detail

/// Identified set under RA + MON. Never empty.
inline GammaSet identified_set_a3(const Sample& s, const std::optional<OutcomeRange>& range = std::nullopt,
                                  TrimRule rule = TrimRule::Fractional) {
  auto r = resolve_range(s, range);
  auto cs = cell_stats(s);
  switch (classify_first_stage(cs.first_stage())) {
    case FirstStageSign::Positive:
      return detail::a3_positive_case(s, r, rule);
    case FirstStageSign::Negative: {
      auto swapped = s.relabeled();
      auto g = relabel_gamma(detail::a3_positive_case(swapped, r, rule));
      auto rep = a3_effect_bounds(swapped, r, rule);
      g.case_tag = "A3: first stage < 0 (instrument swapped)";
      g.linked_constraints = {"theta_1df - delta_1df = theta_0df - delta_0df in [" +
                              std::to_string(rep.total_c_bounds->lo) + ", " +
                              std::to_string(rep.total_c_bounds->hi) + "]"};
      return g;
    }
    case FirstStageSign::Zero: break;
  }
  GammaSet g;
  g.menu = AssumptionMenu::A3;
  g.case_tag = "A3: first stage = 0";
  MuTable mu;
  using T = ComplianceType;
  auto point = [](const std::optional<double>& v) -> std::optional<Interval> {
    if (!v) return std::nullopt;
    return Interval{*v, *v};
  };
  mu.at(1, 0, T::a) = point(cs.mean[1][0]);
  mu.at(1, 1, T::a) = point(cs.mean[1][1]);
  mu.at(0, 1, T::n) = point(cs.mean[0][1]);
  mu.at(0, 0, T::n) = point(cs.mean[0][0]);
  mu.fill(g, r);
  const double n = static_cast<double>(cs.n_total);
  const double pd = static_cast<double>(cs.n[1][0] + cs.n[1][1]) / n;
  g.set_probabilities({pd, 0.0, 0.0, 1.0 - pd});
  return g;
}

}  // namespace robustiv
