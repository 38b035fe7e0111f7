#pragma once

#include <optional>

#include "robustiv/options.hpp"
#include "robustiv/sample.hpp"
#include "robustiv/types.hpp"
#include "robustiv/validity.hpp"

namespace robustiv {

/// Type shares under RA + ER + MON, in the original type labels.
inline TypeProbabilities type_probabilities_a1(const Sample& s) {
  auto cs = cell_stats(s);
  switch (classify_first_stage(cs.first_stage())) {
    case FirstStageSign::Positive:
      return {cs.p[1][0], cs.first_stage(), 0.0, cs.p[0][1]};
    case FirstStageSign::Negative:
      // swapped instrument: a' = E[D|Z=1], c' = E[D|Z=0] - E[D|Z=1], n' = E[1-D|Z=0]; c' are defiers here
      return {cs.p[1][1], 0.0, -cs.first_stage(), cs.p[0][0]};
    case FirstStageSign::Zero: break;
  }
  const double pd = static_cast<double>(cs.n[1][0] + cs.n[1][1]) / static_cast<double>(cs.n_total);
  return {pd, 0.0, 0.0, 1.0 - pd};
}

namespace detail {

inline void a1_common(GammaSet& g, const CellStats& cs, const OutcomeRange& r, int n_arm) {
  using T = ComplianceType;
  const auto full = GammaEntry::full_range(r.lo - r.hi, r.hi - r.lo);
  for (int z = 0; z < 2; ++z) {
    g.theta(z, T::a) = cs.mean[1][0] ? GammaEntry::interval(*cs.mean[1][0] - r.hi, *cs.mean[1][0] - r.lo) : full;
    g.theta(z, T::n) = cs.mean[0][n_arm]
                           ? GammaEntry::interval(r.lo - *cs.mean[0][n_arm], r.hi - *cs.mean[0][n_arm])
                           : full;
  }
  for (auto t : kAllTypes)
    for (int d = 0; d < 2; ++d) g.delta(d, t) = GammaEntry::point(0.0);
  g.linked_constraints = {"theta_0t = theta_1t for every type t", "delta_dt = 0 for every d and t"};
}

inline GammaSet a1_positive_case(const Sample& s, const OutcomeRange& r, const ValidityOptions& v) {
  auto slacks = late_inequality_slack(s, v);
  if (slacks.max() > v.tau) return GammaSet::make_empty(AssumptionMenu::A1, "A1: first stage > 0, inequalities fail");
  auto cs = cell_stats(s);
  GammaSet g;
  g.menu = AssumptionMenu::A1;
  g.case_tag = "A1: first stage > 0";
  a1_common(g, cs, r, 1);
  const double wald = cs.itt() / cs.first_stage();
  const auto full = GammaEntry::full_range(r.lo - r.hi, r.hi - r.lo);
  for (int z = 0; z < 2; ++z) {
    g.theta(z, ComplianceType::c) = GammaEntry::point(wald);
    g.theta(z, ComplianceType::df) = full;
  }
  g.set_probabilities({cs.p[1][0], cs.first_stage(), 0.0, cs.p[0][1]});
  return g;
}

}  // namespace detail

/// Identified set under RA + ER + MON.
inline GammaSet identified_set_a1(const Sample& s, const AnalysisOptions& opt = {}) {
  auto r = resolve_range(s, opt.range);
  auto cs = cell_stats(s);
  switch (classify_first_stage(cs.first_stage())) {
    case FirstStageSign::Positive:
      return detail::a1_positive_case(s, r, opt.validity);
    case FirstStageSign::Negative: {
      auto g = relabel_gamma(detail::a1_positive_case(s.relabeled(), r, opt.validity));
      g.case_tag = g.empty() ? "A1: first stage < 0, inequalities fail" : "A1: first stage < 0 (instrument swapped)";
      return g;
    }
    case FirstStageSign::Zero: break;
  }
  auto slacks = late_inequality_slack(s, opt.validity);
  if (slacks.max() > 0.0) return GammaSet::make_empty(AssumptionMenu::A1, "A1: first stage = 0, Z not independent of (Y, D)");
  GammaSet g;
  g.menu = AssumptionMenu::A1;
  g.case_tag = "A1: first stage = 0";
  detail::a1_common(g, cs, r, 0);
  const auto full = GammaEntry::full_range(r.lo - r.hi, r.hi - r.lo);
  for (int z = 0; z < 2; ++z) {
    g.theta(z, ComplianceType::c) = full;
    g.theta(z, ComplianceType::df) = full;
  }
  g.set_probabilities(type_probabilities_a1(s));
  return g;
}

}  // namespace robustiv
