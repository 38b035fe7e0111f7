#pragma once

#include <string>
#include <vector>

#include "robustiv/bounds_a1.hpp"
#include "robustiv/bounds_a2.hpp"
#include "robustiv/bounds_a3.hpp"
#include "robustiv/options.hpp"
#include "robustiv/sample.hpp"
#include "robustiv/types.hpp"
#include "robustiv/validity.hpp"

namespace robustiv {

struct RobustDiagnostics {
  Slacks slacks;
  double overlap = 0.0;
  double first_stage = 0.0;
  FirstStageSign first_stage_sign = FirstStageSign::Zero;
  double tau = kTauTest;
  SetClass set_class = SetClass::Borel;
};

struct RobustResult {
  std::vector<AssumptionMenu> active_menus;
  GammaSet a1;
  A2Result a2;
  GammaSet a3;
  GammaSet result;
  std::array<bool, kGammaSize> disconnected{};
  RobustDiagnostics diagnostics;

  bool is_active(AssumptionMenu m) const {
    return std::find(active_menus.begin(), active_menus.end(), m) != active_menus.end();
  }
};

/// Union of identified sets over the minimum data-consistent relaxations of {A1, A2, A3}.
inline RobustResult robust_bound(const Sample& s, const AnalysisOptions& opt = {}) {
  s.require_arms();
  RobustResult out;
  auto cs = cell_stats(s);
  auto& dg = out.diagnostics;
  dg.slacks = late_inequality_slack(s, opt.validity);
  dg.overlap = overlap_statistic(s, opt.validity);
  dg.first_stage = cs.first_stage();
  dg.first_stage_sign = classify_first_stage(dg.first_stage);
  dg.tau = opt.validity.tau;
  dg.set_class = opt.validity.set_class;

  out.a1 = identified_set_a1(s, opt);
  out.a2 = identified_set_a2(s, opt);
  out.a3 = identified_set_a3(s, opt.range, opt.trim_rule);

  if (!out.a1.empty()) {
    out.active_menus = {AssumptionMenu::A1};
    out.result = out.a1;
    out.result.case_tag = "robust: A1 is data-consistent";
    return out;
  }
  std::vector<const GammaSet*> sets;
  if (!out.a2.summary.empty()) {
    out.active_menus = {AssumptionMenu::A2, AssumptionMenu::A3};
    for (const auto& r : out.a2.slices)
      if (!r.skipped) sets.push_back(&r.set);
  } else {
    out.active_menus = {AssumptionMenu::A3};
  }
  sets.push_back(&out.a3);
  const bool both = sets.size() > 1;
  out.result = union_of(sets, AssumptionMenu::A3, both ? "robust: union of A2 and A3" : "robust: A3 only",
                        &out.disconnected);
  if (both) out.result.linked_constraints = {"per-component union; cross-parameter links hold within each menu only"};
  else out.result.linked_constraints = out.a3.linked_constraints;
  return out;
}

}  // namespace robustiv
