#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>

#include "robustiv/bounds_a3.hpp"
#include "robustiv/empirics.hpp"
#include "robustiv/options.hpp"
#include "robustiv/sample.hpp"

namespace robustiv {

/// slack_s = sup_A { P(Y in A, D=s | Z=1-s) - P(Y in A, D=s | Z=s) }.
struct Slacks {
  double d0 = 0.0;
  double d1 = 0.0;

  double operator[](int s) const { return s == 0 ? d0 : d1; }
  double max() const { return std::max(d0, d1); }
};

namespace detail {

// Positive-part integral of (cell(s, 1-s) - cell(s, s)) on the grid.
inline double borel_slack(const Sample& s, int d, const OutcomeGrid& grid) {
  auto plus = binned_density(s, d, 1 - d, grid);
  auto minus = binned_density(s, d, d, grid);
  double acc = 0.0;
  for (std::size_t k = 0; k < plus.masses.size(); ++k) {
    double diff = plus.masses[k] - minus.masses[k];
    if (diff > 0.0) acc += diff;
  }
  return acc;
}

// Maximum over intervals of the signed measure +1/n_plus on `plus`, -1/n_minus on `minus`.
inline double interval_slack(std::span<const double> plus, double w_plus,
                             std::span<const double> minus, double w_minus) {
  double best = 0.0, run = 0.0;
  std::size_t i = 0, j = 0;
  while (i < plus.size() || j < minus.size()) {
    double y;
    if (j == minus.size()) y = plus[i];
    else if (i == plus.size()) y = minus[j];
    else y = std::min(plus[i], minus[j]);
    double group = 0.0;
    std::size_t ci = 0, cj = 0;
    while (i < plus.size() && plus[i] == y) ++i, ++ci;
    while (j < minus.size() && minus[j] == y) ++j, ++cj;
    group = static_cast<double>(ci) * w_plus - static_cast<double>(cj) * w_minus;
    run = std::max(run + group, group);
    best = std::max(best, run);
  }
  return best;
}

}  // namespace detail

inline Slacks late_inequality_slack(const Sample& s, const ValidityOptions& opt = {}) {
  s.require_arms();
  Slacks out;
  std::array<double, 2> v{};
  if (opt.set_class == SetClass::Borel) {
    auto grid = default_grid(s, opt.bins);
    for (int d = 0; d < 2; ++d) v[d] = detail::borel_slack(s, d, grid);
  } else {
    for (int d = 0; d < 2; ++d) {
      v[d] = detail::interval_slack(s.sorted_cell(d, 1 - d), 1.0 / static_cast<double>(s.arm_size(1 - d)),
                                    s.sorted_cell(d, d), 1.0 / static_cast<double>(s.arm_size(d)));
    }
  }
  out.d0 = v[0];
  out.d1 = v[1];
  return out;
}

/// max_d sum_k max_z P(Y in cell_k, D=d | Z=z) - 1; positive values refute RA+ER.
inline double overlap_statistic(const Sample& s, const ValidityOptions& opt = {}) {
  s.require_arms();
  auto grid = default_grid(s, opt.bins);
  double best = -1.0;
  for (int d = 0; d < 2; ++d) {
    auto f0 = binned_density(s, d, 0, grid);
    auto f1 = binned_density(s, d, 1, grid);
    double acc = 0.0;
    for (std::size_t k = 0; k < f0.masses.size(); ++k) acc += std::max(f0.masses[k], f1.masses[k]);
    best = std::max(best, acc - 1.0);
  }
  return best;
}

struct ErCheck {
  std::optional<double> mu_10a;
  MaybeEmptyInterval id_set_mu_11a;
  std::optional<double> mu_01n;
  MaybeEmptyInterval id_set_mu_00n;
  bool reject_er = false;
  bool instrument_swapped = false;  // computed on Z' = 1 - Z because the first stage was negative
};

/// Exclusion-restriction check under RA + MON: the always-taker mean in cell (1,0) must be
/// attainable in cell (1,1), and the never-taker mean in cell (0,1) attainable in cell (0,0).
inline ErCheck er_check_a3(const Sample& s, TrimRule rule = TrimRule::Fractional) {
  auto cs = cell_stats(s);
  auto sign = classify_first_stage(cs.first_stage());
  if (sign == FirstStageSign::Zero)
    throw Error(ErrorKind::DegenerateFirstStage, "first stage is zero; the check reduces to testing Z independent of (Y, D)");
  ErCheck out;
  out.instrument_swapped = sign == FirstStageSign::Negative;
  auto m = out.instrument_swapped ? a3_cell_means(s.relabeled(), rule) : a3_cell_means(s, rule);
  out.mu_10a = m.mu_10a;
  out.id_set_mu_11a = m.mu_11a;
  out.mu_01n = m.mu_01n;
  out.id_set_mu_00n = m.mu_00n;
  if (m.mu_10a && m.mu_11a && !m.mu_11a->contains(*m.mu_10a)) out.reject_er = true;
  if (m.mu_01n && m.mu_00n && !m.mu_00n->contains(*m.mu_01n)) out.reject_er = true;
  return out;
}

}  // namespace robustiv
