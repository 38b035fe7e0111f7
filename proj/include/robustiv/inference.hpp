#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "robustiv/error.hpp"
#include "robustiv/normal.hpp"
#include "robustiv/options.hpp"
#include "robustiv/sample.hpp"
#include "robustiv/types.hpp"

namespace robustiv {

namespace detail {

// Nearest-rank quantile min{y : #(v <= y)/n >= q}; -inf when q <= 0.
inline double nr_quantile(const std::vector<double>& sorted, double q) {
  if (q <= 0.0) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(sorted.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    count = j;
    if (static_cast<double>(count) / n >= q - kProbTol) return sorted[i];
    i = j;
  }
  return sorted.back();
}

struct TrimPiece {
  double mean = 0.0;
  double var = 0.0;  // population denominator
  std::size_t count = 0;
};

inline TrimPiece trim_piece(const std::vector<double>& v, double cut, bool below) {
  TrimPiece p;
  double sum = 0.0;
  for (double y : v)
    if (below ? y <= cut : y > cut) sum += y, ++p.count;
  if (p.count == 0) return p;
  p.mean = sum / static_cast<double>(p.count);
  double ss = 0.0;
  for (double y : v)
    if (below ? y <= cut : y > cut) ss += (y - p.mean) * (y - p.mean);
  p.var = ss / static_cast<double>(p.count);
  return p;
}

inline double plain_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double y : v) s += y;
  return s / static_cast<double>(v.size());
}

inline double plain_var(const std::vector<double>& v) {
  const double m = plain_mean(v);
  double s = 0.0;
  for (double y : v) s += (y - m) * (y - m);
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Sample analogs of the three A3 bound pairs:
/// [0] delta_1a, [1] delta_0n, [2] delta_1c + theta_0c.
struct TrimmingEstimates {
  std::size_t n = 0;
  double p_a = 0.0, p_c = 0.0, p_n = 0.0;
  double alpha = 0.0, gamma = 0.0;
  double e_z = 0.0, e_dz = 0.0, e_d_1mz = 0.0, e_1md_z = 0.0, e_1md_1mz = 0.0;
  std::array<double, 3> lb{}, ub{};
  // nearest-rank quantiles of cell (1,1) and cell (0,0)
  double q11_alpha = 0.0, q11_1malpha = 0.0, q00_gamma = 0.0, q00_1mgamma = 0.0;
  // raw cells (1,1), (1,0), (0,0), (0,1), sorted
  std::vector<double> y11, y10, y00, y01;
};

inline TrimmingEstimates trimming_estimators(const Sample& s) {
  s.require_arms();
  TrimmingEstimates e;
  e.n = s.size();
  std::size_t n11 = 0, n10 = 0, n00 = 0, n01 = 0, nz = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double y = s.y(i);
    const int d = s.d(i), z = s.z(i);
    nz += z;
    if (d == 1 && z == 1) e.y11.push_back(y), ++n11;
    if (d == 1 && z == 0) e.y10.push_back(y), ++n10;
    if (d == 0 && z == 0) e.y00.push_back(y), ++n00;
    if (d == 0 && z == 1) e.y01.push_back(y), ++n01;
  }
  const double N = static_cast<double>(e.n);
  const double ed1 = static_cast<double>(n11) / static_cast<double>(nz);
  const double ed0 = static_cast<double>(n10) / static_cast<double>(e.n - nz);
  if (!(ed1 - ed0 > kTauFirstStage))
    throw Error(ErrorKind::NonPositiveFirstStage, "trimming estimators need E[D|Z=1] - E[D|Z=0] > 0");
  for (auto* c : {&e.y11, &e.y10, &e.y00, &e.y01})
    if (c->empty()) throw Error(ErrorKind::EmptyCell, "trimming estimators need all four (d, z) cells nonempty");
  for (auto* c : {&e.y11, &e.y10, &e.y00, &e.y01}) std::sort(c->begin(), c->end());

  e.p_a = ed0;
  e.p_n = 1.0 - ed1;
  e.p_c = ed1 - ed0;
  e.alpha = e.p_a / ed1;
  e.gamma = e.p_n / (1.0 - ed0);
  e.e_z = static_cast<double>(nz) / N;
  e.e_dz = static_cast<double>(n11) / N;
  e.e_d_1mz = static_cast<double>(n10) / N;
  e.e_1md_z = static_cast<double>(n01) / N;
  e.e_1md_1mz = static_cast<double>(n00) / N;

  e.q11_alpha = detail::nr_quantile(e.y11, e.alpha);
  e.q11_1malpha = detail::nr_quantile(e.y11, 1.0 - e.alpha);
  e.q00_gamma = detail::nr_quantile(e.y00, e.gamma);
  e.q00_1mgamma = detail::nr_quantile(e.y00, 1.0 - e.gamma);

  const double m10 = detail::plain_mean(e.y10), m01 = detail::plain_mean(e.y01);
  using detail::trim_piece;
  e.lb[0] = trim_piece(e.y11, e.q11_alpha, true).mean - m10;
  e.ub[0] = trim_piece(e.y11, e.q11_1malpha, false).mean - m10;
  e.lb[1] = m01 - trim_piece(e.y00, e.q00_1mgamma, false).mean;
  e.ub[1] = m01 - trim_piece(e.y00, e.q00_gamma, true).mean;
  e.lb[2] = trim_piece(e.y11, e.q11_1malpha, true).mean - trim_piece(e.y00, e.q00_gamma, false).mean;
  e.ub[2] = trim_piece(e.y11, e.q11_alpha, false).mean - trim_piece(e.y00, e.q00_1mgamma, true).mean;
  return e;
}

struct AsymptoticVariances {
  std::array<double, 4> v_lb{}, v_ub{};  // V_LB1..V_LB4, V_UB1..V_UB4
  double v_c1 = 0.0, v_c2 = 0.0;
  double v_alpha1 = 0.0, v_alpha2 = 0.0, v_gamma1 = 0.0, v_gamma2 = 0.0;
  std::array<double, 3> sigma_lb{}, sigma_ub{};  // asymptotic sd of sqrt(N)(estimate - bound)
  std::vector<std::string> substitutions;
};

inline AsymptoticVariances asymptotic_variances(const TrimmingEstimates& e) {
  AsymptoticVariances v;
  const double pa = e.p_a, pn = e.p_n, a = e.alpha, g = e.gamma, ez = e.e_z;
  v.v_alpha1 = a * a * ((1.0 - pa / a) / (ez * pa / a) + (1.0 - pa) / ((1.0 - ez) * pa));
  v.v_alpha2 = (1 - a) * (1 - a) * ((1.0 - pa / (1 - a)) / (ez * pa / (1 - a)) + (1.0 - pa) / ((1.0 - ez) * pa));
  v.v_gamma1 = g * g * ((1.0 - pn / g) / ((1.0 - ez) * pn / g) + (1.0 - pn) / (ez * pn));
  v.v_gamma2 = (1 - g) * (1 - g) * ((1.0 - pn / (1 - g)) / ((1.0 - ez) * pn / (1 - g)) + (1.0 - pn) / (ez * pn));
  v.v_c1 = detail::plain_var(e.y10) / e.e_d_1mz;
  v.v_c2 = detail::plain_var(e.y01) / e.e_1md_z;

  auto term = [](const std::vector<double>& cell, double cut, bool below, double mass, double share, double v_share,
                 const char* name) {
    auto p = detail::trim_piece(cell, cut, below);
    if (p.count < 2) throw Error(ErrorKind::EmptyTrimmedCell, std::string(name) + ": trimmed cell has fewer than 2 observations");
    const double gap = cut - p.mean;
    return p.var / (mass * share) + gap * gap * (1.0 - share) / (mass * share) + (gap / share) * (gap / share) * v_share;
  };
  v.v_lb[0] = term(e.y11, e.q11_alpha, true, e.e_dz, a, v.v_alpha1, "LB1");
  v.v_ub[0] = term(e.y11, e.q11_1malpha, false, e.e_dz, a, v.v_alpha1, "UB1");
  v.v_lb[1] = term(e.y00, e.q00_1mgamma, false, e.e_1md_1mz, g, v.v_gamma1, "LB2");
  v.v_ub[1] = term(e.y00, e.q00_gamma, true, e.e_1md_1mz, g, v.v_gamma1, "UB2");
  v.v_lb[2] = term(e.y11, e.q11_1malpha, true, e.e_dz, 1 - a, v.v_alpha2, "LB3");
  v.v_lb[3] = term(e.y00, e.q00_gamma, false, e.e_1md_1mz, 1 - g, v.v_gamma2, "LB4");
  v.v_ub[2] = term(e.y11, e.q11_alpha, false, e.e_dz, 1 - a, v.v_alpha2, "UB3");
  v.v_ub[3] = term(e.y00, e.q00_1mgamma, true, e.e_1md_1mz, 1 - g, v.v_gamma2, "UB4");

  v.sigma_lb = {std::sqrt(v.v_lb[0] + v.v_c1), std::sqrt(v.v_lb[1] + v.v_c2), std::sqrt(v.v_lb[2] + v.v_lb[3])};
  v.sigma_ub = {std::sqrt(v.v_ub[0] + v.v_c1), std::sqrt(v.v_ub[1] + v.v_c2), std::sqrt(v.v_ub[2] + v.v_ub[3])};
  v.substitutions = {
      "E[Z], E[DZ], E[D(1-Z)], E[(1-D)Z], E[(1-D)(1-Z)] replaced by sample frequencies",
      "p_a, p_n, alpha, gamma replaced by their sample analogs",
      "population quantiles replaced by nearest-rank sample quantiles",
      "conditional variances computed on trimmed sub-cells with denominator n_cell",
  };
  return v;
}

inline AsymptoticVariances asymptotic_variances(const Sample& s) { return asymptotic_variances(trimming_estimators(s)); }

struct ImCi {
  Interval ci;
  double c_bar = 0.0;
};

/// Confidence interval for a partially identified parameter; se_* are on the sqrt(n) scale.
inline ImCi imbens_manski_ci(double lb, double ub, double se_lb, double se_ub, std::size_t n, double level = 0.95) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::BadLevel, "level must lie in (0, 1)");
  if (se_lb < 0.0 || se_ub < 0.0 || std::isnan(se_lb) || std::isnan(se_ub))
    throw Error(ErrorKind::NegativeSe, "standard errors must be nonnegative");
  if (lb > ub) throw Error(ErrorKind::BadInput, "lower bound exceeds upper bound");
  if (n == 0) throw Error(ErrorKind::BadInput, "sample size must be positive");
  const double one_sided = normal_quantile(level);
  const double two_sided = normal_quantile(0.5 * (1.0 + level));
  const double se_max = std::max(se_lb, se_ub);
  if (se_max == 0.0) return {Interval{lb, ub}, one_sided};
  const double rn = std::sqrt(static_cast<double>(n));
  const double k = rn * (ub - lb) / se_max;
  auto f = [&](double c) { return normal_cdf(c + k) - normal_cdf(-c) - level; };
  double lo = one_sided, hi = two_sided;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  const double c = 0.5 * (lo + hi);
  return {Interval{lb - c * se_lb / rn, ub + c * se_ub / rn}, c};
}

struct BoundEstimate {
  std::string name;
  double lb = 0.0, ub = 0.0;
  double se_lb = 0.0, se_ub = 0.0;  // sqrt(n) scale
  std::size_t n = 0;
  MaybeEmptyInterval ci;
  double c_bar = 0.0;
};

struct A3Inference {
  TrimmingEstimates estimates;
  AsymptoticVariances variances;
  std::array<BoundEstimate, 3> bounds;
  bool instrument_swapped = false;
  double level = 0.95;
};

/// Estimates, standard errors and CIs for the A3 bounds. A negative first stage is handled on
/// Z' = 1 - Z and mapped back to the original labels.
inline A3Inference a3_inference(const Sample& s, double level = 0.95) {
  auto cs = cell_stats(s);
  A3Inference out;
  out.level = level;
  out.instrument_swapped = classify_first_stage(cs.first_stage()) == FirstStageSign::Negative;
  const Sample* src = &s;
  std::optional<Sample> swapped;
  if (out.instrument_swapped) {
    swapped = s.relabeled();
    src = &*swapped;
  }
  out.estimates = trimming_estimators(*src);
  out.variances = asymptotic_variances(out.estimates);
  static const std::array<const char*, 3> names{"delta_1a", "delta_0n", "delta_1c + theta_0c"};
  static const std::array<const char*, 3> swapped_names{"delta_1a", "delta_0n", "theta_1df - delta_1df"};
  for (std::size_t i = 0; i < 3; ++i) {
    auto& b = out.bounds[i];
    b.n = out.estimates.n;
    b.lb = out.estimates.lb[i];
    b.ub = out.estimates.ub[i];
    b.se_lb = out.variances.sigma_lb[i];
    b.se_ub = out.variances.sigma_ub[i];
    auto r = imbens_manski_ci(b.lb, b.ub, b.se_lb, b.se_ub, b.n, level);
    b.ci = r.ci;
    b.c_bar = r.c_bar;
    b.name = names[i];
    if (out.instrument_swapped) {
      b.name = swapped_names[i];
      if (i < 2) {
        // delta_dt flips sign when the instrument is swapped
        std::swap(b.lb, b.ub);
        b.lb = -b.lb;
        b.ub = -b.ub;
        std::swap(b.se_lb, b.se_ub);
        b.ci = Interval{-r.ci.hi, -r.ci.lo};
      }
    }
  }
  return out;
}

}  // namespace robustiv
