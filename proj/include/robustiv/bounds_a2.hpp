#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "robustiv/bounds_a1.hpp"
#include "robustiv/bounds_a3.hpp"
#include "robustiv/empirics.hpp"
#include "robustiv/options.hpp"
#include "robustiv/parallel.hpp"
#include "robustiv/sample.hpp"
#include "robustiv/types.hpp"
#include "robustiv/validity.hpp"

namespace robustiv {

enum class LowerSource { Zero, SlackD0, SlackD1 };

inline const char* to_string(LowerSource s) {
  switch (s) {
    case LowerSource::Zero: return "zero";
    case LowerSource::SlackD0: return "slack_d0";
    case LowerSource::SlackD1: return "slack_d1";
  }
  return "?";
}

/// Identified set for the defier share under RA + ER.
struct PdfBound {
  MaybeEmptyInterval interval;
  double lower = 0.0;  // max(slack_d0, slack_d1, 0)
  double upper = 0.0;  // min(E[D|Z=0], E[1-D|Z=1])
  LowerSource lower_source = LowerSource::Zero;
  SetClass set_class = SetClass::Borel;
  Slacks slacks;
  double overlap = 0.0;
  bool overlap_ok = true;
};

namespace detail {

inline PdfBound assemble_pdf_bound(const Slacks& sl, double overlap, double upper, double tau) {
  PdfBound b;
  b.slacks = sl;
  b.overlap = overlap;
  b.overlap_ok = overlap <= tau;
  b.lower = 0.0;
  if (sl.d0 > b.lower) b.lower = sl.d0, b.lower_source = LowerSource::SlackD0;
  if (sl.d1 > b.lower) b.lower = sl.d1, b.lower_source = LowerSource::SlackD1;
  b.upper = upper;
  if (b.overlap_ok && b.lower <= b.upper) b.interval = Interval{b.lower, b.upper};
  return b;
}

}  // namespace detail

inline PdfBound pdf_bounds(const Sample& s, const ValidityOptions& v = {}) {
  auto cs = cell_stats(s);
  auto b = detail::assemble_pdf_bound(late_inequality_slack(s, v), overlap_statistic(s, v),
                                      std::min(cs.p[1][0], cs.p[0][1]), v.tau);
  b.set_class = v.set_class;
  return b;
}

/// Type shares implied by a defier share under RA + ER.
struct A2Shares {
  double p_a = 0.0, p_c = 0.0, p_df = 0.0, p_n = 0.0;
};

inline A2Shares a2_shares(const CellStats& cs, double p_df) {
  A2Shares sh;
  sh.p_df = p_df;
  sh.p_a = cs.p[1][0] - p_df;
  sh.p_n = cs.p[0][1] - p_df;
  sh.p_c = cs.p[1][1] - sh.p_a;
  return sh;
}

/// Pointwise cdf bounds at one defier share. Index [z] selects the arm that built the curve.
struct DistBounds {
  A2Shares shares;
  std::array<SteppedCdf, 2> f1a_lb_arm, f1a_ub_arm, f0n_lb_arm, f0n_ub_arm;
  SteppedCdf f1a_lb, f1a_ub, f0n_lb, f0n_ub;
  std::vector<double> grid1, grid0;        // outcome values with D=1 and D=0
  std::array<std::vector<double>, 2> s1;   // P(Y<=y, D=1 | Z=z) on grid1
  std::array<std::vector<double>, 2> s0;   // P(Y<=y, D=0 | Z=z) on grid0

  // Cdfs of compliers and defiers implied by a candidate F_1a (on grid1) or F_0n (on grid0).
  std::vector<double> f1c(const std::vector<double>& f1a) const { return mix(s1[1], f1a, shares.p_a, shares.p_c); }
  std::vector<double> f1df(const std::vector<double>& f1a) const { return mix(s1[0], f1a, shares.p_a, shares.p_df); }
  std::vector<double> f0c(const std::vector<double>& f0n) const { return mix(s0[0], f0n, shares.p_n, shares.p_c); }
  std::vector<double> f0df(const std::vector<double>& f0n) const { return mix(s0[1], f0n, shares.p_n, shares.p_df); }

 private:
  static std::vector<double> mix(const std::vector<double>& sub, const std::vector<double>& f, double w, double denom) {
    std::vector<double> out(sub.size());
    for (std::size_t k = 0; k < sub.size(); ++k) out[k] = (sub[k] - w * f[k]) / denom;
    return out;
  }
};

struct MeanBounds {
  MaybeEmptyInterval mu_1a;
  MaybeEmptyInterval mu_0n;
};

/// Bounds at one defier share under RA + ER.
struct A2Slice {
  double p_df = 0.0, p_a = 0.0, p_c = 0.0, p_n = 0.0;
  MaybeEmptyInterval mu_1a_bounds, mu_0n_bounds;
  MaybeEmptyInterval mu_1c_bounds, mu_0c_bounds, mu_1df_bounds, mu_0df_bounds;
  MaybeEmptyInterval theta_c_bounds, theta_df_bounds;
};

enum class SliceKind { ZeroDefiers, Interior, BoundaryNoAlwaysTakers, BoundaryNoNeverTakers, BoundaryNoAlwaysOrNever };

inline const char* to_string(SliceKind k) {
  switch (k) {
    case SliceKind::ZeroDefiers: return "p_df=0 (A1 structure)";
    case SliceKind::Interior: return "interior";
    case SliceKind::BoundaryNoAlwaysTakers: return "upper boundary, p_a=0";
    case SliceKind::BoundaryNoNeverTakers: return "upper boundary, p_n=0";
    case SliceKind::BoundaryNoAlwaysOrNever: return "upper boundary, p_a=p_n=0";
  }
  return "?";
}

struct A2SliceRecord {
  double p_df = 0.0;
  SliceKind kind = SliceKind::Interior;
  bool skipped = false;  // a derived share fell below kEpsProb
  GammaSet set;
  std::optional<A2Slice> slice;
};

struct A2Result {
  PdfBound pdf;
  std::vector<A2SliceRecord> slices;
  GammaSet summary;
  std::array<bool, kGammaSize> disconnected{};
};

/// Union of per-slice sets, component-wise, with a flag where the union has gaps.
inline GammaSet union_of(const std::vector<const GammaSet*>& sets, AssumptionMenu menu, std::string tag,
                         std::array<bool, kGammaSize>* disconnected = nullptr) {
  GammaSet out = GammaSet::make_empty(menu, std::move(tag));
  if (disconnected) disconnected->fill(false);
  std::vector<const GammaSet*> live;
  for (auto* g : sets)
    if (!g->empty()) live.push_back(g);
  if (live.empty()) return out;
  for (std::size_t i = 0; i < kGammaSize; ++i) {
    std::vector<GammaEntry> es;
    for (auto* g : live) es.push_back(g->entries[i]);
    std::sort(es.begin(), es.end(), [](const GammaEntry& a, const GammaEntry& b) { return a.lo < b.lo; });
    bool all_full = true, all_same_point = true;
    double lo = es.front().lo, hi = es.front().hi;
    bool gap = false;
    for (const auto& e : es) {
      all_full = all_full && e.kind == EntryKind::FullRange;
      all_same_point = all_same_point && e.kind == EntryKind::Point && e.lo == es.front().lo;
      if (e.lo > hi + 1e-12) gap = true;
      hi = std::max(hi, e.hi);
    }
    if (all_full) out.entries[i] = GammaEntry::full_range(lo, hi);
    else if (all_same_point) out.entries[i] = GammaEntry::point(lo);
    else out.entries[i] = GammaEntry{EntryKind::Interval, lo, hi};
    if (disconnected) (*disconnected)[i] = gap;
  }
  return out;
}

/// Precomputed A2 machinery for one sample.
class A2Engine {
 public:
  explicit A2Engine(const Sample& s, AnalysisOptions opt = {})
      : s_(s), opt_(std::move(opt)), cs_(cell_stats(s)), range_(resolve_range(s, opt_.range)),
        cells_{SortedCell(s.sorted_cell(0, 0)), SortedCell(s.sorted_cell(0, 1)),
               SortedCell(s.sorted_cell(1, 0)), SortedCell(s.sorted_cell(1, 1))} {
    pdf_ = pdf_bounds(s, opt_.validity);
    for (int d = 0; d < 2; ++d) {
      auto a = s.sorted_cell(d, 0);
      auto b = s.sorted_cell(d, 1);
      std::vector<double> g;
      g.reserve(a.size() + b.size());
      std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(g));
      g.erase(std::unique(g.begin(), g.end()), g.end());
      grid_[d] = std::move(g);
      for (int z = 0; z < 2; ++z)
        sub_[d][z] = detail::sub_cdf_on(s.sorted_cell(d, z), static_cast<double>(cs_.n_arm[z]), grid_[d]);
    }
  }

  const PdfBound& pdf() const { return pdf_; }
  const CellStats& stats() const { return cs_; }
  const OutcomeRange& range() const { return range_; }
  const AnalysisOptions& options() const { return opt_; }

  /// Throws unless p_df is a usable point of the identified set with positive derived shares.
  A2Shares checked_shares(double p_df) const {
    if (!pdf_.interval)
      throw Error(ErrorKind::EmptyIdentifiedSet, "RA + ER is refuted by the data (defier set is empty)");
    auto sh = a2_shares(cs_, p_df);
    const double tol = 1e-12;
    if (!(p_df > 0.0) || p_df < pdf_.interval->lo - tol || !(p_df < pdf_.interval->hi) ||
        sh.p_a < kEpsProb || sh.p_n < kEpsProb || sh.p_c < kEpsProb)
      throw Error(ErrorKind::PdfNotInterior, "p_df = " + std::to_string(p_df) + " is not inside [" +
                                                 std::to_string(pdf_.interval->lo) + ", " +
                                                 std::to_string(pdf_.interval->hi) + ")");
    return sh;
  }

  DistBounds dist_bounds_at(double p_df) const {
    auto sh = checked_shares(p_df);
    DistBounds out;
    out.shares = sh;
    out.grid1 = grid_[1];
    out.grid0 = grid_[0];
    out.s1 = sub_[1];
    out.s0 = sub_[0];
    build_curves(1, sh.p_a, sh, out.f1a_lb_arm, out.f1a_ub_arm);
    build_curves(0, sh.p_n, sh, out.f0n_lb_arm, out.f0n_ub_arm);
    out.f1a_lb = cdf_envelope(out.f1a_lb_arm[0], out.f1a_lb_arm[1], EnvelopeKind::PointwiseMax);
    out.f1a_ub = cdf_envelope(out.f1a_ub_arm[0], out.f1a_ub_arm[1], EnvelopeKind::PointwiseMin);
    out.f0n_lb = cdf_envelope(out.f0n_lb_arm[0], out.f0n_lb_arm[1], EnvelopeKind::PointwiseMax);
    out.f0n_ub = cdf_envelope(out.f0n_ub_arm[0], out.f0n_ub_arm[1], EnvelopeKind::PointwiseMin);
    return out;
  }

  MeanBounds mean_bounds_at(double p_df, MeanMethod method) const {
    auto sh = checked_shares(p_df);
    return {group_mean_bounds(1, sh.p_a, sh, method), group_mean_bounds(0, sh.p_n, sh, method)};
  }

  A2Slice late_bounds_at(double p_df) const {
    auto sh = checked_shares(p_df);
    A2Slice sl;
    sl.p_df = p_df;
    sl.p_a = sh.p_a;
    sl.p_c = sh.p_c;
    sl.p_n = sh.p_n;
    sl.mu_1a_bounds = group_mean_bounds(1, sh.p_a, sh, opt_.mean_method);
    sl.mu_0n_bounds = group_mean_bounds(0, sh.p_n, sh, opt_.mean_method);
    if (!sl.mu_1a_bounds || !sl.mu_0n_bounds) return sl;
    const auto& m1 = *sl.mu_1a_bounds;
    const auto& m0 = *sl.mu_0n_bounds;
    auto mu1c = [&](double x) { return (cs_.ey[1][1] - sh.p_a * x) / (cs_.p[1][1] - sh.p_a); };
    auto mu1df = [&](double x) { return (cs_.ey[1][0] - sh.p_a * x) / (cs_.p[1][0] - sh.p_a); };
    auto mu0c = [&](double x) { return (cs_.ey[0][0] - sh.p_n * x) / (cs_.p[0][0] - sh.p_n); };
    auto mu0df = [&](double x) { return (cs_.ey[0][1] - sh.p_n * x) / (cs_.p[0][1] - sh.p_n); };
    sl.mu_1c_bounds = make_interval(mu1c(m1.lo), mu1c(m1.hi));
    sl.mu_1df_bounds = make_interval(mu1df(m1.lo), mu1df(m1.hi));
    sl.mu_0c_bounds = make_interval(mu0c(m0.lo), mu0c(m0.hi));
    sl.mu_0df_bounds = make_interval(mu0df(m0.lo), mu0df(m0.hi));
    sl.theta_c_bounds = corners(m1, m0, mu1c, mu0c);
    sl.theta_df_bounds = corners(m1, m0, mu1df, mu0df);
    return sl;
  }

  A2Result identified_set() const {
    A2Result res;
    res.pdf = pdf_;
    if (!pdf_.interval) {
      res.summary = GammaSet::make_empty(AssumptionMenu::A2, "A2: refuted (defier set empty)");
      return res;
    }
    const double lo = pdf_.interval->lo, hi = pdf_.interval->hi;
    std::vector<double> pts{lo};
    if (hi > lo) {
      const auto g = opt_.grid_points;
      for (std::size_t k = 1; k <= g; ++k)
        pts.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(g + 1));
      pts.push_back(hi);
    }
    res.slices.resize(pts.size());
    parallel_for(pts.size(), opt_.threads, [&](std::size_t i) { res.slices[i] = slice_record(pts[i]); });
    std::vector<const GammaSet*> sets;
    for (const auto& r : res.slices)
      if (!r.skipped) sets.push_back(&r.set);
    res.summary = union_of(sets, AssumptionMenu::A2, "A2: union over the p_df grid", &res.disconnected);
    return res;
  }

  A2SliceRecord slice_record(double p_df) const {
    A2SliceRecord rec;
    rec.p_df = p_df;
    const double upper = pdf_.interval->hi;
    if (p_df <= 0.0) {
      rec.kind = SliceKind::ZeroDefiers;
      rec.set = identified_set_a1(s_, opt_);
      rec.set.menu = AssumptionMenu::A2;
      rec.set.case_tag = "A2: p_df = 0 (" + rec.set.case_tag + ")";
      return rec;
    }
    if (p_df >= upper) return boundary_record(p_df);
    auto sh = a2_shares(cs_, p_df);
    if (sh.p_a < kEpsProb || sh.p_n < kEpsProb || sh.p_c < kEpsProb) {
      rec.skipped = true;
      rec.set = GammaSet::make_empty(AssumptionMenu::A2, "A2: skipped, derived share below tolerance");
      return rec;
    }
    rec.slice = late_bounds_at(p_df);
    const auto& sl = *rec.slice;
    GammaSet g;
    g.menu = AssumptionMenu::A2;
    g.case_tag = "A2: interior p_df";
    if (!sl.theta_c_bounds || !sl.theta_df_bounds) {
      rec.set = GammaSet::make_empty(AssumptionMenu::A2, "A2: cdf bounds cross at this p_df");
      return rec;
    }
    fill_common(g, sl.mu_1a_bounds, sl.mu_0n_bounds, GammaEntry::interval(*sl.theta_c_bounds),
                GammaEntry::interval(*sl.theta_df_bounds), {sh.p_a, sh.p_c, sh.p_df, sh.p_n});
    rec.set = std::move(g);
    return rec;
  }

 private:
  A2SliceRecord boundary_record(double p_df) const {
    A2SliceRecord rec;
    rec.p_df = p_df;
    const double ed0 = cs_.p[1][0], en1 = cs_.p[0][1];
    const double tol = 1e-12;
    auto sh = a2_shares(cs_, p_df);
    GammaSet g;
    g.menu = AssumptionMenu::A2;
    const auto& r = range_;
    if (std::abs(ed0 - en1) <= tol || (sh.p_a < kEpsProb && sh.p_n < kEpsProb)) {
      rec.kind = SliceKind::BoundaryNoAlwaysOrNever;
      g.case_tag = "A2: p_df at upper bound, p_a = p_n = 0";
      sh.p_a = 0.0;
      sh.p_n = 0.0;
      const double th_c = cs_.mean_or_throw(1, 1) - cs_.mean_or_throw(0, 0);
      const double th_df = cs_.mean_or_throw(1, 0) - cs_.mean_or_throw(0, 1);
      fill_common(g, std::nullopt, std::nullopt, GammaEntry::point(th_c), GammaEntry::point(th_df),
                  {0.0, sh.p_c, p_df, 0.0});
    } else if (ed0 < en1) {
      rec.kind = SliceKind::BoundaryNoAlwaysTakers;
      g.case_tag = "A2: p_df at upper bound, p_a = 0";
      sh.p_a = 0.0;
      sh.p_c = cs_.p[1][1];
      auto m0 = group_mean_bounds(0, sh.p_n, sh, opt_.mean_method);
      if (!m0) {
        rec.set = GammaSet::make_empty(AssumptionMenu::A2, "A2: cdf bounds cross at this p_df");
        return rec;
      }
      auto mu0c = [&](double x) { return (cs_.ey[0][0] - sh.p_n * x) / (cs_.p[0][0] - sh.p_n); };
      auto mu0df = [&](double x) { return (cs_.ey[0][1] - sh.p_n * x) / (cs_.p[0][1] - sh.p_n); };
      const double m11 = cs_.mean_or_throw(1, 1), m10 = cs_.mean_or_throw(1, 0);
      auto th_c = make_interval(m11 - mu0c(m0->lo), m11 - mu0c(m0->hi));
      auto th_df = make_interval(m10 - mu0df(m0->lo), m10 - mu0df(m0->hi));
      fill_common(g, std::nullopt, m0, GammaEntry::interval(th_c), GammaEntry::interval(th_df),
                  {0.0, sh.p_c, p_df, sh.p_n});
    } else {
      rec.kind = SliceKind::BoundaryNoNeverTakers;
      g.case_tag = "A2: p_df at upper bound, p_n = 0";
      sh.p_n = 0.0;
      sh.p_c = cs_.p[0][0];
      auto m1 = group_mean_bounds(1, sh.p_a, sh, opt_.mean_method);
      if (!m1) {
        rec.set = GammaSet::make_empty(AssumptionMenu::A2, "A2: cdf bounds cross at this p_df");
        return rec;
      }
      auto mu1c = [&](double x) { return (cs_.ey[1][1] - sh.p_a * x) / (cs_.p[1][1] - sh.p_a); };
      auto mu1df = [&](double x) { return (cs_.ey[1][0] - sh.p_a * x) / (cs_.p[1][0] - sh.p_a); };
      const double m00 = cs_.mean_or_throw(0, 0), m01 = cs_.mean_or_throw(0, 1);
      auto th_c = make_interval(mu1c(m1->lo) - m00, mu1c(m1->hi) - m00);
      auto th_df = make_interval(mu1df(m1->lo) - m01, mu1df(m1->hi) - m01);
      fill_common(g, m1, std::nullopt, GammaEntry::interval(th_c), GammaEntry::interval(th_df),
                  {sh.p_a, sh.p_c, p_df, 0.0});
    }
    (void)r;
    rec.set = std::move(g);
    return rec;
  }

  void fill_common(GammaSet& g, const std::optional<Interval>& mu1a, const std::optional<Interval>& mu0n,
                   GammaEntry theta_c, GammaEntry theta_df, const TypeProbabilities& p) const {
    using T = ComplianceType;
    for (int z = 0; z < 2; ++z) {
      g.theta(z, T::a) = difference_entry(mu1a, std::nullopt, range_);
      g.theta(z, T::n) = difference_entry(std::nullopt, mu0n, range_);
      g.theta(z, T::c) = theta_c;
      g.theta(z, T::df) = theta_df;
    }
    for (auto t : kAllTypes)
      for (int d = 0; d < 2; ++d) g.delta(d, t) = GammaEntry::point(0.0);
    g.set_probabilities(p);
    g.linked_constraints = {"theta_0t = theta_1t for every type t", "delta_dt = 0 for every d and t",
                            "theta_c and theta_df move together through (mu_1a, mu_0n) at fixed p_df"};
  }

  template <class F, class G>
  static Interval corners(const Interval& m1, const Interval& m0, F f1, G f0) {
    double lo = INFINITY, hi = -INFINITY;
    for (double x : {m1.lo, m1.hi})
      for (double y : {m0.lo, m0.hi}) {
        double v = f1(x) - f0(y);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    return {lo, hi};
  }

  // Curves for the type that takes treatment d in both arms (always-takers for d=1,
  // never-takers for d=0). In arm z=d the cell also holds compliers, in arm 1-d defiers.
  void build_curves(int d, double share, const A2Shares& sh, std::array<SteppedCdf, 2>& lb,
                    std::array<SteppedCdf, 2>& ub) const {
    const auto& g = grid_[d];
    for (int z = 0; z < 2; ++z) {
      const double other = z == d ? sh.p_c : sh.p_df;
      std::vector<double> lo(g.size()), hi(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) {
        lo[k] = std::clamp((sub_[d][z][k] - other) / share, 0.0, 1.0);
        hi[k] = std::min(sub_[d][z][k] / share, 1.0);
      }
      lb[z] = SteppedCdf(g, std::move(lo));
      ub[z] = SteppedCdf(g, std::move(hi));
    }
  }

  MaybeEmptyInterval group_mean_bounds(int d, double share, const A2Shares& sh, MeanMethod method) const {
    if (method == MeanMethod::OuterClosedForm) {
      double lo = -INFINITY, hi = INFINITY;
      for (int z = 0; z < 2; ++z) {
        const auto& cell = cells_[static_cast<std::size_t>(2 * d + z)];
        const double q = std::min(share / cs_.p[d][z], 1.0);
        lo = std::max(lo, cell.trimmed_mean(q, Tail::Lower));
        hi = std::min(hi, cell.trimmed_mean(q, Tail::Upper));
      }
      if (lo > hi) return std::nullopt;
      return Interval{lo, hi};
    }
    // one pass over the merged grid: mean of min-of-upper and max-of-lower curves
    const auto& g = grid_[d];
    const auto& sc = sub_[d][d];
    const auto& sd = sub_[d][1 - d];
    double mean_ub = 0.0, mean_lb = 0.0, prev_ub = 0.0, prev_lb = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double ub = std::min({sub_[d][0][k] / share, sub_[d][1][k] / share, 1.0});
      const double lb = std::max({std::clamp((sc[k] - sh.p_c) / share, 0.0, 1.0),
                                  std::clamp((sd[k] - sh.p_df) / share, 0.0, 1.0)});
      if (ub < lb - 1e-12) return std::nullopt;
      mean_ub += g[k] * (ub - prev_ub);
      mean_lb += g[k] * (lb - prev_lb);
      prev_ub = ub;
      prev_lb = lb;
    }
    if (std::abs(prev_ub - 1.0) > kFullCdfTol || std::abs(prev_lb - 1.0) > kFullCdfTol)
      throw Error(ErrorKind::NotAFullCdf, "envelope does not reach 1");
    return Interval{mean_ub, std::max(mean_ub, mean_lb)};
  }

  const Sample& s_;
  AnalysisOptions opt_;
  CellStats cs_;
  OutcomeRange range_;
  std::array<SortedCell, 4> cells_;  // index 2d+z
  PdfBound pdf_;
  std::array<std::vector<double>, 2> grid_;
  std::array<std::array<std::vector<double>, 2>, 2> sub_;  // [d][z] on grid_[d]
};

inline DistBounds dist_bounds_at(const Sample& s, double p_df, const AnalysisOptions& opt = {}) {
  return A2Engine(s, opt).dist_bounds_at(p_df);
}

inline MeanBounds mean_bounds_at(const Sample& s, double p_df, MeanMethod method, const AnalysisOptions& opt = {}) {
  return A2Engine(s, opt).mean_bounds_at(p_df, method);
}

inline A2Slice late_bounds_at(const Sample& s, double p_df, const AnalysisOptions& opt = {}) {
  return A2Engine(s, opt).late_bounds_at(p_df);
}

inline A2Result identified_set_a2(const Sample& s, const AnalysisOptions& opt = {}) {
  return A2Engine(s, opt).identified_set();
}

/// Closed forms for a binary outcome.
struct BinaryBounds {
  PdfBound pdf;
  CellStats stats;
  std::array<std::array<double, 2>, 2> q1{};  // P(Y=1, D=d | Z=z), indexed [d][z]
  std::array<std::array<double, 2>, 2> q0{};  // P(Y=0, D=d | Z=z)

  MeanBounds at(double p_df) const {
    const double pa = stats.p[1][0] - p_df;
    const double pn = stats.p[0][1] - p_df;
    const double pc = stats.p[1][1] - pa;
    if (!pdf.interval)
      throw Error(ErrorKind::EmptyIdentifiedSet, "RA + ER is refuted by the data (defier set is empty)");
    if (!(p_df > 0.0) || p_df < pdf.interval->lo - 1e-12 || !(p_df < pdf.interval->hi) || pa < kEpsProb ||
        pn < kEpsProb || pc < kEpsProb)
      throw Error(ErrorKind::PdfNotInterior, "p_df = " + std::to_string(p_df));
    MeanBounds m;
    Interval a{std::max({(q1[1][1] - pc) / pa, (q1[1][0] - p_df) / pa, 0.0}),
               std::min({q1[1][1] / pa, q1[1][0] / pa, 1.0})};
    Interval n{std::max({(q1[0][0] - pc) / pn, (q1[0][1] - p_df) / pn, 0.0}),
               std::min({q1[0][0] / pn, q1[0][1] / pn, 1.0})};
    if (a.lo <= a.hi) m.mu_1a = a;
    if (n.lo <= n.hi) m.mu_0n = n;
    return m;
  }
};

inline BinaryBounds binary_bounds(const Sample& s) {
  for (double v : s.support())
    if (v != 0.0 && v != 1.0) throw Error(ErrorKind::NotBinaryOutcome, "outcome takes a value other than 0 and 1");
  BinaryBounds b;
  b.stats = cell_stats(s);
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) {
      auto cell = s.sorted_cell(d, z);
      auto ones = static_cast<std::size_t>(cell.end() - std::lower_bound(cell.begin(), cell.end(), 1.0));
      const double arm = static_cast<double>(s.arm_size(z));
      b.q1[d][z] = static_cast<double>(ones) / arm;
      b.q0[d][z] = static_cast<double>(cell.size() - ones) / arm;
    }
  Slacks sl;
  for (int d = 0; d < 2; ++d) {
    const double v = std::max({b.q0[d][1 - d] - b.q0[d][d], b.q1[d][1 - d] - b.q1[d][d],
                               b.stats.p[d][1 - d] - b.stats.p[d][d], 0.0});
    (d == 0 ? sl.d0 : sl.d1) = v;
  }
  double overlap = -1.0;
  for (int d = 0; d < 2; ++d)
    overlap = std::max(overlap, std::max(b.q0[d][0], b.q0[d][1]) + std::max(b.q1[d][0], b.q1[d][1]) - 1.0);
  b.pdf = detail::assemble_pdf_bound(sl, overlap, std::min(b.stats.p[1][0], b.stats.p[0][1]), kTauTest);
  return b;
}

/// Type distributions reproducing the data when p_df = 0 and both LATE inequalities hold.
struct ZeroDefierConstruction {
  TypeProbabilities probs;
  bool zero_first_stage = false;
  std::vector<double> grid;  // pooled support
  std::vector<double> f1a, f1c, f0n, f0c, f0a, f1n;
};

inline ZeroDefierConstruction zero_defier_construction(const Sample& s, const ValidityOptions& v = {}) {
  auto cs = cell_stats(s);
  auto sl = late_inequality_slack(s, v);
  if (sl.max() > v.tau) throw Error(ErrorKind::Inapplicable, "LATE inequalities fail");
  auto sign = classify_first_stage(cs.first_stage());
  if (sign == FirstStageSign::Negative) throw Error(ErrorKind::Inapplicable, "negative first stage");

  ZeroDefierConstruction c;
  c.grid = s.support();
  std::array<std::array<std::vector<double>, 2>, 2> sub;
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) sub[d][z] = detail::sub_cdf_on(s.sorted_cell(d, z), static_cast<double>(cs.n_arm[z]), c.grid);
  const auto m = c.grid.size();
  auto ratio = [m](const std::vector<double>& num, double den) {
    std::vector<double> out(m, 0.0);
    if (den > 0.0)
      for (std::size_t k = 0; k < m; ++k) out[k] = num[k] / den;
    return out;
  };
  auto diff = [m](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(m);
    for (std::size_t k = 0; k < m; ++k) out[k] = a[k] - b[k];
    return out;
  };
  if (sign == FirstStageSign::Positive) {
    c.probs = {cs.p[1][0], cs.first_stage(), 0.0, cs.p[0][1]};
    c.f1a = ratio(sub[1][0], cs.p[1][0]);
    c.f0n = ratio(sub[0][1], cs.p[0][1]);
    c.f1c = ratio(diff(sub[1][1], sub[1][0]), c.probs.p_c);
    c.f0c = ratio(diff(sub[0][0], sub[0][1]), c.probs.p_c);
  } else {
    c.zero_first_stage = true;
    const double n = static_cast<double>(cs.n_total);
    const double pd = static_cast<double>(cs.n[1][0] + cs.n[1][1]) / n;
    c.probs = {pd, 0.0, 0.0, 1.0 - pd};
    std::vector<double> s1(m), s0(m);
    for (std::size_t k = 0; k < m; ++k) {
      s1[k] = (sub[1][0][k] * static_cast<double>(cs.n_arm[0]) + sub[1][1][k] * static_cast<double>(cs.n_arm[1])) / n;
      s0[k] = (sub[0][0][k] * static_cast<double>(cs.n_arm[0]) + sub[0][1][k] * static_cast<double>(cs.n_arm[1])) / n;
    }
    c.f1a = ratio(s1, pd);
    c.f0n = ratio(s0, 1.0 - pd);
    c.f1c.assign(m, 0.0);
    c.f0c.assign(m, 0.0);
  }
  c.f0a = c.f1a;
  c.f1n = c.f0n;
  auto check = [&](const std::vector<double>& f, double mass, const char* name) {
    if (mass <= 0.0) return;
    for (std::size_t k = 0; k < m; ++k) {
      if (f[k] < -1e-12 || f[k] > 1.0 + 1e-12 || (k > 0 && f[k] < f[k - 1] - 1e-12))
        throw Error(ErrorKind::Inapplicable, std::string("constructed ") + name + " is not a cdf");
    }
    if (std::abs(f.back() - 1.0) > 1e-9) throw Error(ErrorKind::Inapplicable, std::string("constructed ") + name + " does not reach 1");
  };
  check(c.f1a, c.probs.p_a, "F_1a");
  check(c.f0n, c.probs.p_n, "F_0n");
  check(c.f1c, c.probs.p_c, "F_1c");
  check(c.f0c, c.probs.p_c, "F_0c");
  return c;
}

/// Largest gap between observed sub-cdfs and the four type mixtures of a construction.
inline double mixture_reconstruction_error(const Sample& s, const ZeroDefierConstruction& c) {
  auto cs = cell_stats(s);
  const auto& p = c.probs;
  double err = 0.0;
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) {
      auto obs = detail::sub_cdf_on(s.sorted_cell(d, z), static_cast<double>(cs.n_arm[z]), c.grid);
      for (std::size_t k = 0; k < c.grid.size(); ++k) {
        double mix = 0.0;
        if (d == 1 && z == 1) mix = p.p_c * c.f1c[k] + p.p_a * c.f1a[k];
        if (d == 1 && z == 0) mix = p.p_a * c.f1a[k];
        if (d == 0 && z == 1) mix = p.p_n * c.f0n[k];
        if (d == 0 && z == 0) mix = p.p_c * c.f0c[k] + p.p_n * c.f0n[k];
        err = std::max(err, std::abs(obs[k] - mix));
      }
    }
  return err;
}

}  // namespace robustiv
