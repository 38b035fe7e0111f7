#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "robustiv/error.hpp"

namespace robustiv {

// Numerical tolerances shared across modules.
inline constexpr double kTauTest = 1e-9;
inline constexpr double kTauFirstStage = 1e-12;
inline constexpr double kEpsProb = 1e-10;
inline constexpr double kProbTol = 1e-12;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  bool operator==(const Interval&) const = default;
};

/// An interval or the empty set.
using MaybeEmptyInterval = std::optional<Interval>;

inline Interval make_interval(double a, double b) {
  return a <= b ? Interval{a, b} : Interval{b, a};
}

inline Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

enum class ComplianceType { a = 0, c = 1, df = 2, n = 3 };

inline constexpr std::array<ComplianceType, 4> kAllTypes{ComplianceType::a, ComplianceType::c,
                                                         ComplianceType::df, ComplianceType::n};

inline const char* to_string(ComplianceType t) {
  switch (t) {
    case ComplianceType::a: return "a";
    case ComplianceType::c: return "c";
    case ComplianceType::df: return "df";
    case ComplianceType::n: return "n";
  }
  return "?";
}

/// Type map induced by swapping the instrument arms: compliers and defiers trade places.
inline ComplianceType relabel_type(ComplianceType t) {
  switch (t) {
    case ComplianceType::c: return ComplianceType::df;
    case ComplianceType::df: return ComplianceType::c;
    default: return t;
  }
}

struct TypeProbabilities {
  double p_a = 0.0;
  double p_c = 0.0;
  double p_df = 0.0;
  double p_n = 0.0;

  double operator[](ComplianceType t) const {
    switch (t) {
      case ComplianceType::a: return p_a;
      case ComplianceType::c: return p_c;
      case ComplianceType::df: return p_df;
      case ComplianceType::n: return p_n;
    }
    return 0.0;
  }

  double total() const { return p_a + p_c + p_df + p_n; }

  bool valid(double tol = kProbTol) const {
    for (auto t : kAllTypes)
      if ((*this)[t] < -tol || (*this)[t] > 1.0 + tol) return false;
    return std::abs(total() - 1.0) <= tol;
  }
};

enum class AssumptionMenu { A1, A2, A3 };

inline const char* to_string(AssumptionMenu m) {
  switch (m) {
    case AssumptionMenu::A1: return "A1";
    case AssumptionMenu::A2: return "A2";
    case AssumptionMenu::A3: return "A3";
  }
  return "?";
}

enum class EntryKind { Point, Interval, FullRange, Empty };

inline const char* to_string(EntryKind k) {
  switch (k) {
    case EntryKind::Point: return "point";
    case EntryKind::Interval: return "interval";
    case EntryKind::FullRange: return "full_range";
    case EntryKind::Empty: return "empty";
  }
  return "?";
}

/// One component of the identified set. FullRange entries still carry their bracket.
struct GammaEntry {
  EntryKind kind = EntryKind::Empty;
  double lo = 0.0;
  double hi = 0.0;

  static GammaEntry point(double v) { return {EntryKind::Point, v, v}; }
  static GammaEntry interval(double lo, double hi) {
    if (lo == hi) return point(lo);
    auto iv = make_interval(lo, hi);
    return {EntryKind::Interval, iv.lo, iv.hi};
  }
  static GammaEntry interval(const Interval& iv) { return interval(iv.lo, iv.hi); }
  static GammaEntry full_range(double lo, double hi) { return {EntryKind::FullRange, lo, hi}; }
  static GammaEntry empty() { return {}; }

  bool is_empty() const { return kind == EntryKind::Empty; }
  Interval bracket() const { return {lo, hi}; }
  bool contains(double v, double tol = 0.0) const {
    return !is_empty() && v >= lo - tol && v <= hi + tol;
  }

  GammaEntry negated() const {
    GammaEntry e = *this;
    e.lo = -hi;
    e.hi = -lo;
    return e;
  }

  bool operator==(const GammaEntry&) const = default;
};

inline constexpr std::size_t kGammaSize = 20;

// Layout: theta_{z t} at 2t+z, delta_{d t} at 8+2t+d, p_t at 16+t.
inline constexpr std::size_t theta_index(int z, ComplianceType t) {
  return 2 * static_cast<std::size_t>(t) + static_cast<std::size_t>(z);
}
inline constexpr std::size_t delta_index(int d, ComplianceType t) {
  return 8 + 2 * static_cast<std::size_t>(t) + static_cast<std::size_t>(d);
}
inline constexpr std::size_t prob_index(ComplianceType t) {
  return 16 + static_cast<std::size_t>(t);
}

inline std::string component_name(std::size_t i) {
  if (i < 8) return "theta_" + std::to_string(i % 2) + to_string(ComplianceType(i / 2));
  if (i < 16) return "delta_" + std::to_string(i % 2) + to_string(ComplianceType((i - 8) / 2));
  return std::string("p_") + to_string(ComplianceType(i - 16));
}

struct GammaSet {
  std::array<GammaEntry, kGammaSize> entries{};
  AssumptionMenu menu = AssumptionMenu::A1;
  std::string case_tag;
  std::vector<std::string> linked_constraints;

  bool empty() const {
    return std::any_of(entries.begin(), entries.end(),
                       [](const GammaEntry& e) { return e.is_empty(); });
  }

  GammaEntry& theta(int z, ComplianceType t) { return entries[theta_index(z, t)]; }
  GammaEntry& delta(int d, ComplianceType t) { return entries[delta_index(d, t)]; }
  GammaEntry& prob(ComplianceType t) { return entries[prob_index(t)]; }
  const GammaEntry& theta(int z, ComplianceType t) const { return entries[theta_index(z, t)]; }
  const GammaEntry& delta(int d, ComplianceType t) const { return entries[delta_index(d, t)]; }
  const GammaEntry& prob(ComplianceType t) const { return entries[prob_index(t)]; }

  static GammaSet make_empty(AssumptionMenu menu, std::string tag) {
    GammaSet g;
    g.menu = menu;
    g.case_tag = std::move(tag);
    return g;
  }

  void set_probabilities(const TypeProbabilities& p) {
    for (auto t : kAllTypes) prob(t) = GammaEntry::point(p[t]);
  }
};

/// Maps a set stated for the swapped instrument Z' = 1 - Z back to the original labels.
/// theta_{z t} = theta'_{1-z, t'}, delta_{d t} = -delta'_{d, t'}, p_t = p'_{t'}.
/// The map is an involution.
inline GammaSet relabel_gamma(const GammaSet& g) {
  GammaSet out = g;
  if (g.empty()) return out;
  for (auto t : kAllTypes) {
    auto tt = relabel_type(t);
    for (int z = 0; z < 2; ++z) out.theta(z, t) = g.theta(1 - z, tt);
    for (int d = 0; d < 2; ++d) out.delta(d, t) = g.delta(d, tt).negated();
    out.prob(t) = g.prob(tt);
  }
  return out;
}

inline TypeProbabilities relabel_probabilities(const TypeProbabilities& p) {
  return {p.p_a, p.p_df, p.p_c, p.p_n};
}

}  // namespace robustiv
