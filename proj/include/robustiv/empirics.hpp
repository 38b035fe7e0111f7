#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "robustiv/error.hpp"
#include "robustiv/sample.hpp"

namespace robustiv {

enum class Tail { Lower, Upper };

/// How a trimmed mean treats ties at the cutoff.
/// Fractional gives the boundary value partial weight so the kept mass is exactly `share`.
/// NearestRank keeps every observation on the kept side of the empirical quantile.
enum class TrimRule { Fractional, NearestRank };

inline const char* to_string(TrimRule r) {
  return r == TrimRule::Fractional ? "fractional" : "nearest_rank";
}

/// min{ y : ECDF(y) >= q } on ascending data.
inline double quantile_sorted(std::span<const double> v, double q) {
  if (v.empty()) throw Error(ErrorKind::EmptyCell, "quantile of an empty cell");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorKind::QuantileOutOfRange, "q must lie in (0, 1]");
  const auto n = v.size();
  const double dn = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(q * dn));
  k = std::clamp<std::size_t>(k, 1, n);
  // absorb rounding in q at exact rank boundaries
  const double level = q - kProbTol;
  while (k > 1 && static_cast<double>(k - 1) / dn >= level) --k;
  while (k < n && static_cast<double>(k) / dn < level) ++k;
  return v[k - 1];
}

inline double conditional_quantile(const Sample& s, int d, int z, double q) {
  auto cell = s.sorted_cell(d, z);
  if (cell.empty())
    throw Error(ErrorKind::EmptyCell, "cell (d=" + std::to_string(d) + ", z=" + std::to_string(z) + ")");
  return quantile_sorted(cell, q);
}

/// Ascending cell values with prefix sums, for repeated trimming of the same cell.
class SortedCell {
 public:
  explicit SortedCell(std::span<const double> sorted) : v_(sorted), cum_(sorted.size() + 1, 0.0) {
    for (std::size_t i = 0; i < v_.size(); ++i) cum_[i + 1] = cum_[i] + v_[i];
  }

  std::size_t size() const { return v_.size(); }
  std::span<const double> values() const { return v_; }
  double sum(std::size_t first, std::size_t last) const { return cum_[last] - cum_[first]; }
  double mean() const { return cum_.back() / static_cast<double>(v_.size()); }

  double trimmed_mean(double share, Tail tail, TrimRule rule = TrimRule::Fractional) const {
    if (v_.empty()) throw Error(ErrorKind::EmptyCell, "trimmed mean of an empty cell");
    if (!(share > 0.0 && share <= 1.0))
      throw Error(ErrorKind::QuantileOutOfRange, "trimming share must lie in (0, 1]");
    const auto n = v_.size();
    if (rule == TrimRule::Fractional) {
      const double m = share * static_cast<double>(n);
      auto k = std::min<std::size_t>(static_cast<std::size_t>(std::floor(m)), n);
      const double frac = k < n ? m - static_cast<double>(k) : 0.0;
      if (tail == Tail::Lower) return (sum(0, k) + (frac > 0.0 ? frac * v_[k] : 0.0)) / m;
      return (sum(n - k, n) + (frac > 0.0 ? frac * v_[n - k - 1] : 0.0)) / m;
    }
    if (tail == Tail::Lower) {
      const double c = quantile_sorted(v_, share);
      auto k = static_cast<std::size_t>(std::upper_bound(v_.begin(), v_.end(), c) - v_.begin());
      return sum(0, k) / static_cast<double>(k);
    }
    if (share >= 1.0) return mean();
    const double c = quantile_sorted(v_, 1.0 - share);
    auto k = static_cast<std::size_t>(std::upper_bound(v_.begin(), v_.end(), c) - v_.begin());
    // nothing strictly above the cutoff: the cutoff atom itself is the top of the cell
    if (k == n) return c;
    return sum(k, n) / static_cast<double>(n - k);
  }

 private:
  std::span<const double> v_;
  std::vector<double> cum_;
};

inline double trimmed_mean(std::span<const double> sorted, double share, Tail tail,
                           TrimRule rule = TrimRule::Fractional) {
  return SortedCell(sorted).trimmed_mean(share, tail, rule);
}

inline double trimmed_mean(const Sample& s, int d, int z, double share, Tail tail,
                           TrimRule rule = TrimRule::Fractional) {
  auto cell = s.sorted_cell(d, z);
  if (cell.empty())
    throw Error(ErrorKind::EmptyCell, "cell (d=" + std::to_string(d) + ", z=" + std::to_string(z) + ")");
  return trimmed_mean(cell, share, tail, rule);
}

/// Right-continuous step function: F(y) = values[i] for grid[i] <= y < grid[i+1], 0 below grid[0].
class SteppedCdf {
 public:
  SteppedCdf() = default;

  SteppedCdf(std::vector<double> grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (grid_.empty() || grid_.size() != values_.size())
      throw Error(ErrorKind::BadCdf, "grid and values must be nonempty and of equal length");
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (!std::isfinite(grid_[i]) || (i > 0 && !(grid_[i] > grid_[i - 1])))
        throw Error(ErrorKind::BadCdf, "grid must be finite and strictly increasing");
      if (!(values_[i] >= -kProbTol && values_[i] <= 1.0 + kProbTol))
        throw Error(ErrorKind::BadCdf, "values must lie in [0, 1]");
      if (i > 0 && values_[i] < values_[i - 1] - kProbTol)
        throw Error(ErrorKind::BadCdf, "values must be nondecreasing");
    }
  }

  /// Sub-cdf of ascending data scaled by `mass / size` per observation.
  static SteppedCdf from_sorted(std::span<const double> sorted, double mass = 1.0) {
    if (sorted.empty()) throw Error(ErrorKind::EmptyCell, "cdf of an empty cell");
    std::vector<double> g, v;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
      g.push_back(sorted[i]);
      v.push_back(i + 1 == sorted.size() ? mass : mass * static_cast<double>(i + 1) / n);
    }
    return SteppedCdf(std::move(g), std::move(v));
  }

  double operator()(double y) const {
    auto it = std::upper_bound(grid_.begin(), grid_.end(), y);
    if (it == grid_.begin()) return 0.0;
    return values_[static_cast<std::size_t>(it - grid_.begin()) - 1];
  }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return grid_.size(); }
  double total() const { return values_.empty() ? 0.0 : values_.back(); }

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

enum class EnvelopeKind { PointwiseMin, PointwiseMax };

inline SteppedCdf cdf_envelope(const SteppedCdf& a, const SteppedCdf& b, EnvelopeKind kind) {
  std::vector<double> g, v;
  g.reserve(a.size() + b.size());
  v.reserve(a.size() + b.size());
  const auto& ga = a.grid();
  const auto& gb = b.grid();
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0;
  while (i < ga.size() || j < gb.size()) {
    double y;
    if (j == gb.size() || (i < ga.size() && ga[i] < gb[j])) {
      y = ga[i];
      fa = a.values()[i++];
    } else if (i == ga.size() || gb[j] < ga[i]) {
      y = gb[j];
      fb = b.values()[j++];
    } else {
      y = ga[i];
      fa = a.values()[i++];
      fb = b.values()[j++];
    }
    g.push_back(y);
    v.push_back(kind == EnvelopeKind::PointwiseMin ? std::min(fa, fb) : std::max(fa, fb));
  }
  return SteppedCdf(std::move(g), std::move(v));
}

inline constexpr double kFullCdfTol = 1e-9;

/// Mean of the step distribution; requires the cdf to reach 1.
inline double mean_of_cdf(const SteppedCdf& f) {
  if (std::abs(f.total() - 1.0) > kFullCdfTol)
    throw Error(ErrorKind::NotAFullCdf, "cdf ends at " + std::to_string(f.total()));
  double m = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    m += f.grid()[i] * (f.values()[i] - prev);
    prev = f.values()[i];
  }
  return m;
}

/// Common discretization of the outcome axis: support atoms or half-open bins (last bin closed).
struct OutcomeGrid {
  enum class Kind { Atoms, Bins };
  Kind kind = Kind::Atoms;
  std::vector<double> points;

  std::size_t cells() const {
    if (kind == Kind::Atoms) return points.size();
    return points.size() < 2 ? 0 : points.size() - 1;
  }
};

inline std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw Error(ErrorKind::BadBinEdges, "bin count must be positive");
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  e.back() = hi;
  return e;
}

namespace detail {

inline std::vector<double> pooled_sorted(const Sample& s) {
  std::vector<double> all;
  all.reserve(s.size());
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) {
      auto c = s.sorted_cell(d, z);
      auto mid = all.size();
      all.insert(all.end(), c.begin(), c.end());
      std::inplace_merge(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid), all.end());
    }
  return all;
}

// Linear interpolation between order statistics.
inline double interpolated_quantile(const std::vector<double>& v, double p) {
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace detail

/// Freedman-Diaconis bin count on the pooled outcome; Sturges when the IQR vanishes.
inline std::size_t freedman_diaconis_bins(const Sample& s) {
  if (s.size() == 0) throw Error(ErrorKind::BadInput, "empty sample");
  auto all = detail::pooled_sorted(s);
  const double range = all.back() - all.front();
  const double iqr = detail::interpolated_quantile(all, 0.75) - detail::interpolated_quantile(all, 0.25);
  const double n = static_cast<double>(all.size());
  if (range <= 0.0) return 1;
  if (iqr <= 0.0) return static_cast<std::size_t>(std::ceil(std::log2(n))) + 1;
  const double h = 2.0 * iqr / std::cbrt(n);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(range / h)));
}

/// Atoms for discrete outcomes; equal-width bins (Freedman-Diaconis count unless given) otherwise.
inline OutcomeGrid default_grid(const Sample& s, std::optional<std::size_t> bins = std::nullopt) {
  if (s.outcome_kind() == OutcomeKind::Discrete) return {OutcomeGrid::Kind::Atoms, s.support()};
  auto k = bins ? *bins : freedman_diaconis_bins(s);
  return {OutcomeGrid::Kind::Bins, equal_width_edges(s.min_y(), s.max_y(), k)};
}

struct BinnedDensity {
  OutcomeGrid grid;
  std::vector<std::size_t> counts;
  double denominator = 1.0;  // size of the instrument arm
  std::vector<double> masses;

  double total() const {
    return std::accumulate(masses.begin(), masses.end(), 0.0);
  }
};

/// Masses P(Y in cell_k, D = d | Z = z) on a common outcome grid.
inline BinnedDensity binned_density(const Sample& s, int d, int z, const OutcomeGrid& grid) {
  s.require_arms();
  const auto& pts = grid.points;
  const auto cells = grid.cells();
  if (cells == 0) throw Error(ErrorKind::BadBinEdges, "grid has no cells");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i] > pts[i - 1])) throw Error(ErrorKind::BadBinEdges, "grid must be strictly increasing");

  BinnedDensity out;
  out.grid = grid;
  out.counts.assign(cells, 0);
  out.denominator = static_cast<double>(s.arm_size(z));
  auto v = s.sorted_cell(d, z);
  std::size_t b = 0;
  for (double y : v) {
    if (grid.kind == OutcomeGrid::Kind::Atoms) {
      while (b < cells && pts[b] < y) ++b;
      if (b == cells || pts[b] != y) throw Error(ErrorKind::BadBinEdges, "value is not a grid atom");
    } else {
      if (y < pts.front() || y > pts.back())
        throw Error(ErrorKind::BadBinEdges, "bin edges do not cover the outcome range");
      while (b + 1 < cells && y >= pts[b + 1]) ++b;
    }
    ++out.counts[b];
  }
  out.masses.resize(cells);
  for (std::size_t k = 0; k < cells; ++k)
    out.masses[k] = static_cast<double>(out.counts[k]) / out.denominator;
  return out;
}

}  // namespace robustiv
