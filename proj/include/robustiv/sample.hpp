#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "robustiv/error.hpp"
#include "robustiv/types.hpp"

namespace robustiv {

struct Observation {
  double y = 0.0;
  int d = 0;
  int z = 0;
};

enum class OutcomeKind { Discrete, Continuous };

inline const char* to_string(OutcomeKind k) {
  return k == OutcomeKind::Discrete ? "discrete" : "continuous";
}

/// Immutable (Y, D, Z) sample with per-cell sorted outcomes.
class Sample {
 public:
  Sample() = default;

  Sample(std::vector<double> y, std::vector<std::uint8_t> d, std::vector<std::uint8_t> z)
      : y_(std::move(y)), d_(std::move(d)), z_(std::move(z)) {
    if (y_.size() != d_.size() || y_.size() != z_.size())
      throw Error(ErrorKind::BadInput, "column lengths differ");
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (!std::isfinite(y_[i]))
        throw Error(ErrorKind::NonFiniteOutcome, "row " + std::to_string(i + 1));
      if (d_[i] > 1) throw Error(ErrorKind::NonBinaryTreatment, "row " + std::to_string(i + 1));
      if (z_[i] > 1) throw Error(ErrorKind::NonBinaryInstrument, "row " + std::to_string(i + 1));
    }
    build();
  }

  static Sample from_observations(const std::vector<Observation>& obs) {
    std::vector<double> y;
    std::vector<std::uint8_t> d, z;
    y.reserve(obs.size());
    d.reserve(obs.size());
    z.reserve(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (obs[i].d != 0 && obs[i].d != 1)
        throw Error(ErrorKind::NonBinaryTreatment, "row " + std::to_string(i + 1));
      if (obs[i].z != 0 && obs[i].z != 1)
        throw Error(ErrorKind::NonBinaryInstrument, "row " + std::to_string(i + 1));
      y.push_back(obs[i].y);
      d.push_back(static_cast<std::uint8_t>(obs[i].d));
      z.push_back(static_cast<std::uint8_t>(obs[i].z));
    }
    return Sample(std::move(y), std::move(d), std::move(z));
  }

  std::size_t size() const { return y_.size(); }
  double y(std::size_t i) const { return y_[i]; }
  int d(std::size_t i) const { return d_[i]; }
  int z(std::size_t i) const { return z_[i]; }
  const std::vector<double>& ys() const { return y_; }
  const std::vector<std::uint8_t>& ds() const { return d_; }
  const std::vector<std::uint8_t>& zs() const { return z_; }

  /// Row indices of cell (d, z), in row order.
  const std::vector<std::size_t>& cell(int d, int z) const { return cells_[slot(d, z)]; }
  /// Outcomes of cell (d, z), ascending.
  std::span<const double> sorted_cell(int d, int z) const { return sorted_[slot(d, z)]; }
  std::size_t cell_size(int d, int z) const { return cells_[slot(d, z)].size(); }
  std::size_t arm_size(int z) const { return cell_size(0, z) + cell_size(1, z); }

  /// Sorted unique outcome values over the whole sample.
  const std::vector<double>& support() const { return support_; }
  OutcomeKind outcome_kind() const { return kind_; }
  double min_y() const { return support_.empty() ? 0.0 : support_.front(); }
  double max_y() const { return support_.empty() ? 0.0 : support_.back(); }

  Sample with_outcome_kind(OutcomeKind k) const {
    Sample s = *this;
    s.kind_ = k;
    return s;
  }

  /// Same sample with the instrument swapped, Z -> 1 - Z.
  Sample relabeled() const {
    Sample s;
    s.y_ = y_;
    s.d_ = d_;
    s.z_.resize(z_.size());
    for (std::size_t i = 0; i < z_.size(); ++i) s.z_[i] = static_cast<std::uint8_t>(1 - z_[i]);
    s.support_ = support_;
    s.kind_ = kind_;
    for (int d = 0; d < 2; ++d)
      for (int z = 0; z < 2; ++z) {
        s.cells_[slot(d, z)] = cells_[slot(d, 1 - z)];
        s.sorted_[slot(d, z)] = sorted_[slot(d, 1 - z)];
      }
    return s;
  }

  void require_arms() const {
    for (int z = 0; z < 2; ++z)
      if (arm_size(z) == 0)
        throw Error(ErrorKind::EmptyInstrumentArm, "no observations with z=" + std::to_string(z));
  }

  static std::size_t discreteness_threshold(std::size_t n) {
    auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    return std::max<std::size_t>(50, root);
  }

 private:
  static std::size_t slot(int d, int z) { return static_cast<std::size_t>(2 * d + z); }

  void build() {
    for (auto& c : cells_) c.clear();
    for (std::size_t i = 0; i < y_.size(); ++i) cells_[slot(d_[i], z_[i])].push_back(i);
    for (std::size_t k = 0; k < 4; ++k) {
      auto& s = sorted_[k];
      s.resize(cells_[k].size());
      for (std::size_t j = 0; j < s.size(); ++j) s[j] = y_[cells_[k][j]];
      std::sort(s.begin(), s.end());
    }
    std::vector<double> all;
    all.reserve(y_.size());
    for (const auto& s : sorted_) {
      auto mid = all.size();
      all.insert(all.end(), s.begin(), s.end());
      std::inplace_merge(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid), all.end());
    }
    all.erase(std::unique(all.begin(), all.end()), all.end());
    support_ = std::move(all);
    kind_ = support_.size() <= discreteness_threshold(y_.size()) ? OutcomeKind::Discrete
                                                                   : OutcomeKind::Continuous;
  }

  std::vector<double> y_;
  std::vector<std::uint8_t> d_, z_;
  std::array<std::vector<std::size_t>, 4> cells_;
  std::array<std::vector<double>, 4> sorted_;
  std::vector<double> support_;
  OutcomeKind kind_ = OutcomeKind::Continuous;
};

struct ColumnMap {
  std::string y = "y";
  std::string d = "d";
  std::string z = "z";
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::size_t find_column(const std::vector<std::string_view>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorKind::MissingColumn, "column '" + name + "' not found in header");
}

}  // namespace detail

/// Reads a headered CSV. Row numbers in errors count data rows from 1.
inline Sample read_csv(std::istream& in, const ColumnMap& cols = {}) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::BadInput, "empty input, header row required");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  std::string header_line = line;
  auto header = detail::split_csv_line(header_line);
  auto iy = detail::find_column(header, cols.y);
  auto id = detail::find_column(header, cols.d);
  auto iz = detail::find_column(header, cols.z);
  auto need = std::max({iy, id, iz});

  std::vector<double> y;
  std::vector<std::uint8_t> d, z;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    auto f = detail::split_csv_line(line);
    auto where = "row " + std::to_string(row);
    if (f.size() <= need) throw Error(ErrorKind::BadInput, where + ": too few fields");
    auto yv = detail::parse_double(f[iy]);
    if (!yv || !std::isfinite(*yv)) throw Error(ErrorKind::NonFiniteOutcome, where);
    auto dv = detail::parse_double(f[id]);
    if (!dv || (*dv != 0.0 && *dv != 1.0)) throw Error(ErrorKind::NonBinaryTreatment, where);
    auto zv = detail::parse_double(f[iz]);
    if (!zv || (*zv != 0.0 && *zv != 1.0)) throw Error(ErrorKind::NonBinaryInstrument, where);
    y.push_back(*yv);
    d.push_back(static_cast<std::uint8_t>(*dv));
    z.push_back(static_cast<std::uint8_t>(*zv));
  }
  return Sample(std::move(y), std::move(d), std::move(z));
}

inline Sample load_csv(const std::string& path, const ColumnMap& cols = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::BadInput, "cannot open '" + path + "'");
  return read_csv(in, cols);
}

inline void write_csv(std::ostream& out, const Sample& s) {
  out << "y,d,z\n";
  std::array<char, 64> buf{};
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), s.y(i));
    out.write(buf.data(), p - buf.data());
    out << ',' << s.d(i) << ',' << s.z(i) << '\n';
  }
}

/// Sample analogs of the cell moments, indexed [d][z].
struct CellStats {
  std::array<std::array<std::size_t, 2>, 2> n{};
  std::array<std::size_t, 2> n_arm{};
  std::size_t n_total = 0;
  std::array<std::array<double, 2>, 2> p{};    // P(D=d | Z=z)
  std::array<std::array<double, 2>, 2> ey{};   // E[Y 1{D=d} | Z=z]
  std::array<std::array<std::optional<double>, 2>, 2> mean{};  // E[Y | D=d, Z=z]

  double first_stage() const { return p[1][1] - p[1][0]; }
  double ey_arm(int z) const { return ey[0][z] + ey[1][z]; }
  double itt() const { return ey_arm(1) - ey_arm(0); }
  double mean_or_throw(int d, int z) const {
    if (!mean[d][z])
      throw Error(ErrorKind::EmptyCell, "cell (d=" + std::to_string(d) + ", z=" + std::to_string(z) + ")");
    return *mean[d][z];
  }
};

inline CellStats cell_stats(const Sample& s) {
  s.require_arms();
  CellStats c;
  c.n_total = s.size();
  std::array<std::array<double, 2>, 2> sum{};
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) {
      c.n[d][z] = s.cell_size(d, z);
      double acc = 0.0;
      for (auto i : s.cell(d, z)) acc += s.y(i);
      sum[d][z] = acc;
    }
  for (int z = 0; z < 2; ++z) c.n_arm[z] = c.n[0][z] + c.n[1][z];
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) {
      auto nz = static_cast<double>(c.n_arm[z]);
      c.p[d][z] = static_cast<double>(c.n[d][z]) / nz;
      c.ey[d][z] = sum[d][z] / nz;
      if (c.n[d][z] > 0) c.mean[d][z] = sum[d][z] / static_cast<double>(c.n[d][z]);
    }
  return c;
}

/// Empirical P(Y <= y, D = d | Z = z).
inline double subdistribution(const Sample& s, double y, int d, int z) {
  s.require_arms();
  auto cell = s.sorted_cell(d, z);
  auto k = std::upper_bound(cell.begin(), cell.end(), y) - cell.begin();
  return static_cast<double>(k) / static_cast<double>(s.arm_size(z));
}

}  // namespace robustiv
