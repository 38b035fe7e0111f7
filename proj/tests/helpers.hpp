#pragma once

#include <cstdlib>
#include <algorithm>
#include <array>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "robustiv/robustiv.hpp"

namespace rt {

using Row = std::tuple<double, int, int>;

inline robustiv::Sample make(const std::vector<Row>& rows) {
  std::vector<robustiv::Observation> obs;
  for (auto [y, d, z] : rows) obs.push_back({y, d, z});
  return robustiv::Sample::from_observations(obs);
}

// Random sample with both arms and all four cells populated.
// kind 0: continuous draws, 1: small integer support, 2: binary outcome.
inline robustiv::Sample random_sample(std::mt19937_64& g, std::size_t n, int kind) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Row> rows;
  const double pz = 0.3 + 0.4 * u(g);
  const double p0 = 0.1 + 0.8 * u(g), p1 = 0.1 + 0.8 * u(g);
  for (std::size_t i = 0; i < n; ++i) {
    int z = u(g) < pz;
    int d = u(g) < (z ? p1 : p0);
    double y;
    if (kind == 0) y = std::normal_distribution<double>(d * 0.7 + z * 0.2, 1.0)(g);
    else if (kind == 1) y = std::floor(5.0 * u(g)) + d;
    else y = u(g) < 0.3 + 0.3 * d ? 1.0 : 0.0;
    rows.emplace_back(y, d, z);
  }
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) rows.emplace_back(kind == 2 ? static_cast<double>(d) : 0.5 * d + 0.25 * z, d, z);
  return make(rows);
}

// Finite population satisfying RA + ER exactly: each arm holds the same type counts, and each
// type carries the same (Y1, Y0) lists in both arms.
struct Population {
  robustiv::Sample sample;
  std::array<std::size_t, 4> count{};  // a, c, df, n per arm
  std::array<std::vector<double>, 4> y1, y0;

  double share(robustiv::ComplianceType t) const {
    return static_cast<double>(count[static_cast<std::size_t>(t)]) /
           static_cast<double>(std::accumulate(count.begin(), count.end(), std::size_t{0}));
  }
  double mean(const std::vector<double>& v) const { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }
  double late(robustiv::ComplianceType t) const {
    auto i = static_cast<std::size_t>(t);
    return mean(y1[i]) - mean(y0[i]);
  }
};

// kind 0: continuous, 1: integers 0..9, 2: binary
inline Population population(std::mt19937_64& g, std::array<std::size_t, 4> count, int kind) {
  std::uniform_int_distribution<int> digit(0, 9);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  Population p;
  p.count = count;
  for (std::size_t t = 0; t < 4; ++t) {
    const double tilt = u(g);
    for (std::size_t i = 0; i < count[t]; ++i) {
      auto draw = [&](double shift) {
        if (kind == 0) return nd(g) + shift;
        if (kind == 1) return static_cast<double>(digit(g));
        return u(g) < 0.2 + 0.6 * tilt ? 1.0 : 0.0;
      };
      p.y1[t].push_back(draw(1.0 + tilt));
      p.y0[t].push_back(draw(0.0));
    }
  }
  std::vector<rt::Row> rows;
  for (int z = 0; z < 2; ++z)
    for (auto t : robustiv::kAllTypes) {
      const auto i = static_cast<std::size_t>(t);
      const int d = t == robustiv::ComplianceType::a || (t == robustiv::ComplianceType::c && z == 1) || (t == robustiv::ComplianceType::df && z == 0);
      for (std::size_t k = 0; k < count[i]; ++k) rows.emplace_back(d ? p.y1[i][k] : p.y0[i][k], d, z);
    }
  p.sample = rt::make(rows);
  return p;
}

inline std::array<std::size_t, 4> random_counts(std::mt19937_64& g, std::size_t total) {
  std::uniform_int_distribution<std::size_t> u(10, total / 3);
  std::array<std::size_t, 4> c{};
  c[0] = u(g);
  c[1] = u(g);
  c[2] = std::uniform_int_distribution<std::size_t>(5, std::max<std::size_t>(6, c[1] - 2))(g);
  c[3] = total - c[0] - c[1] - c[2];
  return c;
}

inline std::optional<robustiv::Sample> card() {
  std::string path;
#ifdef ROBUSTIV_CARD_CSV
  path = ROBUSTIV_CARD_CSV;
#endif
  if (const char* env = std::getenv("ROBUSTIV_CARD_CSV")) path = env;
  if (path.empty() || !std::filesystem::exists(path)) return std::nullopt;
  return robustiv::load_csv(path, robustiv::ColumnMap{"lwage", "college", "nearc4"});
}

// P(Y <= y, D = d | Z = z) by direct counting over rows.
inline double brute_sub(const robustiv::Sample& s, double y, int d, int z) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.z(i) != z) continue;
    ++den;
    if (s.d(i) == d && s.y(i) <= y) ++num;
  }
  return num / den;
}

}  // namespace rt
