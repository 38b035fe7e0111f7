#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "robustiv/error.hpp"
#include "robustiv/normal.hpp"
#include "robustiv/parallel.hpp"
#include "robustiv/sample.hpp"
#include "robustiv/types.hpp"

namespace robustiv {

/// Independent: V1 and V2 uncorrelated. CorrelatedCosts: corr(V1, V2) = 0.5.
/// Auto picks Independent when rho = 0 and CorrelatedCosts otherwise.
enum class CovarianceModel { Auto, Independent, CorrelatedCosts };

struct DgpConfig {
  double rho = 0.0;
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  double beta_scale = 5.0;
  double u_scale = 0.5;
  CovarianceModel model = CovarianceModel::Auto;
  bool flip_instrument = false;  // emit Z' = 1 - Z
  bool keep_shocks = false;      // retain (V1, V2, eps) per row
  unsigned threads = 0;

  CovarianceModel resolved_model() const {
    if (model != CovarianceModel::Auto) return model;
    return rho == 0.0 ? CovarianceModel::Independent : CovarianceModel::CorrelatedCosts;
  }

  std::array<std::array<double, 3>, 3> covariance() const {
    const double c = resolved_model() == CovarianceModel::CorrelatedCosts ? 0.5 : 0.0;
    return {{{1.0, c, rho}, {c, 1.0, rho}, {rho, rho, 1.0}}};
  }
};

/// Per-row latent draws kept compact: potential outcomes follow from Y, D and beta.
struct Latents {
  std::vector<double> beta;
  std::vector<std::uint8_t> type;  // ComplianceType
  std::vector<std::array<double, 3>> shocks;  // (V1, V2, eps) when keep_shocks

  std::size_t size() const { return beta.size(); }
};

struct SimulatedRecord {
  Observation observation;
  std::optional<std::array<double, 3>> shocks;
  int d0 = 0, d1 = 0;
  ComplianceType type = ComplianceType::n;
  double y1 = 0.0, y0 = 0.0;
};

struct Simulation {
  Sample sample;
  Latents latents;

  SimulatedRecord record(std::size_t i) const {
    SimulatedRecord r;
    r.observation = {sample.y(i), sample.d(i), sample.z(i)};
    if (!latents.shocks.empty()) r.shocks = latents.shocks[i];
    r.type = static_cast<ComplianceType>(latents.type[i]);
    r.d0 = r.type == ComplianceType::a || r.type == ComplianceType::df;
    r.d1 = r.type == ComplianceType::a || r.type == ComplianceType::c;
    r.y0 = sample.y(i) - sample.d(i) * latents.beta[i];
    r.y1 = r.y0 + latents.beta[i];
    return r;
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Lower Cholesky factor; zero pivots allowed (singular PSD), negative ones rejected.
inline std::array<std::array<double, 3>, 3> cholesky3(const std::array<std::array<double, 3>, 3>& a) {
  std::array<std::array<double, 3>, 3> l{};
  for (int j = 0; j < 3; ++j) {
    double s = a[j][j];
    for (int k = 0; k < j; ++k) s -= l[j][k] * l[j][k];
    if (s < -1e-12) throw Error(ErrorKind::NonPsdCovariance, "covariance matrix is not positive semi-definite");
    l[j][j] = s > 0.0 ? std::sqrt(s) : 0.0;
    for (int i = j + 1; i < 3; ++i) {
      double t = a[i][j];
      for (int k = 0; k < j; ++k) t -= l[i][k] * l[j][k];
      l[i][j] = l[j][j] > 0.0 ? t / l[j][j] : 0.0;
      if (l[j][j] == 0.0 && std::abs(t) > 1e-12)
        throw Error(ErrorKind::NonPsdCovariance, "covariance matrix is not positive semi-definite");
    }
  }
  return l;
}

inline constexpr std::size_t kChunkRows = 65536;

}  // namespace detail

inline void validate(const DgpConfig& c) {
  if (!std::isfinite(c.rho) || c.rho < -1.0 || c.rho > 1.0)
    throw Error(ErrorKind::NonPsdCovariance, "rho must lie in [-1, 1]");
  if (c.n == 0) throw Error(ErrorKind::BadInput, "n must be positive");
  if (!std::isfinite(c.beta_scale) || !std::isfinite(c.u_scale)) throw Error(ErrorKind::BadInput, "scales must be finite");
  (void)detail::cholesky3(c.covariance());
}

/// Draws the double-hurdle design: D = 1{V1 <= 2Z, V2 > Z}, Z = 1{eps > 0},
/// Y = beta D + U with beta = beta_scale Phi(2 V1 + V2) and U = u_scale (V1 + V2).
inline Simulation simulate(const DgpConfig& cfg) {
  validate(cfg);
  const auto L = detail::cholesky3(cfg.covariance());
  const std::size_t n = cfg.n;
  std::vector<double> y(n), beta(n);
  std::vector<std::uint8_t> d(n), z(n), type(n);
  std::vector<std::array<double, 3>> shocks(cfg.keep_shocks ? n : 0);
  const std::size_t chunks = (n + detail::kChunkRows - 1) / detail::kChunkRows;
  parallel_for(chunks, cfg.threads, [&](std::size_t c) {
    std::mt19937_64 gen(detail::splitmix64(cfg.seed ^ detail::splitmix64(c + 1)));
    auto uniform = [&gen] { return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53; };
    const std::size_t begin = c * detail::kChunkRows;
    const std::size_t end = std::min(n, begin + detail::kChunkRows);
    for (std::size_t i = begin; i < end; ++i) {
      const double e0 = normal_quantile(uniform());
      const double e1 = normal_quantile(uniform());
      const double e2 = normal_quantile(uniform());
      const double v1 = L[0][0] * e0;
      const double v2 = L[1][0] * e0 + L[1][1] * e1;
      const double eps = L[2][0] * e0 + L[2][1] * e1 + L[2][2] * e2;
      int zi = eps > 0.0;
      const int d0 = v1 <= 0.0 && v2 > 0.0;
      const int d1 = v1 <= 2.0 && v2 > 1.0;
      const int di = zi ? d1 : d0;
      const double b = cfg.beta_scale * normal_cdf(2.0 * v1 + v2);
      if (cfg.flip_instrument) zi = 1 - zi;
      y[i] = b * di + cfg.u_scale * (v1 + v2);
      beta[i] = b;
      d[i] = static_cast<std::uint8_t>(di);
      z[i] = static_cast<std::uint8_t>(zi);
      ComplianceType t = d0 ? (d1 ? ComplianceType::a : ComplianceType::df) : (d1 ? ComplianceType::c : ComplianceType::n);
      if (cfg.flip_instrument) t = relabel_type(t);
      type[i] = static_cast<std::uint8_t>(t);
      if (cfg.keep_shocks) shocks[i] = {v1, v2, eps};
    }
  });
  Simulation out{Sample(std::move(y), std::move(d), std::move(z)), {}};
  out.latents.beta = std::move(beta);
  out.latents.type = std::move(type);
  out.latents.shocks = std::move(shocks);
  return out;
}

/// Closed-form type shares; only for the independent-cost design with rho = 0.
inline TypeProbabilities analytic_truth(const DgpConfig& cfg) {
  if (cfg.rho != 0.0 || cfg.resolved_model() != CovarianceModel::Independent)
    throw Error(ErrorKind::NotAnalytic, "closed forms are available only for rho = 0 with independent costs");
  const double f0 = normal_cdf(0.0), f1 = normal_cdf(1.0), f2 = normal_cdf(2.0);
  TypeProbabilities p;
  p.p_a = f0 * (1.0 - f1);
  p.p_df = f0 * (f1 - f0);
  p.p_c = f2 * (1.0 - f1) - p.p_a;
  p.p_n = 1.0 - p.p_a - p.p_df - p.p_c;
  if (cfg.flip_instrument) p = relabel_probabilities(p);
  return p;
}

struct McTruth {
  TypeProbabilities shares;
  std::array<std::size_t, 4> counts{};
  std::array<std::optional<double>, 4> late;  // E[Y1 - Y0 | T = t]
  double ate = 0.0;

  double late_of(ComplianceType t) const {
    const auto& v = late[static_cast<std::size_t>(t)];
    if (!v) throw Error(ErrorKind::EmptyType, std::string("no draws of type ") + to_string(t));
    return *v;
  }
};

inline McTruth mc_truth(const Latents& lat) {
  if (lat.size() == 0) throw Error(ErrorKind::EmptyType, "no latent draws");
  McTruth m;
  std::array<double, 4> sum{};
  double total = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    sum[lat.type[i]] += lat.beta[i];
    ++m.counts[lat.type[i]];
    total += lat.beta[i];
  }
  const double n = static_cast<double>(lat.size());
  for (std::size_t t = 0; t < 4; ++t)
    if (m.counts[t] > 0) m.late[t] = sum[t] / static_cast<double>(m.counts[t]);
  m.shares = {static_cast<double>(m.counts[0]) / n, static_cast<double>(m.counts[1]) / n,
              static_cast<double>(m.counts[2]) / n, static_cast<double>(m.counts[3]) / n};
  m.ate = total / n;
  return m;
}

/// Sidecar with one row per observation: D0,D1,T,Y1,Y0.
inline void write_latents_csv(std::ostream& os, const Simulation& sim) {
  os << "D0,D1,T,Y1,Y0\n";
  char buf[64];
  for (std::size_t i = 0; i < sim.sample.size(); ++i) {
    auto r = sim.record(i);
    os << r.d0 << ',' << r.d1 << ',' << to_string(r.type) << ',';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.y1, r.y0);
    os << buf;
  }
}

}  // namespace robustiv
