#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pnrhbt/errors.hpp"
#include "pnrhbt/math_util.hpp"
#include "pnrhbt/rng.hpp"
#include "pnrhbt/source_models.hpp"

namespace pnrhbt {

enum class QuenchKind { Linear, Saturating };

/// Map from detected photon number to avalanche peak position. Linear is
/// k * v1; Saturating compresses large avalanches towards v_sat, which is the
/// phenomenological stand-in for series-resistance self-limiting.
struct Quench {
  QuenchKind kind = QuenchKind::Linear;
  double v_sat = 0.0;

  static Quench linear() { return {QuenchKind::Linear, 0.0}; }
  static Quench saturating(double v_sat) {
    if (!(v_sat > 0.0)) throw ParameterError("quench: v_sat must be > 0");
    return {QuenchKind::Saturating, v_sat};
  }
};

struct DetectorParams {
  double eta = 0.17;     // detection efficiency
  double v1 = 0.13;      // 1-photon peak centre, volts
  double sigma1 = 0.0;   // 1-photon peak width, volts
  double sigma0 = 0.0;   // noise (0-photon) peak width, volts
  int n_max = 7;         // highest resolvable photon number
  Quench quench = Quench::linear();

  void validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("detector: eta must be in [0,1]");
    if (!(v1 > 0.0)) throw ParameterError("detector: v1 must be > 0");
    if (!(sigma1 >= 0.0)) throw ParameterError("detector: sigma1 must be >= 0");
    if (!(sigma0 >= 0.0)) throw ParameterError("detector: sigma0 must be >= 0");
    if (n_max < 1) throw ParameterError("detector: n_max must be >= 1");
  }
};

/// Voltage-domain event selection: everything above a threshold, or inside a
/// window (lo, hi].
struct Discriminator {
  enum class Kind { Threshold, Window };
  Kind kind = Kind::Threshold;
  double v_lo = 0.0;
  double v_hi = std::numeric_limits<double>::infinity();

  static Discriminator threshold(double v_t) {
    return {Kind::Threshold, v_t, std::numeric_limits<double>::infinity()};
  }
  static Discriminator window(double v_lo, double v_hi) {
    if (!(v_lo < v_hi)) throw ParameterError("discriminator: window requires v_lo < v_hi");
    return {Kind::Window, v_lo, v_hi};
  }

  bool passes(double v) const { return v > v_lo && v <= v_hi; }
};

/// Binomial detection: each of n photons is seen with probability eta.
template <class Rng>
std::uint64_t thin(std::uint64_t n, double eta, Rng& rng) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("thin: eta must be in [0,1]");
  return sample_binomial(rng, n, eta);
}

/// Analytic counterpart of thin(): q(k) = sum_n C(n,k) eta^k (1-eta)^(n-k) p(n).
/// The binomial row is accumulated from its well-conditioned end so extreme
/// eta values cannot underflow the recurrence.
inline PhotonPmf detected_pmf(const PhotonPmf& p, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("detected_pmf: eta must be in [0,1]");
  PhotonPmf q;
  q.probs.assign(p.probs.size(), 0.0);
  q.tail_mass = p.tail_mass;
  if (eta == 0.0) {
    q.probs[0] = compensated_sum(p.probs);
    return q;
  }
  const std::size_t size = p.probs.size();
  std::vector<double> row(size, 0.0);
  for (std::size_t n = 0; n < size; ++n) {
    const double pn = p.probs[n];
    if (pn == 0.0) continue;
    const double nn = static_cast<double>(n);
    if (eta <= 0.5) {
      double b = std::pow(1.0 - eta, nn);
      for (std::size_t k = 0; k <= n; ++k) {
        q.probs[k] += pn * b;
        b *= (nn - static_cast<double>(k)) / static_cast<double>(k + 1) * (eta / (1.0 - eta));
      }
    } else {
      double b = std::pow(eta, nn);
      for (std::size_t k = n;; --k) {
        q.probs[k] += pn * b;
        if (k == 0) break;
        b *= static_cast<double>(k) / (nn - static_cast<double>(k - 1)) * ((1.0 - eta) / eta);
      }
    }
  }
  return q;
}

/// Avalanche peak centre for k detected photons. k = 0 is the noise peak at 0 V.
inline double peak_center(int k, const DetectorParams& params) {
  if (k < 0 || k > params.n_max) throw ParameterError("peak_center: k out of [0, n_max]");
  if (k == 0) return 0.0;
  const double linear = static_cast<double>(k) * params.v1;
  if (params.quench.kind == QuenchKind::Linear) return linear;
  return -params.quench.v_sat * std::expm1(-linear / params.quench.v_sat);
}

/// Peak width: sigma0 for the noise peak, sigma1 * sqrt(k) above it.
inline double peak_sigma(int k, const DetectorParams& params) {
  if (k < 0 || k > params.n_max) throw ParameterError("peak_sigma: k out of [0, n_max]");
  return k == 0 ? params.sigma0 : params.sigma1 * std::sqrt(static_cast<double>(k));
}

/// One avalanche voltage draw for k detected photons.
template <class Rng>
double avalanche_voltage(int k, const DetectorParams& params, Rng& rng) {
  const double c = peak_center(k, params);
  const double s = peak_sigma(k, params);
  if (s == 0.0) return c;
  return sample_normal(rng, c, s);
}

namespace detail {

// Detected-count weights with everything above n_max folded onto the n_max
// peak (the voltage ceiling of a saturated APD), tail mass included.
inline std::vector<double> clamped_weights(const PhotonPmf& q, int n_max) {
  std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (std::size_t k = 0; k < q.probs.size(); ++k)
    w[std::min<std::size_t>(k, static_cast<std::size_t>(n_max))] += q.probs[k];
  w[static_cast<std::size_t>(n_max)] += q.tail_mass;
  return w;
}

}  // namespace detail

/// Probability that a draw from peak (center, sigma) lands inside disc.
inline double discriminator_mass(const Discriminator& disc, double center, double sigma) {
  return normal_upper_mass(disc.v_lo, center, sigma) -
         normal_upper_mass(disc.v_hi, center, sigma);
}

/// Model avalanche-voltage density on a grid: a gaussian per detected photon
/// number, each weighted by the detected-count probability. Zero-width peaks
/// are deposited into their nearest grid cell.
inline std::vector<double> avalanche_density(const PhotonPmf& p, const DetectorParams& params,
                                             std::span<const double> grid) {
  params.validate();
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ParameterError("avalanche_density: grid must increase");
  const auto q = detected_pmf(p, params.eta);
  const auto w = detail::clamped_weights(q, params.n_max);
  std::vector<double> f(grid.size(), 0.0);
  for (int k = 0; k <= params.n_max; ++k) {
    if (w[k] == 0.0) continue;
    const double c = peak_center(k, params);
    const double s = peak_sigma(k, params);
    if (s > 0.0) {
      for (std::size_t i = 0; i < grid.size(); ++i) f[i] += w[k] * normal_pdf(grid[i], c, s);
    } else if (!grid.empty()) {
      // point mass: spread over the local cell width
      std::size_t j = 0;
      for (std::size_t i = 1; i < grid.size(); ++i)
        if (std::abs(grid[i] - c) < std::abs(grid[j] - c)) j = i;
      const double left = j > 0 ? grid[j - 1] : grid[j];
      const double right = j + 1 < grid.size() ? grid[j + 1] : grid[j];
      const double cell = 0.5 * (right - left);
      if (cell > 0.0) f[j] += w[k] / cell;
    }
  }
  return f;
}

/// Probability that one pulse from this photon-number distribution fires the
/// discriminator.
inline double click_probability(const PhotonPmf& p, const DetectorParams& params,
                                const Discriminator& disc) {
  params.validate();
  const auto q = detected_pmf(p, params.eta);
  const auto w = detail::clamped_weights(q, params.n_max);
  double total = 0.0;
  for (int k = 0; k <= params.n_max; ++k)
    total += w[k] * discriminator_mass(disc, peak_center(k, params), peak_sigma(k, params));
  return total;
}

/// v_sat such that the saturating centre equals observed_v at the avalanche
/// that the linear model puts at linear_v. Bisection; the centre is strictly
/// increasing in v_sat.
inline double calibrate_v_sat(double linear_v, double observed_v) {
  if (!(linear_v > 0.0) || !(observed_v > 0.0) || !(observed_v < linear_v))
    throw ParameterError("calibrate_v_sat: need 0 < observed_v < linear_v");
  auto center = [&](double v_sat) { return -v_sat * std::expm1(-linear_v / v_sat); };
  double lo = observed_v * 1e-3;
  double hi = linear_v * 1e9;
  if (center(lo) > observed_v || center(hi) < observed_v)
    throw ConvergenceError("calibrate_v_sat: bracket failure");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (center(mid) < observed_v ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace pnrhbt
