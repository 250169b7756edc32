#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pnrhbt/detector_model.hpp"
#include "pnrhbt/errors.hpp"
#include "pnrhbt/math_util.hpp"
#include "pnrhbt/source_models.hpp"

namespace pnrhbt {

// ---------------------------------------------------------------------------
// Brute-force paths straight off probability arrays. These feed the golden
// fixtures and act as the slow reference the closed forms are checked against.
// ---------------------------------------------------------------------------

inline double factorial_moment_from_pmf(const PhotonPmf& p, int k) {
  if (k < 0) throw ParameterError("factorial_moment_from_pmf: order must be >= 0");
  if (k == 0) return 1.0;
  double total = 0.0;
  for (std::size_t n = p.probs.size(); n-- > static_cast<std::size_t>(k);) {
    double w = p.probs[n];
    for (int j = 0; j < k; ++j) w *= static_cast<double>(n) - j;
    total += w;
  }
  return total;
}

inline double g_order_from_pmf(const PhotonPmf& p, int n) {
  if (n < 1) throw ParameterError("g_order_from_pmf: order must be >= 1");
  const double mean = factorial_moment_from_pmf(p, 1);
  if (mean <= 0.0) throw ParameterError("g_order_from_pmf: undefined for zero mean");
  return factorial_moment_from_pmf(p, n) / std::pow(mean, n);
}

// ---------------------------------------------------------------------------
// Normalised correlation functions
// ---------------------------------------------------------------------------

/// n-th order normalised correlation g(n) = <a+^n a^n> / <a+ a>^n.
inline double g_order(const SourceSpec& s, int n) {
  if (n < 1) throw ParameterError("g_order: order must be >= 1");
  const double mu = s.mean();
  if (mu <= 0.0) throw ParameterError("g_order: undefined for zero mean photon number");
  return factorial_moment(s, n) / std::pow(mu, n);
}

/// Higher-order coincidence for ideal window discrimination on photon
/// numbers n1 and n2: g(n1+n2) / (g(n1) g(n2)). The mean-photon-number
/// powers cancel, leaving a pure factorial-moment ratio.
inline double gamma_window(const SourceSpec& s, int n1, int n2) {
  if (n1 < 1 || n2 < 1) throw ParameterError("gamma_window: orders must be >= 1");
  if (s.mean() <= 0.0) throw ParameterError("gamma_window: undefined for zero mean");
  return factorial_moment(s, n1 + n2) / (factorial_moment(s, n1) * factorial_moment(s, n2));
}

namespace detail {

template <class MomentFn>
double gamma_threshold_impl(MomentFn&& fm, double eta1, double eta2, int n1_min, int n2_min,
                            int n_max) {
  if (n1_min < 1 || n2_min < 1 || n1_min > n_max || n2_min > n_max)
    throw ParameterError("gamma_threshold: empty summation range");
  if (!(eta1 > 0.0 && eta1 <= 1.0) || !(eta2 > 0.0 && eta2 <= 1.0))
    throw ParameterError("gamma_threshold: efficiencies must be in (0,1]");
  std::vector<double> moments(static_cast<std::size_t>(2 * n_max) + 1, 0.0);
  for (int k = 1; k <= 2 * n_max; ++k) moments[k] = fm(k);
  std::vector<double> w1(n_max + 1), w2(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    w1[n] = std::pow(eta1, n);
    w2[n] = std::pow(eta2, n);
  }
  double num = 0.0;
  double den = 0.0;
  for (int n1 = n1_min; n1 <= n_max; ++n1) {
    for (int n2 = n2_min; n2 <= n_max; ++n2) {
      const double w = w1[n1] * w2[n2];
      num += moments[n1 + n2] * w;
      den += moments[n1] * moments[n2] * w;
    }
  }
  if (den <= 0.0) throw ParameterError("gamma_threshold: undefined for zero mean");
  return num / den;
}

}  // namespace detail

/// Higher-order coincidence for threshold discrimination: efficiency-weighted
/// sums of factorial moments over photon numbers from n_min to the detector
/// cap n_max on each arm. Approaches gamma_window(n1_min, n2_min) as the
/// efficiencies go to zero.
inline double gamma_threshold(const SourceSpec& s, double eta1, double eta2, int n1_min,
                              int n2_min, int n_max) {
  return detail::gamma_threshold_impl([&](int k) { return factorial_moment(s, k); }, eta1, eta2,
                                      n1_min, n2_min, n_max);
}

/// Same sums evaluated from a truncated pmf array (the fixture path).
inline double gamma_threshold_from_pmf(const PhotonPmf& p, double eta1, double eta2, int n1_min,
                                       int n2_min, int n_max) {
  return detail::gamma_threshold_impl([&](int k) { return factorial_moment_from_pmf(p, k); },
                                      eta1, eta2, n1_min, n2_min, n_max);
}

// ---------------------------------------------------------------------------
// Exact click probabilities for the voltage-domain model
// ---------------------------------------------------------------------------

struct QuadratureOptions {
  double rel_tol = 1e-8;
  int initial_panels = 64;
  int max_doublings = 14;
};

namespace detail {

// Density of the semiclassical pulse intensity W for sources with a chaotic
// component: exp(-(w+mu_s)/mu_n) I0(2 sqrt(w mu_s)/mu_n) / mu_n. Evaluated in
// log space so a tiny chaotic admixture cannot overflow the Bessel factor.
inline double intensity_density(const SourceSpec& s, double w) {
  if (w < 0.0) return 0.0;
  double log_bess = 0.0;
  if (s.mu_s > 0.0) log_bess = log_bessel_i0(2.0 * std::sqrt(w * s.mu_s) / s.mu_n);
  return std::exp(-(w + s.mu_s) / s.mu_n + log_bess) / s.mu_n;
}

inline double intensity_upper_bound(const SourceSpec& s) {
  return (std::sqrt(s.mu_s) + std::sqrt(60.0 * s.mu_n)) *
         (std::sqrt(s.mu_s) + std::sqrt(60.0 * s.mu_n));
}

// Composite Simpson with panel doubling until every component of the
// vector-valued integrand settles to rel_tol.
template <class F>
std::vector<double> integrate_adaptive(F&& f, double a, double b, std::size_t n_components,
                                       const QuadratureOptions& opt) {
  auto simpson = [&](int panels) {
    const double h = (b - a) / panels;
    std::vector<double> acc(n_components, 0.0);
    auto add = [&](double x, double weight) {
      const auto v = f(x);
      for (std::size_t c = 0; c < n_components; ++c) acc[c] += weight * v[c];
    };
    add(a, 1.0);
    add(b, 1.0);
    for (int i = 1; i < panels; ++i) add(a + i * h, 2.0);
    for (int i = 0; i < panels; ++i) add(a + (i + 0.5) * h, 4.0);
    for (auto& v : acc) v *= h / 6.0;
    return acc;
  };

  int panels = opt.initial_panels;
  std::vector<double> prev = simpson(panels);
  for (int step = 0; step < opt.max_doublings; ++step) {
    panels *= 2;
    std::vector<double> cur = simpson(panels);
    bool converged = true;
    for (std::size_t c = 0; c < n_components; ++c)
      converged &= std::abs(cur[c] - prev[c]) <= opt.rel_tol * std::abs(cur[c]) + 1e-14;
    if (converged) return cur;
    prev = std::move(cur);
  }
  throw ConvergenceError("intensity quadrature did not converge after node doubling");
}

// Per-detector kernel: discriminator mass for every clamped detected count,
// with the arm's per-unit-intensity Poisson rate folded in.
struct ClickKernel {
  double rate = 0.0;  // detected mean per unit W on this arm
  int n_max = 0;
  std::vector<double> mass;  // discriminator pass probability per level

  ClickKernel(const DetectorParams& det, const Discriminator& disc, double arm_fraction) {
    det.validate();
    rate = det.eta * arm_fraction;
    n_max = det.n_max;
    mass.resize(n_max + 1);
    for (int k = 0; k <= n_max; ++k)
      mass[k] = discriminator_mass(disc, peak_center(k, det), peak_sigma(k, det));
  }

  // P(click | W = w): Poisson mixture of the per-level masses, photon
  // numbers above n_max folded onto the top peak.
  double click_given_intensity(double w) const {
    const double lam = rate * w;
    double term = std::exp(-lam);
    double cum = 0.0;
    double p = 0.0;
    for (int k = 0; k < n_max; ++k) {
      p += term * mass[k];
      cum += term;
      term *= lam / static_cast<double>(k + 1);
    }
    return p + std::max(0.0, 1.0 - cum) * mass[n_max];
  }
};

}  // namespace detail

struct JointClickProbability {
  double p_coinc = 0.0;  // both detectors click on the same pulse
  double p1 = 0.0;       // detector 1 singles probability
  double p2 = 0.0;       // detector 2 singles probability
};

/// Exact same-pulse click statistics of the full chain: source intensity,
/// beamsplitter, binomial detection, gaussian avalanche peaks, discriminators.
/// The two arms are conditionally independent given the pulse intensity, so
/// the joint probability is a one-dimensional integral over the intensity
/// distribution (a point mass for Poisson light).
inline JointClickProbability joint_click_probability(const SourceSpec& src,
                                                     const DetectorParams& det1,
                                                     const DetectorParams& det2,
                                                     const Discriminator& disc1,
                                                     const Discriminator& disc2, double split,
                                                     const QuadratureOptions& opt = {}) {
  if (!(split > 0.0 && split < 1.0))
    throw ParameterError("joint_click_probability: split must be in (0,1)");
  const detail::ClickKernel k1(det1, disc1, split);
  const detail::ClickKernel k2(det2, disc2, 1.0 - split);
  if (src.kind == SourceKind::Poisson || src.mu_n == 0.0) {
    const double p1 = k1.click_given_intensity(src.mean());
    const double p2 = k2.click_given_intensity(src.mean());
    return {p1 * p2, p1, p2};
  }
  const double w_max = detail::intensity_upper_bound(src);
  auto f = [&](double w) {
    const double rho = detail::intensity_density(src, w);
    const double c1 = k1.click_given_intensity(w);
    const double c2 = k2.click_given_intensity(w);
    return std::array<double, 3>{rho * c1 * c2, rho * c1, rho * c2};
  };
  const auto integral = detail::integrate_adaptive(f, 0.0, w_max, 3, opt);
  return {integral[0], integral[1], integral[2]};
}

/// Coincidence-to-accidental ratio from exact click probabilities; the
/// accidental rate of independent pulses is the product of the singles.
inline double gamma_from_clicks(double p_coinc, double p1, double p2) {
  if (!(p1 * p2 > 0.0))
    throw InsufficientStatsError("gamma_from_clicks: zero singles probability");
  return p_coinc / (p1 * p2);
}

inline double gamma_from_clicks(const JointClickProbability& j) {
  return gamma_from_clicks(j.p_coinc, j.p1, j.p2);
}

// ---------------------------------------------------------------------------
// Joint detected-count distribution, two independent routes
// ---------------------------------------------------------------------------

/// P(k1, k2) for k in [0, k_cap]^2 via conditional independence given the
/// pulse intensity (quadrature over the intensity for chaotic sources).
inline std::vector<std::vector<double>> joint_count_pmf(const SourceSpec& src, double rate1,
                                                        double rate2, int k_cap,
                                                        QuadratureOptions opt = {}) {
  const std::size_t dim = static_cast<std::size_t>(k_cap) + 1;
  auto poisson_row = [&](double lam, std::vector<double>& row) {
    double term = std::exp(-lam);
    for (std::size_t k = 0; k < dim; ++k) {
      row[k] = term;
      term *= lam / static_cast<double>(k + 1);
    }
  };
  std::vector<double> row1(dim), row2(dim);
  if (src.kind == SourceKind::Poisson || src.mu_n == 0.0) {
    poisson_row(rate1 * src.mean(), row1);
    poisson_row(rate2 * src.mean(), row2);
    std::vector<std::vector<double>> out(dim, std::vector<double>(dim));
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) out[i][j] = row1[i] * row2[j];
    return out;
  }
  const double w_max = detail::intensity_upper_bound(src);
  auto f = [&](double w) {
    std::vector<double> flat(dim * dim);
    const double rho = detail::intensity_density(src, w);
    poisson_row(rate1 * w, row1);
    poisson_row(rate2 * w, row2);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) flat[i * dim + j] = rho * row1[i] * row2[j];
    return flat;
  };
  const auto flat = detail::integrate_adaptive(f, 0.0, w_max, dim * dim, opt);
  std::vector<std::vector<double>> out(dim, std::vector<double>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) out[i][j] = flat[i * dim + j];
  return out;
}

/// Same distribution by exact enumeration: total photon number from the pmf,
/// then a multinomial split into (detected on 1, detected on 2, lost).
inline std::vector<std::vector<double>> joint_count_pmf_enumeration(const SourceSpec& src,
                                                                    double rate1, double rate2,
                                                                    int k_cap, int n_trunc = 256) {
  const double a = rate1;
  const double b = rate2;
  if (!(a >= 0.0 && b >= 0.0 && a + b <= 1.0))
    throw ParameterError("joint_count_pmf_enumeration: per-photon rates must satisfy a+b <= 1");
  const auto p = pmf(src, n_trunc);
  const std::size_t dim = static_cast<std::size_t>(k_cap) + 1;
  std::vector<std::vector<double>> out(dim, std::vector<double>(dim, 0.0));
  const double c = 1.0 - a - b;
  const double log_a = a > 0.0 ? std::log(a) : 0.0;
  const double log_b = b > 0.0 ? std::log(b) : 0.0;
  const double log_c = c > 0.0 ? std::log(c) : 0.0;
  for (std::size_t n = 0; n < p.probs.size(); ++n) {
    if (p.probs[n] == 0.0) continue;
    const double log_nfact = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::size_t k1 = 0; k1 <= std::min(dim - 1, n); ++k1) {
      if (a == 0.0 && k1 > 0) continue;
      for (std::size_t k2 = 0; k1 + k2 <= n && k2 < dim; ++k2) {
        if (b == 0.0 && k2 > 0) continue;
        const std::size_t rest = n - k1 - k2;
        if (c == 0.0 && rest > 0) continue;
        const double log_term = log_nfact - std::lgamma(static_cast<double>(k1) + 1.0) -
                                std::lgamma(static_cast<double>(k2) + 1.0) -
                                std::lgamma(static_cast<double>(rest) + 1.0) +
                                static_cast<double>(k1) * log_a + static_cast<double>(k2) * log_b +
                                static_cast<double>(rest) * log_c;
        out[k1][k2] += p.probs[n] * std::exp(log_term);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrimination sweeps
// ---------------------------------------------------------------------------

enum class SweepMode { WindowExact, ThresholdEq6, VoltageModel };

struct GammaPoint {
  double setting = 0.0;  // photon-number level or threshold voltage
  double gamma = 0.0;
};

struct GammaCurve {
  SweepMode mode = SweepMode::ThresholdEq6;
  std::vector<GammaPoint> points;
};

struct SweepRequest {
  SweepMode mode = SweepMode::ThresholdEq6;
  int n1 = 7;                         // fixed first-detector level
  std::vector<int> n2_levels;         // grid for the photon-number modes
  std::vector<double> v2_thresholds;  // grid for the voltage-model mode
};

/// Gamma as a function of the second detector's discrimination setting, with
/// the first detector held fixed.
inline GammaCurve sweep_gamma(const SourceSpec& src, const DetectorParams& det1,
                              const DetectorParams& det2, const Discriminator& disc1,
                              double split, const SweepRequest& req,
                              const QuadratureOptions& opt = {}) {
  GammaCurve curve;
  curve.mode = req.mode;
  const bool voltage = req.mode == SweepMode::VoltageModel;
  if ((voltage && req.v2_thresholds.empty()) || (!voltage && req.n2_levels.empty()))
    throw ParameterError("sweep_gamma: empty grid");
  if (voltage) {
    if (!std::is_sorted(req.v2_thresholds.begin(), req.v2_thresholds.end()))
      throw ParameterError("sweep_gamma: grid must be ascending");
    for (double vt : req.v2_thresholds) {
      const auto j =
          joint_click_probability(src, det1, det2, disc1, Discriminator::threshold(vt), split, opt);
      curve.points.push_back({vt, gamma_from_clicks(j)});
    }
  } else {
    if (!std::is_sorted(req.n2_levels.begin(), req.n2_levels.end()))
      throw ParameterError("sweep_gamma: grid must be ascending");
    const int n_max = std::min(det1.n_max, det2.n_max);
    for (int n2 : req.n2_levels) {
      const double g = req.mode == SweepMode::WindowExact
                           ? gamma_window(src, req.n1, n2)
                           : gamma_threshold(src, det1.eta, det2.eta, req.n1, n2, n_max);
      curve.points.push_back({static_cast<double>(n2), g});
    }
  }
  return curve;
}

}  // namespace pnrhbt
