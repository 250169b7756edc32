#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pnrhbt/errors.hpp"
#include "pnrhbt/math_util.hpp"
#include "pnrhbt/rng.hpp"

namespace pnrhbt {

enum class SourceKind { Poisson, Thermal, Mix };

/// Per-pulse photon-number statistics of the light source.
///
/// Everything is parameterised by a coherent mean mu_s and a chaotic mean
/// mu_n; a pure laser field is (mu, 0) and a pure chaotic field is (0, mu).
/// The Mix kind keeps its own code path so the degenerate limits can be
/// checked against the pure kinds rather than trivially aliasing them.
struct SourceSpec {
  SourceKind kind = SourceKind::Poisson;
  double mu_s = 0.0;
  double mu_n = 0.0;

  static SourceSpec poisson(double mu) {
    require_mean(mu, "poisson mu");
    return {SourceKind::Poisson, mu, 0.0};
  }
  static SourceSpec thermal(double mu) {
    require_mean(mu, "thermal mu");
    return {SourceKind::Thermal, 0.0, mu};
  }
  static SourceSpec mix(double mu_s, double mu_n) {
    require_mean(mu_s, "mix mu_s");
    require_mean(mu_n, "mix mu_n");
    return {SourceKind::Mix, mu_s, mu_n};
  }

  double mean() const { return mu_s + mu_n; }

 private:
  static void require_mean(double mu, const char* name) {
    if (!std::isfinite(mu) || mu < 0.0)
      throw ParameterError(std::string(name) + " must be finite and >= 0");
  }
};

/// Photon-number distribution truncated at n_trunc, with the cut mass
/// reported separately so normalisation stays auditable.
struct PhotonPmf {
  std::vector<double> probs;  // index = photon number, 0..n_trunc
  double tail_mass = 0.0;     // upper bound on the probability beyond n_trunc

  int n_trunc() const { return static_cast<int>(probs.size()) - 1; }
};

namespace detail {

inline void poisson_pmf_into(double mu, std::vector<double>& p) {
  double term = std::exp(-mu);
  for (std::size_t n = 0; n < p.size(); ++n) {
    p[n] = term;
    term *= mu / static_cast<double>(n + 1);
  }
}

inline void thermal_pmf_into(double mu, std::vector<double>& p) {
  const double r = mu / (1.0 + mu);
  double term = 1.0 / (1.0 + mu);
  for (std::size_t n = 0; n < p.size(); ++n) {
    p[n] = term;
    term *= r;
  }
}

// Counting distribution of a coherent field of mean mu_s superposed on a
// single-mode chaotic field of mean mu_n:
//
//   p(n) = mu_n^n / (1+mu_n)^(n+1) * exp(-mu_s/(1+mu_n)) * L_n(-mu_s/(mu_n (1+mu_n)))
//
// evaluated through the Laguerre three-term recurrence on the pre-scaled
// quantity s_n = (mu_n/(1+mu_n))^n * L_n(.), which stays O(1) for any
// parameter values, so neither the polynomial nor the prefactor can
// overflow on its own.
inline void mix_pmf_into(double mu_s, double mu_n, std::vector<double>& p) {
  if (mu_n == 0.0) {
    poisson_pmf_into(mu_s, p);
    return;
  }
  if (mu_s == 0.0) {
    thermal_pmf_into(mu_n, p);
    return;
  }
  const double r = mu_n / (1.0 + mu_n);
  const double c = std::exp(-mu_s / (1.0 + mu_n)) / (1.0 + mu_n);
  const double xr = mu_s / ((1.0 + mu_n) * (1.0 + mu_n));  // x * r, formed without x
  double s_prev = 1.0;
  double s_cur = r + xr;
  p[0] = c * s_prev;
  if (p.size() > 1) p[1] = c * s_cur;
  for (std::size_t n = 1; n + 1 < p.size(); ++n) {
    const double k = static_cast<double>(n);
    const double s_next = (((2.0 * k + 1.0) * r + xr) * s_cur - k * r * r * s_prev) / (k + 1.0);
    p[n + 1] = c * s_next;
    s_prev = s_cur;
    s_cur = s_next;
  }
}

// log of the probability generating function E[z^N]; finite for
// z < 1 + 1/mu_n (the chaotic part sets the radius of convergence).
inline double log_pgf(const SourceSpec& s, double z) {
  const double t = z - 1.0;
  const double denom = 1.0 - s.mu_n * t;
  return s.mu_s * t / denom - std::log(denom);
}

}  // namespace detail

/// Truncation level from a Chernoff bound on the tail: smallest n with
/// min_z PGF(z)/z^(n+1) below the target mass, capped at 64 (the sources of
/// interest have means of a few photons, where the cap never binds).
inline int default_n_trunc(const SourceSpec& s, double tail_target = 1e-9, int cap = 64) {
  const double mu = s.mean();
  if (mu <= 0.0) return 1;
  int best = cap;
  const double t_hi = s.mu_n > 0.0 ? 0.999 / s.mu_n : 1e6;
  const int n_grid = 200;
  for (int i = 0; i <= n_grid; ++i) {
    // z - 1 log-spaced so both near-radius and far-out minima are seen
    const double t = 1e-4 * std::pow(t_hi / 1e-4, static_cast<double>(i) / n_grid);
    const double z = 1.0 + t;
    const double log_bound_num = detail::log_pgf(s, z);
    // need (n+1) log z >= log PGF - log tail_target
    const double need = (log_bound_num - std::log(tail_target)) / std::log1p(t) - 1.0;
    if (need < static_cast<double>(best))
      best = std::max(1, static_cast<int>(std::ceil(need)));
  }
  return std::clamp(best, 1, cap);
}

/// Photon-number pmf truncated at n_trunc. If n_trunc is too small for the
/// tail target, the deficit is still reported faithfully in tail_mass.
inline PhotonPmf pmf(const SourceSpec& s, int n_trunc) {
  if (n_trunc < 1) throw ParameterError("pmf: n_trunc must be >= 1");
  PhotonPmf out;
  out.probs.assign(static_cast<std::size_t>(n_trunc) + 1, 0.0);
  switch (s.kind) {
    case SourceKind::Poisson:
      detail::poisson_pmf_into(s.mean(), out.probs);
      break;
    case SourceKind::Thermal:
      detail::thermal_pmf_into(s.mean(), out.probs);
      break;
    case SourceKind::Mix:
      detail::mix_pmf_into(s.mu_s, s.mu_n, out.probs);
      break;
  }
  out.tail_mass = std::max(0.0, 1.0 - compensated_sum(out.probs));
  return out;
}

inline PhotonPmf pmf(const SourceSpec& s) { return pmf(s, default_n_trunc(s)); }

/// k-th falling factorial moment E[n(n-1)...(n-k+1)], i.e. the normally
/// ordered moment that normalised correlation functions are built from.
///
/// Closed forms: mu^k (Poisson), k! mu^k (thermal) and
/// k! mu_n^k L_k(-mu_s/mu_n) for the mixture, again via the pre-scaled
/// Laguerre recurrence m_k = mu_n^k L_k(.) so the ratio mu_s/mu_n is never
/// formed.
inline double factorial_moment(const SourceSpec& s, int k) {
  if (k < 0) throw ParameterError("factorial_moment: order must be >= 0");
  if (k == 0) return 1.0;
  switch (s.kind) {
    case SourceKind::Poisson:
      return std::pow(s.mean(), k);
    case SourceKind::Thermal: {
      double out = 1.0;
      for (int j = 1; j <= k; ++j) out *= static_cast<double>(j) * s.mean();
      return out;
    }
    case SourceKind::Mix: {
      const double mu_s = s.mu_s;
      const double mu_n = s.mu_n;
      double m_prev = 1.0;
      double m_cur = mu_s + mu_n;
      for (int j = 1; j < k; ++j) {
        const double jd = static_cast<double>(j);
        const double m_next =
            (((2.0 * jd + 1.0) * mu_n + mu_s) * m_cur - jd * mu_n * mu_n * m_prev) / (jd + 1.0);
        m_prev = m_cur;
        m_cur = m_next;
      }
      double kfact = 1.0;
      for (int j = 2; j <= k; ++j) kfact *= static_cast<double>(j);
      return kfact * m_cur;
    }
  }
  return 0.0;
}

/// Solve (mu_s, mu_n) from the measurable pair (mu, g2) using
/// mu = mu_s + mu_n and g2 = mu_n (mu_n + 2 mu_s)/mu^2 + 1, taking the
/// physical root with mu_n <= mu.
inline std::pair<double, double> mix_from_mu_g2(double mu, double g2) {
  if (!std::isfinite(mu) || mu <= 0.0) throw ParameterError("mix_from_mu_g2: mu must be > 0");
  if (!std::isfinite(g2) || g2 < 1.0 || g2 > 2.0)
    throw ParameterError(
        "mix_from_mu_g2: g2 must lie in [1,2]; a coherent/chaotic superposition "
        "cannot represent antibunched or super-thermal light");
  const double mu_n = mu * (1.0 - std::sqrt(2.0 - g2));
  return {mu - mu_n, mu_n};
}

inline SourceSpec mix_source_from_mu_g2(double mu, double g2) {
  const auto [mu_s, mu_n] = mix_from_mu_g2(mu, g2);
  return SourceSpec::mix(mu_s, mu_n);
}

/// Semiclassical intensity of one pulse, in units of mean photons per pulse.
///
/// A subsequent Poisson(W) draw reproduces pmf(); sharing the same W between
/// the two arms of the interferometer is what produces the zero-delay
/// correlation peak.
template <class Rng>
double sample_pulse_intensity(const SourceSpec& s, Rng& rng) {
  switch (s.kind) {
    case SourceKind::Poisson:
      return s.mean();
    case SourceKind::Thermal:
      return sample_exponential(rng, s.mean());
    case SourceKind::Mix: {
      // W = |sqrt(mu_s) + z|^2 with z circular complex gaussian, E|z|^2 = mu_n
      const double h = std::sqrt(0.5 * s.mu_n);
      const double re = std::sqrt(s.mu_s) + h * sample_normal(rng);
      const double im = h * sample_normal(rng);
      return re * re + im * im;
    }
  }
  return 0.0;
}

}  // namespace pnrhbt
