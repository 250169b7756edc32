#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace pnrhbt {

/// Neumaier-compensated sum; keeps pmf normalisation checks honest.
inline double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

/// log I0(x), the modified Bessel function of order zero, valid for all x >= 0
/// without overflow. Uses the library Bessel below the overflow knee and the
/// asymptotic expansion above it.
inline double log_bessel_i0(double x) {
  x = std::abs(x);
  if (x < 650.0) return std::log(std::cyl_bessel_i(0.0, x));
  const double r = 1.0 / x;
  const double series = 1.0 + r * (0.125 + r * (0.0703125 + r * 0.0732421875));
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(series);
}

/// Standard normal pdf evaluated at (x - mean)/sigma, scaled by 1/sigma.
inline double normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// P(X > x) for X ~ Normal(mean, sigma); erfc-based so far tails stay exact.
inline double normal_upper_mass(double x, double mean, double sigma) {
  if (sigma <= 0.0) return mean > x ? 1.0 : 0.0;
  return 0.5 * std::erfc((x - mean) / (sigma * std::numbers::sqrt2));
}

}  // namespace pnrhbt
