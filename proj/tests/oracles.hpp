#pragma once

// Test-only oracles: brute-force statistics helpers kept independent of the
// library code paths they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

// Sum of n*(n-1)*...*(n-k+1) * p[n] straight off a probability array.
inline double falling_factorial_moment(const std::vector<double>& probs, int k) {
  double total = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) {
    double w = 1.0;
    for (int j = 0; j < k; ++j) w *= static_cast<double>(n) - j;
    if (w > 0.0) total += w * probs[n];
  }
  return total;
}

inline double mean_of(const std::vector<double>& probs) {
  return falling_factorial_moment(probs, 1);
}

// Pearson chi-square p-value of observed counts against expected counts.
// Bins with expected < min_expected are pooled into their neighbour.
inline double chi_square_p_value(std::vector<double> observed, std::vector<double> expected,
                                 double min_expected = 5.0) {
  std::vector<double> obs_pooled;
  std::vector<double> exp_pooled;
  double o_acc = 0.0;
  double e_acc = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    o_acc += observed[i];
    e_acc += expected[i];
    if (e_acc >= min_expected) {
      obs_pooled.push_back(o_acc);
      exp_pooled.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 && !exp_pooled.empty()) {
    obs_pooled.back() += o_acc;
    exp_pooled.back() += e_acc;
  }
  if (exp_pooled.size() < 2) return 1.0;
  double stat = 0.0;
  for (std::size_t i = 0; i < exp_pooled.size(); ++i) {
    const double d = obs_pooled[i] - exp_pooled[i];
    stat += d * d / exp_pooled[i];
  }
  const double dof = static_cast<double>(exp_pooled.size() - 1);
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

// Histogram a set of integer draws into counts [0, n_bins).
inline std::vector<double> count_histogram(const std::vector<std::uint64_t>& draws,
                                           std::size_t n_bins) {
  std::vector<double> h(n_bins, 0.0);
  for (auto d : draws) h[std::min<std::uint64_t>(d, n_bins - 1)] += 1.0;
  return h;
}

struct BatchStats {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};

// Batch-means standard error for a statistic computed per batch.
inline BatchStats batch_stats(const std::vector<double>& batch_values) {
  const double n = static_cast<double>(batch_values.size());
  const double mean = std::accumulate(batch_values.begin(), batch_values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : batch_values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace oracle
