#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "pnrhbt/detector_model.hpp"
#include "pnrhbt/errors.hpp"
#include "pnrhbt/rng.hpp"
#include "pnrhbt/source_models.hpp"

namespace pnrhbt {

/// Full description of one two-detector coincidence run.
struct ExperimentConfig {
  SourceSpec source;
  DetectorParams det1, det2;
  Discriminator disc1, disc2;
  double split = 0.5;            // beamsplitter transmission into arm 1
  std::uint64_t n_pulses = 0;
  int max_delay = 10;            // accidental window, pulses each side
  std::uint64_t seed = 0;
  int shards = 1;
};

inline void validate(const ExperimentConfig& cfg) {
  cfg.det1.validate();
  cfg.det2.validate();
  if (!(cfg.split > 0.0 && cfg.split < 1.0))
    throw ParameterError("config: split must be in (0,1)");
  if (cfg.max_delay < 1) throw ParameterError("config: max_delay must be >= 1");
  if (cfg.shards < 1) throw ParameterError("config: shards must be >= 1");
  const std::uint64_t floor = 10ull * (2ull * cfg.max_delay + 1ull);
  if (cfg.n_pulses < floor)
    throw ParameterError("config: n_pulses must be >= 10*(2*max_delay+1) so the "
                         "accidental bins are populated");
}

/// Coincidence counts per relative delay plus the singles that normalise them.
struct CoincidenceHistogram {
  int max_delay = 0;
  std::vector<std::uint64_t> counts;  // index d + max_delay, d in [-D, D]
  std::uint64_t singles1 = 0;
  std::uint64_t singles2 = 0;
  std::uint64_t n_pulses = 0;

  std::uint64_t count(int d) const { return counts[static_cast<std::size_t>(d + max_delay)]; }
};

struct GammaResult {
  double gamma = 0.0;
  double stderr_ = 0.0;  // one standard deviation
  std::uint64_t peak_count = 0;
  double accidental_mean = 0.0;
};

namespace detail {

struct PulseOutcome {
  bool click1 = false;
  bool click2 = false;
};

inline int clamped_level(std::uint64_t k, int n_max) {
  return static_cast<int>(std::min<std::uint64_t>(k, static_cast<std::uint64_t>(n_max)));
}

// One pulse end to end. Keyed by the pulse index alone, so any shard can
// regenerate any pulse and the merged run is independent of the shard count.
template <bool SplitMode>
PulseOutcome simulate_pulse(const ExperimentConfig& cfg, std::uint64_t pulse) {
  CounterRng rng(cfg.seed, pulse);
  const double w = sample_pulse_intensity(cfg.source, rng);
  std::uint64_t k1, k2;
  if constexpr (SplitMode) {
    const std::uint64_t n = sample_poisson(rng, w);
    const std::uint64_t arm1 = sample_binomial(rng, n, cfg.split);
    k1 = sample_binomial(rng, arm1, cfg.det1.eta);
    k2 = sample_binomial(rng, n - arm1, cfg.det2.eta);
  } else {
    k1 = sample_poisson(rng, cfg.det1.eta * cfg.split * w);
    k2 = sample_poisson(rng, cfg.det2.eta * (1.0 - cfg.split) * w);
  }
  const double v1 = avalanche_voltage(clamped_level(k1, cfg.det1.n_max), cfg.det1, rng);
  const double v2 = avalanche_voltage(clamped_level(k2, cfg.det2.n_max), cfg.det2, rng);
  return {cfg.disc1.passes(v1), cfg.disc2.passes(v2)};
}

struct ShardPart {
  std::vector<std::uint64_t> counts;
  std::uint64_t singles1 = 0;
  std::uint64_t singles2 = 0;
};

// Simulate pulses [a, b) plus up to max_delay warm-up pulses on each side.
// The warm-up clicks complete cross-boundary delay pairs (owned by the shard
// of the detector-1 pulse, so each pair is counted exactly once) and are
// excluded from the singles.
template <bool SplitMode>
void run_shard(const ExperimentConfig& cfg, std::uint64_t a, std::uint64_t b, ShardPart& part) {
  const std::uint64_t d = static_cast<std::uint64_t>(cfg.max_delay);
  const std::uint64_t lo = a >= d ? a - d : 0;
  const std::uint64_t hi = std::min(cfg.n_pulses, b + d);
  std::vector<std::uint8_t> click1(b - a), click2(hi - lo);
  for (std::uint64_t j = lo; j < hi; ++j) {
    const auto o = simulate_pulse<SplitMode>(cfg, j);
    click2[j - lo] = o.click2;
    if (j >= a && j < b) {
      click1[j - a] = o.click1;
      part.singles1 += o.click1;
      part.singles2 += o.click2;
    }
  }
  part.counts.assign(2 * d + 1, 0);
  for (std::uint64_t i = a; i < b; ++i) {
    if (!click1[i - a]) continue;
    const std::uint64_t j_lo = i >= d ? i - d : 0;
    const std::uint64_t j_hi = std::min(cfg.n_pulses - 1, i + d);
    for (std::uint64_t j = j_lo; j <= j_hi; ++j)
      part.counts[j - i + d] += click2[j - lo];
  }
}

template <bool SplitMode>
CoincidenceHistogram run_impl(const ExperimentConfig& cfg) {
  validate(cfg);
  const int n_shards = cfg.shards;
  std::vector<ShardPart> parts(n_shards);
  std::vector<std::thread> workers;
  workers.reserve(n_shards);
  for (int s = 0; s < n_shards; ++s) {
    const std::uint64_t a = cfg.n_pulses * static_cast<std::uint64_t>(s) / n_shards;
    const std::uint64_t b = cfg.n_pulses * static_cast<std::uint64_t>(s + 1) / n_shards;
    workers.emplace_back(
        [&cfg, a, b, &part = parts[s]] { run_shard<SplitMode>(cfg, a, b, part); });
  }
  for (auto& w : workers) w.join();

  CoincidenceHistogram hist;
  hist.max_delay = cfg.max_delay;
  hist.n_pulses = cfg.n_pulses;
  hist.counts.assign(2 * static_cast<std::size_t>(cfg.max_delay) + 1, 0);
  for (const auto& part : parts) {
    hist.singles1 += part.singles1;
    hist.singles2 += part.singles2;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) hist.counts[i] += part.counts[i];
  }
  return hist;
}

}  // namespace detail

/// Pulse-by-pulse Monte Carlo of the two-detector setup. Arm counts are drawn
/// as independent Poissons conditioned on the shared pulse intensity.
/// Deterministic for a fixed seed, independent of the shard count.
inline CoincidenceHistogram run(const ExperimentConfig& cfg) {
  return detail::run_impl<false>(cfg);
}

/// Validation path: draws the total photon number first, then splits it
/// binomially at the beamsplitter and thins per detector. Distributionally
/// identical to run().
inline CoincidenceHistogram run_split_mode(const ExperimentConfig& cfg) {
  return detail::run_impl<true>(cfg);
}

/// Coincidence-to-accidental ratio: the zero-delay bin over the mean of the
/// off-zero bins, with the one-standard-deviation error of the ratio
/// propagated from Poisson counting statistics.
inline GammaResult estimate_gamma(const CoincidenceHistogram& hist) {
  const int d_max = hist.max_delay;
  const std::uint64_t peak = hist.count(0);
  std::uint64_t acc_sum = 0;
  for (int d = -d_max; d <= d_max; ++d)
    if (d != 0) acc_sum += hist.count(d);
  if (acc_sum == 0)
    throw InsufficientStatsError("estimate_gamma: all accidental bins are empty");
  const double acc_mean = static_cast<double>(acc_sum) / (2.0 * d_max);
  const double gamma = static_cast<double>(peak) / acc_mean;
  const double peak_var = std::max<double>(static_cast<double>(peak), 1.0);
  const double stderr_ = std::sqrt(peak_var / (acc_mean * acc_mean) +
                                   gamma * gamma / static_cast<double>(acc_sum));
  return {gamma, stderr_, peak, acc_mean};
}

}  // namespace pnrhbt
