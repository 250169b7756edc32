#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace pnrhbt {

/// Philox 4x32-10 keyed counter permutation (Salmon et al., SC'11).
///
/// A pure function from (128-bit counter, 64-bit key) to 128 random bits.
/// Because there is no sequential state, any worker can regenerate any
/// point of any stream, which is what makes sharded runs bit-reproducible.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
            static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
            static_cast<std::uint32_t>(p0)};
  }

  static constexpr Counter block(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
      }
      c = round(c, k);
    }
    return c;
  }
};

/// One independent random stream per (seed, stream id).
///
/// The philox counter is laid out as (block index, stream id) and the key is
/// the seed, so streams with distinct ids never overlap and can be recreated
/// from scratch anywhere. The engine keys one stream per pulse.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  /// Uniform double in [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0,1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  static const char* generator_name() noexcept { return "philox4x32-10"; }

 private:
  void refill() {
    buf_ = Philox4x32::block({static_cast<std::uint32_t>(block_),
                              static_cast<std::uint32_t>(block_ >> 32),
                              static_cast<std::uint32_t>(stream_),
                              static_cast<std::uint32_t>(stream_ >> 32)},
                             key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

template <class Rng>
double sample_exponential(Rng& rng, double mean) {
  return -mean * std::log(rng.uniform_pos());
}

/// Box-Muller gaussian; consumes exactly two uniforms per call.
template <class Rng>
double sample_normal(Rng& rng, double mean = 0.0, double sigma = 1.0) {
  const double r = std::sqrt(-2.0 * std::log(rng.uniform_pos()));
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  return mean + sigma * r * std::cos(theta);
}

/// Poisson variate: product-of-uniforms for small rates, Hormann's PTRS
/// transformed rejection for large ones.
template <class Rng>
std::uint64_t sample_poisson(Rng& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  if (lambda < 10.0) {
    const double limit = std::exp(-lambda);
    std::uint64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_lambda = std::log(lambda);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double u_shifted = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / u_shifted + b) * u + lambda + 0.43);
    if (u_shifted >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (u_shifted < 0.013 && v > u_shifted)) continue;
    const double lhs = std::log(v * inv_alpha / (a / (u_shifted * u_shifted) + b));
    const double rhs = -lambda + k * log_lambda - std::lgamma(k + 1.0);
    if (lhs <= rhs) return static_cast<std::uint64_t>(k);
  }
}

/// Binomial variate by explicit Bernoulli counting. Exact for any p and
/// fine for the modest n this project draws (per-pulse photon numbers).
template <class Rng>
std::uint64_t sample_binomial(Rng& rng, std::uint64_t n, double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::uint64_t k = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (rng.uniform() < p) ++k;
  }
  return k;
}

}  // namespace pnrhbt
