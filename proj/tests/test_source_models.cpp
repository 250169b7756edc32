#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pnrhbt/rng.hpp"
#include "pnrhbt/source_models.hpp"

using namespace pnrhbt;
using Catch::Approx;

TEST_CASE("pmf closed forms at pinned points") {
  const auto pois = pmf(SourceSpec::poisson(2.6));
  CHECK(pois.probs[0] == Approx(std::exp(-2.6)).epsilon(1e-14));
  CHECK(pois.probs[0] == Approx(0.0743).margin(2e-4));

  const auto th = pmf(SourceSpec::thermal(1.0));
  CHECK(th.probs[0] == Approx(0.5).epsilon(1e-14));
  CHECK(th.probs[1] == Approx(0.25).epsilon(1e-14));
}

TEST_CASE("pmf normalisation with reported tail") {
  for (double mu : {0.1, 1.0, 2.8, 5.0}) {
    for (auto s : {SourceSpec::poisson(mu), SourceSpec::thermal(mu),
                   SourceSpec::mix(0.7 * mu, 0.3 * mu)}) {
      const auto p = pmf(s);
      CAPTURE(static_cast<int>(s.kind), mu);
      double sum = 0.0;
      for (double v : p.probs) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        sum += v;
      }
      CHECK(sum + p.tail_mass == Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("default truncation policy meets the tail target where feasible") {
  // well inside the cap: tail below 1e-9
  for (auto s : {SourceSpec::poisson(0.1), SourceSpec::poisson(2.6), SourceSpec::poisson(5.0),
                 SourceSpec::thermal(0.1), SourceSpec::thermal(1.0),
                 mix_source_from_mu_g2(2.8, 1.2)}) {
    const auto p = pmf(s);
    CAPTURE(static_cast<int>(s.kind), s.mean(), p.n_trunc());
    CHECK(p.tail_mass < 1e-9);
    CHECK(p.n_trunc() <= 64);
  }
  // poisson truncation should not be wildly conservative
  CHECK(default_n_trunc(SourceSpec::poisson(0.1)) < 25);

  // a chaotic mean high enough that the 64-entry cap binds: the deficit is
  // still reported honestly instead of silently renormalised
  const auto warn = pmf(SourceSpec::thermal(2.8));
  CHECK(warn.n_trunc() == 64);
  CHECK(warn.tail_mass > 1e-9);
  CHECK(warn.tail_mass < 1e-8);
  const double exact_tail = std::pow(2.8 / 3.8, 65);
  CHECK(warn.tail_mass == Approx(exact_tail).epsilon(1e-6));
}

TEST_CASE("mix pmf degenerates exactly to the pure sources") {
  const auto mix_pois = pmf(SourceSpec::mix(2.5, 0.0), 40);
  const auto pois = pmf(SourceSpec::poisson(2.5), 40);
  const auto mix_th = pmf(SourceSpec::mix(0.0, 1.5), 40);
  const auto th = pmf(SourceSpec::thermal(1.5), 40);
  for (int n = 0; n <= 40; ++n) {
    CHECK(std::abs(mix_pois.probs[n] - pois.probs[n]) < 1e-12);
    CHECK(std::abs(mix_th.probs[n] - th.probs[n]) < 1e-12);
  }
}

TEST_CASE("factorial moments: closed form against truncated brute-force sums") {
  const std::vector<SourceSpec> sources = {
      SourceSpec::poisson(2.6), SourceSpec::thermal(1.0), SourceSpec::thermal(0.4),
      mix_source_from_mu_g2(2.8, 1.2), mix_source_from_mu_g2(2.6, 1.075)};
  for (const auto& s : sources) {
    const auto p = pmf(s, 256);
    for (int k = 1; k <= 6; ++k) {
      CAPTURE(static_cast<int>(s.kind), s.mean(), k);
      const double brute = oracle::falling_factorial_moment(p.probs, k);
      CHECK(factorial_moment(s, k) == Approx(brute).epsilon(1e-8));
    }
  }

  CHECK(factorial_moment(SourceSpec::thermal(1.0), 3) == Approx(6.0).epsilon(1e-12));
  CHECK(factorial_moment(SourceSpec::poisson(2.6), 2) == Approx(6.76).epsilon(1e-12));
  CHECK(factorial_moment(mix_source_from_mu_g2(2.8, 1.2), 2) == Approx(9.408).epsilon(1e-8));
  CHECK(factorial_moment(SourceSpec::thermal(7.0), 0) == 1.0);
}

TEST_CASE("mix_from_mu_g2 satisfies both defining relations") {
  const auto [mu_s, mu_n] = mix_from_mu_g2(2.8, 1.2);
  CHECK(mu_s == Approx(2.5044).margin(1e-4));
  CHECK(mu_n == Approx(0.2956).margin(1e-4));
  CHECK(mu_s + mu_n == Approx(2.8).epsilon(1e-12));
  const double g2 = mu_n * (mu_n + 2.0 * mu_s) / (2.8 * 2.8) + 1.0;
  CHECK(g2 == Approx(1.2).epsilon(1e-12));

  const auto coherent = mix_from_mu_g2(2.8, 1.0);
  CHECK(coherent.first == Approx(2.8).epsilon(1e-14));
  CHECK(coherent.second == 0.0);
  const auto chaotic = mix_from_mu_g2(1.0, 2.0);
  CHECK(chaotic.first == 0.0);
  CHECK(chaotic.second == Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(mix_from_mu_g2(2.8, 0.9), ParameterError);
  CHECK_THROWS_AS(mix_from_mu_g2(2.8, 2.1), ParameterError);
  CHECK_THROWS_AS(mix_from_mu_g2(0.0, 1.5), ParameterError);
  CHECK_THROWS_AS(mix_from_mu_g2(-1.0, 1.5), ParameterError);
}

TEST_CASE("g2 consistency across the (mu, g2) plane") {
  for (double mu : {0.5, 1.0, 2.8}) {
    for (double g2 : {1.0, 1.075, 1.2, 1.5, 2.0}) {
      const auto s = mix_source_from_mu_g2(mu, g2);
      CAPTURE(mu, g2);
      CHECK(factorial_moment(s, 2) / (mu * mu) == Approx(g2).epsilon(1e-10));
    }
  }
}

TEST_CASE("parameter domain errors") {
  CHECK_THROWS_AS(SourceSpec::poisson(-0.1), ParameterError);
  CHECK_THROWS_AS(SourceSpec::thermal(std::nan("")), ParameterError);
  CHECK_THROWS_AS(SourceSpec::mix(-1.0, 0.5), ParameterError);
  CHECK_THROWS_AS(pmf(SourceSpec::poisson(1.0), 0), ParameterError);
}

TEST_CASE("pulse intensity sampling: deterministic and exponential limits") {
  CounterRng rng(31, 0);
  for (int i = 0; i < 10; ++i)
    CHECK(sample_pulse_intensity(SourceSpec::poisson(2.6), rng) == 2.6);

  const int n = 10'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_pulse_intensity(SourceSpec::thermal(1.0), rng);
  // exponential: sd of the mean = mu/sqrt(n)
  CHECK(sum / n == Approx(1.0).margin(3.0 / std::sqrt(double(n))));
}

TEST_CASE("mixture intensity has the g2 the parameters encode") {
  const auto s = mix_source_from_mu_g2(2.8, 1.2);
  CounterRng rng(77, 0);
  const int n_batches = 100;
  const int batch = 100'000;
  std::vector<double> ratios(n_batches);
  for (auto& rv : ratios) {
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < batch; ++i) {
      const double w = sample_pulse_intensity(s, rng);
      m1 += w;
      m2 += w * w;
    }
    m1 /= batch;
    m2 /= batch;
    rv = m2 / (m1 * m1);
  }
  const auto bs = oracle::batch_stats(ratios);
  CHECK(bs.mean == Approx(1.2).margin(3.0 * bs.stderr_of_mean));
}

TEST_CASE("poisson draws off the sampled intensity reproduce the mixture pmf") {
  const auto s = mix_source_from_mu_g2(2.8, 1.2);
  const auto p = pmf(s);
  CounterRng rng(2025, 0);
  const int n_draws = 10'000'000;
  std::vector<std::uint64_t> draws(n_draws);
  for (auto& d : draws) {
    const double w = sample_pulse_intensity(s, rng);
    d = sample_poisson(rng, w);
  }
  const std::size_t n_bins = 30;
  const auto obs = oracle::count_histogram(draws, n_bins);
  std::vector<double> expected(n_bins, 0.0);
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < n_bins; ++k) {
    expected[k] = p.probs[k] * n_draws;
    cum += p.probs[k];
  }
  expected[n_bins - 1] = (1.0 - cum) * n_draws;
  CHECK(oracle::chi_square_p_value(obs, expected) > 1e-3);
}
