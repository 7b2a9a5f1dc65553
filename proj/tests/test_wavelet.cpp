#include <cmath>

#include "doctest.h"
#include "nmrtv/errors.hpp"
#include "nmrtv/rng.hpp"
#include "nmrtv/wavelet.hpp"

using namespace nmrtv;

namespace {

std::vector<double> noise(std::uint64_t seed, std::size_t n) {
  Substream rng(seed, 0, 5);
  std::vector<double> v(n);
  for (std::size_t i = 0; i + 1 < n; i += 2) {
    const auto [a, b] = rng.normal_pair();
    v[i] = a;
    v[i + 1] = b;
  }
  if (n % 2) v[n - 1] = rng.normal_pair().first;
  return v;
}

double energy(std::span<const double> v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

double coeff_energy(const WaveletCoeffs& c) {
  double e = energy(c.approx);
  for (const auto& d : c.details) e += energy(d);
  return e;
}

double rel_err(std::span<const double> a, std::span<const double> b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(num / energy(a));
}

}  // namespace

TEST_CASE("dwt is orthogonal and invertible") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = std::size_t{32} << (seed % 5);
    const int levels = 1 + static_cast<int>(seed % 5);
    const auto x = noise(seed, n);
    const auto c = dwt(x, levels);
    CHECK(c.details.size() == static_cast<std::size_t>(levels));
    CHECK(c.details[0].size() == n / 2);
    CHECK(c.approx.size() == n >> levels);
    CHECK(coeff_energy(c) == doctest::Approx(energy(x)).epsilon(1e-12));
    CHECK(rel_err(x, idwt(c)) < 1e-10);
  }
}

TEST_CASE("dwt of a constant has zero details") {
  const std::vector<double> x(64, 2.5);
  const auto c = dwt(x, 4);
  for (const auto& d : c.details)
    for (double v : d) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("dwt of a linear ramp has vanishing interior details") {
  // Two vanishing moments: interior details of a ramp are zero; only the
  // periodic wrap sees the jump.
  std::vector<double> x(64);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * static_cast<double>(i) - 3.0;
  const auto c = dwt(x, 1);
  int nonzero = 0;
  for (double v : c.details[0])
    if (std::abs(v) > 1e-10) ++nonzero;
  CHECK(nonzero <= 1);
}

TEST_CASE("dwt argument validation") {
  const std::vector<double> x(48, 1.0);
  CHECK_THROWS_AS(dwt(x, 5), InvalidArgument);
  CHECK_THROWS_AS(dwt(x, 0), InvalidArgument);
  CHECK_NOTHROW(dwt(x, 4));
}

TEST_CASE("wavelet_denoise examples") {
  SUBCASE("threshold zero reconstructs") {
    for (std::size_t n : {64u, 100u, 2048u, 37u}) {
      const auto y = noise(n, n);
      WaveletConfig cfg;
      cfg.threshold = 0.0;
      cfg.levels = 3;
      const auto out = wavelet_denoise(y, cfg);
      REQUIRE(out.size() == n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(out[i] - y[i]) < 1e-10);
    }
  }
  SUBCASE("white noise loses energy under the auto threshold") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto y = noise(seed + 1000, 512);
      CHECK(energy(wavelet_denoise(y, WaveletConfig{})) < energy(y));
    }
  }
  SUBCASE("constant input stays constant") {
    const std::vector<double> y(200, -0.75);
    for (auto mode : {ThresholdMode::soft, ThresholdMode::hard}) {
      WaveletConfig cfg;
      cfg.mode = mode;
      for (double v : wavelet_denoise(y, cfg)) CHECK(v == doctest::Approx(-0.75).epsilon(1e-12));
    }
  }
  SUBCASE("spectrum overload") {
    const Spectrum s{noise(3, 256)};
    CHECK(wavelet_denoise(s, WaveletConfig{}).values == wavelet_denoise(s.values, WaveletConfig{}));
  }
}

TEST_CASE("wavelet_denoise argument validation") {
  const auto y = noise(1, 64);
  WaveletConfig deep;
  deep.levels = 7;
  CHECK_THROWS_AS(wavelet_denoise(y, deep), InvalidArgument);
  WaveletConfig ok;
  ok.levels = 6;
  CHECK_NOTHROW(wavelet_denoise(y, ok));
  WaveletConfig negative;
  negative.threshold = -1.0;
  CHECK_THROWS_AS(wavelet_denoise(y, negative), InvalidArgument);
  WaveletConfig zero_levels;
  zero_levels.levels = 0;
  CHECK_THROWS_AS(wavelet_denoise(y, zero_levels), InvalidArgument);
}

TEST_CASE("threshold_details") {
  WaveletCoeffs c{{10.0}, {{-3.0, -1.0, 0.5, 2.0}, {1.5, -4.0}}};
  SUBCASE("soft") {
    threshold_details(c, 1.0, ThresholdMode::soft);
    CHECK(c.details[0] == std::vector<double>{-2.0, 0.0, 0.0, 1.0});
    CHECK(c.details[1] == std::vector<double>{0.5, -3.0});
    CHECK(c.approx[0] == 10.0);
  }
  SUBCASE("hard") {
    threshold_details(c, 1.0, ThresholdMode::hard);
    CHECK(c.details[0] == std::vector<double>{-3.0, 0.0, 0.0, 2.0});
    CHECK(c.details[1] == std::vector<double>{1.5, -4.0});
  }
}

TEST_CASE("thresholding never increases coefficient energy") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto c0 = dwt(noise(seed, 256), 4);
    for (auto mode : {ThresholdMode::soft, ThresholdMode::hard}) {
      auto c = c0;
      threshold_details(c, 0.1 * static_cast<double>(seed % 10), mode);
      CHECK(coeff_energy(c) <= coeff_energy(c0) + 1e-12);
    }
  }
}

TEST_CASE("universal_threshold") {
  WaveletCoeffs c{{0.0}, {{1.0, -2.0, 3.0, -4.0, 5.0}}};
  // median |d| = 3
  CHECK(universal_threshold(c, 64) == doctest::Approx(3.0 / 0.6745 * std::sqrt(2.0 * std::log(64.0))));
}
