#include "nmrtv/wavelet.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "nmrtv/errors.hpp"

namespace nmrtv {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kNorm = 5.656854249492380;  // 4 * sqrt(2)

constexpr std::array<double, 4> kLow = {(1.0 + kSqrt3) / kNorm, (3.0 + kSqrt3) / kNorm,
                                        (3.0 - kSqrt3) / kNorm, (1.0 - kSqrt3) / kNorm};
constexpr std::array<double, 4> kHigh = {kLow[3], -kLow[2], kLow[1], -kLow[0]};

int max_levels(std::size_t n) {
  int levels = 0;
  while ((std::size_t{1} << (levels + 1)) <= n) ++levels;
  return levels;
}

// Mirror index without repeating the edge sample: ... x2 x1 | x0 x1 ... x_{n-1} | x_{n-2} ...
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * n - 2);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<std::ptrdiff_t>(n) ? i : period - i);
}

void analysis_step(std::span<const double> x, std::vector<double>& approx, std::vector<double>& detail) {
  const std::size_t half = x.size() / 2;
  approx.assign(half, 0.0);
  detail.assign(half, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double v = x[(2 * i + k) % x.size()];
      approx[i] += kLow[k] * v;
      detail[i] += kHigh[k] * v;
    }
  }
}

std::vector<double> synthesis_step(std::span<const double> approx, std::span<const double> detail) {
  const std::size_t n = 2 * approx.size();
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < approx.size(); ++i)
    for (std::size_t k = 0; k < 4; ++k) x[(2 * i + k) % n] += kLow[k] * approx[i] + kHigh[k] * detail[i];
  return x;
}

}  // namespace

WaveletCoeffs dwt(std::span<const double> x, int levels) {
  if (levels < 1) throw InvalidArgument("dwt: levels must be positive");
  if (levels > max_levels(x.size())) throw InvalidArgument("dwt: too many levels for signal length");
  if (x.size() % (std::size_t{1} << levels) != 0)
    throw InvalidArgument("dwt: length must be divisible by 2^levels");

  WaveletCoeffs out;
  std::vector<double> current(x.begin(), x.end());
  for (int level = 0; level < levels; ++level) {
    std::vector<double> approx, detail;
    analysis_step(current, approx, detail);
    out.details.push_back(std::move(detail));
    current = std::move(approx);
  }
  out.approx = std::move(current);
  return out;
}

std::vector<double> idwt(const WaveletCoeffs& coeffs) {
  std::vector<double> current = coeffs.approx;
  for (auto it = coeffs.details.rbegin(); it != coeffs.details.rend(); ++it) {
    if (it->size() != current.size()) throw InvalidArgument("idwt: inconsistent coefficient sizes");
    current = synthesis_step(current, *it);
  }
  return current;
}

double universal_threshold(const WaveletCoeffs& coeffs, std::size_t n) {
  if (coeffs.details.empty() || coeffs.details.front().empty())
    throw InvalidArgument("universal_threshold: no detail coefficients");
  std::vector<double> mags(coeffs.details.front().size());
  std::transform(coeffs.details.front().begin(), coeffs.details.front().end(), mags.begin(),
                 [](double v) { return std::abs(v); });
  const std::size_t mid = mags.size() / 2;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid), mags.end());
  double median = mags[mid];
  if (mags.size() % 2 == 0) {
    const double lower = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  const double sigma = median / 0.6745;
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

void threshold_details(WaveletCoeffs& coeffs, double threshold, ThresholdMode mode) {
  if (!(threshold >= 0.0)) throw InvalidArgument("threshold must be nonnegative");
  for (auto& level : coeffs.details) {
    for (auto& c : level) {
      const double mag = std::abs(c);
      if (mode == ThresholdMode::hard) {
        if (mag <= threshold) c = 0.0;
      } else {
        c = mag <= threshold ? 0.0 : std::copysign(mag - threshold, c);
      }
    }
  }
}

std::vector<double> wavelet_denoise(std::span<const double> y, const WaveletConfig& cfg) {
  const std::size_t n = y.size();
  if (cfg.levels < 1 || cfg.levels > max_levels(n))
    throw InvalidArgument("wavelet_denoise: levels too deep for signal length");
  if (cfg.threshold && !(*cfg.threshold >= 0.0))
    throw InvalidArgument("wavelet_denoise: threshold must be nonnegative");

  const std::size_t block = std::size_t{1} << cfg.levels;
  const std::size_t padded = (n + block - 1) / block * block;
  std::vector<double> x(padded);
  for (std::size_t i = 0; i < padded; ++i) x[i] = y[reflect_index(static_cast<std::ptrdiff_t>(i), n)];

  auto coeffs = dwt(x, cfg.levels);
  const double threshold = cfg.threshold ? *cfg.threshold : universal_threshold(coeffs, n);
  threshold_details(coeffs, threshold, cfg.mode);
  auto out = idwt(coeffs);
  out.resize(n);
  return out;
}

Spectrum wavelet_denoise(const Spectrum& y, const WaveletConfig& cfg) {
  return Spectrum{wavelet_denoise(std::span<const double>(y.values), cfg)};
}

}  // namespace nmrtv
