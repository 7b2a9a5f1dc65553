#pragma once

// Daubechies-4 (four-tap) orthogonal wavelet transform with periodic
// boundaries, and detail-coefficient thresholding.

#include <optional>
#include <span>
#include <vector>

#include "nmrtv/signal.hpp"

namespace nmrtv {

enum class ThresholdMode { soft, hard };

struct WaveletConfig {
  int levels = 5;
  ThresholdMode mode = ThresholdMode::soft;
  /// Explicit threshold; nullopt selects the universal threshold
  /// sigma * sqrt(2 ln n), sigma = median(|finest details|) / 0.6745.
  std::optional<double> threshold;
};

struct WaveletCoeffs {
  std::vector<double> approx;
  /// details[0] is the finest level.
  std::vector<std::vector<double>> details;
};

/// Forward transform. x.size() must be divisible by 2^levels.
WaveletCoeffs dwt(std::span<const double> x, int levels);
std::vector<double> idwt(const WaveletCoeffs& coeffs);

double universal_threshold(const WaveletCoeffs& coeffs, std::size_t n);
void threshold_details(WaveletCoeffs& coeffs, double threshold, ThresholdMode mode);

/// Signals whose length is not a multiple of 2^levels are reflect-padded
/// before the transform and cropped afterwards.
std::vector<double> wavelet_denoise(std::span<const double> y, const WaveletConfig& cfg);
Spectrum wavelet_denoise(const Spectrum& y, const WaveletConfig& cfg);

}  // namespace nmrtv
