#pragma once

// Exact 1D total-variation denoising and regularization-strength tuning.
//
//   tv_prox(y, tau) = argmin_x 0.5 * |y - x|^2 + tau * sum_i |x[i+1] - x[i]|
//
// The boundary is open: there is no wrap-around term.

#include <cstddef>
#include <span>
#include <vector>

#include "nmrtv/signal.hpp"

namespace nmrtv {

struct TvConfig {
  double tau = 0.0;
};

/// Strictly increasing, nonempty list of nonnegative tau candidates.
class TauGrid {
 public:
  explicit TauGrid(std::vector<double> values);

  /// `count` log-spaced points from lo to hi inclusive.
  static TauGrid logarithmic(double lo, double hi, std::size_t count);
  /// 25 points over [1e-3, 1e1].
  static TauGrid default_grid() { return logarithmic(1e-3, 1e1, 25); }

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// sum_{i} |x[i+1] - x[i]|. Requires at least two samples.
double tv_value(std::span<const double> x);

/// Exact minimizer by dynamic programming over the piecewise-quadratic
/// message (Johnson 2013), O(n) in practice. tau == 0 returns y unchanged.
std::vector<double> tv_prox(std::span<const double> y, TvConfig cfg);
Spectrum tv_prox(const Spectrum& y, TvConfig cfg);

struct TauChoice {
  double tau = 0.0;
  double snr_db = 0.0;
  Spectrum denoised;
};

/// Picks the grid tau that maximizes the SNR of tv_prox(y, tau) against
/// the clean spectrum. Ties go to the smaller tau. Grid points may be
/// evaluated on `threads` workers; the result does not depend on it.
TauChoice tune_tau_oracle(const Spectrum& y, const Spectrum& x_clean, const TauGrid& grid,
                          std::size_t threads = 1);

struct SpectrumPair {
  Spectrum noisy;
  Spectrum clean;
};

/// Single tau maximizing the mean SNR over all pairs; ties to the smaller tau.
double tune_tau_validation(std::span<const SpectrumPair> pairs, const TauGrid& grid,
                           std::size_t threads = 1);

}  // namespace nmrtv
