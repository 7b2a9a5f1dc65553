#pragma once

// Synthetic FIDs, the additive complex-Gaussian measurement model, and the
// FID -> normalized real spectrum pipeline.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nmrtv {

using Complex = std::complex<double>;

/// One damped complex exponential. Frequency is in cycles per sample and
/// must lie in [-0.5, 0.5); decay_rate is the per-sample damping.
struct PeakParams {
  double amplitude = 1.0;
  double frequency = 0.0;
  double decay_rate = 0.0;
  double phase = 0.0;
};

/// Complex time-domain signal.
struct Fid {
  std::vector<Complex> samples;

  std::size_t size() const { return samples.size(); }
  double norm() const;
};

/// Real frequency-domain signal.
struct Spectrum {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Target FID-domain SNR, 20*log10(|x| / |e|), and the seed of the noise draw.
struct NoiseSpec {
  double input_snr_db = 0.0;
  std::uint64_t seed = 0;
};

struct NoisyFid {
  Fid fid;
  double sigma = 0.0;  // per real/imag component
};

/// Ranges used by random_peaks. Defaults give 3..30 peaks with
/// 0.001..0.05 per-sample damping.
struct PeakModel {
  int count_min = 3;
  int count_max = 30;
  double amplitude_min = 0.1;
  double amplitude_max = 1.0;
  double frequency_limit = 0.45;
  double decay_min = 0.001;
  double decay_max = 0.05;
};

inline constexpr std::size_t kMinFidLength = 8;

/// samples[t] = sum_k a_k exp(i phi_k) exp((i 2 pi f_k - d_k) t).
Fid synth_fid(std::span<const PeakParams> peaks, std::size_t n);

/// Adds circular complex Gaussian noise rescaled so that the realized SNR is
/// exactly spec.input_snr_db. Each sample index draws from its own substream
/// of spec.seed, so the result does not depend on evaluation order.
NoisyFid add_noise(const Fid& fid, const NoiseSpec& spec);

/// 20*log10(|clean| / |noisy - clean|) over the complex samples.
double fid_snr_db(const Fid& clean, const Fid& noisy);

/// Unitary DFT: X_k = n^{-1/2} sum_t x_t exp(-2 pi i k t / n).
std::vector<Complex> unitary_dft(std::span<const Complex> x);
std::vector<Complex> unitary_idft(std::span<const Complex> x);

/// Unitary DFT, real part, then normalize.
Spectrum fid_to_spectrum(const Fid& fid);

/// (values - mean) / population std. Throws DegenerateInput on zero variance.
Spectrum normalize(std::span<const double> values);

/// Draws a peak list from `model`, deterministic in `seed`. Phases are zero
/// so the real spectrum shows absorptive lines.
std::vector<PeakParams> random_peaks(std::uint64_t seed, const PeakModel& model = {});

/// Throws InvalidArgument if `peak` violates the PeakParams invariants.
void validate_peak(const PeakParams& peak);

}  // namespace nmrtv
