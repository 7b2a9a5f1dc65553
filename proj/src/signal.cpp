#include "nmrtv/signal.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "nmrtv/errors.hpp"
#include "nmrtv/rng.hpp"

namespace nmrtv {

std::pair<double, double> Substream::normal_pair() {
  const double u1 = uniform_open0();
  const double u2 = uniform_open0();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

namespace {

double l2_norm(std::span<const Complex> x) {
  double sum = 0.0;
  for (const auto& v : x) sum += std::norm(v);
  return std::sqrt(sum);
}

bool all_finite(std::span<const Complex> x) {
  for (const auto& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

std::vector<Complex> scaled_fft(std::span<const Complex> x, bool inverse) {
  std::vector<Complex> src(x.begin(), x.end());
  std::vector<Complex> dst;
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  if (inverse)
    fft.inv(dst, src);
  else
    fft.fwd(dst, src);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (auto& v : dst) v *= scale;
  return dst;
}

}  // namespace

double Fid::norm() const { return l2_norm(samples); }

void validate_peak(const PeakParams& p) {
  if (!std::isfinite(p.amplitude) || !std::isfinite(p.frequency) || !std::isfinite(p.decay_rate) ||
      !std::isfinite(p.phase))
    throw InvalidArgument("peak parameters must be finite");
  if (p.amplitude < 0.0) throw InvalidArgument("peak amplitude must be nonnegative");
  if (p.decay_rate < 0.0) throw InvalidArgument("peak decay rate must be nonnegative");
  if (p.frequency < -0.5 || p.frequency >= 0.5)
    throw InvalidArgument("peak frequency must lie in [-0.5, 0.5)");
}

Fid synth_fid(std::span<const PeakParams> peaks, std::size_t n) {
  if (peaks.empty()) throw InvalidArgument("synth_fid: empty peak list");
  if (n < kMinFidLength) throw InvalidArgument("synth_fid: n must be at least 8");
  for (const auto& p : peaks) validate_peak(p);

  Fid fid;
  fid.samples.assign(n, Complex{});
  for (const auto& p : peaks) {
    const Complex weight = std::polar(p.amplitude, p.phase);
    const double omega = 2.0 * std::numbers::pi * p.frequency;
    for (std::size_t t = 0; t < n; ++t) {
      const double td = static_cast<double>(t);
      fid.samples[t] += weight * std::exp(Complex(-p.decay_rate * td, omega * td));
    }
  }
  return fid;
}

NoisyFid add_noise(const Fid& fid, const NoiseSpec& spec) {
  if (!std::isfinite(spec.input_snr_db)) throw InvalidArgument("add_noise: input SNR must be finite");
  if (!all_finite(fid.samples)) throw InvalidArgument("add_noise: FID has non-finite samples");
  const double signal_norm = fid.norm();
  if (!(signal_norm > 0.0)) throw InvalidArgument("add_noise: FID has zero energy");

  const std::size_t n = fid.size();
  std::vector<Complex> noise(n);
  for (std::size_t t = 0; t < n; ++t) {
    Substream rng(spec.seed, t);
    const auto [re, im] = rng.normal_pair();
    noise[t] = Complex(re, im);
  }
  const double raw_norm = l2_norm(noise);
  const double target_norm = signal_norm * std::pow(10.0, -spec.input_snr_db / 20.0);
  const double scale = target_norm / raw_norm;

  NoisyFid out;
  out.fid.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.fid.samples[t] = fid.samples[t] + scale * noise[t];
  out.sigma = target_norm / std::sqrt(2.0 * static_cast<double>(n));
  return out;
}

double fid_snr_db(const Fid& clean, const Fid& noisy) {
  if (clean.size() != noisy.size()) throw InvalidArgument("fid_snr_db: length mismatch");
  double err = 0.0;
  for (std::size_t t = 0; t < clean.size(); ++t) err += std::norm(noisy.samples[t] - clean.samples[t]);
  return 20.0 * std::log10(clean.norm() / std::sqrt(err));
}

std::vector<Complex> unitary_dft(std::span<const Complex> x) { return scaled_fft(x, false); }

std::vector<Complex> unitary_idft(std::span<const Complex> x) { return scaled_fft(x, true); }

Spectrum fid_to_spectrum(const Fid& fid) {
  if (fid.size() < kMinFidLength) throw InvalidArgument("fid_to_spectrum: n must be at least 8");
  if (!all_finite(fid.samples)) throw InvalidArgument("fid_to_spectrum: non-finite samples");
  const auto freq = unitary_dft(fid.samples);
  std::vector<double> real(freq.size());
  double total = 0.0, mean = 0.0;
  for (std::size_t k = 0; k < freq.size(); ++k) {
    real[k] = freq[k].real();
    total += std::norm(freq[k]);
    mean += real[k];
  }
  mean /= static_cast<double>(real.size());
  double spread = 0.0;
  for (double v : real) spread += (v - mean) * (v - mean);
  if (!(spread > 1e-24 * total)) throw DegenerateInput("fid_to_spectrum: real spectrum is constant");
  return normalize(real);
}

Spectrum normalize(std::span<const double> values) {
  if (values.empty()) throw DegenerateInput("normalize: empty input");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("normalize: non-finite value");
    mean += v;
  }
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) throw DegenerateInput("normalize: input has zero variance");
  const double inv_std = 1.0 / std::sqrt(var);

  Spectrum out;
  out.values.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = (values[i] - mean) * inv_std;
  return out;
}

std::vector<PeakParams> random_peaks(std::uint64_t seed, const PeakModel& model) {
  if (model.count_min < 1 || model.count_max < model.count_min)
    throw InvalidArgument("random_peaks: bad peak count range");
  Substream rng(seed, 0, /*stream=*/0x7065616b);
  const int count = rng.uniform_int(model.count_min, model.count_max);
  std::vector<PeakParams> peaks(static_cast<std::size_t>(count));
  for (auto& p : peaks) {
    p.amplitude = rng.uniform(model.amplitude_min, model.amplitude_max);
    p.frequency = rng.uniform(-model.frequency_limit, model.frequency_limit);
    p.decay_rate = rng.uniform(model.decay_min, model.decay_max);
    p.phase = 0.0;
  }
  return peaks;
}

}  // namespace nmrtv
