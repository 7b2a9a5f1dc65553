// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "nmrtv/dataset.hpp"
#include "nmrtv/hankel.hpp"
#include "nmrtv/rng.hpp"
#include "nmrtv/signal.hpp"
#include "nmrtv/tv.hpp"
#include "nmrtv/unet.hpp"
#include "nmrtv/wavelet.hpp"
#include "oracles.hpp"

using namespace nmrtv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sum_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double spectrum_snr(std::span<const double> ref, std::span<const double> est) {
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) err += (est[i] - ref[i]) * (est[i] - ref[i]);
  return 10.0 * std::log10(sum_sq(ref) / err);
}

double complex_snr(const Fid& clean, const Fid& estimate) {
  double sig = 0.0, err = 0.0;
  for (std::size_t t = 0; t < clean.size(); ++t) {
    sig += std::norm(clean.samples[t]);
    err += std::norm(estimate.samples[t] - clean.samples[t]);
  }
  return 10.0 * std::log10(sig / err);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome tv_exactness() {
  const auto start = std::chrono::steady_clock::now();
  Substream rng(20240601, 0);
  double worst = 0.0, worst_kkt = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 16));
    const double tau = std::array{0.01, 0.1, 1.0, 10.0}[static_cast<std::size_t>(c % 4)];
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform(-5.0, 5.0);
    const auto x = tv_prox(y, {tau});
    worst = std::max(worst, max_abs_diff(x, oracle::tv_dual_projected_gradient(y, tau)));
    worst_kkt = std::max(worst_kkt, oracle::tv_kkt_violation(y, x, tau));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-6 && worst_kkt <= 1e-6 && seconds < 60.0,
          "1000 cases, max |x - oracle| = " + fmt("%.2e", worst) + ", max KKT violation = " + fmt("%.2e", worst_kkt) +
              ", " + fmt("%.2f", seconds) + " s"};
}

Outcome tv_closed_forms() {
  bool ok = true;
  const auto a = tv_prox(std::vector<double>{0.0, 4.0}, {1.0});
  const double ea = std::max(std::abs(a[0] - 1.0), std::abs(a[1] - 3.0));
  ok &= ea <= 1e-12;
  const auto b = tv_prox(std::vector<double>{1.0, 2.0, 3.0}, {10.0});
  double eb = 0.0;
  for (double v : b) eb = std::max(eb, std::abs(v - 2.0));
  ok &= eb <= 1e-12;

  Substream rng(77, 0);
  double econst = 0.0, emean = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 500));
    const double tau = std::exp(rng.uniform(std::log(1e-4), std::log(1e3)));
    const std::vector<double> flat(n, rng.uniform(-10.0, 10.0));
    econst = std::max(econst, max_abs_diff(tv_prox(flat, {tau}), flat));
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform(-10.0, 10.0);
    const auto x = tv_prox(y, {tau});
    const double drift = std::abs(std::accumulate(x.begin(), x.end(), 0.0) - std::accumulate(y.begin(), y.end(), 0.0));
    emean = std::max(emean, drift / static_cast<double>(n));
  }
  ok &= econst <= 1e-12 && emean <= 1e-9;
  return {ok, "(0,4)->(1,3) err " + fmt("%.1e", ea) + ", (1,2,3)->(2,2,2) err " + fmt("%.1e", eb) +
                  ", constant err " + fmt("%.1e", econst) + ", max mean drift/n " + fmt("%.1e", emean)};
}

Outcome cadzow() {
  const std::vector<PeakParams> peaks = {{1.0, 0.12, 0.01, 0.0}, {0.7, -0.21, 0.015, 0.3}, {0.4, 0.33, 0.008, -0.6}};
  const auto clean = synth_fid(peaks, 256);
  HankelConfig cfg;
  cfg.rank = 3;
  cfg.window = 129;
  const auto fixed = cadzow_denoise(clean, cfg);
  double err = 0.0;
  for (std::size_t t = 0; t < clean.size(); ++t) err += std::norm(fixed.samples[t] - clean.samples[t]);
  const double rel = std::sqrt(err) / clean.norm();

  PeakModel three;
  three.count_min = three.count_max = 3;
  std::vector<double> gains;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto fid = synth_fid(random_peaks(seed, three), 256);
    const auto noisy = add_noise(fid, NoiseSpec{10.0, seed});
    HankelConfig c;
    c.rank = 3;
    c.iterations = 10;
    c.window = 129;
    gains.push_back(complex_snr(fid, cadzow_denoise(noisy.fid, c)) - complex_snr(fid, noisy.fid));
  }
  std::sort(gains.begin(), gains.end());
  const double median = 0.5 * (gains[9] + gains[10]);
  return {rel <= 1e-8 && median >= 5.0,
          "noiseless relative error " + fmt("%.2e", rel) + ", median gain at 10 dB over 20 seeds " +
              fmt("%.2f", median) + " dB (min " + fmt("%.2f", gains.front()) + ")"};
}

Outcome wavelet_round_trip() {
  double worst = 0.0, worst_identity = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Substream rng(seed, 0, 11);
    const std::size_t n = 64 + 32 * (seed % 30);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-100.0, 100.0);
    const int levels = 1 + static_cast<int>(seed % 5);
    const auto back = idwt(dwt(x, levels));
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err += (back[i] - x[i]) * (back[i] - x[i]);
    worst = std::max(worst, std::sqrt(err / sum_sq(x)));

    std::vector<double> odd(x.begin(), x.end() - static_cast<std::ptrdiff_t>(seed % 7));
    WaveletConfig cfg;
    cfg.levels = levels;
    cfg.threshold = 0.0;
    worst_identity = std::max(worst_identity, max_abs_diff(wavelet_denoise(odd, cfg), odd));
  }
  return {worst < 1e-10 && worst_identity < 1e-10,
          "max relative round-trip error " + fmt("%.2e", worst) + ", threshold-0 max deviation " +
              fmt("%.2e", worst_identity)};
}

Outcome pipeline_determinism() {
  const auto dir = fs::temp_directory_path() / ("nmrtv_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto sets = random_peak_sets(24, 1234);
  const auto grid = TauGrid::default_grid();
  auto build = [&](std::size_t threads, const std::string& name) {
    DatasetOptions opt;
    opt.n = 512;
    opt.threads = threads;
    opt.peak_model = PeakModel{};
    write_dataset(make_dataset(sets, NoiseSpec{3.0, 1234}, Split::train, grid, opt), dir / name);
    return slurp(dir / (name + ".json")) + slurp(dir / (name + ".bin"));
  };
  const auto first = build(1, "serial1");
  const auto second = build(1, "serial2");
  const auto parallel = build(8, "parallel");
  fs::remove_all(dir);
  // Manifests embed the blob filename, which differs by construction.
  auto strip = [](std::string s) {
    for (const char* name : {"serial1", "serial2", "parallel"}) {
      for (auto pos = s.find(name); pos != std::string::npos; pos = s.find(name)) s.replace(pos, std::strlen(name), "X");
    }
    return s;
  };
  const bool same_runs = strip(first) == strip(second);
  const bool same_threads = strip(first) == strip(parallel);
  return {same_runs && same_threads, std::string("two serial runs ") + (same_runs ? "identical" : "DIFFER") +
                                         ", serial vs 8 threads " + (same_threads ? "identical" : "DIFFER") + " (" +
                                         std::to_string(first.size()) + " bytes)"};
}

Outcome noise_calibration() {
  double worst = 0.0, worst_recorded = 0.0;
  std::size_t checked = 0;
  for (double level : {3.0, 5.0, 10.0, 15.0}) {
    DatasetOptions opt;
    opt.n = 1024;
    opt.threads = 4;
    const auto ds = make_dataset(random_peak_sets(32, 99), NoiseSpec{level, 99}, Split::train,
                                 TauGrid::logarithmic(1e-3, 10.0, 5), opt);
    for (std::size_t k = 0; k < ds.size(); ++k) {
      const auto fids = regenerate_fids(ds, k);
      worst = std::max(worst, std::abs(complex_snr(fids.clean, fids.noisy) - level));
      worst_recorded = std::max(worst_recorded, std::abs(ds.examples[k].realized_snr_db - level));
      ++checked;
    }
  }
  return {worst <= 1e-6 && worst_recorded <= 1e-6,
          std::to_string(checked) + " examples at 3/5/10/15 dB, max |realized - target| = " + fmt("%.2e", worst) +
              " dB (recorded " + fmt("%.2e", worst_recorded) + ")"};
}

Outcome residual_identity() {
  std::size_t mismatches = 0, checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto arch = seed % 4 == 3 ? ArchConfig::unet() : ArchConfig::tvcondnet();
    const auto model = random_model(arch, 1000 + seed);
    Substream rng(seed, 0, 5);
    const std::size_t n = 8 + static_cast<std::size_t>(rng.uniform_int(0, 600));
    std::vector<double> raw(n);
    for (auto& v : raw) v = rng.uniform(-1.0, 1.0);
    // Spectra as they come back from NMRD1 storage.
    std::vector<double> y = normalize(raw).values;
    for (auto& v : y) v = static_cast<float>(v);
    const auto c = tv_prox(y, {0.1});
    std::optional<std::span<const double>> cond;
    if (arch.in_channels == 2) cond = c;
    const auto r = forward(model, y, cond);
    const auto d = denoise(model, y, cond);
    for (std::size_t t = 0; t < n; ++t, ++checked)
      if (d[t] + r[t] != y[t] || y[t] - d[t] != r[t]) ++mismatches;
  }
  std::size_t zero_mismatch = 0;
  for (auto arch : {ArchConfig::tvcondnet(), ArchConfig::unet()}) {
    const auto model = zero_model(arch);
    Substream rng(5, 0, 6);
    std::vector<double> y(300);
    for (auto& v : y) v = rng.uniform(-4.0, 4.0);
    std::optional<std::span<const double>> cond;
    if (arch.in_channels == 2) cond = y;
    const auto d = denoise(model, y, cond);
    for (std::size_t t = 0; t < y.size(); ++t)
      if (d[t] != y[t]) ++zero_mismatch;
  }
  return {mismatches == 0 && zero_mismatch == 0,
          "100 random models, " + std::to_string(checked) + " samples, " + std::to_string(mismatches) +
              " inexact; zero model " + (zero_mismatch == 0 ? "is" : "is NOT") + " the identity"};
}

Outcome tv_baseline_direction() {
  const std::uint64_t seed = 2024;
  const auto grid = TauGrid::default_grid();
  DatasetOptions opt;
  opt.n = 2048;
  opt.threads = 0;
  const auto valid = make_dataset(random_peak_sets(3, split_seed(seed, Split::valid)),
                                  NoiseSpec{3.0, split_seed(seed, Split::valid)}, Split::valid, grid, opt);
  opt.fixed_tau = valid.examples.front().tau;
  const auto test = make_dataset(random_peak_sets(32, split_seed(seed, Split::test)),
                                 NoiseSpec{3.0, split_seed(seed, Split::test)}, Split::test, grid, opt);
  double in = 0.0, out = 0.0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    in += spectrum_snr(test.clean.row(k), test.noisy.row(k));
    out += spectrum_snr(test.clean.row(k), tv_prox(test.noisy.row(k), {*opt.fixed_tau}));
  }
  in /= static_cast<double>(test.size());
  out /= static_cast<double>(test.size());
  return {out >= in + 4.0, "tau = " + fmt("%.4g", *opt.fixed_tau) + ", mean input " + fmt("%.2f", in) +
                               " dB, mean output " + fmt("%.2f", out) + " dB, gain " + fmt("%.2f", out - in) + " dB"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"tv-exactness", tv_exactness},
      {"tv-closed-forms", tv_closed_forms},
      {"cadzow-fixed-point", cadzow},
      {"wavelet-round-trip", wavelet_round_trip},
      {"pipeline-determinism", pipeline_determinism},
      {"noise-calibration", noise_calibration},
      {"residual-identity", residual_identity},
      {"tv-baseline-direction", tv_baseline_direction},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
