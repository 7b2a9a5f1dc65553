#pragma once

// Benchmark harness: run every method over NMRD1 test splits, aggregate
// SNR / RMSE / wall time, and emit tables and SVG figures.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nmrtv/dataset.hpp"
#include "nmrtv/hankel.hpp"
#include "nmrtv/unet.hpp"
#include "nmrtv/wavelet.hpp"

namespace nmrtv {

enum class MethodId { tv, wt, cadzow, unet, tvcondnet };

std::string_view to_string(MethodId method);
MethodId parse_method(std::string_view name);
std::vector<MethodId> all_methods();
bool needs_weights(MethodId method);

struct BenchCell {
  MethodId method = MethodId::tv;
  double input_snr_db = 0.0;
  double snr_mean_db = 0.0;    // +inf when every estimate is exact
  double snr_median_db = 0.0;
  double rmse_mean = 0.0;
  double time_mean_s = 0.0;    // per spectrum, denoising only
  std::size_t count = 0;
};

struct BenchReport {
  std::vector<BenchCell> cells;
  std::vector<std::string> datasets;  // manifest paths, one per noise level
  std::string environment;
  std::string snr_definition = "20*log10(|reference| / |estimate - reference|) on normalized spectra";

  const BenchCell* find(MethodId method, double input_snr_db) const;
};

struct BenchOptions {
  std::vector<MethodId> methods = {MethodId::tv, MethodId::wt};
  std::map<MethodId, std::filesystem::path> weights;
  /// TV strength; defaults to the tau stored with each test example.
  std::optional<double> tau;
  WaveletConfig wavelet;
  /// Cadzow rank; defaults to estimate_rank on each noisy FID.
  std::optional<int> rank;
  int cadzow_iterations = 10;
  std::size_t cadzow_window = 0;
  /// Each spectrum is timed this many times and the median kept.
  int timing_repeats = 5;
  /// Limit on spectra per dataset (0 = all).
  std::size_t max_spectra = 0;
};

/// Runs `method` on example k of `ds` (the noisy spectrum, or the
/// regenerated noisy FID for cadzow).
std::vector<double> denoise_example(MethodId method, const Dataset& ds, std::size_t k, const BenchOptions& options,
                                    const std::map<MethodId, Model>& models);

/// Loads the weight files named in options.weights for the requested methods.
std::map<MethodId, Model> load_models(const BenchOptions& options);

/// Benchmarks one in-memory dataset. Models are passed preloaded so load
/// time stays outside the measurement.
std::vector<BenchCell> bench_dataset(const Dataset& ds, const BenchOptions& options,
                                     const std::map<MethodId, Model>& models);

/// Loads each dataset and the needed weight files, then benchmarks.
BenchReport run_bench(std::span<const std::filesystem::path> datasets, const BenchOptions& options);

enum class ReportFormat { text, csv, json };

ReportFormat parse_report_format(std::string_view name);
std::string format_report(const BenchReport& report, ReportFormat format);
BenchReport report_from_json(std::string_view text);
void emit_report(const BenchReport& report, ReportFormat format, const std::filesystem::path& path);

struct PlotSeries {
  std::string label;
  std::vector<double> values;
};

/// SVG with the overlaid spectra, a zoomed panel over [zoom.first,
/// zoom.second), and one error trace (denoised - clean) per method.
std::string render_plot(std::span<const double> clean, std::span<const double> noisy,
                        std::span<const PlotSeries> denoised, std::pair<std::size_t, std::size_t> zoom);
void emit_plot(std::span<const double> clean, std::span<const double> noisy, std::span<const PlotSeries> denoised,
               std::pair<std::size_t, std::size_t> zoom, const std::filesystem::path& path);

}  // namespace nmrtv
