#pragma once

// (noisy, clean, condition) spectrum triples and the NMRD1 on-disk format:
//
//   <name>.json  manifest (UTF-8 JSON, "format_version": "NMRD1")
//   <name>.bin   little-endian f32 arrays X, Y, C, each K x n row-major,
//                concatenated in that order
//
// X holds clean spectra, Y noisy spectra and C the TV-denoised Y used as
// the network condition.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nmrtv/signal.hpp"
#include "nmrtv/tv.hpp"

namespace nmrtv {

inline constexpr std::string_view kDatasetFormat = "NMRD1";

enum class Split { train, valid, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// How the per-example TV strength was chosen.
enum class TauProtocol {
  oracle,      // best grid tau against the clean target, per example
  validation,  // one grid tau maximizing mean SNR over the split
  fixed,       // caller-supplied tau
};

std::string_view to_string(TauProtocol protocol);

/// Provenance of one stored example.
struct ExampleInfo {
  std::uint64_t source_index = 0;  // position in the input peak_sets
  double tau = 0.0;
  double realized_snr_db = 0.0;    // FID-domain, before f32 quantization
  std::vector<PeakParams> peaks;
};

/// K x n row-major block of reals.
class SpectrumBlock {
 public:
  SpectrumBlock() = default;
  SpectrumBlock(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Spectrum spectrum(std::size_t i) const {
    auto r = row(i);
    return Spectrum{{r.begin(), r.end()}};
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Dataset {
  std::size_t n = 0;
  double input_snr_db = 0.0;
  std::uint64_t seed = 0;
  Split split = Split::train;
  TauProtocol tau_protocol = TauProtocol::oracle;
  std::size_t skipped = 0;  // examples dropped for degenerate spectra
  std::optional<PeakModel> peak_model;  // set when peak_sets were drawn by random_peaks
  std::vector<ExampleInfo> examples;
  SpectrumBlock clean;      // X
  SpectrumBlock noisy;      // Y
  SpectrumBlock condition;  // C

  std::size_t size() const { return examples.size(); }
};

struct DatasetOptions {
  std::size_t n = 2048;
  /// Forces TauProtocol::fixed with this tau (e.g. a validation-tuned tau
  /// applied to the test split).
  std::optional<double> fixed_tau;
  std::size_t threads = 1;
  std::optional<PeakModel> peak_model;
};

/// Builds one split. Example i uses noise seed (spec.seed XOR i). The train
/// split conditions each example with its oracle-tuned tau; valid and test
/// splits use one validation-tuned tau unless options.fixed_tau is set.
/// Output is identical for any thread count.
Dataset make_dataset(std::span<const std::vector<PeakParams>> peak_sets, const NoiseSpec& spec, Split split,
                     const TauGrid& grid, const DatasetOptions& options = {});

/// K peak lists from random_peaks, one substream of `seed` each.
std::vector<std::vector<PeakParams>> random_peak_sets(std::size_t count, std::uint64_t seed,
                                                      const PeakModel& model = {});

/// Seed used for one split when train/valid/test are generated together
/// from a single user seed, so the splits draw disjoint spectra and noise.
std::uint64_t split_seed(std::uint64_t seed, Split split);

struct DatasetPaths {
  std::filesystem::path manifest;
  std::filesystem::path blob;
};

/// `base` may be given with or without a .json/.bin suffix.
DatasetPaths dataset_paths(const std::filesystem::path& base);

void write_dataset(const Dataset& ds, const std::filesystem::path& base);
Dataset read_dataset(const std::filesystem::path& base);

/// Clean and noisy FIDs of stored example k, regenerated from provenance.
struct ExampleFids {
  Fid clean;
  Fid noisy;
};
ExampleFids regenerate_fids(const Dataset& ds, std::size_t k);

}  // namespace nmrtv
