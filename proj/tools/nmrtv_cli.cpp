// nmrtv: synthetic NMR datasets, spectrum denoising and benchmarks.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nmrtv/bench.hpp"
#include "nmrtv/dataset.hpp"
#include "nmrtv/errors.hpp"
#include "nmrtv/metrics.hpp"
#include "nmrtv/signal.hpp"
#include "nmrtv/tv.hpp"
#include "nmrtv/unet.hpp"

namespace {

using namespace nmrtv;

struct GlobalFlags {
  std::uint64_t seed = 1;
  double snr_db = 3.0;
  std::string out;
};

struct GridFlags {
  double tau_min = 1e-3;
  double tau_max = 1e1;
  std::size_t tau_count = 25;

  TauGrid grid() const { return TauGrid::logarithmic(tau_min, tau_max, tau_count); }
  void attach(CLI::App* cmd) {
    cmd->add_option("--tau-min", tau_min, "Smallest tau in the tuning grid")->capture_default_str();
    cmd->add_option("--tau-max", tau_max, "Largest tau in the tuning grid")->capture_default_str();
    cmd->add_option("--tau-count", tau_count, "Number of log-spaced grid points")->capture_default_str();
  }
};

// Method selection plus method-specific flags shared by denoise, bench, plot.
struct MethodFlags {
  std::vector<std::string> methods;
  std::vector<std::string> weights;  // method=path
  double tau = -1.0;
  int rank = 0;
  int levels = 5;
  std::string threshold_mode = "soft";
  double threshold = -1.0;
  int iterations = 10;
  std::size_t window = 0;

  void attach(CLI::App* cmd, bool many) {
    auto* opt = cmd->add_option("--method", methods, "tv, wt, cadzow, unet, tvcondnet")->delimiter(',');
    if (!many) opt->expected(1);
    cmd->add_option("--weights", weights, "TVCW1 weights as method=path, e.g. tvcondnet=snr3.tvcw")
        ->delimiter(',');
    cmd->add_option("--tau", tau, "TV strength (default: tau stored with each example)");
    cmd->add_option("--rank", rank, "Cadzow rank (default: singular-value gap estimate)");
    cmd->add_option("--levels", levels, "Wavelet levels")->capture_default_str();
    cmd->add_option("--threshold-mode", threshold_mode, "Wavelet thresholding: soft or hard")
        ->check(CLI::IsMember({"soft", "hard"}))
        ->capture_default_str();
    cmd->add_option("--threshold", threshold, "Wavelet threshold (default: universal)");
    cmd->add_option("--iterations", iterations, "Cadzow iterations")->capture_default_str();
    cmd->add_option("--window", window, "Cadzow Hankel rows (default n/2+1)");
  }

  BenchOptions options() const {
    BenchOptions o;
    o.methods.clear();
    for (const auto& m : methods) o.methods.push_back(parse_method(m));
    for (const auto& w : weights) {
      const auto eq = w.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--weights expects method=path, got " + w);
      o.weights[parse_method(w.substr(0, eq))] = w.substr(eq + 1);
    }
    if (tau >= 0.0) o.tau = tau;
    if (rank > 0) o.rank = rank;
    o.wavelet.levels = levels;
    o.wavelet.mode = threshold_mode == "hard" ? ThresholdMode::hard : ThresholdMode::soft;
    if (threshold >= 0.0) o.wavelet.threshold = threshold;
    o.cadzow_iterations = iterations;
    o.cadzow_window = window;
    return o;
  }
};

std::ostream& output_stream(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path + " for writing");
  return file;
}

void write_columns(const std::string& path, const std::vector<std::string>& names,
                   const std::vector<const std::vector<double>*>& columns) {
  std::ofstream file;
  std::ostream& os = output_stream(path, file);
  os << "index";
  for (const auto& name : names) os << ',' << name;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < columns.front()->size(); ++i) {
    os << i;
    for (const auto* col : columns) {
      std::snprintf(buf, sizeof buf, "%.9g", (*col)[i]);
      os << ',' << buf;
    }
    os << '\n';
  }
}

std::vector<double> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find_last_of(',');
    const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
    try {
      values.push_back(std::stod(field));
    } catch (const std::exception&) {
      if (values.empty()) continue;  // header row
      throw FormatError(path + ": cannot parse '" + field + "'");
    }
  }
  return values;
}

int run_synth(const GlobalFlags& g, std::size_t n) {
  const auto peaks = random_peaks(g.seed);
  const Fid clean = synth_fid(peaks, n);
  const auto noisy = add_noise(clean, NoiseSpec{g.snr_db, g.seed});
  const auto x = fid_to_spectrum(clean);
  const auto y = fid_to_spectrum(noisy.fid);
  write_columns(g.out, {"clean", "noisy"}, {&x.values, &y.values});
  std::cerr << peaks.size() << " peaks, n = " << n << ", FID SNR " << fid_snr_db(clean, noisy.fid)
            << " dB, sigma " << noisy.sigma << ", spectrum SNR " << snr_db(x.values, y.values) << " dB\n";
  return 0;
}

struct DatasetFlags {
  std::size_t n = 2048;
  std::size_t count = 0;
  std::size_t count_train = 512;
  std::size_t count_valid = 3;
  std::size_t count_test = 32;
  std::string split = "all";
  double tau = -1.0;
  std::string valid_dataset;
  std::size_t threads = 0;
};

Dataset build_split(const GlobalFlags& g, const DatasetFlags& f, Split split, std::uint64_t seed,
                    std::size_t count, const TauGrid& grid, std::optional<double> fixed_tau) {
  const PeakModel model;
  const auto peak_sets = random_peak_sets(count, seed, model);
  DatasetOptions opts;
  opts.n = f.n;
  opts.threads = f.threads;
  opts.fixed_tau = fixed_tau;
  opts.peak_model = model;
  return make_dataset(peak_sets, NoiseSpec{g.snr_db, seed}, split, grid, opts);
}

void report_split(const std::string& path, const Dataset& ds) {
  std::cerr << "wrote " << dataset_paths(path).manifest.string() << ": K = " << ds.size() << ", split "
            << to_string(ds.split) << ", tau protocol " << to_string(ds.tau_protocol);
  if (ds.tau_protocol != TauProtocol::oracle) std::cerr << ", tau = " << ds.examples.front().tau;
  if (ds.skipped) std::cerr << ", skipped " << ds.skipped;
  std::cerr << '\n';
}

int run_make_dataset(const GlobalFlags& g, const DatasetFlags& f, const GridFlags& gf) {
  if (g.out.empty()) throw InvalidArgument("make-dataset needs --out");
  const TauGrid grid = gf.grid();
  std::optional<double> fixed_tau;
  if (f.tau >= 0.0) fixed_tau = f.tau;
  if (!f.valid_dataset.empty()) {
    const Dataset valid = read_dataset(f.valid_dataset);
    fixed_tau = valid.examples.front().tau;
  }

  if (f.split == "all") {
    const Dataset valid =
        build_split(g, f, Split::valid, split_seed(g.seed, Split::valid), f.count_valid, grid, std::nullopt);
    const double tau = valid.examples.front().tau;
    const Dataset train =
        build_split(g, f, Split::train, split_seed(g.seed, Split::train), f.count_train, grid, std::nullopt);
    const Dataset test = build_split(g, f, Split::test, split_seed(g.seed, Split::test), f.count_test, grid,
                                     fixed_tau.value_or(tau));
    for (const auto* ds : {&train, &valid, &test}) {
      const std::string path = g.out + "_" + std::string(to_string(ds->split));
      write_dataset(*ds, path);
      report_split(path, *ds);
    }
    return 0;
  }

  const Split split = parse_split(f.split);
  std::size_t count = f.count;
  if (count == 0) count = split == Split::train ? f.count_train : split == Split::valid ? f.count_valid : f.count_test;
  const Dataset ds = build_split(g, f, split, g.seed, count, grid, fixed_tau);
  write_dataset(ds, g.out);
  report_split(g.out, ds);
  return 0;
}

int run_denoise(const GlobalFlags& g, const MethodFlags& mf, const std::string& dataset, std::size_t index,
                const std::string& input) {
  auto options = mf.options();
  if (options.methods.size() != 1) throw InvalidArgument("denoise takes exactly one --method");
  const MethodId method = options.methods.front();
  const auto models = load_models(options);

  if (!input.empty()) {
    const auto y = read_values(input);
    std::vector<double> out;
    switch (method) {
      case MethodId::tv:
        if (!options.tau) throw InvalidArgument("tv on --input needs --tau");
        out = tv_prox(y, TvConfig{*options.tau});
        break;
      case MethodId::wt: out = wavelet_denoise(y, options.wavelet); break;
      case MethodId::unet: out = denoise(models.at(method), y, std::nullopt); break;
      case MethodId::tvcondnet: {
        if (!options.tau) throw InvalidArgument("tvcondnet on --input needs --tau");
        const auto c = tv_prox(y, TvConfig{*options.tau});
        out = denoise(models.at(method), y, std::span<const double>(c));
        break;
      }
      case MethodId::cadzow: throw InvalidArgument("cadzow needs an FID; use --dataset");
    }
    write_columns(g.out, {"noisy", "denoised"}, {&y, &out});
    return 0;
  }

  if (dataset.empty()) throw InvalidArgument("denoise needs --dataset or --input");
  const Dataset ds = read_dataset(dataset);
  const auto out = denoise_example(method, ds, index, options, models);
  const auto x = ds.clean.spectrum(index).values;
  const auto y = ds.noisy.spectrum(index).values;
  write_columns(g.out, {"clean", "noisy", "denoised"}, {&x, &y, &out});
  std::cerr << to_string(method) << ": input SNR " << snr_db(x, y) << " dB -> " << snr_db(x, out) << " dB, RMSE "
            << rmse(x, out) << '\n';
  return 0;
}

int run_bench_cmd(const GlobalFlags& g, const MethodFlags& mf, const std::vector<std::string>& datasets,
                  const std::string& format, int repeats, std::size_t max_spectra) {
  auto options = mf.options();
  if (options.methods.empty()) options.methods = {MethodId::tv, MethodId::wt};
  options.timing_repeats = repeats;
  options.max_spectra = max_spectra;
  std::vector<std::filesystem::path> paths(datasets.begin(), datasets.end());
  const auto report = run_bench(paths, options);
  const auto fmt = parse_report_format(format);
  if (g.out.empty() || g.out == "-")
    std::cout << format_report(report, fmt);
  else
    emit_report(report, fmt, g.out);
  return 0;
}

int run_plot(const GlobalFlags& g, const MethodFlags& mf, const std::string& dataset, std::size_t index,
             const std::string& zoom) {
  if (g.out.empty()) throw InvalidArgument("plot needs --out");
  auto options = mf.options();
  if (options.methods.empty()) options.methods = {MethodId::tv, MethodId::wt};
  const auto models = load_models(options);
  const Dataset ds = read_dataset(dataset);
  if (index >= ds.size()) throw InvalidArgument("--index out of range");

  std::pair<std::size_t, std::size_t> range{0, ds.n};
  if (!zoom.empty()) {
    const auto colon = zoom.find(':');
    if (colon == std::string::npos) throw InvalidArgument("--zoom expects begin:end");
    range = {std::stoul(zoom.substr(0, colon)), std::stoul(zoom.substr(colon + 1))};
  }
  std::vector<PlotSeries> series;
  for (MethodId m : options.methods) {
    auto values = denoise_example(m, ds, index, options, models);
    char label[96];
    std::snprintf(label, sizeof label, "%s (SNR %.2f dB, RMSE %.3f)", std::string(to_string(m)).c_str(),
                  capped_snr(snr_db(ds.clean.row(index), values)), rmse(ds.clean.row(index), values));
    series.push_back({label, std::move(values)});
  }
  emit_plot(ds.clean.row(index), ds.noisy.row(index), series, range, g.out);
  return 0;
}

int run_tune_tau(const GridFlags& gf, const std::string& dataset, const std::string& protocol) {
  const Dataset ds = read_dataset(dataset);
  const TauGrid grid = gf.grid();
  if (protocol == "oracle") {
    std::cout << "index,tau,snr_db\n";
    for (std::size_t k = 0; k < ds.size(); ++k) {
      const auto choice = tune_tau_oracle(ds.noisy.spectrum(k), ds.clean.spectrum(k), grid);
      std::cout << k << ',' << choice.tau << ',' << capped_snr(choice.snr_db) << '\n';
    }
    return 0;
  }
  std::vector<SpectrumPair> pairs;
  for (std::size_t k = 0; k < ds.size(); ++k) pairs.push_back({ds.noisy.spectrum(k), ds.clean.spectrum(k)});
  std::cout << tune_tau_validation(pairs, grid, 0) << '\n';
  return 0;
}

int run_init_weights(const GlobalFlags& g, const std::string& arch, bool zero) {
  if (g.out.empty()) throw InvalidArgument("init-weights needs --out");
  const ArchConfig cfg = arch == "unet" ? ArchConfig::unet() : ArchConfig::tvcondnet();
  write_weights(zero ? zero_model(cfg) : random_model(cfg, g.seed), g.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NMR spectrum denoising toolkit: TV, wavelet, Cadzow and TV-conditioned U-Net"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--snr-db", g.snr_db, "FID-domain input SNR in dB")->capture_default_str();
  app.add_option("--out", g.out, "Output path (stdout when omitted, where applicable)");

  std::size_t synth_n = 2048;
  auto* synth = app.add_subcommand("synth", "Generate one clean/noisy spectrum pair as CSV");
  synth->add_option("--n", synth_n, "FID length")->capture_default_str();

  DatasetFlags df;
  GridFlags make_grid;
  auto* make = app.add_subcommand("make-dataset", "Write NMRD1 datasets");
  make->add_option("--n", df.n, "Spectrum length")->capture_default_str();
  make->add_option("--count", df.count, "Examples for a single --split");
  make->add_option("--count-train", df.count_train)->capture_default_str();
  make->add_option("--count-valid", df.count_valid)->capture_default_str();
  make->add_option("--count-test", df.count_test)->capture_default_str();
  make->add_option("--split", df.split, "train, valid, test, or all (writes <out>_train/_valid/_test)")
      ->check(CLI::IsMember({"train", "valid", "test", "all"}))
      ->capture_default_str();
  make->add_option("--tau", df.tau, "Fixed condition tau (overrides tuning)");
  make->add_option("--valid-dataset", df.valid_dataset, "Take the fixed tau from this validation dataset");
  make->add_option("--threads", df.threads, "Worker threads (0 = all cores)")->capture_default_str();
  make_grid.attach(make);

  MethodFlags denoise_flags;
  std::string denoise_dataset, denoise_input;
  std::size_t denoise_index = 0;
  auto* den = app.add_subcommand("denoise", "Denoise one spectrum, write CSV");
  den->add_option("--dataset", denoise_dataset, "NMRD1 dataset");
  den->add_option("--index", denoise_index, "Example index")->capture_default_str();
  den->add_option("--input", denoise_input, "Noisy spectrum, one value per line (last CSV column)");
  denoise_flags.attach(den, false);

  MethodFlags bench_flags;
  std::vector<std::string> bench_datasets;
  std::string bench_format = "text";
  int bench_repeats = 5;
  std::size_t bench_max = 0;
  auto* bench = app.add_subcommand("bench", "Benchmark methods over test datasets");
  bench->add_option("--dataset", bench_datasets, "NMRD1 test datasets, one per noise level")->required();
  bench->add_option("--format", bench_format, "text, csv, or json")
      ->check(CLI::IsMember({"text", "text-table", "csv", "json"}))
      ->capture_default_str();
  bench->add_option("--repeats", bench_repeats, "Timing repetitions per spectrum")->capture_default_str();
  bench->add_option("--max-spectra", bench_max, "Use at most this many spectra per dataset");
  bench_flags.attach(bench, true);

  MethodFlags plot_flags;
  std::string plot_dataset, plot_zoom;
  std::size_t plot_index = 0;
  auto* plot = app.add_subcommand("plot", "SVG comparison figure for one example");
  plot->add_option("--dataset", plot_dataset, "NMRD1 dataset")->required();
  plot->add_option("--index", plot_index, "Example index")->capture_default_str();
  plot->add_option("--zoom", plot_zoom, "Zoomed index range begin:end");
  plot_flags.attach(plot, true);

  GridFlags tune_grid;
  std::string tune_dataset, tune_protocol = "validation";
  auto* tune = app.add_subcommand("tune-tau", "Tune the TV strength on a dataset");
  tune->add_option("--dataset", tune_dataset, "NMRD1 dataset")->required();
  tune->add_option("--protocol", tune_protocol, "validation (one tau) or oracle (per example)")
      ->check(CLI::IsMember({"validation", "oracle"}))
      ->capture_default_str();
  tune_grid.attach(tune);

  std::string init_arch = "tvcondnet";
  bool init_zero = false;
  auto* init = app.add_subcommand("init-weights", "Write an untrained TVCW1 weight file");
  init->add_option("--arch", init_arch, "tvcondnet or unet")
      ->check(CLI::IsMember({"tvcondnet", "unet"}))
      ->capture_default_str();
  init->add_flag("--zero", init_zero, "All-zero weights instead of seeded uniform initialization");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(g, synth_n);
    if (*make) return run_make_dataset(g, df, make_grid);
    if (*den) return run_denoise(g, denoise_flags, denoise_dataset, denoise_index, denoise_input);
    if (*bench) return run_bench_cmd(g, bench_flags, bench_datasets, bench_format, bench_repeats, bench_max);
    if (*plot) return run_plot(g, plot_flags, plot_dataset, plot_index, plot_zoom);
    if (*tune) return run_tune_tau(tune_grid, tune_dataset, tune_protocol);
    if (*init) return run_init_weights(g, init_arch, init_zero);
  } catch (const nmrtv::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
