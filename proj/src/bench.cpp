#include "nmrtv/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "binary_io.hpp"
#include "nmrtv/errors.hpp"
#include "nmrtv/metrics.hpp"
#include "nmrtv/tv.hpp"

namespace nmrtv {

using nlohmann::json;

std::string_view to_string(MethodId method) {
  switch (method) {
    case MethodId::tv: return "tv";
    case MethodId::wt: return "wt";
    case MethodId::cadzow: return "cadzow";
    case MethodId::unet: return "unet";
    case MethodId::tvcondnet: return "tvcondnet";
  }
  return "tv";
}

MethodId parse_method(std::string_view name) {
  for (auto m : all_methods())
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown method: " + std::string(name));
}

std::vector<MethodId> all_methods() {
  return {MethodId::tv, MethodId::wt, MethodId::cadzow, MethodId::unet, MethodId::tvcondnet};
}

bool needs_weights(MethodId method) { return method == MethodId::unet || method == MethodId::tvcondnet; }

const BenchCell* BenchReport::find(MethodId method, double input_snr_db) const {
  for (const auto& c : cells)
    if (c.method == method && c.input_snr_db == input_snr_db) return &c;
  return nullptr;
}

namespace {

using Clock = std::chrono::steady_clock;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Denoises spectrum k of the dataset. Everything inside is timed.
using Runner = std::function<std::vector<double>()>;

struct Prepared {
  Runner run;
};

Prepared prepare(MethodId method, const Dataset& ds, std::size_t k, const BenchOptions& options,
                 const std::map<MethodId, Model>& models) {
  const auto noisy = ds.noisy.row(k);
  const double tau = options.tau.value_or(ds.examples[k].tau);
  switch (method) {
    case MethodId::tv:
      return {[noisy, tau] { return tv_prox(noisy, TvConfig{tau}); }};
    case MethodId::wt:
      return {[noisy, cfg = options.wavelet] { return wavelet_denoise(noisy, cfg); }};
    case MethodId::cadzow: {
      auto fids = regenerate_fids(ds, k);
      HankelConfig cfg;
      cfg.iterations = options.cadzow_iterations;
      cfg.window = options.cadzow_window;
      cfg.rank = options.rank ? *options.rank : estimate_rank(fids.noisy, options.cadzow_window);
      return {[fid = std::move(fids.noisy), cfg] { return fid_to_spectrum(cadzow_denoise(fid, cfg)).values; }};
    }
    case MethodId::unet:
    case MethodId::tvcondnet: {
      const auto it = models.find(method);
      if (it == models.end()) throw InvalidArgument("no model loaded for method " + std::string(to_string(method)));
      const Model* model = &it->second;
      if (model->arch.in_channels != (method == MethodId::tvcondnet ? 2 : 1))
        throw InvalidArgument("weights for " + std::string(to_string(method)) + " have the wrong channel count");
      if (method == MethodId::unet) return {[model, noisy] { return denoise(*model, noisy, std::nullopt); }};
      return {[model, noisy, tau] {
        const auto condition = tv_prox(noisy, TvConfig{tau});
        return denoise(*model, noisy, std::span<const double>(condition));
      }};
    }
  }
  throw InvalidArgument("unhandled method");
}

std::string environment_note() {
  std::ostringstream os;
  os << "compiler " << __VERSION__ << "; hardware threads " << std::thread::hardware_concurrency()
     << "; timing: median of repeats per spectrum, single thread, warm caches, model load excluded";
  return os.str();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double decode_snr(const json& v) {
  const double x = v.get<double>();
  return x >= kSnrCapDb ? std::numeric_limits<double>::infinity() : x;
}

}  // namespace

std::vector<double> denoise_example(MethodId method, const Dataset& ds, std::size_t k, const BenchOptions& options,
                                    const std::map<MethodId, Model>& models) {
  if (k >= ds.size()) throw InvalidArgument("example index out of range");
  return prepare(method, ds, k, options, models).run();
}

std::map<MethodId, Model> load_models(const BenchOptions& options) {
  std::map<MethodId, Model> models;
  for (MethodId method : options.methods) {
    if (!needs_weights(method)) continue;
    const auto it = options.weights.find(method);
    if (it == options.weights.end())
      throw InvalidArgument("method " + std::string(to_string(method)) + " needs a weights file");
    if (!std::filesystem::exists(it->second))
      throw IoError("weights file for method " + std::string(to_string(method)) + " not found: " +
                    it->second.string());
    models.emplace(method, load_weights(it->second));
  }
  return models;
}

std::vector<BenchCell> bench_dataset(const Dataset& ds, const BenchOptions& options,
                                     const std::map<MethodId, Model>& models) {
  if (options.timing_repeats < 1) throw InvalidArgument("timing_repeats must be >= 1");
  if (options.methods.empty()) throw InvalidArgument("no methods requested");
  const std::size_t count = options.max_spectra ? std::min(options.max_spectra, ds.size()) : ds.size();
  if (count == 0) throw InvalidArgument("dataset has no spectra");

  std::vector<BenchCell> cells;
  for (MethodId method : options.methods) {
    std::vector<double> snrs, rmses, times;
    for (std::size_t k = 0; k < count; ++k) {
      const auto prepared = prepare(method, ds, k, options, models);
      std::vector<double> runs;
      std::vector<double> estimate;
      for (int r = 0; r < options.timing_repeats; ++r) {
        const auto start = Clock::now();
        estimate = prepared.run();
        const auto stop = Clock::now();
        runs.push_back(std::chrono::duration<double>(stop - start).count());
      }
      times.push_back(std::max(median_of(runs), 1e-9));
      snrs.push_back(snr_db(ds.clean.row(k), estimate));
      rmses.push_back(rmse(ds.clean.row(k), estimate));
    }
    BenchCell cell;
    cell.method = method;
    cell.input_snr_db = ds.input_snr_db;
    cell.count = count;
    double snr_sum = 0.0, rmse_sum = 0.0, time_sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      snr_sum += snrs[k];
      rmse_sum += rmses[k];
      time_sum += times[k];
    }
    cell.snr_mean_db = snr_sum / static_cast<double>(count);
    cell.snr_median_db = median_of(snrs);
    cell.rmse_mean = rmse_sum / static_cast<double>(count);
    cell.time_mean_s = time_sum / static_cast<double>(count);
    cells.push_back(cell);
  }
  return cells;
}

BenchReport run_bench(std::span<const std::filesystem::path> datasets, const BenchOptions& options) {
  if (datasets.empty()) throw InvalidArgument("run_bench: no datasets");
  const auto models = load_models(options);

  BenchReport report;
  report.environment = environment_note();
  for (const auto& path : datasets) {
    const Dataset ds = read_dataset(path);
    report.datasets.push_back(dataset_paths(path).manifest.string());
    auto cells = bench_dataset(ds, options, models);
    report.cells.insert(report.cells.end(), cells.begin(), cells.end());
  }
  return report;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "text" || name == "text-table") return ReportFormat::text;
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw InvalidArgument("unknown report format: " + std::string(name));
}

std::string format_report(const BenchReport& report, ReportFormat format) {
  std::ostringstream os;
  switch (format) {
    case ReportFormat::csv:
      os << "method,input_snr_db,snr_mean_db,snr_median_db,rmse_mean,time_mean_s\n";
      for (const auto& c : report.cells) {
        os << to_string(c.method) << ',' << fmt("%.17g", c.input_snr_db) << ','
           << fmt("%.17g", capped_snr(c.snr_mean_db)) << ',' << fmt("%.17g", capped_snr(c.snr_median_db)) << ','
           << fmt("%.17g", c.rmse_mean) << ',' << fmt("%.17g", c.time_mean_s) << '\n';
      }
      break;
    case ReportFormat::text: {
      char line[160];
      std::snprintf(line, sizeof line, "%-10s %12s %12s %14s %10s %12s\n", "method", "input_snr_db", "snr_mean_db",
                    "snr_median_db", "rmse_mean", "time_mean_s");
      os << line;
      for (const auto& c : report.cells) {
        std::snprintf(line, sizeof line, "%-10s %12.2f %12.2f %14.2f %10.4f %12.6f\n",
                      std::string(to_string(c.method)).c_str(), c.input_snr_db, capped_snr(c.snr_mean_db),
                      capped_snr(c.snr_median_db), c.rmse_mean, c.time_mean_s);
        os << line;
      }
      os << "# SNR: " << report.snr_definition << '\n';
      break;
    }
    case ReportFormat::json: {
      json cells = json::array();
      for (const auto& c : report.cells) {
        cells.push_back({{"method", to_string(c.method)},
                         {"input_snr_db", c.input_snr_db},
                         {"snr_mean_db", capped_snr(c.snr_mean_db)},
                         {"snr_median_db", capped_snr(c.snr_median_db)},
                         {"rmse_mean", c.rmse_mean},
                         {"time_mean_s", c.time_mean_s},
                         {"count", c.count}});
      }
      const json j = {{"snr_definition", report.snr_definition},
                      {"environment", report.environment},
                      {"datasets", report.datasets},
                      {"cells", cells}};
      os << j.dump(2) << '\n';
      break;
    }
  }
  return os.str();
}

BenchReport report_from_json(std::string_view text) {
  BenchReport report;
  try {
    const json j = json::parse(text);
    report.snr_definition = j.at("snr_definition").get<std::string>();
    report.environment = j.at("environment").get<std::string>();
    report.datasets = j.at("datasets").get<std::vector<std::string>>();
    for (const auto& cj : j.at("cells")) {
      BenchCell c;
      c.method = parse_method(cj.at("method").get<std::string>());
      c.input_snr_db = cj.at("input_snr_db").get<double>();
      c.snr_mean_db = decode_snr(cj.at("snr_mean_db"));
      c.snr_median_db = decode_snr(cj.at("snr_median_db"));
      c.rmse_mean = cj.at("rmse_mean").get<double>();
      c.time_mean_s = cj.at("time_mean_s").get<double>();
      c.count = cj.at("count").get<std::size_t>();
      report.cells.push_back(c);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bench report: ") + e.what());
  }
  return report;
}

void emit_report(const BenchReport& report, ReportFormat format, const std::filesystem::path& path) {
  detail::write_file(path, format_report(report, format));
}

// ---------------------------------------------------------------------------
// SVG figure

namespace {

constexpr double kPanelWidth = 820.0;
constexpr double kMainHeight = 240.0;
constexpr double kErrorHeight = 110.0;
constexpr double kMarginLeft = 60.0;
constexpr double kGap = 40.0;

const char* const kPalette[] = {"#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Range {
  double lo;
  double hi;
};

std::string polyline(std::span<const double> v, std::size_t begin, std::size_t end, Range y, double height,
                     const std::string& attrs) {
  std::string pts;
  const double span_x = end - begin > 1 ? static_cast<double>(end - begin - 1) : 1.0;
  const double span_y = y.hi > y.lo ? y.hi - y.lo : 1.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double px = kPanelWidth * static_cast<double>(i - begin) / span_x;
    const double py = height * (1.0 - (v[i] - y.lo) / span_y);
    pts += fmt("%.2f", px) + "," + fmt("%.2f", py) + " ";
  }
  if (!pts.empty()) pts.pop_back();
  return "<polyline fill=\"none\" " + attrs + " points=\"" + pts + "\"/>\n";
}

Range value_range(std::initializer_list<std::span<const double>> series, std::span<const PlotSeries> more,
                  std::size_t begin, std::size_t end) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto scan = [&](std::span<const double> v) {
    for (std::size_t i = begin; i < end; ++i) {
      r.lo = std::min(r.lo, v[i]);
      r.hi = std::max(r.hi, v[i]);
    }
  };
  for (auto s : series) scan(s);
  for (const auto& s : more) scan(s.values);
  if (!(r.hi > r.lo)) r = {r.lo - 1.0, r.lo + 1.0};
  return r;
}

std::string panel_frame(const std::string& id, double top, double height, const std::string& title) {
  return "<g id=\"" + id + "\" transform=\"translate(" + fmt("%.0f", kMarginLeft) + "," + fmt("%.0f", top) +
         ")\">\n<rect x=\"0\" y=\"0\" width=\"" + fmt("%.0f", kPanelWidth) + "\" height=\"" + fmt("%.0f", height) +
         "\" fill=\"none\" stroke=\"#444\"/>\n<text x=\"4\" y=\"-6\" font-size=\"12\">" + xml_escape(title) +
         "</text>\n";
}

std::string spectra_panel(const std::string& id, const std::string& title, double top, std::span<const double> clean,
                          std::span<const double> noisy, std::span<const PlotSeries> denoised, std::size_t begin,
                          std::size_t end) {
  const Range y = value_range({clean, noisy}, denoised, begin, end);
  std::string out = panel_frame(id, top, kMainHeight, title);
  out += polyline(noisy, begin, end, y, kMainHeight, "class=\"noisy\" stroke=\"#bbbbbb\" stroke-width=\"0.8\"");
  out += polyline(clean, begin, end, y, kMainHeight, "class=\"clean\" stroke=\"#1f77b4\" stroke-width=\"1\"");
  for (std::size_t m = 0; m < denoised.size(); ++m) {
    out += polyline(denoised[m].values, begin, end, y, kMainHeight,
                    "class=\"denoised\" data-method=\"" + xml_escape(denoised[m].label) + "\" stroke=\"" +
                        kPalette[m % std::size(kPalette)] + "\" stroke-width=\"1\"");
  }
  out += "</g>\n";
  return out;
}

}  // namespace

std::string render_plot(std::span<const double> clean, std::span<const double> noisy,
                        std::span<const PlotSeries> denoised, std::pair<std::size_t, std::size_t> zoom) {
  const std::size_t n = clean.size();
  if (n < 2) throw InvalidArgument("plot: need at least two samples");
  if (noisy.size() != n) throw InvalidArgument("plot: noisy length differs from clean");
  for (const auto& s : denoised)
    if (s.values.size() != n) throw InvalidArgument("plot: series " + s.label + " has the wrong length");
  if (zoom.first >= zoom.second || zoom.second > n || zoom.second - zoom.first < 2)
    throw InvalidArgument("plot: zoom range must satisfy 0 <= begin < end <= n with at least two samples");

  const double height =
      kGap + 2 * (kMainHeight + kGap) + static_cast<double>(denoised.size()) * (kErrorHeight + kGap);
  const double width = kMarginLeft + kPanelWidth + 20.0;
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    fmt("%.0f", width) + "\" height=\"" + fmt("%.0f", height) + "\" viewBox=\"0 0 " +
                    fmt("%.0f", width) + " " + fmt("%.0f", height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  double top = kGap;
  svg += spectra_panel("spectra", "Spectra (clean, noisy, denoised) vs index", top, clean, noisy, denoised, 0, n);
  top += kMainHeight + kGap;
  svg += spectra_panel("zoom", "Zoom [" + std::to_string(zoom.first) + ", " + std::to_string(zoom.second) + ")", top,
                       clean, noisy, denoised, zoom.first, zoom.second);
  top += kMainHeight + kGap;

  for (std::size_t m = 0; m < denoised.size(); ++m) {
    std::vector<double> err(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = denoised[m].values[i] - clean[i];
      peak = std::max(peak, std::abs(err[i]));
    }
    if (!(peak > 0.0)) peak = 1.0;
    svg += panel_frame("error-" + std::to_string(m), top, kErrorHeight, "Error: " + denoised[m].label + " - clean");
    svg += polyline(err, 0, n, Range{-peak, peak}, kErrorHeight,
                    "class=\"error\" data-method=\"" + xml_escape(denoised[m].label) + "\" stroke=\"" +
                        kPalette[m % std::size(kPalette)] + "\" stroke-width=\"1\"");
    svg += "</g>\n";
    top += kErrorHeight + kGap;
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(std::span<const double> clean, std::span<const double> noisy, std::span<const PlotSeries> denoised,
               std::pair<std::size_t, std::size_t> zoom, const std::filesystem::path& path) {
  detail::write_file(path, render_plot(clean, noisy, denoised, zoom));
}

}  // namespace nmrtv
