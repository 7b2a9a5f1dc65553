#include "nmrtv/dataset.hpp"

#include <cmath>
#include <string>

#include "json.hpp"

#include "binary_io.hpp"
#include "nmrtv/errors.hpp"
#include "nmrtv/parallel.hpp"
#include "nmrtv/rng.hpp"

namespace nmrtv {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  throw InvalidArgument("unknown split: " + std::string(name));
}

std::string_view to_string(TauProtocol protocol) {
  switch (protocol) {
    case TauProtocol::oracle: return "oracle";
    case TauProtocol::validation: return "validation";
    case TauProtocol::fixed: return "fixed";
  }
  return "oracle";
}

namespace {

TauProtocol parse_protocol(std::string_view name) {
  if (name == "oracle") return TauProtocol::oracle;
  if (name == "validation") return TauProtocol::validation;
  if (name == "fixed") return TauProtocol::fixed;
  throw FormatError("unknown tau_protocol: " + std::string(name));
}

struct Generated {
  bool ok = false;
  Spectrum clean;
  Spectrum noisy;
  double realized_snr_db = 0.0;
};

NoiseSpec example_noise(const NoiseSpec& spec, std::uint64_t source_index) {
  return NoiseSpec{spec.input_snr_db, spec.seed ^ source_index};
}

json peak_model_json(const PeakModel& m) {
  return json{{"count_min", m.count_min},         {"count_max", m.count_max},
              {"amplitude_min", m.amplitude_min}, {"amplitude_max", m.amplitude_max},
              {"frequency_limit", m.frequency_limit}, {"decay_min", m.decay_min},
              {"decay_max", m.decay_max}};
}

PeakModel peak_model_from_json(const json& j) {
  PeakModel m;
  m.count_min = j.at("count_min").get<int>();
  m.count_max = j.at("count_max").get<int>();
  m.amplitude_min = j.at("amplitude_min").get<double>();
  m.amplitude_max = j.at("amplitude_max").get<double>();
  m.frequency_limit = j.at("frequency_limit").get<double>();
  m.decay_min = j.at("decay_min").get<double>();
  m.decay_max = j.at("decay_max").get<double>();
  return m;
}

const json& require(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field)) throw FormatError(std::string("manifest missing field: ") + field);
  return j.at(field);
}

template <typename T>
T require_as(const json& j, const char* field) {
  const json& v = require(j, field);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("manifest field has wrong type: ") + field);
  }
}

}  // namespace

std::vector<std::vector<PeakParams>> random_peak_sets(std::size_t count, std::uint64_t seed,
                                                      const PeakModel& model) {
  std::vector<std::vector<PeakParams>> sets(count);
  for (std::size_t i = 0; i < count; ++i) sets[i] = random_peaks(substream_seed(seed, i, 0x73657473), model);
  return sets;
}

Dataset make_dataset(std::span<const std::vector<PeakParams>> peak_sets, const NoiseSpec& spec, Split split,
                     const TauGrid& grid, const DatasetOptions& options) {
  if (peak_sets.empty()) throw InvalidArgument("make_dataset: no peak sets");
  if (options.n < kMinFidLength) throw InvalidArgument("make_dataset: n must be at least 8");
  for (const auto& set : peak_sets) {
    if (set.empty()) throw InvalidArgument("make_dataset: empty peak list");
    for (const auto& p : set) validate_peak(p);
  }
  if (options.fixed_tau && (!std::isfinite(*options.fixed_tau) || *options.fixed_tau < 0.0))
    throw InvalidArgument("make_dataset: fixed tau must be finite and >= 0");

  const std::size_t count = peak_sets.size();
  std::vector<Generated> generated(count);
  parallel_for(count, options.threads, [&](std::size_t i) {
    auto& g = generated[i];
    try {
      const Fid clean = synth_fid(peak_sets[i], options.n);
      g.clean = fid_to_spectrum(clean);
      const NoisyFid noisy = add_noise(clean, example_noise(spec, i));
      g.noisy = fid_to_spectrum(noisy.fid);
      g.realized_snr_db = fid_snr_db(clean, noisy.fid);
      g.ok = true;
    } catch (const DegenerateInput&) {
      g.ok = false;
    }
  });

  Dataset ds;
  ds.n = options.n;
  ds.input_snr_db = spec.input_snr_db;
  ds.seed = spec.seed;
  ds.split = split;
  ds.peak_model = options.peak_model;

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < count; ++i) {
    if (generated[i].ok)
      kept.push_back(i);
    else
      ++ds.skipped;
  }
  if (kept.empty()) throw DegenerateInput("make_dataset: every example was degenerate");

  const std::size_t k_count = kept.size();
  ds.clean = SpectrumBlock(k_count, options.n);
  ds.noisy = SpectrumBlock(k_count, options.n);
  ds.condition = SpectrumBlock(k_count, options.n);
  ds.examples.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto& g = generated[kept[k]];
    std::copy(g.clean.values.begin(), g.clean.values.end(), ds.clean.row(k).begin());
    std::copy(g.noisy.values.begin(), g.noisy.values.end(), ds.noisy.row(k).begin());
    ds.examples[k].source_index = kept[k];
    ds.examples[k].realized_snr_db = g.realized_snr_db;
    ds.examples[k].peaks = peak_sets[kept[k]];
  }

  if (options.fixed_tau) {
    ds.tau_protocol = TauProtocol::fixed;
    for (auto& e : ds.examples) e.tau = *options.fixed_tau;
  } else if (split == Split::train) {
    ds.tau_protocol = TauProtocol::oracle;
    parallel_for(k_count, options.threads, [&](std::size_t k) {
      const auto& g = generated[kept[k]];
      ds.examples[k].tau = tune_tau_oracle(g.noisy, g.clean, grid).tau;
    });
  } else {
    ds.tau_protocol = TauProtocol::validation;
    std::vector<SpectrumPair> pairs;
    pairs.reserve(k_count);
    for (std::size_t idx : kept) pairs.push_back({generated[idx].noisy, generated[idx].clean});
    const double tau = tune_tau_validation(pairs, grid, options.threads);
    for (auto& e : ds.examples) e.tau = tau;
  }

  parallel_for(k_count, options.threads, [&](std::size_t k) {
    const auto c = tv_prox(ds.noisy.row(k), TvConfig{ds.examples[k].tau});
    std::copy(c.begin(), c.end(), ds.condition.row(k).begin());
  });
  return ds;
}

std::uint64_t split_seed(std::uint64_t seed, Split split) {
  return substream_seed(seed, static_cast<std::uint64_t>(split), 0x73706c74);
}

DatasetPaths dataset_paths(const std::filesystem::path& base) {
  auto stem = base;
  if (stem.extension() == ".json" || stem.extension() == ".bin") stem.replace_extension();
  DatasetPaths paths;
  paths.manifest = stem;
  paths.manifest += ".json";
  paths.blob = stem;
  paths.blob += ".bin";
  return paths;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& base) {
  const std::size_t k_count = ds.size();
  for (const auto* block : {&ds.clean, &ds.noisy, &ds.condition})
    if (block->rows() != k_count || block->cols() != ds.n)
      throw ShapeMismatch("write_dataset: array shape does not match K x n");

  const auto paths = dataset_paths(base);
  json examples = json::array();
  for (const auto& e : ds.examples) {
    json peaks = json::array();
    for (const auto& p : e.peaks) peaks.push_back({p.amplitude, p.frequency, p.decay_rate, p.phase});
    examples.push_back({{"source_index", e.source_index},
                        {"tau", e.tau},
                        {"realized_snr_db", e.realized_snr_db},
                        {"peaks", std::move(peaks)}});
  }
  json manifest = {
      {"format_version", kDatasetFormat},
      {"n", ds.n},
      {"K", k_count},
      {"input_snr_db", ds.input_snr_db},
      {"seed", ds.seed},
      {"split", to_string(ds.split)},
      {"tau_protocol", to_string(ds.tau_protocol)},
      {"skipped", ds.skipped},
      {"peak_model", ds.peak_model ? peak_model_json(*ds.peak_model) : json(nullptr)},
      {"blob", paths.blob.filename().string()},
      {"layout", {{"arrays", {"X", "Y", "C"}}, {"dtype", "f32le"}, {"order", "row-major"}}},
      {"examples", std::move(examples)},
  };

  std::string blob;
  blob.reserve(3 * k_count * ds.n * 4);
  for (const auto* block : {&ds.clean, &ds.noisy, &ds.condition})
    for (double v : block->data()) detail::append_f32le(blob, static_cast<float>(v));

  detail::write_file(paths.blob, blob);
  detail::write_file(paths.manifest, manifest.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& base) {
  const auto paths = dataset_paths(base);
  json manifest;
  try {
    manifest = json::parse(detail::read_file(paths.manifest));
  } catch (const json::parse_error& e) {
    throw FormatError(paths.manifest.string() + ": " + e.what());
  }

  const auto version = require_as<std::string>(manifest, "format_version");
  if (version != kDatasetFormat)
    throw VersionError(paths.manifest.string() + ": unsupported format_version " + version);

  Dataset ds;
  ds.n = require_as<std::size_t>(manifest, "n");
  const auto k_count = require_as<std::size_t>(manifest, "K");
  ds.input_snr_db = require_as<double>(manifest, "input_snr_db");
  ds.seed = require_as<std::uint64_t>(manifest, "seed");
  try {
    ds.split = parse_split(require_as<std::string>(manifest, "split"));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  ds.tau_protocol = parse_protocol(require_as<std::string>(manifest, "tau_protocol"));
  ds.skipped = require_as<std::size_t>(manifest, "skipped");
  const json& model = require(manifest, "peak_model");
  if (!model.is_null()) {
    try {
      ds.peak_model = peak_model_from_json(model);
    } catch (const json::exception&) {
      throw FormatError("manifest field has wrong type: peak_model");
    }
  }
  const json& examples = require(manifest, "examples");
  if (!examples.is_array() || examples.size() != k_count)
    throw ShapeMismatch("manifest examples list does not have K entries");
  ds.examples.reserve(k_count);
  for (const auto& ej : examples) {
    ExampleInfo e;
    e.source_index = require_as<std::uint64_t>(ej, "source_index");
    e.tau = require_as<double>(ej, "tau");
    e.realized_snr_db = require_as<double>(ej, "realized_snr_db");
    for (const auto& pj : require(ej, "peaks")) {
      if (!pj.is_array() || pj.size() != 4) throw FormatError("manifest peak entry must have 4 numbers");
      e.peaks.push_back({pj[0].get<double>(), pj[1].get<double>(), pj[2].get<double>(), pj[3].get<double>()});
    }
    ds.examples.push_back(std::move(e));
  }

  const std::string blob = detail::read_file(paths.blob);
  const std::size_t per_array = k_count * ds.n;
  if (blob.size() != 3 * per_array * 4)
    throw ShapeMismatch(paths.blob.string() + ": expected " + std::to_string(3 * per_array * 4) + " bytes, found " +
                        std::to_string(blob.size()));

  const char* cursor = blob.data();
  const char* names[] = {"X", "Y", "C"};
  SpectrumBlock* blocks[] = {&ds.clean, &ds.noisy, &ds.condition};
  for (int a = 0; a < 3; ++a) {
    *blocks[a] = SpectrumBlock(k_count, ds.n);
    for (double& v : blocks[a]->data()) {
      const float f = detail::read_f32le(cursor);
      cursor += 4;
      if (!std::isfinite(f)) throw NonFiniteValue(std::string("non-finite value in array ") + names[a]);
      v = f;
    }
  }

  // f32 storage leaves ~1e-7 relative error per sample.
  constexpr double kNormTol = 1e-5;
  for (int a = 0; a < 2; ++a) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto row = blocks[a]->row(k);
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(row.size());
      double var = 0.0;
      for (double v : row) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(row.size()));
      if (std::abs(mean) > kNormTol || std::abs(sd - 1.0) > kNormTol)
        throw FormatError(std::string("row ") + std::to_string(k) + " of " + names[a] + " is not normalized");
    }
  }
  return ds;
}

ExampleFids regenerate_fids(const Dataset& ds, std::size_t k) {
  if (k >= ds.size()) throw InvalidArgument("regenerate_fids: example index out of range");
  const auto& e = ds.examples[k];
  ExampleFids out;
  out.clean = synth_fid(e.peaks, ds.n);
  out.noisy = add_noise(out.clean, NoiseSpec{ds.input_snr_db, ds.seed ^ e.source_index}).fid;
  return out;
}

}  // namespace nmrtv
