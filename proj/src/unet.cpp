#include "nmrtv/unet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "json.hpp"

#include "binary_io.hpp"
#include "nmrtv/errors.hpp"
#include "nmrtv/parallel.hpp"
#include "nmrtv/rng.hpp"

namespace nmrtv {

using nlohmann::json;

namespace {

// Channel-major activations: data[c * length + t].
struct Activation {
  int channels = 0;
  std::size_t length = 0;
  std::vector<float> data;

  Activation() = default;
  Activation(int c, std::size_t l) : channels(c), length(l), data(static_cast<std::size_t>(c) * l, 0.0f) {}
  float* channel(int c) { return data.data() + static_cast<std::size_t>(c) * length; }
  const float* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * length; }
};

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * n - 2);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<std::ptrdiff_t>(n) ? i : period - i);
}

Activation conv1d(const Activation& x, const Tensor& weight, const Tensor& bias, bool relu) {
  const int out_channels = static_cast<int>(weight.shape[0]);
  const int in_channels = static_cast<int>(weight.shape[1]);
  const int taps = static_cast<int>(weight.shape[2]);
  const int pad = taps / 2;
  const std::size_t length = x.length;
  const std::size_t padded_len = length + 2 * static_cast<std::size_t>(pad);

  std::vector<float> padded(static_cast<std::size_t>(in_channels) * padded_len);
  for (int c = 0; c < in_channels; ++c) {
    const float* src = x.channel(c);
    float* dst = padded.data() + static_cast<std::size_t>(c) * padded_len;
    for (std::size_t t = 0; t < padded_len; ++t)
      dst[t] = src[reflect(static_cast<std::ptrdiff_t>(t) - pad, length)];
  }

  Activation out(out_channels, length);
  for (int o = 0; o < out_channels; ++o) {
    float* acc = out.channel(o);
    std::fill(acc, acc + length, bias.data[static_cast<std::size_t>(o)]);
    for (int c = 0; c < in_channels; ++c) {
      const float* src = padded.data() + static_cast<std::size_t>(c) * padded_len;
      const float* w = weight.data.data() + (static_cast<std::size_t>(o) * in_channels + c) * taps;
      for (int k = 0; k < taps; ++k) {
        const float wk = w[k];
        const float* s = src + k;
        for (std::size_t t = 0; t < length; ++t) acc[t] += wk * s[t];
      }
    }
    if (relu)
      for (std::size_t t = 0; t < length; ++t) acc[t] = std::max(acc[t], 0.0f);
  }
  return out;
}

Activation max_pool2(const Activation& x) {
  Activation out(x.channels, x.length / 2);
  for (int c = 0; c < x.channels; ++c) {
    const float* src = x.channel(c);
    float* dst = out.channel(c);
    for (std::size_t t = 0; t < out.length; ++t) dst[t] = std::max(src[2 * t], src[2 * t + 1]);
  }
  return out;
}

Activation upsample2(const Activation& x) {
  Activation out(x.channels, x.length * 2);
  for (int c = 0; c < x.channels; ++c) {
    const float* src = x.channel(c);
    float* dst = out.channel(c);
    for (std::size_t t = 0; t < out.length; ++t) dst[t] = src[t / 2];
  }
  return out;
}

Activation concat(const Activation& a, const Activation& b) {
  Activation out(a.channels + b.channels, a.length);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

// Walks the tensor list in canonical order.
class TensorCursor {
 public:
  explicit TensorCursor(const std::vector<Tensor>& tensors) : tensors_(tensors) {}
  const Tensor& next() { return tensors_.at(pos_++); }

 private:
  const std::vector<Tensor>& tensors_;
  std::size_t pos_ = 0;
};

Activation conv_block(const Activation& x, TensorCursor& cursor, bool relu) {
  const Tensor& w = cursor.next();
  const Tensor& b = cursor.next();
  return conv1d(x, w, b, relu);
}

json arch_json(const ArchConfig& a) {
  return json{{"in_channels", a.in_channels}, {"depth", a.depth}, {"base_channels", a.base_channels},
              {"kernel", a.kernel}};
}

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

void check_schema(const ArchConfig& arch, const std::vector<Tensor>& tensors) {
  const auto expected = canonical_tensors(arch);
  for (std::size_t i = 0; i < std::min(expected.size(), tensors.size()); ++i) {
    if (tensors[i].name != expected[i].name)
      throw SchemaMismatch("tensor " + std::to_string(i) + ": expected " + expected[i].name + ", found " +
                           tensors[i].name);
    if (tensors[i].shape != expected[i].shape)
      throw SchemaMismatch("tensor " + tensors[i].name + ": expected shape " + shape_string(expected[i].shape) +
                           ", found " + shape_string(tensors[i].shape));
  }
  if (tensors.size() != expected.size())
    throw SchemaMismatch("expected " + std::to_string(expected.size()) + " tensors, found " +
                         std::to_string(tensors.size()));
}

}  // namespace

void validate_arch(const ArchConfig& arch) {
  if (arch.in_channels != 1 && arch.in_channels != 2) throw InvalidArgument("in_channels must be 1 or 2");
  if (arch.depth != 3 || arch.base_channels != 16 || arch.kernel != 3)
    throw InvalidArgument("only the canonical architecture (depth 3, base 16, kernel 3) is supported");
}

std::size_t TensorSpec::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::vector<TensorSpec> canonical_tensors(const ArchConfig& arch) {
  validate_arch(arch);
  const std::int64_t k = arch.kernel;
  const std::int64_t base = arch.base_channels;
  std::vector<TensorSpec> specs;
  auto conv = [&](const std::string& name, std::int64_t out, std::int64_t in, std::int64_t taps) {
    specs.push_back({name + ".weight", {out, in, taps}});
    specs.push_back({name + ".bias", {out}});
  };
  std::int64_t in = arch.in_channels;
  for (int l = 0; l < arch.depth; ++l) {
    const std::int64_t width = base << l;
    conv("enc" + std::to_string(l) + ".conv0", width, in, k);
    conv("enc" + std::to_string(l) + ".conv1", width, width, k);
    in = width;
  }
  const std::int64_t bottom = base << arch.depth;
  conv("bottleneck.conv0", bottom, in, k);
  conv("bottleneck.conv1", bottom, bottom, k);
  in = bottom;
  for (int l = arch.depth - 1; l >= 0; --l) {
    const std::int64_t width = base << l;
    const std::string prefix = "dec" + std::to_string(l);
    conv(prefix + ".up", width, in, k);
    conv(prefix + ".conv0", width, 2 * width, k);
    conv(prefix + ".conv1", width, width, k);
    in = width;
  }
  conv("head", 1, in, 1);
  return specs;
}

Model zero_model(const ArchConfig& arch) {
  Model model;
  model.arch = arch;
  for (auto& spec : canonical_tensors(arch))
    model.tensors.push_back({spec.name, spec.shape, std::vector<float>(spec.numel(), 0.0f)});
  return model;
}

Model random_model(const ArchConfig& arch, std::uint64_t seed) {
  Model model = zero_model(arch);
  std::int64_t fan_in = 1;
  for (std::size_t i = 0; i < model.tensors.size(); ++i) {
    auto& t = model.tensors[i];
    if (t.shape.size() == 3) fan_in = t.shape[1] * t.shape[2];  // bias reuses its weight's fan-in
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Substream rng(seed, i, 0x77656967);
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
  }
  model.metadata = json{{"init", "uniform_fan_in"}, {"seed", seed}}.dump();
  return model;
}

void validate_model(const Model& model) {
  validate_arch(model.arch);
  check_schema(model.arch, model.tensors);
  for (const auto& t : model.tensors) {
    std::size_t numel = 1;
    for (auto d : t.shape) numel *= static_cast<std::size_t>(d);
    if (t.data.size() != numel) throw LengthMismatch("tensor " + t.name + " has wrong element count");
    for (float v : t.data)
      if (!std::isfinite(v)) throw NonFiniteValue("non-finite weight in tensor " + t.name);
  }
}

std::string serialize_weights(const Model& model) {
  validate_model(model);
  json metadata;
  try {
    metadata = json::parse(model.metadata);
  } catch (const json::parse_error&) {
    throw InvalidArgument("model metadata is not valid JSON");
  }
  if (!metadata.is_object()) throw InvalidArgument("model metadata must be a JSON object");
  json tensors = json::array();
  for (const auto& t : model.tensors) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  const json header = {{"arch", arch_json(model.arch)}, {"metadata", metadata}, {"tensors", tensors}};

  std::string out(kWeightsFormat);
  out += '\n';
  out += header.dump();
  out += '\n';
  for (const auto& t : model.tensors)
    for (float v : t.data) detail::append_f32le(out, v);
  return out;
}

void write_weights(const Model& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_weights(model));
}

Model parse_weights(std::string_view bytes) {
  const auto first_nl = bytes.find('\n');
  if (first_nl == std::string_view::npos || bytes.substr(0, first_nl) != kWeightsFormat)
    throw VersionError("weights file does not start with a TVCW1 header line");
  const auto second_nl = bytes.find('\n', first_nl + 1);
  if (second_nl == std::string_view::npos) throw FormatError("weights file has no JSON header line");

  json header;
  try {
    header = json::parse(bytes.substr(first_nl + 1, second_nl - first_nl - 1));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("weights header is not valid JSON: ") + e.what());
  }

  Model model;
  try {
    const auto& a = header.at("arch");
    model.arch.in_channels = a.at("in_channels").get<int>();
    model.arch.depth = a.at("depth").get<int>();
    model.arch.base_channels = a.at("base_channels").get<int>();
    model.arch.kernel = a.at("kernel").get<int>();
    if (header.contains("metadata")) model.metadata = header.at("metadata").dump();
    for (const auto& tj : header.at("tensors"))
      model.tensors.push_back({tj.at("name").get<std::string>(), tj.at("shape").get<std::vector<std::int64_t>>(), {}});
  } catch (const json::exception& e) {
    throw FormatError(std::string("weights header is malformed: ") + e.what());
  }
  try {
    validate_arch(model.arch);
  } catch (const InvalidArgument& e) {
    throw SchemaMismatch(e.what());
  }
  check_schema(model.arch, model.tensors);

  std::size_t total = 0;
  for (const auto& t : model.tensors) {
    std::size_t numel = 1;
    for (auto d : t.shape) numel *= static_cast<std::size_t>(d);
    total += numel;
  }
  const std::string_view payload = bytes.substr(second_nl + 1);
  if (payload.size() != total * 4)
    throw LengthMismatch("weights payload has " + std::to_string(payload.size()) + " bytes, header declares " +
                         std::to_string(total * 4));

  const char* cursor = payload.data();
  for (auto& t : model.tensors) {
    std::size_t numel = 1;
    for (auto d : t.shape) numel *= static_cast<std::size_t>(d);
    t.data.resize(numel);
    for (auto& v : t.data) {
      v = detail::read_f32le(cursor);
      cursor += 4;
      if (!std::isfinite(v)) throw NonFiniteValue("non-finite weight in tensor " + t.name);
    }
  }
  return model;
}

Model load_weights(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return parse_weights(bytes);
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const SchemaMismatch& e) {
    throw SchemaMismatch(path.string() + ": " + e.what());
  } catch (const LengthMismatch& e) {
    throw LengthMismatch(path.string() + ": " + e.what());
  } catch (const NonFiniteValue& e) {
    throw NonFiniteValue(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<double> forward(const Model& model, std::span<const double> noisy,
                            std::optional<std::span<const double>> condition) {
  const auto& arch = model.arch;
  validate_arch(arch);
  if (model.tensors.size() != canonical_tensors(arch).size()) throw InvalidArgument("forward: incomplete model");
  const bool wants_condition = arch.in_channels == 2;
  if (wants_condition != condition.has_value())
    throw InvalidArgument(wants_condition ? "forward: model needs a condition channel"
                                          : "forward: single-channel model takes no condition");
  if (condition && condition->size() != noisy.size())
    throw InvalidArgument("forward: noisy and condition lengths differ");
  const std::size_t block = std::size_t{1} << arch.depth;
  const std::size_t n = noisy.size();
  if (n < block) throw InvalidArgument("forward: input shorter than 2^depth");

  const std::size_t padded = (n + block - 1) / block * block;
  Activation x(arch.in_channels, padded);
  for (std::size_t t = 0; t < padded; ++t) {
    const std::size_t src = reflect(static_cast<std::ptrdiff_t>(t), n);
    x.channel(0)[t] = static_cast<float>(noisy[src]);
    if (condition) x.channel(1)[t] = static_cast<float>((*condition)[src]);
  }

  TensorCursor cursor(model.tensors);
  std::vector<Activation> skips;
  for (int l = 0; l < arch.depth; ++l) {
    x = conv_block(x, cursor, true);
    x = conv_block(x, cursor, true);
    skips.push_back(x);
    x = max_pool2(x);
  }
  x = conv_block(x, cursor, true);
  x = conv_block(x, cursor, true);
  for (int l = arch.depth - 1; l >= 0; --l) {
    x = conv_block(upsample2(x), cursor, true);
    x = concat(x, skips[static_cast<std::size_t>(l)]);
    x = conv_block(x, cursor, true);
    x = conv_block(x, cursor, true);
  }
  x = conv_block(x, cursor, false);

  return std::vector<double>(x.channel(0), x.channel(0) + n);
}

std::vector<double> denoise(const Model& model, std::span<const double> noisy,
                            std::optional<std::span<const double>> condition) {
  auto out = forward(model, noisy, condition);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = noisy[i] - out[i];
  return out;
}

double eval_loss(const Model& model, const Dataset& ds, std::size_t threads) {
  if (ds.size() == 0) throw InvalidArgument("eval_loss: empty dataset");
  if (ds.noisy.cols() != ds.n || ds.clean.cols() != ds.n || ds.noisy.rows() != ds.size() ||
      ds.clean.rows() != ds.size())
    throw InvalidArgument("eval_loss: dataset arrays do not match K x n");
  const bool use_condition = model.arch.in_channels == 2;
  if (use_condition && (ds.condition.rows() != ds.size() || ds.condition.cols() != ds.n))
    throw InvalidArgument("eval_loss: dataset has no condition array for a 2-channel model");

  std::vector<double> per_example(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    const auto y = ds.noisy.row(i);
    const auto x = ds.clean.row(i);
    std::optional<std::span<const double>> c;
    if (use_condition) c = ds.condition.row(i);
    const auto r = forward(model, y, c);
    double sum = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) {
      const double d = r[t] - (y[t] - x[t]);
      sum += d * d;
    }
    per_example[i] = sum;
  });
  double total = 0.0;
  for (double v : per_example) total += v;
  return total / (2.0 * static_cast<double>(ds.size()));
}

}  // namespace nmrtv
