#pragma once

// Inference for the residual 1D U-Net R(y, c) and its TVCW1 weight format.
//
// Canonical architecture (depth D = 3, base width B = 16, kernel 3):
//
//   enc{l}      l = 0..D-1: conv(k3) -> ReLU -> conv(k3) -> ReLU at B*2^l
//               channels, then 2x max-pool (the pre-pool activation is the
//               skip for level l)
//   bottleneck  conv(k3) -> ReLU -> conv(k3) -> ReLU at B*2^D channels
//   dec{l}      l = D-1..0: 2x nearest upsample -> conv(k3, "up") -> ReLU,
//               concatenate [up, skip_l] along channels, then
//               conv(k3) -> ReLU -> conv(k3) -> ReLU at B*2^l channels
//   head        conv(k1) to one channel, no activation
//
// Every k3 convolution has stride 1 and reflect padding 1 (a length-1
// signal pads by repetition). Inputs are reflect-padded on the right up to
// a multiple of 2^D and the output is cropped back.
//
// TVCW1 file layout:
//   line 1   "TVCW1"
//   line 2   compact JSON {"arch": {...}, "metadata": {...},
//                          "tensors": [{"name": ..., "shape": [...]}, ...]}
//   payload  little-endian f32 tensors in listed order, row-major;
//            conv weights are (out-channel, in-channel, tap)

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nmrtv/dataset.hpp"
#include "nmrtv/signal.hpp"

namespace nmrtv {

inline constexpr std::string_view kWeightsFormat = "TVCW1";

struct ArchConfig {
  int in_channels = 2;  // 2: noisy spectrum + TV condition, 1: noisy only
  int depth = 3;
  int base_channels = 16;
  int kernel = 3;

  static ArchConfig tvcondnet() { return ArchConfig{}; }
  static ArchConfig unet() { return ArchConfig{.in_channels = 1}; }

  bool operator==(const ArchConfig&) const = default;
};

/// Throws InvalidArgument unless `arch` is one of the two canonical configs.
void validate_arch(const ArchConfig& arch);

struct TensorSpec {
  std::string name;
  std::vector<std::int64_t> shape;

  std::size_t numel() const;
};

/// Ordered tensor list of the canonical architecture.
std::vector<TensorSpec> canonical_tensors(const ArchConfig& arch);

struct Tensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

struct Model {
  ArchConfig arch;
  std::vector<Tensor> tensors;
  /// Free-form JSON object text carried in the header (seeds, provenance).
  std::string metadata = "{}";
};

Model zero_model(const ArchConfig& arch);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
Model random_model(const ArchConfig& arch, std::uint64_t seed);

/// Checks names, shapes and finiteness against the canonical enumeration.
void validate_model(const Model& model);

Model load_weights(const std::filesystem::path& path);
Model parse_weights(std::string_view bytes);
std::string serialize_weights(const Model& model);
void write_weights(const Model& model, const std::filesystem::path& path);

/// R(y, c). `condition` must be present iff arch.in_channels == 2. The
/// network runs in f32; the residual is returned widened to double.
std::vector<double> forward(const Model& model, std::span<const double> noisy,
                            std::optional<std::span<const double>> condition);

/// y - R(y, c), elementwise in double.
std::vector<double> denoise(const Model& model, std::span<const double> noisy,
                            std::optional<std::span<const double>> condition);

/// (1/2K) sum_i |R(Y_i, C_i) - (Y_i - X_i)|^2; C is ignored for 1-channel models.
double eval_loss(const Model& model, const Dataset& ds, std::size_t threads = 1);

}  // namespace nmrtv
