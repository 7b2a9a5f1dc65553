#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nmrtv/errors.hpp"
#include "nmrtv/rng.hpp"
#include "nmrtv/unet.hpp"
#include "oracles.hpp"

using namespace nmrtv;
namespace fs = std::filesystem;

namespace {

// Values on the f32 grid, so that widening the residual loses nothing.
std::vector<double> random_input(std::uint64_t seed, std::size_t n) {
  Substream rng(seed, 0, 3);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-3.0, 3.0));
  return v;
}

std::string fixture(const char* name) {
  std::ifstream in(fs::path(NMRTV_FIXTURES) / name, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t header_end(const std::string& bytes) { return bytes.find('\n', bytes.find('\n') + 1) + 1; }

}  // namespace

TEST_CASE("canonical tensor enumeration") {
  const auto specs = canonical_tensors(ArchConfig::tvcondnet());
  REQUIRE(specs.size() == 2 * (3 * 2 + 2 + 3 * 3 + 1));
  CHECK(specs.front().name == "enc0.conv0.weight");
  CHECK(specs.front().shape == std::vector<std::int64_t>{16, 2, 3});
  CHECK(specs[1].name == "enc0.conv0.bias");
  CHECK(specs[1].shape == std::vector<std::int64_t>{16});
  CHECK(specs.back().name == "head.bias");
  CHECK(specs[specs.size() - 2].shape == std::vector<std::int64_t>{1, 16, 1});

  std::size_t params = 0;
  for (const auto& s : specs) params += s.numel();
  // Hand count: encoder, bottleneck, decoder (up conv + two convs on the
  // concatenated skip), 1x1 head.
  const std::size_t enc = (16 * 2 * 3 + 16) + (16 * 16 * 3 + 16) + (32 * 16 * 3 + 32) + (32 * 32 * 3 + 32) +
                          (64 * 32 * 3 + 64) + (64 * 64 * 3 + 64);
  const std::size_t mid = (128 * 64 * 3 + 128) + (128 * 128 * 3 + 128);
  const std::size_t dec = (64 * 128 * 3 + 64) + (64 * 128 * 3 + 64) + (64 * 64 * 3 + 64) + (32 * 64 * 3 + 32) +
                          (32 * 64 * 3 + 32) + (32 * 32 * 3 + 32) + (16 * 32 * 3 + 16) + (16 * 32 * 3 + 16) +
                          (16 * 16 * 3 + 16);
  CHECK(params == enc + mid + dec + 17);

  CHECK(canonical_tensors(ArchConfig::unet()).front().shape == std::vector<std::int64_t>{16, 1, 3});
  CHECK_THROWS_AS(validate_arch(ArchConfig{.in_channels = 3}), InvalidArgument);
  CHECK_THROWS_AS(validate_arch(ArchConfig{.depth = 4}), InvalidArgument);
}

TEST_CASE("zero model residual is zero and denoise is the identity") {
  const auto model = zero_model(ArchConfig::tvcondnet());
  for (std::size_t n : {8u, 64u, 2050u}) {
    const auto y = random_input(n, n);
    const auto c = random_input(n + 1, n);
    const auto r = forward(model, y, c);
    REQUIRE(r.size() == n);
    for (double v : r) CHECK(v == 0.0);
    CHECK(denoise(model, y, c) == y);
  }
}

TEST_CASE("forward matches the independent reference") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto arch = seed % 2 ? ArchConfig::unet() : ArchConfig::tvcondnet();
    const auto model = random_model(arch, seed);
    const std::size_t n = std::array<std::size_t, 6>{8, 9, 64, 100, 257, 2050}[seed];
    const auto y = random_input(seed, n);
    const auto c = random_input(seed + 50, n);
    std::optional<std::span<const double>> cond;
    if (arch.in_channels == 2) cond = c;
    const auto r = forward(model, y, cond);
    const auto ref = oracle::unet_reference(model, y, cond);
    REQUIRE(r.size() == n);
    double scale = 1.0, err = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      scale = std::max(scale, std::abs(ref[t]));
      err = std::max(err, std::abs(r[t] - ref[t]));
    }
    CHECK(err <= 1e-4 * scale);
  }
}

TEST_CASE("denoise plus forward reproduces the input exactly") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto model = random_model(ArchConfig::tvcondnet(), seed * 31 + 1);
    const std::size_t n = 8 + seed * 11;
    const auto y = random_input(seed, n);
    const auto c = random_input(seed + 1000, n);
    const auto r = forward(model, y, c);
    const auto d = denoise(model, y, c);
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(d[t] + r[t] == y[t]);
      CHECK(y[t] - d[t] == r[t]);
    }
    CHECK(forward(model, y, c) == r);
  }
}

TEST_CASE("forward argument validation") {
  const auto cond_model = zero_model(ArchConfig::tvcondnet());
  const auto plain = zero_model(ArchConfig::unet());
  const auto y = random_input(1, 32);
  const auto c = random_input(2, 31);
  CHECK_THROWS_AS(forward(cond_model, y, std::nullopt), InvalidArgument);
  CHECK_THROWS_AS(forward(cond_model, y, c), InvalidArgument);
  CHECK_THROWS_AS(forward(plain, y, y), InvalidArgument);
  CHECK_THROWS_AS(forward(plain, random_input(1, 7), std::nullopt), InvalidArgument);
}

TEST_CASE("TVCW1 round trip") {
  const auto model = random_model(ArchConfig::tvcondnet(), 5);
  const auto bytes = serialize_weights(model);
  CHECK(bytes.rfind("TVCW1\n", 0) == 0);
  const auto back = parse_weights(bytes);
  CHECK(back.arch == model.arch);
  REQUIRE(back.tensors.size() == model.tensors.size());
  for (std::size_t i = 0; i < model.tensors.size(); ++i) {
    CHECK(back.tensors[i].name == model.tensors[i].name);
    CHECK(back.tensors[i].data == model.tensors[i].data);
  }
  CHECK(serialize_weights(back) == bytes);

  std::size_t numel = 0;
  for (const auto& t : model.tensors) numel += t.data.size();
  CHECK(bytes.size() - header_end(bytes) == 4 * numel);
}

TEST_CASE("TVCW1 load errors") {
  const auto bytes = serialize_weights(random_model(ArchConfig::unet(), 2));
  const auto body = header_end(bytes);

  CHECK_THROWS_AS(parse_weights(bytes.substr(0, bytes.size() - 4)), LengthMismatch);
  CHECK_THROWS_AS(parse_weights(bytes + "abcd"), LengthMismatch);

  auto nan_bytes = bytes;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan_bytes.data() + body + 4 * 20, &nan, 4);  // inside enc0.conv0.weight
  try {
    parse_weights(nan_bytes);
    FAIL("expected a non-finite error");
  } catch (const NonFiniteValue& e) {
    CHECK(std::string(e.what()).find("enc0.conv0.weight") != std::string::npos);
  }

  auto version = bytes;
  version[4] = '9';
  CHECK_THROWS_AS(parse_weights(version), VersionError);

  auto renamed = bytes;
  const auto pos = renamed.find("enc1.conv0.weight");
  renamed.replace(pos, 4, "encX");
  CHECK_THROWS_AS(parse_weights(renamed), SchemaMismatch);

  auto reshaped = bytes;
  const auto shape_pos = reshaped.find("[16,1,3]");
  REQUIRE(shape_pos != std::string::npos);
  reshaped.replace(shape_pos, 8, "[16,1,5]");
  CHECK_THROWS_AS(parse_weights(reshaped), SchemaMismatch);

  CHECK_THROWS_AS(load_weights("/nonexistent/model.tvcw"), IoError);
}

TEST_CASE("committed fixtures load") {
  const auto zero = parse_weights(fixture("zero_tvcondnet.tvcw"));
  CHECK(zero.arch == ArchConfig::tvcondnet());
  for (const auto& t : zero.tensors)
    for (float v : t.data) CHECK(v == 0.0f);

  const auto seeded = parse_weights(fixture("random_tvcondnet_seed1.tvcw"));
  const auto fresh = random_model(ArchConfig::tvcondnet(), 1);
  for (std::size_t i = 0; i < fresh.tensors.size(); ++i) CHECK(seeded.tensors[i].data == fresh.tensors[i].data);
}

TEST_CASE("eval_loss") {
  DatasetOptions opt;
  opt.n = 64;
  auto ds = make_dataset(random_peak_sets(3, 4), NoiseSpec{5.0, 4}, Split::train, TauGrid({0.01, 0.1}), opt);

  SUBCASE("zero model on a noiseless set") {
    auto clean = ds;
    clean.noisy = clean.clean;
    CHECK(eval_loss(zero_model(ArchConfig::tvcondnet()), clean) == 0.0);
  }
  SUBCASE("matches a direct sum") {
    const auto model = random_model(ArchConfig::tvcondnet(), 8);
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto r = oracle::unet_reference(model, ds.noisy.row(i), ds.condition.row(i));
      for (std::size_t t = 0; t < ds.n; ++t) {
        const double d = r[t] - (ds.noisy.row(i)[t] - ds.clean.row(i)[t]);
        sum += d * d;
      }
    }
    const double expected = sum / (2.0 * static_cast<double>(ds.size()));
    CHECK(eval_loss(model, ds) == doctest::Approx(expected).epsilon(1e-4));
    CHECK(eval_loss(model, ds, 3) == eval_loss(model, ds, 1));
  }
}
