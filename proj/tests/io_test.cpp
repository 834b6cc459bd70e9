#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "haec/array_io.hpp"
#include "haec/config.hpp"
#include "haec/wav.hpp"
#include "haec/weights_io.hpp"
#include "oracles.hpp"

using namespace haec;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("haec_io_" + name); }

ModelArch tiny_arch() {
  ModelArch a;
  a.num_bands = 2;
  a.num_bins = 5;
  a.layers = {{LayerKind::Gru, 6, 3, Activation::Tanh}, {LayerKind::Dense, 3, 2, Activation::Sigmoid}};
  return a;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os << bytes;
}

void put_floats(std::string& out, const std::vector<float>& v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
}

}  // namespace

TEST_CASE("a hand-written weights file loads with row-major tensors") {
  // Written the way an external exporter would, without the library.
  std::string f =
      "HAEC-POSTFILTER\nversion 1\nnum_bands 2\nnum_bins 5\ngru_convention pytorch-rzn-dual-bias\nlayers 2\n"
      "layer gru 6 3 tanh\nlayer dense 3 2 sigmoid\n"
      "tensor layer0.kernel 9 6\ntensor layer0.recurrent 9 3\ntensor layer0.bias 9 1\n"
      "tensor layer0.recurrent_bias 9 1\ntensor layer1.kernel 2 3\ntensor layer1.bias 2 1\nend\n";
  std::vector<float> k0(54), r0(27), b0(9), rb0(9), k1(6), b1(2);
  for (size_t i = 0; i < k0.size(); ++i) k0[i] = 0.01f * static_cast<float>(i);
  for (size_t i = 0; i < r0.size(); ++i) r0[i] = -0.02f * static_cast<float>(i);
  for (size_t i = 0; i < 9; ++i) b0[i] = 0.1f * static_cast<float>(i), rb0[i] = -0.1f * static_cast<float>(i);
  k1 = {1, 2, 3, 4, 5, 6};
  b1 = {0.5f, -0.5f};
  for (const auto* v : {&k0, &r0, &b0, &rb0, &k1, &b1}) put_floats(f, *v);
  spit(tmp("hand.bin"), f);

  const ModelWeights w = load_weights(tmp("hand.bin"));
  CHECK(w.arch.num_bands == 2);
  CHECK(w.arch.layers[0].kind == LayerKind::Gru);
  CHECK(w.layers[0].kernel(1, 0) == k0[6]);  // row 1 starts at flat index 6
  CHECK(w.layers[0].recurrent(2, 1) == r0[7]);
  CHECK(w.layers[0].recurrent_bias(3) == rb0[3]);
  CHECK(w.layers[1].kernel(1, 2) == 6.0f);
  CHECK(w.layers[1].bias(1) == -0.5f);

  save_weights(w, tmp("hand2.bin"));
  CHECK(slurp(tmp("hand2.bin")) == f);
}

TEST_CASE("weights round trip and corruption handling") {
  const ModelWeights w = random_weights(tiny_arch(), 3);
  save_weights(w, tmp("w.bin"));
  const ModelWeights back = load_weights(tmp("w.bin"));
  for (size_t i = 0; i < w.layers.size(); ++i) {
    CHECK(back.layers[i].kernel == w.layers[i].kernel);
    CHECK(back.layers[i].bias == w.layers[i].bias);
  }
  const std::string good = slurp(tmp("w.bin"));

  SUBCASE("bad magic") {
    std::string b = good;
    b[0] = 'X';
    spit(tmp("bad.bin"), b);
    CHECK_THROWS_AS(load_weights(tmp("bad.bin")), InputError);
  }
  SUBCASE("unsupported version") {
    std::string b = good;
    b.replace(b.find("version 1"), 9, "version 2");
    spit(tmp("bad.bin"), b);
    CHECK_THROWS_AS(load_weights(tmp("bad.bin")), InputError);
  }
  SUBCASE("truncated payload") {
    spit(tmp("bad.bin"), good.substr(0, good.size() - 3));
    CHECK_THROWS_AS(load_weights(tmp("bad.bin")), InputError);
  }
  SUBCASE("trailing bytes") {
    spit(tmp("bad.bin"), good + "xx");
    CHECK_THROWS_AS(load_weights(tmp("bad.bin")), InputError);
  }
  SUBCASE("tensor shape disagrees with the layer list") {
    std::string b = good;
    b.replace(b.find("tensor layer1.kernel 2 3"), 24, "tensor layer1.kernel 3 2");
    spit(tmp("bad.bin"), b);
    CHECK_THROWS_AS(load_weights(tmp("bad.bin")), InputError);
  }
  SUBCASE("unknown GRU convention") {
    std::string b = good;
    b.replace(b.find("pytorch-rzn-dual-bias"), 21, "keras-zrh-singlebias!");
    spit(tmp("bad.bin"), b);
    CHECK_THROWS_AS(load_weights(tmp("bad.bin")), InputError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_weights(tmp("does_not_exist.bin")), InputError); }
}

TEST_CASE("float WAV round trip and 16-bit PCM reading") {
  const Eigen::VectorXd x = oracle::white_noise(1000, 1, 0.3);
  write_wav(tmp("a.wav"), x, 16000);
  const WavData w = read_wav(tmp("a.wav"));
  CHECK(w.sample_rate == 16000);
  CHECK((w.samples - x).cwiseAbs().maxCoeff() < 1e-7);

  // Minimal PCM16 file written byte by byte.
  std::string b = "RIFF";
  auto u32 = [&](std::uint32_t v) { b.append(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { b.append(reinterpret_cast<const char*>(&v), 2); };
  u32(36 + 6);
  b += "WAVEfmt ";
  u32(16);
  u16(1);
  u16(1);
  u32(8000);
  u32(16000);
  u16(2);
  u16(16);
  b += "data";
  u32(6);
  u16(0x4000);
  u16(0x8000);
  u16(0);
  spit(tmp("p.wav"), b);
  const WavData p = read_wav(tmp("p.wav"));
  CHECK(p.sample_rate == 8000);
  REQUIRE(p.samples.size() == 3);
  CHECK(p.samples(0) == 0.5);
  CHECK(p.samples(1) == -1.0);
  CHECK(p.samples(2) == 0.0);

  spit(tmp("junk.wav"), "not a wave file at all");
  CHECK_THROWS_AS(read_wav(tmp("junk.wav")), InputError);
}

TEST_CASE("flat arrays, prototypes and Bark maps") {
  FlatArray a{{1.0, 2.0}, oracle::white_noise(17, 2)};
  write_flat_array(tmp("f.bin"), a);
  const FlatArray b = read_flat_array(tmp("f.bin"));
  CHECK(b.header == a.header);
  CHECK(b.values == a.values);
  spit(tmp("f_bad.bin"), slurp(tmp("f.bin")) + "z");
  CHECK_THROWS_AS(read_flat_array(tmp("f_bad.bin")), InputError);

  const auto proto = design_prototype<double>(256, 64, 16);
  save_prototype(tmp("p.bin"), proto);
  const auto proto2 = load_prototype(tmp("p.bin"));
  CHECK(proto2.taps == proto.taps);
  CHECK((proto2.synthesis - proto.synthesis).cwiseAbs().maxCoeff() < 1e-12);

  const auto map = build_bark_map<double>(512, 86, 16000.0);
  save_bark_map(tmp("m.bin"), map);
  const auto map2 = load_bark_map(tmp("m.bin"));
  CHECK(map2.weights == map.weights);
  CHECK(map2.band_edges == map.band_edges);
}

TEST_CASE("configuration files") {
  const PipelineConfig c = parse_config(
      "# comment\nsample_rate = 16000\nlec_filter_lengths = 4, 8\nlec_mu0=0.5\nmask_mode = ones\n");
  CHECK(c.lec.filter_lengths == std::vector<int>{4, 8});
  CHECK(c.lec.mu0 == 0.5);
  CHECK(c.mask_mode == MaskMode::Ones);
  CHECK(c.lec.frame_rate == 125.0);
  CHECK(parse_config(format_config(c)).lec.mu0 == 0.5);
  CHECK_THROWS_AS(parse_config("unknown_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lec_mu0 = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("hop = 100\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("mask_mode = maybe\n"), ConfigError);
  CHECK_THROWS_AS(load_config(tmp("missing.cfg")), ConfigError);
}
