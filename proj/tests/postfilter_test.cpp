#include <doctest.h>

#include <chrono>

#include "haec/postfilter.hpp"
#include "oracles.hpp"

using namespace haec;

namespace {

ModelArch small_arch() {
  ModelArch a;
  a.num_bands = 5;
  a.num_bins = 17;
  a.layers = {{LayerKind::Dense, 15, 12, Activation::Relu},
              {LayerKind::Gru, 12, 9, Activation::Tanh},
              {LayerKind::Dense, 9, 5, Activation::Sigmoid}};
  return a;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("default architecture footprint, counted by hand") {
  const ModelArch arch = default_arch();
  arch.validate();
  const std::int64_t params = (258 * 300 + 300) + 2 * 3 * (300 * 300 + 300 * 300 + 2 * 300) +
                              (300 * 560 + 560) + (560 * 560 + 560) + (560 * 86 + 86);
  const std::int64_t macs = 258 * 300 + 2 * (3 * (300 * 300 + 300 * 300) + 3 * 300) + 300 * 560 + 560 * 560 +
                            560 * 86 + 4 * 257 * 86;
  const Footprint fp = audit_footprint(arch, 125.0);
  CHECK(fp.params == params);
  CHECK(fp.macs_per_frame == macs);
  CHECK(fp.macs_per_second == doctest::Approx(125.0 * static_cast<double>(macs)));
  CHECK(std::abs(static_cast<double>(fp.params) / 1.58e6 - 1.0) <= 0.10);
  CHECK(std::abs(fp.macs_per_second / 235e6 - 1.0) <= 0.10);
  CHECK(audit_footprint(ModelArch{}, 125.0).params == 0);
}

TEST_CASE("engine forward matches the loop oracle over a sequence") {
  const ModelWeights w = random_weights(small_arch(), 7);
  MaskNetwork<double> net(w);
  oracle::NaiveNet ref(w);
  auto state = net.initial_state();
  for (int t = 0; t < 30; ++t) {
    const Eigen::VectorXd in = oracle::white_noise(15, 100 + t, 2.0);
    const Eigen::VectorXd out = net.forward(state, in);
    const std::vector<double> r = ref.step(to_std(in));
    for (Index i = 0; i < 5; ++i) CHECK(std::abs(out(i) - r[static_cast<size_t>(i)]) < 1e-12);
  }
}

TEST_CASE("float engine agrees with the double oracle to export precision") {
  const ModelWeights w = random_weights(default_arch(), 3);
  MaskNetwork<float> net(w);
  oracle::NaiveNet ref(w);
  auto state = net.initial_state();
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd in = oracle::white_noise(258, 50 + t, 3.0);
    const Eigen::VectorXf out = net.forward(state, in.cast<float>());
    const std::vector<double> r = ref.step(to_std(in));
    for (Index i = 0; i < 86; ++i) CHECK(std::abs(out(i) - r[static_cast<size_t>(i)]) < 1e-4);
  }
}

TEST_CASE("zero weights give one-half masks") {
  MaskNetwork<double> net(zero_weights(default_arch()));
  auto state = net.initial_state();
  const Eigen::VectorXd out = net.forward(state, oracle::white_noise(258, 1));
  CHECK((out.array() - 0.5).abs().maxCoeff() == 0.0);
}

TEST_CASE("outputs lie in [0, 1] and the recurrent state carries over") {
  MaskNetwork<double> net(random_weights(default_arch(), 9, 3.0f));
  auto s1 = net.initial_state(), s2 = net.initial_state();
  const Eigen::VectorXd a = oracle::white_noise(258, 2, 5.0), b = oracle::white_noise(258, 3, 5.0);
  net.forward(s1, a);
  const Eigen::VectorXd carried = net.forward(s1, b);
  const Eigen::VectorXd fresh = net.forward(s2, b);
  CHECK(carried.minCoeff() >= 0.0);
  CHECK(carried.maxCoeff() <= 1.0);
  CHECK((carried - fresh).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("infer_mask stacks E, Y, X features in that order") {
  const ModelWeights w = random_weights(small_arch(), 4);
  MaskNetwork<double> net(w);
  auto s1 = net.initial_state(), s2 = net.initial_state();
  const Eigen::VectorXd e = oracle::white_noise(5, 1), y = oracle::white_noise(5, 2), x = oracle::white_noise(5, 3);
  Eigen::VectorXd stacked(15);
  stacked << e, y, x;
  CHECK((infer_mask(s1, net, e, y, x) - net.forward(s2, stacked)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(infer_mask(s1, net, e, y, Eigen::VectorXd::Zero(4)), InputError);
}

TEST_CASE("mask application scales each bin") {
  SpectralFrame<double> f;
  f.bins = Eigen::VectorXcd::Constant(4, {2.0, -1.0});
  f.index = 3;
  Eigen::VectorXd m(4);
  m << 0, 0.5, 1, 0.25;
  const auto out = apply_mask(f, m);
  CHECK(out.index == 3);
  for (Index k = 0; k < 4; ++k) CHECK(std::abs(out.bins(k) - m(k) * f.bins(k)) == 0.0);
}

TEST_CASE("architecture and weight validation") {
  ModelArch a = small_arch();
  a.layers[1].input = 11;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a = small_arch();
  a.layers.back().activation = Activation::Relu;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a = small_arch();
  a.gru_convention = "keras-zrh";
  CHECK_THROWS_AS(a.validate(), ConfigError);
  ModelWeights w = zero_weights(small_arch());
  w.layers[1].recurrent.resize(27, 8);
  CHECK_THROWS_AS(w.validate(), InputError);
  w = zero_weights(small_arch());
  w.layers[0].bias(0) = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(w.validate(), InputError);
  MaskNetwork<double> net(zero_weights(small_arch()));
  auto st = net.initial_state();
  CHECK_THROWS_AS(net.forward(st, Eigen::VectorXd::Zero(14)), InputError);
}

TEST_CASE("audit is fast") {
  const ModelArch arch = default_arch();
  const auto start = std::chrono::steady_clock::now();
  const Footprint fp = audit_footprint(arch, 125.0);
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
  CHECK(fp.params > 0);
  CHECK(dt.count() < 1e-3);
}
