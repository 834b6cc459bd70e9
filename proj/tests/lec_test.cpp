#include <doctest.h>

#include <limits>

#include "haec/lec.hpp"
#include "haec/metrics.hpp"
#include "haec/subband_fb.hpp"
#include "oracles.hpp"

using namespace haec;

namespace {

const PrototypeFilter<double>& proto() {
  static const auto p = design_prototype<double>(1024, 512, 128);
  return p;
}

struct Run {
  Eigen::VectorXd error;  // time domain, aligned with y
  std::vector<double> error_power;  // selected member's smoothed error power, summed over subbands, per frame
};

Run run_lec(const Eigen::VectorXd& x, const Eigen::VectorXd& y, LecConfig cfg = {}) {
  const SubbandSignal<double> X = fb_analyze(x, proto()), Y = fb_analyze(y, proto());
  EchoCanceller<double> lec(cfg, proto().num_bins());
  SubbandSignal<double> E(X.rows(), X.cols());
  Run run;
  for (Index m = 0; m < X.cols(); ++m) {
    E.col(m) = lec.step(X.col(m), Y.col(m)).error;
    double p = 0;
    const auto& st = lec.state();
    for (Index k = 0; k < st.num_bins(); ++k) p += st.members[static_cast<size_t>(st.selected(k))].error_psd(k);
    run.error_power.push_back(p);
  }
  const Eigen::VectorXd e = fb_synthesize(E, proto());
  const Index d = proto().group_delay();
  run.error = Eigen::VectorXd::Zero(y.size());
  run.error.head(y.size() - d) = e.segment(d, y.size() - d);
  return run;
}

Eigen::VectorXd delay_gain(const Eigen::VectorXd& x, Index delay, double gain) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  y.tail(x.size() - delay) = gain * x.head(x.size() - delay);
  return y;
}

}  // namespace

TEST_CASE("zero farend leaves the coefficients untouched and passes the mic through") {
  LecConfig cfg;
  auto st = make_lec_state<double>(cfg, 5);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 50; ++i) {
    ComplexVector<double> x = ComplexVector<double>::Zero(5), y(5);
    for (Index k = 0; k < 5; ++k) y(k) = {g(rng), g(rng)};
    const auto out = lec_step(st, x, y);
    CHECK((out.error - y).cwiseAbs().maxCoeff() == 0.0);
  }
  for (const auto& m : st.members) CHECK(m.coeffs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mu0 = 0 freezes the filter") {
  LecConfig cfg;
  cfg.mu0 = 0.0;
  auto st = make_lec_state<double>(cfg, 3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    ComplexVector<double> x(3), y(3);
    for (Index k = 0; k < 3; ++k) {
      x(k) = {g(rng), g(rng)};
      y(k) = 0.5 * x(k);
    }
    lec_step(st, x, y);
  }
  for (const auto& m : st.members) CHECK(m.coeffs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("non-finite input raises and preserves the state") {
  LecConfig cfg;
  auto st = make_lec_state<double>(cfg, 4);
  ComplexVector<double> x = ComplexVector<double>::Constant(4, {1.0, 0.5}), y = 0.3 * x;
  for (int i = 0; i < 10; ++i) lec_step(st, x, y);
  const auto before = st;
  x(2) = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  CHECK_THROWS_AS(lec_step(st, x, y), InputError);
  CHECK(st.farend_history == before.farend_history);
  CHECK(st.farend_psd == before.farend_psd);
  for (size_t i = 0; i < st.members.size(); ++i) CHECK(st.members[i].coeffs == before.members[i].coeffs);
  CHECK_THROWS_AS(lec_step(st, ComplexVector<double>::Zero(3), y), InputError);
}

TEST_CASE("reset zeroes coefficients, is idempotent, and then passes the mic through") {
  LecConfig cfg;
  auto st = make_lec_state<double>(cfg, 2);
  ComplexVector<double> x = ComplexVector<double>::Constant(2, {1.0, -1.0}), y = 0.7 * x;
  for (int i = 0; i < 20; ++i) lec_step(st, x, y);
  lec_reset(st);
  const auto once = st;
  lec_reset(st);
  CHECK(st.farend_psd == once.farend_psd);
  for (size_t i = 0; i < st.members.size(); ++i) {
    CHECK(st.members[i].coeffs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(st.members[i].error_psd == once.members[i].error_psd);
  }
  const auto out = lec_step(st, ComplexVector<double>::Zero(2), y);
  CHECK((out.error - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the selected member has the minimal smoothed error power every frame") {
  LecConfig cfg;
  auto st = make_lec_state<double>(cfg, 6);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 300; ++i) {
    ComplexVector<double> x(6), y(6);
    for (Index k = 0; k < 6; ++k) {
      x(k) = {g(rng), g(rng)};
      y(k) = 0.5 * x(k) + 0.05 * std::complex<double>(g(rng), g(rng));
    }
    lec_step(st, x, y);
    for (Index k = 0; k < 6; ++k) {
      const double chosen = st.members[static_cast<size_t>(st.selected(k))].error_psd(k);
      for (const auto& m : st.members) CHECK(chosen <= m.error_psd(k));
    }
  }
}

TEST_CASE("scaling farend and mic by a scales the error by a") {
  const Eigen::VectorXd x = oracle::white_noise(16000, 4, 0.1);
  Eigen::VectorXd y = delay_gain(x, 300, 0.6) + oracle::white_noise(16000, 5, 0.01);
  const double a = 3.7;
  const SubbandSignal<double> X = fb_analyze(x, proto()), Y = fb_analyze(y, proto());
  EchoCanceller<double> l1(LecConfig{}, 257), l2(LecConfig{}, 257);
  double worst = 0;
  for (Index m = 0; m < X.cols(); ++m) {
    const ComplexVector<double> e1 = l1.step(X.col(m), Y.col(m)).error;
    const ComplexVector<double> xa = a * X.col(m), ya = a * Y.col(m);
    const ComplexVector<double> e2 = l2.step(xa, ya).error;
    const double scale = std::max(1e-3, e1.cwiseAbs().maxCoeff());
    worst = std::max(worst, (e2 - a * e1).cwiseAbs().maxCoeff() / (a * scale));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("converges on a delay-and-gain path with white farend") {
  const Eigen::VectorXd x = oracle::white_noise(160000, 11, 0.1);
  const Eigen::VectorXd y = delay_gain(x, 1600, 0.5);
  const Run run = run_lec(x, y);
  const Index n = 32000, d = proto().group_delay();
  const Index start = y.size() - n - d;
  CHECK(erle(y.segment(start, n), run.error.segment(start, n)) >= 30.0);
}

TEST_CASE("smoothed error power decreases over 1-s windows after the first 2 s") {
  const Eigen::VectorXd x = oracle::white_noise(160000, 12, 0.1);
  const Eigen::VectorXd y = delay_gain(x, 700, 0.8);
  const Run run = run_lec(x, y);
  std::vector<double> window;
  for (size_t s = 250; s + 125 <= run.error_power.size(); s += 125) {
    double acc = 0;
    for (size_t i = s; i < s + 125; ++i) acc += run.error_power[i];
    window.push_back(acc);
  }
  REQUIRE(window.size() >= 6);
  for (size_t i = 1; i < window.size(); ++i) CHECK(window[i] <= window[i - 1]);
}

TEST_CASE("reset mid-stream behaves exactly like a fresh canceller") {
  const Eigen::VectorXd x = oracle::white_noise(160000, 13, 0.1);
  const Eigen::VectorXd y = delay_gain(x, 1200, 0.4);
  const SubbandSignal<double> X = fb_analyze(x, proto()), Y = fb_analyze(y, proto());
  const Index r = 4 * 125;
  EchoCanceller<double> lec(LecConfig{}, 257), fresh(LecConfig{}, 257);
  SubbandSignal<double> E(X.rows(), X.cols());
  double max_diff = 0;
  for (Index m = 0; m < X.cols(); ++m) {
    if (m == r) lec.reset();
    E.col(m) = lec.step(X.col(m), Y.col(m)).error;
    if (m >= r) max_diff = std::max(max_diff, (E.col(m) - fresh.step(X.col(m), Y.col(m)).error).cwiseAbs().maxCoeff());
  }
  CHECK(max_diff == 0.0);
  // Subband-domain ERLE over 8..9 s (4 s after the reset).
  const Index a = 8 * 125, n = 125;
  const double erle_db = 10 * std::log10(Y.middleCols(a, n).squaredNorm() / E.middleCols(a, n).squaredNorm());
  CHECK(erle_db >= 25.0);
}

TEST_CASE("single-length mode and training randomization") {
  LecConfig cfg;
  cfg.filter_lengths = {8};
  auto st = make_lec_state<double>(cfg, 4);
  CHECK(st.members.size() == 1);
  CHECK(st.farend_history.cols() == 8);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const LecConfig r = randomize_lec_config(LecConfig{}, rng);
    CHECK(r.beta >= 0.5);
    CHECK(r.beta <= 2.0);
    REQUIRE(r.filter_lengths.size() == 1);
    const int len = r.filter_lengths[0];
    CHECK((len == 4 || len == 8 || len == 16 || len == 32));
  }
  CHECK(LecConfig{}.smoothing() == doctest::Approx(std::exp(-1.0 / (0.05 * 125))));
}

TEST_CASE("configuration validation") {
  LecConfig cfg;
  cfg.filter_lengths = {};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = LecConfig{};
  cfg.filter_lengths = {4, 0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = LecConfig{};
  cfg.mu0 = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = LecConfig{};
  cfg.delta0 = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = LecConfig{};
  cfg.beta = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(make_lec_state<double>(LecConfig{}, 0), ConfigError);
}
