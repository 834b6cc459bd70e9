#include <doctest.h>

#include "haec/subband_fb.hpp"
#include "oracles.hpp"

using namespace haec;

namespace {

const PrototypeFilter<double>& default_proto() {
  static const auto proto = design_prototype<double>(1024, 512, 128);
  return proto;
}

}  // namespace

TEST_CASE("prototype shape and normalization") {
  const auto& p = default_proto();
  CHECK(p.length() == 1024);
  CHECK(p.num_bins() == 257);
  CHECK(p.group_delay() == 896);
  CHECK(p.taps.sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (Index n = 0; n < p.length(); ++n) CHECK(p.taps(n) == doctest::Approx(p.taps(p.length() - 1 - n)).epsilon(1e-12));
}

TEST_CASE("synthesis window satisfies the reconstruction conditions") {
  const auto& p = default_proto();
  const Index len = p.length(), k = p.num_subbands, d = p.decimation;
  double worst = 0;
  for (Index ph = 0; ph < d; ++ph) {
    for (Index r = -1; r <= 1; ++r) {
      double acc = 0;
      for (Index m = 0; ph + m * d < len; ++m) {
        const Index j = ph + m * d + r * k;
        if (j >= 0 && j < len) acc += p.synthesis(ph + m * d) * p.taps(j);
      }
      worst = std::max(worst, std::abs(acc - (r == 0 ? 1.0 : 0.0)));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("analysis matches a direct windowed DFT of the newest L_p samples") {
  const auto& p = default_proto();
  const Eigen::VectorXd x = oracle::white_noise(128 * 12, 8);
  const SubbandSignal<double> sub = fb_analyze(x, p);
  const Index m = 11;  // frame m holds samples up to (m+1)*D - 1
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(p.length());
  const Index end = (m + 1) * p.decimation;
  for (Index n = 0; n < p.length(); ++n) {
    const Index t = end - p.length() + n;
    if (t >= 0) hist(n) = x(t);
  }
  for (Index k : {0, 1, 37, 128, 256}) {
    std::complex<double> acc = 0;
    for (Index n = 0; n < p.length(); ++n)
      acc += p.taps(n) * hist(n) * std::polar(1.0, -2 * oracle::kPi * static_cast<double>(k * n % 512) / 512.0);
    CHECK(std::abs(sub(k, m) - acc) < 1e-10);
  }
}

TEST_CASE("round trip is a delay by the group delay") {
  const auto& p = default_proto();
  const Eigen::VectorXd x = oracle::white_noise(16000, 1);
  const Eigen::VectorXd y = fb_synthesize(fb_analyze(x, p), p);
  const Index d = p.group_delay(), n = x.size() - d;
  const double err = (y.segment(d, n) - x.head(n)).squaredNorm() / x.head(n).squaredNorm();
  CHECK(10 * std::log10(err) < -100);
}

TEST_CASE("streaming analyzer and synthesizer agree with the batch versions") {
  const auto& p = default_proto();
  const Eigen::VectorXd x = oracle::white_noise(128 * 20, 2);
  const SubbandSignal<double> batch = fb_analyze(x, p);
  FilterbankAnalyzer<double> ana(p);
  FilterbankSynthesizer<double> syn(p);
  const Eigen::VectorXd ref = fb_synthesize(batch, p);
  ComplexVector<double> col;
  Eigen::VectorXd out;
  for (Index m = 0; m < 20; ++m) {
    ana.push(x.segment(m * 128, 128), col);
    CHECK((col - batch.col(m)).cwiseAbs().maxCoeff() == 0.0);
    syn.push(col, out);
    CHECK((out - ref.segment(m * 128, 128)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("a tone stays within its neighbouring subbands") {
  const auto& p = default_proto();
  const double fs = 16000;
  for (double f : {312.5, 1000.0, 3333.3, 7000.0}) {
    const SubbandSignal<double> s = fb_analyze(oracle::tone(16000, f, fs), p);
    const auto center = static_cast<Index>(std::lround(f / fs * 512));
    double in = 0, out = 0;
    for (Index c = 16; c < s.cols(); ++c)
      for (Index k = 0; k < s.rows(); ++k) (std::abs(k - center) <= 1 ? in : out) += std::norm(s(k, c));
    CHECK(10 * std::log10(out / in) < -40);
  }
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(design_prototype<double>(1024, 512, 512), ConfigError);
  CHECK_THROWS_AS(design_prototype<double>(1024, 511, 128), ConfigError);
  CHECK_THROWS_AS(design_prototype<double>(1000, 512, 128), ConfigError);
  CHECK_THROWS_AS(design_prototype<double>(256, 512, 128), ConfigError);
  CHECK_THROWS_AS(prototype_from_taps<double>(Eigen::VectorXd::Zero(1024), 512, 128), InputError);
  const auto& p = default_proto();
  CHECK_THROWS_AS(fb_synthesize(SubbandSignal<double>(SubbandSignal<double>::Zero(100, 3)), p), InputError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(256);
  bad(3) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(fb_analyze(bad, p), InputError);
}

TEST_CASE("other oversampled shapes also reconstruct") {
  const auto p = design_prototype<double>(512, 128, 32);
  const Eigen::VectorXd x = oracle::white_noise(8000, 3);
  const Eigen::VectorXd y = fb_synthesize(fb_analyze(x, p), p);
  const Index d = p.group_delay(), n = x.size() - d;
  CHECK(10 * std::log10((y.segment(d, n) - x.head(n)).squaredNorm() / x.head(n).squaredNorm()) < -100);
}
