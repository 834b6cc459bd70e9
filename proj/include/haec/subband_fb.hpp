#pragma once

// Oversampled DFT (weighted overlap-add) filterbank for the echo canceller.
//
// Analysis: the last L_p input samples are weighted by the prototype, folded
// modulo K and transformed by a K-point real DFT, giving K/2+1 subbands per
// D input samples. Synthesis: inverse DFT, periodic extension to L_p,
// weighting by a synthesis window, overlap-add at hop D.
//
// The analysis prototype is a Kaiser-windowed sinc with cutoff pi/K. The
// synthesis window is the minimum-norm correction of the (scaled) prototype
// that satisfies the time-domain reconstruction conditions
//   sum_m g(p + mD) h(p + mD + rK) = [r == 0]   for every phase p < D,
// so the unmodified round trip is a pure delay of L_p - D samples.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "haec/common.hpp"
#include "haec/fft.hpp"

namespace haec {

template <typename Scalar>
struct PrototypeFilter {
  Vector<Scalar> taps;       // analysis prototype, DC gain 1
  Vector<Scalar> synthesis;  // derived synthesis window
  Index num_subbands = 0;    // DFT size K
  Index decimation = 0;      // D

  Index length() const { return taps.size(); }
  Index num_bins() const { return num_subbands / 2 + 1; }
  Index group_delay() const { return length() - decimation; }
};

namespace detail {

inline void validate_fb_shape(Index length, Index subbands, Index decimation) {
  if (subbands < 2 || subbands % 2 != 0) throw ConfigError("filterbank: K must be even and >= 2");
  if (decimation <= 0) throw ConfigError("filterbank: D must be positive");
  if (decimation >= subbands) throw ConfigError("filterbank: D must be smaller than K (oversampling required)");
  if (length < subbands) throw ConfigError("filterbank: prototype length must be >= K");
  if (subbands % decimation != 0 || length % decimation != 0)
    throw ConfigError("filterbank: D must divide both K and the prototype length");
}

inline double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

}  // namespace detail

template <typename Scalar>
Vector<Scalar> solve_synthesis_window(const Vector<Scalar>& taps, Index subbands, Index decimation) {
  const Index len = taps.size();
  const Index per_phase = len / decimation;
  const Index max_shift = (len - 1) / subbands;
  const Index num_constraints = 2 * max_shift + 1;
  if (num_constraints > per_phase) throw ConfigError("filterbank: not enough degrees of freedom for reconstruction");

  // Initial guess: prototype scaled to meet the r = 0 condition on average.
  double energy = 0;
  for (Index i = 0; i < len; ++i) energy += double(taps(i)) * double(taps(i));
  const double scale = static_cast<double>(decimation) / energy;

  Vector<Scalar> g(len);
  Eigen::MatrixXd a(num_constraints, per_phase);
  Eigen::VectorXd g0(per_phase), b(num_constraints);
  for (Index p = 0; p < decimation; ++p) {
    a.setZero();
    b.setZero();
    for (Index r = -max_shift; r <= max_shift; ++r) {
      const Index row = r + max_shift;
      b(row) = r == 0 ? 1.0 : 0.0;
      for (Index m = 0; m < per_phase; ++m) {
        const Index j = p + m * decimation + r * subbands;
        if (j >= 0 && j < len) a(row, m) = taps(j);
      }
    }
    for (Index m = 0; m < per_phase; ++m) g0(m) = scale * taps(p + m * decimation);
    const Eigen::VectorXd residual = b - a * g0;
    const Eigen::VectorXd correction = a.transpose() * (a * a.transpose()).ldlt().solve(residual);
    const Eigen::VectorXd gp = g0 + correction;
    for (Index m = 0; m < per_phase; ++m) g(p + m * decimation) = static_cast<Scalar>(gp(m));
  }
  return g;
}

// Builds a filterbank from given analysis taps (normalized to DC gain 1).
template <typename Scalar>
PrototypeFilter<Scalar> prototype_from_taps(const Vector<Scalar>& taps, Index subbands, Index decimation) {
  detail::validate_fb_shape(taps.size(), subbands, decimation);
  if (!all_finite(taps)) throw InputError("filterbank: prototype taps not finite");
  const Scalar dc = taps.sum();
  if (!(std::abs(dc) > 0)) throw InputError("filterbank: prototype has zero DC gain");
  PrototypeFilter<Scalar> proto;
  proto.taps = taps / dc;
  proto.num_subbands = subbands;
  proto.decimation = decimation;
  proto.synthesis = solve_synthesis_window<Scalar>(proto.taps, subbands, decimation);
  return proto;
}

inline constexpr double kDefaultKaiserBeta = 6.0;

template <typename Scalar = double>
PrototypeFilter<Scalar> design_prototype(Index length, Index subbands, Index decimation,
                                         double kaiser_beta = kDefaultKaiserBeta) {
  detail::validate_fb_shape(length, subbands, decimation);
  const double center = 0.5 * static_cast<double>(length - 1);
  const double cutoff = 1.0 / static_cast<double>(subbands);  // normalized to fs/2
  const double i0_beta = detail::bessel_i0(kaiser_beta);
  Vector<Scalar> taps(length);
  for (Index n = 0; n < length; ++n) {
    const double t = static_cast<double>(n) - center;
    const double arg = std::numbers::pi * cutoff * t;
    const double sinc = std::abs(t) < 1e-12 ? 1.0 : std::sin(arg) / arg;
    const double ratio = t / (center + 0.5);
    const double kaiser = detail::bessel_i0(kaiser_beta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) / i0_beta;
    taps(n) = static_cast<Scalar>(sinc * kaiser);
  }
  return prototype_from_taps<Scalar>(taps, subbands, decimation);
}

// Subbands x frames; one column per D input samples.
template <typename Scalar>
using SubbandSignal = ComplexMatrix<Scalar>;

template <typename Scalar>
class FilterbankAnalyzer {
 public:
  explicit FilterbankAnalyzer(const PrototypeFilter<Scalar>& proto)
      : proto_(proto), fft_(proto.num_subbands), history_(Vector<Scalar>::Zero(proto.length())),
        folded_(proto.num_subbands) {}

  Index num_bins() const { return proto_.num_bins(); }

  template <typename Derived>
  void push(const Eigen::MatrixBase<Derived>& samples, ComplexVector<Scalar>& out) {
    const Index len = proto_.length(), hop = proto_.decimation, k = proto_.num_subbands;
    eigen_assert(samples.size() == hop);
    history_.head(len - hop) = history_.tail(len - hop).eval();
    history_.tail(hop) = samples.template cast<Scalar>();
    folded_.setZero();
    for (Index s = 0; s < len; s += k) {
      const Index n = std::min(k, len - s);
      folded_.head(n) += history_.segment(s, n).cwiseProduct(proto_.taps.segment(s, n));
    }
    fft_.forward(folded_, out);
  }

  void reset() { history_.setZero(); }

 private:
  PrototypeFilter<Scalar> proto_;
  RealFft<Scalar> fft_;
  Vector<Scalar> history_;
  Vector<Scalar> folded_;
};

template <typename Scalar>
class FilterbankSynthesizer {
 public:
  explicit FilterbankSynthesizer(const PrototypeFilter<Scalar>& proto)
      : proto_(proto), fft_(proto.num_subbands), accum_(Vector<Scalar>::Zero(proto.length())) {}

  void push(const ComplexVector<Scalar>& subbands, Vector<Scalar>& out) {
    if (subbands.size() != proto_.num_bins()) throw InputError("filterbank synthesis: subband count mismatch");
    const Index len = proto_.length(), hop = proto_.decimation, k = proto_.num_subbands;
    fft_.inverse(subbands, time_);
    for (Index s = 0; s < len; s += k) {
      const Index n = std::min(k, len - s);
      accum_.segment(s, n) += time_.head(n).cwiseProduct(proto_.synthesis.segment(s, n));
    }
    out = accum_.head(hop);
    accum_.head(len - hop) = accum_.tail(len - hop).eval();
    accum_.tail(hop).setZero();
  }

  void reset() { accum_.setZero(); }

 private:
  PrototypeFilter<Scalar> proto_;
  RealFft<Scalar> fft_;
  Vector<Scalar> accum_;
  Vector<Scalar> time_;
};

// Batch analysis; the input is zero-padded at the end to a multiple of D.
template <typename Scalar, typename Derived>
SubbandSignal<Scalar> fb_analyze(const Eigen::MatrixBase<Derived>& signal, const PrototypeFilter<Scalar>& proto) {
  require_finite(signal, "filterbank analysis");
  const Index hop = proto.decimation;
  const Index frames = (signal.size() + hop - 1) / hop;
  SubbandSignal<Scalar> out(proto.num_bins(), frames);
  FilterbankAnalyzer<Scalar> analyzer(proto);
  Vector<Scalar> block(hop);
  ComplexVector<Scalar> column;
  for (Index m = 0; m < frames; ++m) {
    const Index start = m * hop, n = std::min(hop, signal.size() - start);
    block.setZero();
    block.head(n) = signal.segment(start, n).template cast<Scalar>();
    analyzer.push(block, column);
    out.col(m) = column;
  }
  return out;
}

// Batch synthesis: frames*D samples, delayed by proto.group_delay() relative
// to the signal that was analyzed.
template <typename Scalar>
Vector<Scalar> fb_synthesize(const SubbandSignal<Scalar>& sub, const PrototypeFilter<Scalar>& proto) {
  if (sub.rows() != proto.num_bins()) throw InputError("filterbank synthesis: subband count mismatch");
  const Index hop = proto.decimation;
  Vector<Scalar> out(sub.cols() * hop);
  FilterbankSynthesizer<Scalar> synth(proto);
  Vector<Scalar> block;
  ComplexVector<Scalar> column;
  for (Index m = 0; m < sub.cols(); ++m) {
    column = sub.col(m);
    synth.push(column, block);
    out.segment(m * hop, hop) = block;
  }
  return out;
}

}  // namespace haec
