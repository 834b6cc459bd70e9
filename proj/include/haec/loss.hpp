#pragma once

// Complex compressed MSE with STFT consistency.
//
//   J = sum_{k,l} w_k [ (1-a) (|S~|^c - |S|^c)^2 + a | |S~|^c e^{j phi~} - |S|^c e^{j phi} |^2 ]
//
// The sum runs over the one-sided spectrum with bandwidth weights w_k: 1 for
// interior bins, 1/2 for bins 0 and K/2 (only half of their bandwidth lies in
// [0, fs/2]). This is half the two-sided sum.

#include <cmath>
#include <vector>

#include "haec/common.hpp"
#include "haec/framing.hpp"

namespace haec {

struct LossConfig {
  double alpha = 0.3;
  double compression = 0.3;
  double magnitude_floor = 1e-12;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("loss: alpha must lie in (0, 1)");
    if (compression != 0.3) throw ConfigError("loss: compression exponent is fixed at 0.3");
    if (!(magnitude_floor > 0.0)) throw ConfigError("loss: magnitude floor must be > 0");
  }
};

// Re-analysis of a synthesized time signal.
template <typename Scalar, typename Derived>
FrameSequence<Scalar> consistency_project(const Eigen::MatrixBase<Derived>& s_hat, const StftConfig& cfg) {
  return analyze<Scalar>(s_hat, cfg);
}

template <typename Scalar>
Vector<Scalar> bandwidth_weights(Index bins) {
  Vector<Scalar> w = Vector<Scalar>::Ones(bins);
  w(0) = Scalar(0.5);
  if (bins > 1) w(bins - 1) = Scalar(0.5);
  return w;
}

// Per-bin loss terms (before weighting) for one frame pair.
template <typename Scalar>
Vector<Scalar> ccmse_terms(const ComplexVector<Scalar>& estimate, const ComplexVector<Scalar>& target,
                           const LossConfig& cfg) {
  const Scalar c = static_cast<Scalar>(cfg.compression);
  const Scalar a = static_cast<Scalar>(cfg.alpha);
  const Scalar floor = static_cast<Scalar>(cfg.magnitude_floor);
  Vector<Scalar> out(estimate.size());
  for (Index k = 0; k < estimate.size(); ++k) {
    const Scalar mag_e = std::max(std::abs(estimate(k)), floor);
    const Scalar mag_t = std::max(std::abs(target(k)), floor);
    const Scalar ce = std::pow(mag_e, c), ct = std::pow(mag_t, c);
    const std::complex<Scalar> pe = std::polar(ce, std::arg(estimate(k)));
    const std::complex<Scalar> pt = std::polar(ct, std::arg(target(k)));
    out(k) = (1 - a) * (ce - ct) * (ce - ct) + a * std::norm(pe - pt);
  }
  return out;
}

template <typename Scalar>
Scalar ccmse(const ComplexMatrix<Scalar>& estimate, const ComplexMatrix<Scalar>& target, const LossConfig& cfg) {
  cfg.validate();
  if (estimate.rows() != target.rows() || estimate.cols() != target.cols())
    throw InputError("ccmse: shape mismatch");
  if (estimate.size() == 0) return Scalar(0);
  const Vector<Scalar> w = bandwidth_weights<Scalar>(estimate.rows());
  Scalar total = 0;
  for (Index l = 0; l < estimate.cols(); ++l) {
    const ComplexVector<Scalar> e = estimate.col(l), t = target.col(l);
    total += w.dot(ccmse_terms<Scalar>(e, t, cfg));
  }
  return total;
}

template <typename Scalar>
Scalar ccmse(const FrameSequence<Scalar>& estimate, const FrameSequence<Scalar>& target, const LossConfig& cfg) {
  if (estimate.size() != target.size()) throw InputError("ccmse: frame count mismatch");
  for (size_t l = 0; l < estimate.size(); ++l)
    if (estimate[l].bins.size() != target[l].bins.size()) throw InputError("ccmse: bin count mismatch");
  return ccmse<Scalar>(to_matrix(estimate), to_matrix(target), cfg);
}

// Reporting variant: the summed loss divided by the number of frames.
template <typename Scalar>
Scalar ccmse_per_frame(const ComplexMatrix<Scalar>& estimate, const ComplexMatrix<Scalar>& target,
                       const LossConfig& cfg) {
  const Scalar total = ccmse<Scalar>(estimate, target, cfg);
  return estimate.cols() > 0 ? total / static_cast<Scalar>(estimate.cols()) : Scalar(0);
}

}  // namespace haec
