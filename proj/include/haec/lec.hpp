#pragma once

// Subband NLMS linear echo canceller.
//
// Every subband runs a bank of independent complex NLMS filters of different
// lengths (default 4, 8, 16 and 32 taps) on the same farend history. Each
// member tracks a recursively smoothed error power; the emitted error and
// echo estimate come from the member with the smallest smoothed error power.
//
// Step size per member and subband:
//   mu = mu0 * clamp(P_dhat / (P_e + floor), mu_min, 1)
// where P_dhat and P_e are smoothed powers of the echo estimate and error.
// The update is normalized by max(N * P_x, |x|^2) + delta with
//   delta = delta0 * N * mean_k(P_x).

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "haec/common.hpp"

namespace haec {

struct LecConfig {
  std::vector<int> filter_lengths{4, 8, 16, 32};
  double mu0 = 0.8;
  double delta0 = 1e-3;
  // Multiplies the nominal smoothing time constant.
  double beta = 1.0;
  double time_constant = 0.05;  // seconds
  double mu_min = 0.1;
  double frame_rate = 125.0;    // subband frames per second
  // Release time of the long-term farend level that scales the regularizer.
  double level_release = 10.0;  // seconds

  int max_length() const { return *std::max_element(filter_lengths.begin(), filter_lengths.end()); }

  double smoothing() const { return std::exp(-1.0 / (beta * time_constant * frame_rate)); }
  double level_decay() const { return std::exp(-1.0 / (level_release * frame_rate)); }

  void validate() const {
    if (filter_lengths.empty()) throw ConfigError("lec: at least one filter length required");
    for (int n : filter_lengths)
      if (n < 1) throw ConfigError("lec: filter lengths must be >= 1");
    if (!(mu0 >= 0.0 && mu0 <= 1.0)) throw ConfigError("lec: mu0 must lie in [0, 1]");
    if (!(delta0 > 0.0)) throw ConfigError("lec: delta0 must be > 0");
    if (!(beta > 0.0)) throw ConfigError("lec: beta must be > 0");
    if (!(time_constant > 0.0) || !(frame_rate > 0.0)) throw ConfigError("lec: time constant and frame rate must be > 0");
    if (!(mu_min > 0.0 && mu_min <= 1.0)) throw ConfigError("lec: mu_min must lie in (0, 1]");
    if (!(level_release > 0.0)) throw ConfigError("lec: level_release must be > 0");
  }
};

// Training-time variation: beta ~ U[0.5, 2] and one randomly chosen length
// from the configured bank.
template <typename Rng>
LecConfig randomize_lec_config(LecConfig cfg, Rng& rng) {
  std::uniform_real_distribution<double> beta(0.5, 2.0);
  std::uniform_int_distribution<size_t> pick(0, cfg.filter_lengths.size() - 1);
  cfg.beta = beta(rng);
  cfg.filter_lengths = {cfg.filter_lengths[pick(rng)]};
  return cfg;
}

template <typename Scalar>
struct LecMember {
  int length = 0;
  ComplexMatrix<Scalar> coeffs;  // subbands x length
  Vector<Scalar> error_psd;
  Vector<Scalar> estimate_psd;
};

template <typename Scalar>
struct LecState {
  LecConfig config;
  // Column 0 is the newest farend subband sample.
  ComplexMatrix<Scalar> farend_history;
  Vector<Scalar> farend_psd;
  // Peak of the band-averaged farend PSD with slow exponential release.
  Scalar farend_level = 0;
  std::vector<LecMember<Scalar>> members;
  Eigen::VectorXi selected;

  Index num_bins() const { return farend_history.rows(); }
};

template <typename Scalar>
struct LecOutput {
  ComplexVector<Scalar> error;
  ComplexVector<Scalar> echo_estimate;
};

inline constexpr double kLecPowerFloor = 1e-20;

template <typename Scalar>
void lec_reset(LecState<Scalar>& state) {
  const Index bins = state.num_bins();
  state.farend_history.setZero();
  state.farend_psd.setConstant(bins, Scalar(kLecPowerFloor));
  state.farend_level = Scalar(kLecPowerFloor);
  for (auto& m : state.members) {
    m.coeffs.setZero();
    m.error_psd.setConstant(bins, Scalar(kLecPowerFloor));
    m.estimate_psd.setZero(bins);
  }
  state.selected.setZero(bins);
}

template <typename Scalar = double>
LecState<Scalar> make_lec_state(const LecConfig& cfg, Index num_bins) {
  cfg.validate();
  if (num_bins < 1) throw ConfigError("lec: need at least one subband");
  LecState<Scalar> state;
  state.config = cfg;
  state.farend_history = ComplexMatrix<Scalar>::Zero(num_bins, cfg.max_length());
  state.farend_psd.resize(num_bins);
  for (int len : cfg.filter_lengths) {
    LecMember<Scalar> m;
    m.length = len;
    m.coeffs = ComplexMatrix<Scalar>::Zero(num_bins, len);
    state.members.push_back(std::move(m));
  }
  lec_reset(state);
  return state;
}

// One subband frame. On non-finite input the state is left untouched and
// InputError is thrown.
template <typename Scalar, typename DerivedX, typename DerivedY>
LecOutput<Scalar> lec_step(LecState<Scalar>& state, const Eigen::MatrixBase<DerivedX>& farend,
                           const Eigen::MatrixBase<DerivedY>& mic) {
  using Complex = std::complex<Scalar>;
  const Index bins = state.num_bins();
  if (farend.size() != bins || mic.size() != bins) throw InputError("lec: subband vector length mismatch");
  if (!all_finite(farend.real()) || !all_finite(farend.imag()) || !all_finite(mic.real()) || !all_finite(mic.imag()))
    throw InputError("lec: non-finite subband input");

  const LecConfig& cfg = state.config;
  const Scalar lambda = static_cast<Scalar>(cfg.smoothing());
  const Scalar floor = static_cast<Scalar>(kLecPowerFloor);
  const Index hist_len = state.farend_history.cols();

  if (hist_len > 1)
    state.farend_history.rightCols(hist_len - 1) = state.farend_history.leftCols(hist_len - 1).eval();
  state.farend_history.col(0) = farend;
  state.farend_psd = lambda * state.farend_psd + (1 - lambda) * farend.cwiseAbs2();
  state.farend_level = std::max(state.farend_psd.mean(), static_cast<Scalar>(cfg.level_decay()) * state.farend_level);
  const Scalar level = state.farend_level;

  LecOutput<Scalar> out;
  out.error.resize(bins);
  out.echo_estimate.resize(bins);
  std::vector<Complex> errors(state.members.size()), estimates(state.members.size());

  for (Index k = 0; k < bins; ++k) {
    const Complex y = mic(k);
    for (size_t i = 0; i < state.members.size(); ++i) {
      LecMember<Scalar>& m = state.members[i];
      const auto x = state.farend_history.row(k).head(m.length);
      auto h = m.coeffs.row(k);
      const Complex dhat = (h.array() * x.array()).sum();
      const Complex e = y - dhat;
      errors[i] = e;
      estimates[i] = dhat;

      m.error_psd(k) = lambda * m.error_psd(k) + (1 - lambda) * std::norm(e);
      m.estimate_psd(k) = lambda * m.estimate_psd(k) + (1 - lambda) * std::norm(dhat);

      const Scalar ratio = m.estimate_psd(k) / (m.error_psd(k) + floor);
      const Scalar mu = static_cast<Scalar>(cfg.mu0) * std::clamp(ratio, static_cast<Scalar>(cfg.mu_min), Scalar(1));
      const Scalar len = static_cast<Scalar>(m.length);
      // Error power not explained by the echo estimate acts as a noise
      // estimate and damps updates while the farend is weak.
      const Scalar excess = std::max(Scalar(0), m.error_psd(k) - m.estimate_psd(k));
      const Scalar norm = std::max(len * state.farend_psd(k), x.squaredNorm()) +
                          static_cast<Scalar>(cfg.delta0) * len * level + len * excess + floor;
      h += (mu / norm * e) * x.conjugate();
    }
    Index best = 0;
    for (size_t i = 1; i < state.members.size(); ++i)
      if (state.members[i].error_psd(k) < state.members[static_cast<size_t>(best)].error_psd(k)) best = static_cast<Index>(i);
    state.selected(k) = static_cast<int>(best);
    out.error(k) = errors[static_cast<size_t>(best)];
    out.echo_estimate(k) = estimates[static_cast<size_t>(best)];
  }
  return out;
}

// Stateful wrapper used by the streaming pipeline.
template <typename Scalar>
class EchoCanceller {
 public:
  EchoCanceller(const LecConfig& cfg, Index num_bins) : state_(make_lec_state<Scalar>(cfg, num_bins)) {}

  template <typename DerivedX, typename DerivedY>
  LecOutput<Scalar> step(const Eigen::MatrixBase<DerivedX>& farend, const Eigen::MatrixBase<DerivedY>& mic) {
    return lec_step(state_, farend, mic);
  }

  void reset() { lec_reset(state_); }
  const LecState<Scalar>& state() const { return state_; }

 private:
  LecState<Scalar> state_;
};

}  // namespace haec
