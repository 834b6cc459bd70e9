#pragma once

// Square-root Hann STFT used by the postfilter path: analysis, weighted
// overlap-add synthesis, and hop-by-hop streaming variants of both.

#include <cmath>
#include <numbers>
#include <vector>

#include "haec/common.hpp"
#include "haec/fft.hpp"

namespace haec {

struct StftConfig {
  double sample_rate = 16000.0;
  Index frame_len = 512;
  Index hop = 128;

  // The DFT size equals the frame length.
  Index dft_size() const { return frame_len; }
  Index num_bins() const { return frame_len / 2 + 1; }
  double frame_rate() const { return sample_rate / static_cast<double>(hop); }

  void validate() const {
    if (!(sample_rate > 0)) throw ConfigError("stft: sample_rate must be > 0");
    if (!is_power_of_two(frame_len) || frame_len < 4) throw ConfigError("stft: frame_len must be a power of two >= 4");
    if (hop <= 0 || frame_len % hop != 0) throw ConfigError("stft: hop must divide frame_len");
  }
};

template <typename Scalar>
struct SpectralFrame {
  ComplexVector<Scalar> bins;
  Index index = 0;
};

template <typename Scalar>
using FrameSequence = std::vector<SpectralFrame<Scalar>>;

// Periodic (DFT-even) Hann, square-rooted: sin(pi n / N).
template <typename Scalar>
Vector<Scalar> sqrt_hann(Index length) {
  Vector<Scalar> w(length);
  for (Index n = 0; n < length; ++n)
    w(n) = static_cast<Scalar>(std::sin(std::numbers::pi * static_cast<double>(n) / static_cast<double>(length)));
  return w;
}

// Overlap sum of analysis*synthesis window at the given hop, one value per
// phase in [0, hop).
template <typename Scalar>
Vector<Scalar> overlap_profile(const Vector<Scalar>& analysis, const Vector<Scalar>& synthesis, Index hop) {
  Vector<Scalar> acc = Vector<Scalar>::Zero(hop);
  for (Index n = 0; n < analysis.size(); ++n) acc(n % hop) += analysis(n) * synthesis(n);
  return acc;
}

// Shared per-frame transform state. Both windows are sqrt-Hann; the synthesis
// output is divided by the (constant) overlap sum of the squared window.
template <typename Scalar>
class StftKernel {
 public:
  explicit StftKernel(const StftConfig& cfg) : cfg_(cfg), fft_((cfg.validate(), cfg.frame_len)) {
    window_ = sqrt_hann<Scalar>(cfg.frame_len);
    norm_ = overlap_profile<Scalar>(window_, window_, cfg.hop).mean();
  }

  const StftConfig& config() const { return cfg_; }
  const Vector<Scalar>& window() const { return window_; }
  Scalar overlap_norm() const { return norm_; }

  template <typename Derived>
  SpectralFrame<Scalar> forward(const Eigen::MatrixBase<Derived>& samples, Index index) {
    SpectralFrame<Scalar> frame;
    frame.index = index;
    windowed_ = samples.cwiseProduct(window_);
    fft_.forward(windowed_, frame.bins);
    return frame;
  }

  // Windowed inverse transform of one frame, already divided by the overlap norm.
  void inverse(const ComplexVector<Scalar>& bins, Vector<Scalar>& out) {
    if (bins.size() != cfg_.num_bins()) throw InputError("stft: frame has wrong number of bins");
    fft_.inverse(bins, out);
    out.array() *= window_.array() / norm_;
  }

 private:
  StftConfig cfg_;
  RealFft<Scalar> fft_;
  Vector<Scalar> window_;
  Vector<Scalar> windowed_;
  Scalar norm_;
};

// Frame l covers samples [l*hop, l*hop + frame_len). Signals shorter than one
// frame (but non-empty) are rejected; an empty signal gives no frames.
template <typename Scalar, typename Derived>
FrameSequence<Scalar> analyze(const Eigen::MatrixBase<Derived>& signal, const StftConfig& cfg) {
  cfg.validate();
  FrameSequence<Scalar> frames;
  const Index n = signal.size();
  if (n == 0) return frames;
  require_finite(signal, "stft analyze");
  if (n < cfg.frame_len) throw InputError("stft analyze: signal shorter than one frame");
  StftKernel<Scalar> kernel(cfg);
  const Index count = (n - cfg.frame_len) / cfg.hop + 1;
  frames.reserve(static_cast<size_t>(count));
  for (Index l = 0; l < count; ++l)
    frames.push_back(kernel.forward(signal.segment(l * cfg.hop, cfg.frame_len).template cast<Scalar>(), l));
  return frames;
}

// Weighted overlap-add; output length (F-1)*hop + frame_len, sample 0
// aligned with the first frame's first sample.
template <typename Scalar>
Vector<Scalar> synthesize(const FrameSequence<Scalar>& frames, const StftConfig& cfg) {
  cfg.validate();
  if (frames.empty()) return Vector<Scalar>();
  for (size_t i = 1; i < frames.size(); ++i)
    if (frames[i].index != frames[i - 1].index + 1) throw InputError("stft synthesize: frame indices not contiguous");
  StftKernel<Scalar> kernel(cfg);
  const Index count = static_cast<Index>(frames.size());
  Vector<Scalar> out = Vector<Scalar>::Zero((count - 1) * cfg.hop + cfg.frame_len);
  Vector<Scalar> chunk;
  for (Index l = 0; l < count; ++l) {
    kernel.inverse(frames[static_cast<size_t>(l)].bins, chunk);
    out.segment(l * cfg.hop, cfg.frame_len) += chunk;
  }
  return out;
}

// Hop-by-hop analysis. The history starts zero-filled, so the frame emitted
// after the first hop is [0 ... 0, x(0) ... x(hop-1)].
template <typename Scalar>
class StftStreamAnalyzer {
 public:
  explicit StftStreamAnalyzer(const StftConfig& cfg)
      : kernel_(cfg), history_(Vector<Scalar>::Zero(cfg.frame_len)) {}

  template <typename Derived>
  SpectralFrame<Scalar> push(const Eigen::MatrixBase<Derived>& hop_samples) {
    const Index hop = kernel_.config().hop, len = kernel_.config().frame_len;
    eigen_assert(hop_samples.size() == hop);
    history_.head(len - hop) = history_.tail(len - hop).eval();
    history_.tail(hop) = hop_samples.template cast<Scalar>();
    return kernel_.forward(history_, next_index_++);
  }

  void reset() {
    history_.setZero();
    next_index_ = 0;
  }

 private:
  StftKernel<Scalar> kernel_;
  Vector<Scalar> history_;
  Index next_index_ = 0;
};

// Hop-by-hop overlap-add. Each pushed frame completes exactly one hop of
// output: the oldest hop in the accumulator.
template <typename Scalar>
class StftStreamSynthesizer {
 public:
  explicit StftStreamSynthesizer(const StftConfig& cfg)
      : kernel_(cfg), accum_(Vector<Scalar>::Zero(cfg.frame_len)) {}

  Vector<Scalar> push(const ComplexVector<Scalar>& bins) {
    const Index hop = kernel_.config().hop, len = kernel_.config().frame_len;
    kernel_.inverse(bins, chunk_);
    accum_ += chunk_;
    Vector<Scalar> out = accum_.head(hop);
    accum_.head(len - hop) = accum_.tail(len - hop).eval();
    accum_.tail(hop).setZero();
    return out;
  }

  void reset() { accum_.setZero(); }

  // Delay (in samples) from an analyzer input sample to the same sample at
  // this synthesizer's output.
  Index latency() const { return kernel_.config().frame_len - kernel_.config().hop; }

 private:
  StftKernel<Scalar> kernel_;
  Vector<Scalar> accum_;
  Vector<Scalar> chunk_;
};

// Converts a frame sequence to a bins x frames matrix.
template <typename Scalar>
ComplexMatrix<Scalar> to_matrix(const FrameSequence<Scalar>& frames) {
  if (frames.empty()) return ComplexMatrix<Scalar>();
  ComplexMatrix<Scalar> m(frames.front().bins.size(), static_cast<Index>(frames.size()));
  for (size_t l = 0; l < frames.size(); ++l) m.col(static_cast<Index>(l)) = frames[l].bins;
  return m;
}

}  // namespace haec
