#pragma once

// Mask-estimating postfilter: log-Bark features of E, Y and X are stacked
// (3B inputs) and run through a stack of dense and GRU layers ending in a
// sigmoid layer of width B.
//
// GRU convention (fixed, recorded in the weights manifest as
// "pytorch-rzn-dual-bias"): gate rows are ordered reset, update, candidate;
// both input and recurrent paths carry a bias.
//   r  = sigmoid(W_r x + b_ir + U_r h + b_hr)
//   z  = sigmoid(W_z x + b_iz + U_z h + b_hz)
//   n  = tanh(W_n x + b_in + r * (U_n h + b_hn))
//   h' = (1 - z) * n + z * h

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "haec/common.hpp"
#include "haec/framing.hpp"

namespace haec {

enum class LayerKind { Dense, Gru };
enum class Activation { Linear, Relu, Sigmoid, Tanh };

inline constexpr const char* kGruConvention = "pytorch-rzn-dual-bias";

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  Index input = 0;
  Index output = 0;
  Activation activation = Activation::Linear;

  bool operator==(const LayerSpec&) const = default;
};

struct ModelArch {
  Index num_bands = 0;
  // DFT bins the band mapping runs on; only used by the footprint audit.
  Index num_bins = 0;
  std::vector<LayerSpec> layers;
  std::string gru_convention = kGruConvention;

  Index input_dim() const { return 3 * num_bands; }

  bool operator==(const ModelArch&) const = default;

  void validate() const {
    if (layers.empty()) throw ConfigError("postfilter: architecture has no layers");
    if (num_bands < 1) throw ConfigError("postfilter: num_bands must be >= 1");
    if (gru_convention != kGruConvention) throw ConfigError("postfilter: unsupported GRU convention " + gru_convention);
    if (layers.front().input != input_dim()) throw ConfigError("postfilter: first layer input must be 3*num_bands");
    for (size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].input < 1 || layers[i].output < 1) throw ConfigError("postfilter: layer widths must be positive");
      if (i > 0 && layers[i].input != layers[i - 1].output) throw ConfigError("postfilter: layer widths do not chain");
      if (layers[i].kind == LayerKind::Gru && layers[i].activation != Activation::Tanh)
        throw ConfigError("postfilter: GRU candidate activation must be tanh");
    }
    if (layers.back().output != num_bands || layers.back().activation != Activation::Sigmoid)
      throw ConfigError("postfilter: last layer must be a sigmoid of width num_bands");
  }
};

// Dense(300) -> GRU(300) -> GRU(300) -> Dense(560) -> Dense(560) -> Dense(B, sigmoid).
inline ModelArch default_arch(Index num_bands = 86, Index num_bins = 257) {
  ModelArch arch;
  arch.num_bands = num_bands;
  arch.num_bins = num_bins;
  const Index in = 3 * num_bands;
  arch.layers = {
      {LayerKind::Dense, in, 300, Activation::Relu},
      {LayerKind::Gru, 300, 300, Activation::Tanh},
      {LayerKind::Gru, 300, 300, Activation::Tanh},
      {LayerKind::Dense, 300, 560, Activation::Relu},
      {LayerKind::Dense, 560, 560, Activation::Relu},
      {LayerKind::Dense, 560, num_bands, Activation::Sigmoid},
  };
  return arch;
}

struct Footprint {
  std::int64_t params = 0;
  std::int64_t macs_per_frame = 0;
  double macs_per_second = 0;
};

// Exact parameter and multiply-accumulate count. Dense: in*out weights plus
// out biases, in*out MACs. GRU: 3(in*h + h*h + 2h) parameters, 3(in*h + h*h)
// matrix MACs plus 3h elementwise products. When num_bins is set, the band
// pooling of three spectra and the mask un-mapping add 4*bins*bands MACs.
inline Footprint audit_footprint(const ModelArch& arch, double frame_rate) {
  Footprint fp;
  for (const auto& l : arch.layers) {
    if (l.kind == LayerKind::Dense) {
      fp.params += l.input * l.output + l.output;
      fp.macs_per_frame += l.input * l.output;
    } else {
      fp.params += 3 * (l.input * l.output + l.output * l.output + 2 * l.output);
      fp.macs_per_frame += 3 * (l.input * l.output + l.output * l.output) + 3 * l.output;
    }
  }
  if (!arch.layers.empty()) fp.macs_per_frame += 4 * arch.num_bins * arch.num_bands;
  fp.macs_per_second = static_cast<double>(fp.macs_per_frame) * frame_rate;
  return fp;
}

// Dense layers use kernel (out x in) and bias. GRU layers use kernel
// (3h x in), recurrent (3h x h), bias and recurrent_bias (3h each).
struct LayerWeights {
  Eigen::MatrixXf kernel;
  Eigen::MatrixXf recurrent;
  Eigen::VectorXf bias;
  Eigen::VectorXf recurrent_bias;
};

struct ModelWeights {
  ModelArch arch;
  std::vector<LayerWeights> layers;

  void validate() const {
    arch.validate();
    if (layers.size() != arch.layers.size()) throw InputError("postfilter: weight/layer count mismatch");
    for (size_t i = 0; i < layers.size(); ++i) {
      const LayerSpec& s = arch.layers[i];
      const LayerWeights& w = layers[i];
      const Index rows = s.kind == LayerKind::Gru ? 3 * s.output : s.output;
      bool ok = w.kernel.rows() == rows && w.kernel.cols() == s.input && w.bias.size() == rows;
      if (s.kind == LayerKind::Gru)
        ok = ok && w.recurrent.rows() == rows && w.recurrent.cols() == s.output && w.recurrent_bias.size() == rows;
      if (!ok) throw InputError("postfilter: tensor shapes do not match manifest at layer " + std::to_string(i));
      if (!all_finite(w.kernel) || !all_finite(w.bias) || !all_finite(w.recurrent) || !all_finite(w.recurrent_bias))
        throw InputError("postfilter: non-finite weights at layer " + std::to_string(i));
    }
  }
};

inline ModelWeights zero_weights(const ModelArch& arch) {
  arch.validate();
  ModelWeights w;
  w.arch = arch;
  for (const auto& s : arch.layers) {
    LayerWeights lw;
    const Index rows = s.kind == LayerKind::Gru ? 3 * s.output : s.output;
    lw.kernel = Eigen::MatrixXf::Zero(rows, s.input);
    lw.bias = Eigen::VectorXf::Zero(rows);
    if (s.kind == LayerKind::Gru) {
      lw.recurrent = Eigen::MatrixXf::Zero(rows, s.output);
      lw.recurrent_bias = Eigen::VectorXf::Zero(rows);
    }
    w.layers.push_back(std::move(lw));
  }
  return w;
}

// Uniform(-a, a) with a = gain / sqrt(fan_in), the usual PyTorch default range.
inline ModelWeights random_weights(const ModelArch& arch, std::uint64_t seed, float gain = 1.0f) {
  ModelWeights w = zero_weights(arch);
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& s = arch.layers[i];
    const float fan_in = static_cast<float>(s.kind == LayerKind::Gru ? s.output : s.input);
    std::uniform_real_distribution<float> dist(-gain / std::sqrt(fan_in), gain / std::sqrt(fan_in));
    auto fill = [&](auto& m) {
      for (Index j = 0; j < m.size(); ++j) m.data()[j] = dist(rng);
    };
    LayerWeights& lw = w.layers[i];
    fill(lw.kernel);
    fill(lw.bias);
    fill(lw.recurrent);
    fill(lw.recurrent_bias);
  }
  return w;
}

template <typename Scalar>
struct PostfilterState {
  std::vector<Vector<Scalar>> hidden;  // one per layer; empty for dense layers
};

template <typename ScalarT>
class MaskNetwork {
 public:
  using Scalar = ScalarT;

  explicit MaskNetwork(const ModelWeights& weights) : arch_(weights.arch) {
    weights.validate();
    for (const auto& w : weights.layers) {
      Layer l;
      l.kernel = w.kernel.cast<Scalar>();
      l.bias = w.bias.cast<Scalar>();
      l.recurrent = w.recurrent.cast<Scalar>();
      l.recurrent_bias = w.recurrent_bias.cast<Scalar>();
      layers_.push_back(std::move(l));
    }
  }

  const ModelArch& arch() const { return arch_; }

  PostfilterState<Scalar> initial_state() const {
    PostfilterState<Scalar> state;
    for (const auto& s : arch_.layers)
      state.hidden.push_back(s.kind == LayerKind::Gru ? Vector<Scalar>::Zero(s.output) : Vector<Scalar>());
    return state;
  }

  template <typename Derived>
  Vector<Scalar> forward(PostfilterState<Scalar>& state, const Eigen::MatrixBase<Derived>& input) const {
    if (input.size() != arch_.input_dim()) throw InputError("postfilter: feature length mismatch");
    if (state.hidden.size() != layers_.size()) throw InputError("postfilter: state does not match architecture");
    Vector<Scalar> act = input.template cast<Scalar>();
    for (size_t i = 0; i < layers_.size(); ++i) {
      const LayerSpec& s = arch_.layers[i];
      const Layer& l = layers_[i];
      if (s.kind == LayerKind::Dense) {
        act = l.kernel * act + l.bias;
        activate(act, s.activation);
      } else {
        Vector<Scalar>& h = state.hidden[i];
        if (h.size() != s.output) throw InputError("postfilter: hidden state width mismatch");
        const Index n = s.output;
        const Vector<Scalar> gi = l.kernel * act + l.bias;
        const Vector<Scalar> gh = l.recurrent * h + l.recurrent_bias;
        const auto r = sigmoid(gi.head(n) + gh.head(n));
        const auto z = sigmoid(gi.segment(n, n) + gh.segment(n, n));
        const Vector<Scalar> cand = (gi.tail(n).array() + r.array() * gh.tail(n).array()).tanh().matrix();
        h = ((Scalar(1) - z.array()) * cand.array() + z.array() * h.array()).matrix();
        act = h;
      }
    }
    return act;
  }

 private:
  struct Layer {
    Matrix<Scalar> kernel, recurrent;
    Vector<Scalar> bias, recurrent_bias;
  };

  template <typename Derived>
  static Vector<Scalar> sigmoid(const Eigen::MatrixBase<Derived>& x) {
    return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
  }

  static void activate(Vector<Scalar>& x, Activation a) {
    switch (a) {
      case Activation::Linear: break;
      case Activation::Relu: x = x.cwiseMax(Scalar(0)); break;
      case Activation::Sigmoid: x = sigmoid(x); break;
      case Activation::Tanh: x = x.array().tanh().matrix(); break;
    }
  }

  ModelArch arch_;
  std::vector<Layer> layers_;
};

// One frame: features are B-dimensional log-Bark powers of E, Y and X.
template <typename Scalar, typename DE, typename DY, typename DX>
Vector<Scalar> infer_mask(PostfilterState<Scalar>& state, const MaskNetwork<Scalar>& net,
                          const Eigen::MatrixBase<DE>& feat_e, const Eigen::MatrixBase<DY>& feat_y,
                          const Eigen::MatrixBase<DX>& feat_x) {
  const Index b = net.arch().num_bands;
  if (feat_e.size() != b || feat_y.size() != b || feat_x.size() != b)
    throw InputError("postfilter: feature vectors must have num_bands entries");
  Vector<Scalar> input(3 * b);
  input << feat_e.template cast<Scalar>(), feat_y.template cast<Scalar>(), feat_x.template cast<Scalar>();
  return net.forward(state, input);
}

template <typename Scalar, typename Derived>
SpectralFrame<Scalar> apply_mask(const SpectralFrame<Scalar>& frame, const Eigen::MatrixBase<Derived>& bin_mask) {
  if (bin_mask.size() != frame.bins.size()) throw InputError("apply_mask: mask length mismatch");
  SpectralFrame<Scalar> out;
  out.index = frame.index;
  out.bins = frame.bins.cwiseProduct(bin_mask.template cast<std::complex<Scalar>>());
  return out;
}

}  // namespace haec
