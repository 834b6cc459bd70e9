#pragma once

// Bark-scale band mapping. B(k, b) is the fraction of DFT bin k's bandwidth
// [(2k-1) fs/2K, (2k+1) fs/2K] that falls inside band b = [f_l(b), f_u(b)]:
//
//   B(k, b) = max(0, min(f_u, (2k+1) fs/2K) - max(f_l, (2k-1) fs/2K)) / (fs/K)
//
// Bins 0 and K/2 straddle the spectrum edges, so only half of each is covered.

#include <algorithm>
#include <cmath>

#include "haec/common.hpp"

namespace haec {

// Traunmueller's Hz -> Bark approximation (not clamped: 0 Hz maps to -0.53).
inline double hz_to_bark(double hz) { return 26.81 * hz / (1960.0 + hz) - 0.53; }
inline double bark_to_hz(double bark) { return 1960.0 * (bark + 0.53) / (26.28 - bark); }

template <typename Scalar>
struct BarkMap {
  Matrix<Scalar> weights;   // (K/2+1) x B
  Vector<double> band_edges;  // B+1 edges in Hz
  Index dft_size = 0;
  double sample_rate = 0;

  Index num_bins() const { return weights.rows(); }
  Index num_bands() const { return weights.cols(); }

  // Fraction of bin k's bandwidth covered by some band.
  Vector<Scalar> coverage() const { return weights.rowwise().sum(); }
};

template <typename Scalar = double>
BarkMap<Scalar> bark_map_from_edges(const Vector<double>& edges, Index dft_size, double sample_rate) {
  if (edges.size() < 2) throw ConfigError("bark: need at least one band");
  if (dft_size < 2 || dft_size % 2 != 0) throw ConfigError("bark: K must be even");
  if (!(sample_rate > 0)) throw ConfigError("bark: sample rate must be > 0");
  for (Index b = 1; b < edges.size(); ++b)
    if (!(edges(b) > edges(b - 1))) throw ConfigError("bark: band edges must be strictly increasing");
  const Index bins = dft_size / 2 + 1, bands = edges.size() - 1;
  if (bands > bins) throw ConfigError("bark: more bands than bins");

  BarkMap<Scalar> map;
  map.band_edges = edges;
  map.dft_size = dft_size;
  map.sample_rate = sample_rate;
  map.weights = Matrix<Scalar>::Zero(bins, bands);
  const double bin_width = sample_rate / static_cast<double>(dft_size);
  for (Index k = 0; k < bins; ++k) {
    const double lo = static_cast<double>(2 * k - 1) * sample_rate / (2.0 * dft_size);
    const double hi = static_cast<double>(2 * k + 1) * sample_rate / (2.0 * dft_size);
    for (Index b = 0; b < bands; ++b) {
      const double overlap = std::min(edges(b + 1), hi) - std::max(edges(b), lo);
      if (overlap > 0) map.weights(k, b) = static_cast<Scalar>(overlap / bin_width);
    }
  }
  return map;
}

// Bands uniformly spaced in Bark between 0 Hz and max_hz (default fs/2).
template <typename Scalar = double>
BarkMap<Scalar> build_bark_map(Index dft_size, Index num_bands, double sample_rate, double max_hz = -1) {
  if (num_bands < 1) throw ConfigError("bark: need at least one band");
  if (num_bands > dft_size / 2 + 1) throw ConfigError("bark: more bands than bins");
  if (max_hz <= 0) max_hz = 0.5 * sample_rate;
  const double z0 = hz_to_bark(0.0), z1 = hz_to_bark(max_hz);
  Vector<double> edges(num_bands + 1);
  for (Index b = 0; b <= num_bands; ++b)
    edges(b) = bark_to_hz(z0 + (z1 - z0) * static_cast<double>(b) / static_cast<double>(num_bands));
  edges(0) = 0.0;
  edges(num_bands) = max_hz;
  return bark_map_from_edges<Scalar>(edges, dft_size, sample_rate);
}

template <typename Scalar, typename Derived>
Vector<Scalar> pool_energy(const BarkMap<Scalar>& map, const Eigen::MatrixBase<Derived>& power) {
  if (power.size() != map.num_bins()) throw InputError("bark: power spectrum length mismatch");
  if ((power.array() < 0).any()) throw InputError("bark: negative power");
  return map.weights.transpose() * power.template cast<Scalar>();
}

template <typename Scalar, typename Derived>
Vector<Scalar> unmap_mask(const BarkMap<Scalar>& map, const Eigen::MatrixBase<Derived>& band_mask) {
  if (band_mask.size() != map.num_bands()) throw InputError("bark: band mask length mismatch");
  return map.weights * band_mask.template cast<Scalar>();
}

inline constexpr double kDefaultLogFloor = 1e-12;

template <typename Derived>
auto log_compress(const Eigen::MatrixBase<Derived>& features, typename Derived::Scalar floor = kDefaultLogFloor) {
  return features.array().max(floor).log10().matrix().eval();
}

}  // namespace haec
