#pragma once

#include <unsupported/Eigen/FFT>

#include "haec/common.hpp"

namespace haec {

// Real-input DFT of fixed even size n producing the n/2+1 one-sided bins.
// inverse() is the exact inverse (scaled by 1/n).
template <typename Scalar>
class RealFft {
 public:
  explicit RealFft(Index size) : size_(size) {
    if (size < 2 || size % 2 != 0) throw ConfigError("RealFft: size must be even and >= 2");
    fft_.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  }

  Index size() const { return size_; }
  Index num_bins() const { return size_ / 2 + 1; }

  template <typename Derived>
  void forward(const Eigen::MatrixBase<Derived>& in, ComplexVector<Scalar>& out) {
    eigen_assert(in.size() == size_);
    time_ = in;
    fft_.fwd(out, time_);
  }

  // Input bins 0 and n/2 are treated as real; their imaginary parts are ignored.
  template <typename Derived>
  void inverse(const Eigen::MatrixBase<Derived>& in, Vector<Scalar>& out) {
    eigen_assert(in.size() == num_bins());
    freq_ = in;
    freq_(0) = std::complex<Scalar>(freq_(0).real(), 0);
    freq_(num_bins() - 1) = std::complex<Scalar>(freq_(num_bins() - 1).real(), 0);
    fft_.inv(out, freq_, size_);
  }

 private:
  Index size_;
  Eigen::FFT<Scalar> fft_;
  Vector<Scalar> time_;
  ComplexVector<Scalar> freq_;
};

}  // namespace haec
