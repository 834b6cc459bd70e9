#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "haec/common.hpp"

namespace haec {

// 10 log10(|y|^2 / |s_hat|^2) over the whole clip. A silent s_hat gives +inf.
template <typename DY, typename DS>
double erle(const Eigen::MatrixBase<DY>& mic, const Eigen::MatrixBase<DS>& enhanced) {
  if (mic.size() != enhanced.size()) throw InputError("erle: length mismatch");
  const double ey = mic.template cast<double>().squaredNorm();
  const double es = enhanced.template cast<double>().squaredNorm();
  if (!(ey > 0)) throw InputError("erle: unprocessed signal has zero energy");
  if (!(es > 0)) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ey / es);
}

// ERLE of a raw stream that lags the microphone signal by `latency` samples.
template <typename DY, typename DS>
double erle_aligned(const Eigen::MatrixBase<DY>& mic, const Eigen::MatrixBase<DS>& delayed_output, Index latency) {
  const Index n = std::min(mic.size(), delayed_output.size() - latency);
  if (latency < 0 || n <= 0) throw InputError("erle: latency exceeds signal length");
  return erle(mic.head(n), delayed_output.segment(latency, n));
}

// Per-segment ERLE (diagnostics); segments where y is silent are skipped.
template <typename DY, typename DS>
std::vector<double> erle_segmental(const Eigen::MatrixBase<DY>& mic, const Eigen::MatrixBase<DS>& enhanced,
                                   Index segment) {
  if (mic.size() != enhanced.size()) throw InputError("erle: length mismatch");
  if (segment <= 0) throw ConfigError("erle: segment length must be positive");
  std::vector<double> out;
  for (Index s = 0; s + segment <= mic.size(); s += segment) {
    if (!(mic.segment(s, segment).squaredNorm() > 0)) continue;
    out.push_back(erle(mic.segment(s, segment), enhanced.segment(s, segment)));
  }
  return out;
}

inline double rtf(double processing_seconds, double audio_seconds) {
  if (!(audio_seconds > 0)) throw InputError("rtf: audio duration must be positive");
  return processing_seconds / audio_seconds;
}

// Wall-clock realtime factor of one call to `run`.
template <typename Fn>
double measure_rtf(Fn&& run, double audio_seconds) {
  if (!(audio_seconds > 0)) throw InputError("rtf: audio duration must be positive");
  const auto start = std::chrono::steady_clock::now();
  run();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return rtf(elapsed.count(), audio_seconds);
}

struct MetricReport {
  std::string condition;  // "DT", "STFE", "STNE" or empty
  double erle = std::numeric_limits<double>::quiet_NaN();
  double erle_lec = std::numeric_limits<double>::quiet_NaN();
  double snr_in = std::numeric_limits<double>::quiet_NaN();
  double snr_out = std::numeric_limits<double>::quiet_NaN();
  double rtf = std::numeric_limits<double>::quiet_NaN();
  Index latency = 0;
};

// 10 log10(|ref|^2 / |ref - test|^2).
template <typename DR, typename DT>
double snr_db(const Eigen::MatrixBase<DR>& reference, const Eigen::MatrixBase<DT>& test) {
  if (reference.size() != test.size()) throw InputError("snr: length mismatch");
  const double num = reference.template cast<double>().squaredNorm();
  const double den = (reference.template cast<double>() - test.template cast<double>()).squaredNorm();
  if (!(den > 0)) return std::numeric_limits<double>::infinity();
  if (!(num > 0)) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

}  // namespace haec
