#pragma once

// Streaming echo control: subband LEC -> error resynthesis -> STFT analysis of
// the error, microphone and farend signals -> log-Bark features -> band mask
// -> un-mapping -> masking of the error spectrum -> overlap-add.
//
// All stages advance in lockstep, one hop (= filterbank decimation) at a time.
// The microphone and farend signals feeding the postfilter are delayed by the
// filterbank group delay so that their frames line up with the error frames.

#include <deque>
#include <functional>
#include <memory>
#include <string>

#include "haec/bark.hpp"
#include "haec/framing.hpp"
#include "haec/lec.hpp"
#include "haec/metrics.hpp"
#include "haec/postfilter.hpp"
#include "haec/subband_fb.hpp"

namespace haec {

enum class MaskMode {
  Network,   // trained postfilter
  Ones,      // identity postfilter (oracle-mask): output = LEC error
  Zeros,     // forced silence
  External,  // band masks supplied by a MaskProvider
};

struct PipelineConfig {
  StftConfig stft;
  Index fb_length = 1024;
  Index fb_subbands = 512;
  Index fb_decimation = 128;
  double fb_kaiser_beta = kDefaultKaiserBeta;
  LecConfig lec;
  Index bark_bands = 86;
  double log_floor = kDefaultLogFloor;
  MaskMode mask_mode = MaskMode::Network;
  std::string weights_path;

  void validate() const;
};

using Spectrum = SpectralFrame<double>;

// The postfilter network runs in single precision; signal paths stay double.
using PostfilterNetwork = MaskNetwork<float>;

struct FrameContext {
  Index index = 0;
  const Spectrum* error = nullptr;
  const Spectrum* mic = nullptr;
  const Spectrum* farend = nullptr;
  // Log-Bark features [E; Y; X], 3B entries.
  const Eigen::VectorXd* features = nullptr;
};

// Returns a band mask (B entries) for the frame.
using MaskProvider = std::function<Eigen::VectorXd(const FrameContext&)>;

// Called once per frame after masking.
using FrameObserver =
    std::function<void(const FrameContext&, const Eigen::VectorXd& bin_mask, const Spectrum& output)>;

struct StreamOutput {
  Eigen::VectorXd enhanced;   // lags the input by latency()
  Eigen::VectorXd lec_error;  // lags the input by lec_latency()
};

class StreamProcessor {
 public:
  StreamProcessor(const PipelineConfig& cfg, std::shared_ptr<const PostfilterNetwork> network = nullptr);

  void set_mask_provider(MaskProvider provider) { provider_ = std::move(provider); }
  void set_observer(FrameObserver observer) { observer_ = std::move(observer); }

  // Accepts any number of samples (equal for both inputs); returns the output
  // completed by this call. Leftover samples short of a hop are buffered.
  StreamOutput process(const Eigen::Ref<const Eigen::VectorXd>& farend, const Eigen::Ref<const Eigen::VectorXd>& mic);

  Index hop() const { return cfg_.fb_decimation; }
  Index lec_latency() const { return proto_.group_delay(); }
  Index latency() const { return lec_latency() + cfg_.stft.frame_len - cfg_.stft.hop; }

  const PipelineConfig& config() const { return cfg_; }
  const BarkMap<double>& bark_map() const { return bark_; }
  const LecState<double>& lec_state() const { return lec_.state(); }

 private:
  void run_hop(const Eigen::VectorXd& farend, const Eigen::VectorXd& mic, StreamOutput& out, Index offset);
  Eigen::VectorXd band_features(const Spectrum& frame) const;

  PipelineConfig cfg_;
  std::shared_ptr<const PostfilterNetwork> network_;
  PostfilterState<float> net_state_;
  MaskProvider provider_;
  FrameObserver observer_;

  PrototypeFilter<double> proto_;
  FilterbankAnalyzer<double> fb_farend_, fb_mic_;
  FilterbankSynthesizer<double> fb_error_;
  EchoCanceller<double> lec_;
  std::deque<Eigen::VectorXd> delay_farend_, delay_mic_;
  StftStreamAnalyzer<double> stft_error_, stft_mic_, stft_farend_;
  StftStreamSynthesizer<double> stft_out_;
  BarkMap<double> bark_;

  Eigen::VectorXd pending_farend_, pending_mic_;
};

std::shared_ptr<const PostfilterNetwork> load_network(const PipelineConfig& cfg);

struct ProcessResult {
  Eigen::VectorXd enhanced;   // aligned with the input, same length
  Eigen::VectorXd lec_error;  // aligned with the input, same length
  MetricReport report;
};

// Whole-clip convenience wrapper: runs a fresh StreamProcessor, flushes it and
// removes the latency. The report's ERLE figures are computed against `mic`
// when it has energy.
ProcessResult process_stream(const Eigen::VectorXd& farend, const Eigen::VectorXd& mic, const PipelineConfig& cfg,
                             MaskProvider provider = nullptr,
                             std::shared_ptr<const PostfilterNetwork> network = nullptr);

// Ideal ratio mask per band: pooled |S|^2 / (pooled |E|^2 + floor), clamped
// to [0, 1]. Inputs are bins x frames; output is bands x frames.
Eigen::MatrixXd oracle_irm(const ComplexMatrix<double>& clean, const ComplexMatrix<double>& error,
                           const BarkMap<double>& map, double floor = 1e-12);

// Spectra of a ground-truth component framed exactly like the pipeline's
// error frames (delayed by the filterbank group delay, zero-padded start).
FrameSequence<double> aligned_frames(const Eigen::VectorXd& signal, const PipelineConfig& cfg);

// MaskProvider returning the IRM computed from the known clean speech.
MaskProvider make_irm_provider(const Eigen::VectorXd& clean, const PipelineConfig& cfg, double floor = 1e-12);

}  // namespace haec
