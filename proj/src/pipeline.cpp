#include "haec/pipeline.hpp"

#include <chrono>

#include "haec/weights_io.hpp"

namespace haec {

void PipelineConfig::validate() const {
  stft.validate();
  lec.validate();
  if (fb_decimation != stft.hop) throw ConfigError("pipeline: filterbank decimation must equal the STFT hop");
  if (fb_subbands != stft.frame_len)
    throw ConfigError("pipeline: filterbank DFT size must equal the STFT DFT size");
  if (bark_bands < 1 || bark_bands > stft.num_bins()) throw ConfigError("pipeline: invalid number of Bark bands");
  if (!(log_floor > 0)) throw ConfigError("pipeline: log floor must be > 0");
  if (std::abs(lec.frame_rate - stft.frame_rate()) > 1e-9)
    throw ConfigError("pipeline: LEC frame rate must equal sample_rate / hop");
}

std::shared_ptr<const PostfilterNetwork> load_network(const PipelineConfig& cfg) {
  if (cfg.weights_path.empty()) throw ConfigError("pipeline: network mode requires a weights file");
  return std::make_shared<const PostfilterNetwork>(load_weights(cfg.weights_path));
}

namespace {

std::deque<Eigen::VectorXd> make_delay(Index blocks, Index hop) {
  return std::deque<Eigen::VectorXd>(static_cast<size_t>(blocks), Eigen::VectorXd::Zero(hop));
}

Eigen::VectorXd push_delay(std::deque<Eigen::VectorXd>& line, const Eigen::VectorXd& block) {
  if (line.empty()) return block;
  line.push_back(block);
  Eigen::VectorXd out = std::move(line.front());
  line.pop_front();
  return out;
}

}  // namespace

StreamProcessor::StreamProcessor(const PipelineConfig& cfg, std::shared_ptr<const PostfilterNetwork> network)
    : cfg_((cfg.validate(), cfg)),
      network_(std::move(network)),
      proto_(design_prototype<double>(cfg.fb_length, cfg.fb_subbands, cfg.fb_decimation, cfg.fb_kaiser_beta)),
      fb_farend_(proto_),
      fb_mic_(proto_),
      fb_error_(proto_),
      lec_(cfg.lec, proto_.num_bins()),
      delay_farend_(make_delay(proto_.group_delay() / cfg.fb_decimation, cfg.fb_decimation)),
      delay_mic_(make_delay(proto_.group_delay() / cfg.fb_decimation, cfg.fb_decimation)),
      stft_error_(cfg.stft),
      stft_mic_(cfg.stft),
      stft_farend_(cfg.stft),
      stft_out_(cfg.stft),
      bark_(build_bark_map<double>(cfg.stft.dft_size(), cfg.bark_bands, cfg.stft.sample_rate)) {
  if (cfg_.mask_mode == MaskMode::Network) {
    if (!network_) network_ = load_network(cfg_);
    if (network_->arch().num_bands != cfg_.bark_bands)
      throw InputError("pipeline: network band count does not match configuration");
    net_state_ = network_->initial_state();
  }
}

Eigen::VectorXd StreamProcessor::band_features(const Spectrum& frame) const {
  return log_compress(pool_energy(bark_, frame.bins.cwiseAbs2()), cfg_.log_floor);
}

void StreamProcessor::run_hop(const Eigen::VectorXd& farend, const Eigen::VectorXd& mic, StreamOutput& out,
                              Index offset) {
  const Index hop = cfg_.fb_decimation;
  ComplexVector<double> x_sub, y_sub;
  fb_farend_.push(farend, x_sub);
  fb_mic_.push(mic, y_sub);
  const LecOutput<double> lec = lec_.step(x_sub, y_sub);
  Eigen::VectorXd error;
  fb_error_.push(lec.error, error);
  out.lec_error.segment(offset, hop) = error;

  const Eigen::VectorXd mic_aligned = push_delay(delay_mic_, mic);
  const Eigen::VectorXd farend_aligned = push_delay(delay_farend_, farend);
  const Spectrum e_frame = stft_error_.push(error);
  const Spectrum y_frame = stft_mic_.push(mic_aligned);
  const Spectrum x_frame = stft_farend_.push(farend_aligned);

  const Index bands = cfg_.bark_bands;
  Eigen::VectorXd features(3 * bands);
  features << band_features(e_frame), band_features(y_frame), band_features(x_frame);
  const FrameContext ctx{e_frame.index, &e_frame, &y_frame, &x_frame, &features};

  Eigen::VectorXd bin_mask;
  switch (cfg_.mask_mode) {
    case MaskMode::Ones: bin_mask = Eigen::VectorXd::Ones(e_frame.bins.size()); break;
    case MaskMode::Zeros: bin_mask = Eigen::VectorXd::Zero(e_frame.bins.size()); break;
    case MaskMode::Network: {
      const Eigen::VectorXd band_mask = network_->forward(net_state_, features.cast<float>()).cast<double>();
      bin_mask = unmap_mask(bark_, band_mask);
      break;
    }
    case MaskMode::External: {
      if (!provider_) throw ConfigError("pipeline: external mask mode requires a mask provider");
      const Eigen::VectorXd band_mask = provider_(ctx);
      bin_mask = unmap_mask(bark_, band_mask);
      break;
    }
  }
  const Spectrum masked = apply_mask(e_frame, bin_mask);
  if (observer_) observer_(ctx, bin_mask, masked);
  out.enhanced.segment(offset, hop) = stft_out_.push(masked.bins);
}

StreamOutput StreamProcessor::process(const Eigen::Ref<const Eigen::VectorXd>& farend,
                                      const Eigen::Ref<const Eigen::VectorXd>& mic) {
  if (farend.size() != mic.size()) throw InputError("pipeline: farend and mic chunks differ in length");
  require_finite(farend, "pipeline farend");
  require_finite(mic, "pipeline mic");
  const Index hop = cfg_.fb_decimation;

  Eigen::VectorXd all_x(pending_farend_.size() + farend.size());
  all_x << pending_farend_, farend;
  Eigen::VectorXd all_y(pending_mic_.size() + mic.size());
  all_y << pending_mic_, mic;

  const Index hops = all_x.size() / hop;
  StreamOutput out;
  out.enhanced.resize(hops * hop);
  out.lec_error.resize(hops * hop);
  Eigen::VectorXd xb(hop), yb(hop);
  for (Index h = 0; h < hops; ++h) {
    xb = all_x.segment(h * hop, hop);
    yb = all_y.segment(h * hop, hop);
    run_hop(xb, yb, out, h * hop);
  }
  pending_farend_ = all_x.tail(all_x.size() - hops * hop);
  pending_mic_ = all_y.tail(all_y.size() - hops * hop);
  return out;
}

ProcessResult process_stream(const Eigen::VectorXd& farend, const Eigen::VectorXd& mic, const PipelineConfig& cfg,
                             MaskProvider provider, std::shared_ptr<const PostfilterNetwork> network) {
  if (farend.size() != mic.size()) throw InputError("pipeline: farend and mic differ in length");
  const auto start = std::chrono::steady_clock::now();
  StreamProcessor proc(cfg, std::move(network));
  if (provider) proc.set_mask_provider(std::move(provider));

  const Index n = mic.size(), hop = proc.hop();
  const Index total = ((n + proc.latency() + hop - 1) / hop) * hop;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(total), y = Eigen::VectorXd::Zero(total);
  x.head(n) = farend;
  y.head(n) = mic;
  const StreamOutput raw = proc.process(x, y);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  ProcessResult res;
  res.enhanced = raw.enhanced.segment(proc.latency(), n);
  res.lec_error = raw.lec_error.segment(proc.lec_latency(), n);
  res.report.latency = proc.latency();
  if (n > 0) {
    res.report.rtf = rtf(elapsed.count(), static_cast<double>(n) / cfg.stft.sample_rate);
    if (mic.squaredNorm() > 0) {
      res.report.erle = erle(mic, res.enhanced);
      res.report.erle_lec = erle(mic, res.lec_error);
    }
  }
  return res;
}

Eigen::MatrixXd oracle_irm(const ComplexMatrix<double>& clean, const ComplexMatrix<double>& error,
                           const BarkMap<double>& map, double floor) {
  if (clean.rows() != error.rows() || clean.cols() != error.cols()) throw InputError("oracle_irm: shape mismatch");
  Eigen::MatrixXd masks(map.num_bands(), clean.cols());
  for (Index l = 0; l < clean.cols(); ++l) {
    const Eigen::VectorXd ps = pool_energy(map, clean.col(l).cwiseAbs2());
    const Eigen::VectorXd pe = pool_energy(map, error.col(l).cwiseAbs2());
    masks.col(l) = (ps.array() / (pe.array() + floor)).min(1.0).max(0.0).matrix();
  }
  return masks;
}

FrameSequence<double> aligned_frames(const Eigen::VectorXd& signal, const PipelineConfig& cfg) {
  cfg.validate();
  const Index hop = cfg.stft.hop;
  const Index delay = cfg.fb_length - cfg.fb_decimation;
  const Index total = ((signal.size() + delay + cfg.stft.frame_len + hop - 1) / hop) * hop;
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(total);
  padded.segment(delay, signal.size()) = signal;
  StftStreamAnalyzer<double> analyzer(cfg.stft);
  FrameSequence<double> frames;
  for (Index s = 0; s + hop <= total; s += hop) frames.push_back(analyzer.push(padded.segment(s, hop)));
  return frames;
}

MaskProvider make_irm_provider(const Eigen::VectorXd& clean, const PipelineConfig& cfg, double floor) {
  auto frames = std::make_shared<FrameSequence<double>>(aligned_frames(clean, cfg));
  auto map = std::make_shared<BarkMap<double>>(
      build_bark_map<double>(cfg.stft.dft_size(), cfg.bark_bands, cfg.stft.sample_rate));
  return [frames, map, floor](const FrameContext& ctx) -> Eigen::VectorXd {
    ComplexMatrix<double> s(ctx.error->bins.size(), 1), e(ctx.error->bins.size(), 1);
    e.col(0) = ctx.error->bins;
    if (ctx.index < static_cast<Index>(frames->size()))
      s.col(0) = (*frames)[static_cast<size_t>(ctx.index)].bins;
    else
      s.setZero();
    return oracle_irm(s, e, *map, floor).col(0);
  };
}

}  // namespace haec
