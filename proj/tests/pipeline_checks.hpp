#pragma once

// Checks shared by the unit tests and the acceptance binary.

#include <vector>

#include "haec/pipeline.hpp"
#include "haec/scenario.hpp"

namespace checks {

using namespace haec;

struct DecompositionResult {
  double max_residual = 0.0;  // max |S_hat - S - ((M-1)S + M(N + dD))|
  double scale = 0.0;         // max |E|, for a relative figure
  Index frames = 0;
  double relative() const { return scale > 0 ? max_residual / scale : max_residual; }
};

// Runs the pipeline with IRM masks and checks, frame by frame, that the
// masked output decomposes as S + (M-1)S + M(N + dD), where dD = D - D_hat
// comes from an independently driven canceller and filterbank.
inline DecompositionResult check_decomposition(const Scenario& sc, const PipelineConfig& base) {
  PipelineConfig cfg = base;
  cfg.mask_mode = MaskMode::External;
  const Index n = sc.y.size(), hop = cfg.stft.hop;
  StreamProcessor proc(cfg);
  const Index total = ((n + proc.latency() + hop - 1) / hop) * hop;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(total), y = Eigen::VectorXd::Zero(total);
  x.head(n) = sc.x;
  y.head(n) = sc.y;

  struct Frame {
    Index index;
    Eigen::VectorXcd error, output;
    Eigen::VectorXd mask;
  };
  std::vector<Frame> seen;
  proc.set_mask_provider(make_irm_provider(sc.s, cfg));
  proc.set_observer([&](const FrameContext& ctx, const Eigen::VectorXd& mask, const Spectrum& out) {
    seen.push_back({ctx.index, ctx.error->bins, out.bins, mask});
  });
  proc.process(x, y);

  // Independent echo estimate.
  const auto proto = design_prototype<double>(cfg.fb_length, cfg.fb_subbands, cfg.fb_decimation, cfg.fb_kaiser_beta);
  FilterbankAnalyzer<double> ax(proto), ay(proto);
  FilterbankSynthesizer<double> sd(proto);
  EchoCanceller<double> lec(cfg.lec, proto.num_bins());
  StftStreamAnalyzer<double> stft_dhat(cfg.stft);
  ComplexVector<double> xs, ys;
  Eigen::VectorXd dhat_block;
  FrameSequence<double> dhat;
  for (Index s = 0; s + hop <= total; s += hop) {
    ax.push(x.segment(s, hop), xs);
    ay.push(y.segment(s, hop), ys);
    sd.push(lec.step(xs, ys).echo_estimate, dhat_block);
    dhat.push_back(stft_dhat.push(dhat_block));
  }

  const FrameSequence<double> S = aligned_frames(sc.s, cfg), N = aligned_frames(sc.n, cfg),
                              D = aligned_frames(sc.d, cfg);
  DecompositionResult r;
  for (const Frame& f : seen) {
    const auto l = static_cast<size_t>(f.index);
    if (l >= S.size() || l >= dhat.size()) break;
    const Eigen::VectorXcd dD = D[l].bins - dhat[l].bins;
    const Eigen::VectorXcd m = f.mask.cast<std::complex<double>>();
    const Eigen::VectorXcd rhs = (m.array() - 1.0) * S[l].bins.array() + m.array() * (N[l].bins + dD).array();
    const Eigen::VectorXcd lhs = f.output - S[l].bins;
    r.max_residual = std::max(r.max_residual, (lhs - rhs).cwiseAbs().maxCoeff());
    r.scale = std::max(r.scale, f.error.cwiseAbs().maxCoeff());
    ++r.frames;
  }
  return r;
}

}  // namespace checks
