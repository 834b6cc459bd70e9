// haec: command-line front end.
//
//   process          farend + mic WAV -> enhanced WAV
//   simulate         write seeded scenario bundles
//   evaluate         run bundles through the pipeline and report ERLE / SNR
//   audit            parameter and MAC count of the postfilter network
//   design-fb        design the subband prototype filter
//   export-features  per-frame log-Bark features and IRM targets of a bundle
//
// Exit codes: 0 success, 2 input error, 3 config error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "haec/array_io.hpp"
#include "haec/config.hpp"
#include "haec/pipeline.hpp"
#include "haec/scenario.hpp"
#include "haec/wav.hpp"
#include "haec/weights_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string weights;
  bool oracle_mask = false;
  std::string report;
  std::uint64_t seed = 0;
};

haec::PipelineConfig pipeline_config(const CommonOptions& opt) {
  haec::PipelineConfig cfg;
  if (!opt.config_path.empty()) cfg = haec::load_config(opt.config_path);
  if (!opt.weights.empty()) {
    cfg.weights_path = opt.weights;
    cfg.mask_mode = haec::MaskMode::Network;
  }
  if (opt.oracle_mask) cfg.mask_mode = haec::MaskMode::Ones;
  if (cfg.mask_mode == haec::MaskMode::Network && cfg.weights_path.empty())
    throw haec::ConfigError("either --weights or --oracle-mask is required");
  cfg.lec.frame_rate = cfg.stft.frame_rate();
  cfg.validate();
  return cfg;
}

json to_json(const haec::MetricReport& r) {
  auto num = [](double v) -> json {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  return {{"condition", r.condition}, {"erle_db", num(r.erle)},   {"erle_lec_db", num(r.erle_lec)},
          {"snr_in_db", num(r.snr_in)}, {"snr_out_db", num(r.snr_out)}, {"rtf", num(r.rtf)},
          {"latency_samples", r.latency}};
}

void print_report(const std::string& name, const haec::MetricReport& r) {
  std::printf("%s condition=%s erle_db=%.3f erle_lec_db=%.3f snr_in_db=%.3f snr_out_db=%.3f rtf=%.4f latency=%lld\n",
              name.c_str(), r.condition.empty() ? "-" : r.condition.c_str(), r.erle, r.erle_lec, r.snr_in,
              r.snr_out, r.rtf, static_cast<long long>(r.latency));
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw haec::InputError("cannot write report " + path);
  out << j.dump(2) << '\n';
}

haec::WavData read_checked(const std::string& path, double expected_rate) {
  haec::WavData w = haec::read_wav(path);
  if (w.sample_rate != static_cast<int>(expected_rate))
    throw haec::InputError(path + ": sample rate " + std::to_string(w.sample_rate) + " does not match " +
                           std::to_string(static_cast<int>(expected_rate)));
  return w;
}

int run_process(const CommonOptions& opt, const std::string& farend, const std::string& mic, const std::string& out) {
  const haec::PipelineConfig cfg = pipeline_config(opt);
  const haec::WavData x = read_checked(farend, cfg.stft.sample_rate);
  const haec::WavData y = read_checked(mic, cfg.stft.sample_rate);
  if (x.samples.size() != y.samples.size()) throw haec::InputError("farend and mic lengths differ");
  const haec::ProcessResult res = haec::process_stream(x.samples, y.samples, cfg);
  haec::write_wav(out, res.enhanced, y.sample_rate);
  print_report(fs::path(mic).filename().string(), res.report);
  write_json(opt.report, to_json(res.report));
  return 0;
}

std::vector<fs::path> bundle_dirs(const fs::path& root) {
  if (fs::exists(root / "y.wav")) return {root};
  std::vector<fs::path> dirs;
  if (fs::is_directory(root))
    for (const auto& entry : fs::directory_iterator(root))
      if (entry.is_directory() && fs::exists(entry.path() / "y.wav")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw haec::InputError("no scenario bundles under " + root.string());
  return dirs;
}

int run_simulate(const CommonOptions& opt, const std::string& out, int count, const std::string& condition,
                 double duration) {
  const haec::Condition cond = haec::parse_condition(condition);
  for (int i = 0; i < count; ++i) {
    const haec::Scenario sc = haec::generate(haec::sample_scenario_spec(opt.seed + i, cond, duration));
    char name[32];
    std::snprintf(name, sizeof name, "clip_%04d", i);
    haec::write_scenario(sc, fs::path(out) / name);
    std::printf("%s seed=%llu condition=%s\n", name, static_cast<unsigned long long>(opt.seed + i),
                condition.c_str());
  }
  return 0;
}

int run_evaluate(const CommonOptions& opt, const std::string& root, bool irm) {
  haec::PipelineConfig cfg = irm ? haec::PipelineConfig{} : pipeline_config(opt);
  if (irm) {
    if (!opt.config_path.empty()) cfg = haec::load_config(opt.config_path);
    cfg.mask_mode = haec::MaskMode::External;
  }
  json all = json::array();
  for (const fs::path& dir : bundle_dirs(root)) {
    const haec::Scenario sc = haec::read_scenario(dir);
    haec::MaskProvider provider = irm ? haec::make_irm_provider(sc.s, cfg) : nullptr;
    const haec::ProcessResult res = haec::process_stream(sc.x, sc.y, cfg, provider);
    haec::MetricReport r = res.report;
    r.condition = haec::to_string(sc.spec.condition);
    if (sc.s.squaredNorm() > 0) {
      r.snr_in = haec::snr_db(sc.s, sc.y);
      r.snr_out = haec::snr_db(sc.s, res.enhanced);
    }
    if (sc.spec.condition != haec::Condition::FarendOnly) r.erle = r.erle_lec = std::numeric_limits<double>::quiet_NaN();
    print_report(dir.filename().string(), r);
    json j = to_json(r);
    j["bundle"] = dir.filename().string();
    all.push_back(j);
  }
  write_json(opt.report, all);
  return 0;
}

int run_audit(const CommonOptions& opt, double frame_rate) {
  haec::PipelineConfig cfg;
  if (!opt.config_path.empty()) cfg = haec::load_config(opt.config_path);
  if (frame_rate <= 0) frame_rate = cfg.stft.frame_rate();
  const haec::ModelArch arch = opt.weights.empty() ? haec::default_arch(cfg.bark_bands, cfg.stft.num_bins())
                                                   : haec::load_weights(opt.weights).arch;
  const auto start = std::chrono::steady_clock::now();
  const haec::Footprint fp = haec::audit_footprint(arch, frame_rate);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  std::printf("params=%lld macs_per_frame=%lld macs_per_second=%.0f audit_seconds=%.3g\n",
              static_cast<long long>(fp.params), static_cast<long long>(fp.macs_per_frame), fp.macs_per_second,
              elapsed.count());
  for (size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    std::printf("layer%zu %s %lld->%lld %s\n", i, haec::to_string(l.kind).c_str(), static_cast<long long>(l.input),
                static_cast<long long>(l.output), haec::to_string(l.activation).c_str());
  }
  write_json(opt.report, {{"params", fp.params},
                          {"macs_per_frame", fp.macs_per_frame},
                          {"macs_per_second", fp.macs_per_second},
                          {"frame_rate", frame_rate}});
  return 0;
}

int run_design_fb(const CommonOptions& opt, const std::string& out, long long length, long long subbands,
                  long long decimation, double beta) {
  const auto proto = haec::design_prototype<double>(length, subbands, decimation, beta);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::VectorXd noise = Eigen::VectorXd::NullaryExpr(16 * length, [&](Eigen::Index) { return normal(rng); });
  const Eigen::VectorXd rec = haec::fb_synthesize(haec::fb_analyze(noise, proto), proto);
  const Eigen::Index delay = proto.group_delay(), n = noise.size() - delay - length;
  const double err = haec::snr_db(noise.segment(length, n), rec.segment(length + delay, n));
  if (!out.empty()) haec::save_prototype(out, proto);
  std::printf("length=%lld subbands=%lld decimation=%lld beta=%.3f group_delay=%lld roundtrip_error_db=%.2f\n",
              length, subbands, decimation, beta, static_cast<long long>(delay), -err);
  write_json(opt.report, {{"length", length},
                          {"subbands", subbands},
                          {"decimation", decimation},
                          {"beta", beta},
                          {"group_delay", delay},
                          {"roundtrip_error_db", -err}});
  return 0;
}

int run_export_features(const CommonOptions& opt, const std::string& bundle, const std::string& out) {
  haec::PipelineConfig cfg;
  if (!opt.config_path.empty()) cfg = haec::load_config(opt.config_path);
  cfg.mask_mode = haec::MaskMode::Ones;
  const haec::Scenario sc = haec::read_scenario(bundle);
  const auto clean = haec::aligned_frames(sc.s, cfg);

  haec::StreamProcessor proc(cfg);
  const Eigen::Index bands = cfg.bark_bands;
  std::vector<Eigen::VectorXd> features, targets;
  proc.set_observer([&](const haec::FrameContext& ctx, const Eigen::VectorXd&, const haec::Spectrum&) {
    features.push_back(*ctx.features);
    haec::ComplexMatrix<double> s = haec::ComplexMatrix<double>::Zero(ctx.error->bins.size(), 1);
    if (ctx.index < static_cast<Eigen::Index>(clean.size())) s.col(0) = clean[static_cast<size_t>(ctx.index)].bins;
    haec::ComplexMatrix<double> e(ctx.error->bins.size(), 1);
    e.col(0) = ctx.error->bins;
    targets.push_back(haec::oracle_irm(s, e, proc.bark_map()).col(0));
  });
  const Eigen::Index n = sc.y.size(), hop = proc.hop();
  const Eigen::Index total = ((n + proc.latency() + hop - 1) / hop) * hop;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(total), y = Eigen::VectorXd::Zero(total);
  x.head(n) = sc.x;
  y.head(n) = sc.y;
  proc.process(x, y);

  haec::FlatArray arr;
  const auto frames = static_cast<Eigen::Index>(features.size());
  arr.header = {static_cast<double>(frames), static_cast<double>(3 * bands), static_cast<double>(bands)};
  arr.values.resize(frames * 4 * bands);
  for (Eigen::Index f = 0; f < frames; ++f) {
    arr.values.segment(f * 3 * bands, 3 * bands) = features[static_cast<size_t>(f)];
    arr.values.segment(frames * 3 * bands + f * bands, bands) = targets[static_cast<size_t>(f)];
  }
  haec::write_flat_array(out, arr);
  std::printf("frames=%lld feature_dim=%lld bands=%lld\n", static_cast<long long>(frames),
              static_cast<long long>(3 * bands), static_cast<long long>(bands));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid acoustic echo control and noise suppression engine"};
  app.require_subcommand(1);
  CommonOptions opt;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "Flat key=value configuration file");
    cmd->add_option("--report", opt.report, "Write a JSON report to this path");
    cmd->add_option("--seed", opt.seed, "Random seed");
  };

  std::string farend, mic, out;
  auto* process = app.add_subcommand("process", "Enhance a farend/mic WAV pair");
  add_common(process);
  process->add_option("--farend", farend, "Farend (loudspeaker) WAV")->required();
  process->add_option("--mic", mic, "Microphone WAV")->required();
  process->add_option("--out", out, "Enhanced output WAV")->required();
  process->add_option("--weights", opt.weights, "Postfilter weights file");
  process->add_flag("--oracle-mask", opt.oracle_mask, "Identity postfilter (output = LEC error)");

  int count = 1;
  std::string condition = "DT";
  double duration = 10.0;
  auto* simulate = app.add_subcommand("simulate", "Write seeded scenario bundles");
  add_common(simulate);
  simulate->add_option("--out", out, "Output directory")->required();
  simulate->add_option("--count", count, "Number of bundles")->check(CLI::PositiveNumber);
  simulate->add_option("--condition", condition, "DT, STFE or STNE");
  simulate->add_option("--duration", duration, "Clip length in seconds")->check(CLI::PositiveNumber);

  std::string scenario_root;
  bool irm = false;
  auto* evaluate = app.add_subcommand(
      "evaluate",
      "Process scenario bundles and report metrics.\n"
      "Text: one line per bundle. JSON fields: bundle, condition, erle_db, erle_lec_db,\n"
      "snr_in_db, snr_out_db, rtf, latency_samples (inf/-inf as strings, null if undefined).");
  add_common(evaluate);
  evaluate->add_option("--scenario", scenario_root, "Bundle directory or directory of bundles")->required();
  evaluate->add_option("--weights", opt.weights, "Postfilter weights file");
  evaluate->add_flag("--oracle-mask", opt.oracle_mask, "Identity postfilter");
  evaluate->add_flag("--irm", irm, "Ideal ratio mask from the bundle's clean speech");

  double frame_rate = 0.0;  // 0: sample_rate / hop from the configuration
  auto* audit = app.add_subcommand("audit", "Parameter and MAC count (JSON: params, macs_per_frame, macs_per_second)");
  add_common(audit);
  audit->add_option("--weights", opt.weights, "Audit the architecture stored in this weights file");
  audit->add_option("--frame-rate", frame_rate, "Frames per second (default: from the configuration)")
      ->check(CLI::PositiveNumber);

  long long fb_length = 1024, fb_subbands = 512, fb_decimation = 128;
  double beta = haec::kDefaultKaiserBeta;
  auto* design = app.add_subcommand("design-fb", "Design the subband prototype filter");
  add_common(design);
  design->add_option("--out", out, "Write the prototype as a flat array file");
  design->add_option("--length", fb_length, "Prototype length");
  design->add_option("--subbands", fb_subbands, "DFT size");
  design->add_option("--decimation", fb_decimation, "Decimation factor");
  design->add_option("--beta", beta, "Kaiser beta");

  std::string bundle;
  auto* features = app.add_subcommand(
      "export-features",
      "Per-frame log-Bark features [E;Y;X] and IRM targets as a flat array.\n"
      "Header (frames, 3B, B); values: frames x 3B features then frames x B targets, row-major.");
  add_common(features);
  features->add_option("--scenario", bundle, "Scenario bundle directory")->required();
  features->add_option("--out", out, "Output flat array file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (*process) return run_process(opt, farend, mic, out);
    if (*simulate) return run_simulate(opt, out, count, condition, duration);
    if (*evaluate) return run_evaluate(opt, scenario_root, irm);
    if (*audit) return run_audit(opt, frame_rate);
    if (*design) return run_design_fb(opt, out, fb_length, fb_subbands, fb_decimation, beta);
    if (*features) return run_export_features(opt, bundle, out);
  } catch (const haec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const haec::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
