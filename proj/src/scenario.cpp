#include "haec/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/FFT>

#include "haec/wav.hpp"

namespace haec {
namespace {

constexpr double kPi = std::numbers::pi;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void insert_silence(Eigen::VectorXd& x, const SilenceSpec& silence, double fs) {
  const Index start = std::clamp<Index>(static_cast<Index>(silence.start_s * fs), 0, x.size());
  const Index len = std::clamp<Index>(static_cast<Index>(silence.length_s * fs), 0, x.size() - start);
  x.segment(start, len).setZero();
}

Eigen::VectorXd fit_length(const Eigen::VectorXd& x, Index n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  const Index m = std::min(n, x.size());
  out.head(m) = x.head(m);
  return out;
}

struct Biquad {
  double b0, b1, b2, a1, a2;

  void run(Eigen::VectorXd& x) const {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (Index i = 0; i < x.size(); ++i) {
      const double in = x(i);
      const double out = b0 * in + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = in;
      y2 = y1;
      y1 = out;
      x(i) = out;
    }
  }
};

Biquad butterworth(double cutoff_hz, double fs, bool highpass) {
  const double w0 = 2 * kPi * cutoff_hz / fs;
  const double alpha = std::sin(w0) / std::numbers::sqrt2;  // sin(w0) / (2Q), Q = 1/sqrt(2)
  const double c = std::cos(w0);
  const double a0 = 1 + alpha;
  if (highpass)
    return {(1 + c) / 2 / a0, -(1 + c) / a0, (1 + c) / 2 / a0, -2 * c / a0, (1 - alpha) / a0};
  return {(1 - c) / 2 / a0, (1 - c) / a0, (1 - c) / 2 / a0, -2 * c / a0, (1 - alpha) / a0};
}

double gain_for_ratio(double reference_energy, double energy, double ratio_db) {
  return std::sqrt(reference_energy / (energy * std::pow(10.0, ratio_db / 10.0)));
}

}  // namespace

std::string to_string(Nonlinearity kind) {
  switch (kind) {
    case Nonlinearity::None: return "none";
    case Nonlinearity::Erfc: return "erfc";
    case Nonlinearity::NegativeScaling: return "negative_scaling";
  }
  return "none";
}

std::string to_string(Condition condition) {
  switch (condition) {
    case Condition::DoubleTalk: return "DT";
    case Condition::FarendOnly: return "STFE";
    case Condition::NearendOnly: return "STNE";
  }
  return "DT";
}

Condition parse_condition(const std::string& name) {
  if (name == "DT" || name == "dt") return Condition::DoubleTalk;
  if (name == "STFE" || name == "stfe") return Condition::FarendOnly;
  if (name == "STNE" || name == "stne") return Condition::NearendOnly;
  throw ConfigError("unknown condition '" + name + "' (expected DT, STFE or STNE)");
}

void ScenarioSpec::validate() const {
  if (!(duration_s > 0)) throw ConfigError("scenario: duration must be > 0");
  if (!(sample_rate > 0)) throw ConfigError("scenario: sample rate must be > 0");
  if (std::abs(clock_drift) > 0.01 + 1e-12) throw ConfigError("scenario: |clock drift| must be <= 1%");
  if (nonlinearity == Nonlinearity::Erfc && !(eta > 0)) throw ConfigError("scenario: erfc eta must be > 0");
  if (nonlinearity == Nonlinearity::NegativeScaling && eta > 0)
    throw ConfigError("scenario: negative-half scaling expects eta <= 0 dB");
  if (bandpass.enabled && !(bandpass.low_hz > 0 && bandpass.high_hz > bandpass.low_hz &&
                            bandpass.high_hz < 0.5 * sample_rate))
    throw ConfigError("scenario: invalid bandpass edges");
  if (crossfade.enabled && !(crossfade.duration_s > 0)) throw ConfigError("scenario: crossfade duration must be > 0");
}

ScenarioSpec sample_scenario_spec(std::uint64_t seed, Condition condition, double duration_s) {
  std::mt19937_64 rng(seed);
  ScenarioSpec spec;
  spec.seed = seed;
  spec.duration_s = duration_s;
  spec.condition = condition;
  spec.snr_db = uniform(rng, 0.0, 30.0);
  spec.ser_db = uniform(rng, -30.0, 10.0);
  if (uniform(rng, 0.0, 1.0) < 0.8) {
    if (uniform(rng, 0.0, 1.0) < 0.5) {
      spec.nonlinearity = Nonlinearity::Erfc;
      spec.eta = 1.0;
    } else {
      spec.nonlinearity = Nonlinearity::NegativeScaling;
      spec.eta = uniform(rng, -12.0, 0.0);
    }
  }
  spec.clock_drift = uniform(rng, -0.01, 0.01);
  spec.crossfade.enabled = uniform(rng, 0.0, 1.0) < 0.5;
  spec.crossfade.start_s = uniform(rng, 0.2, 0.7) * duration_s;
  spec.crossfade.duration_s = std::min(1.0, 0.2 * duration_s);
  spec.crossfade.direct_path_gain = std::abs(1.0 + std::normal_distribution<double>(0.0, 1.0)(rng));
  spec.bandpass.enabled = true;
  spec.bandpass.low_hz = uniform(rng, 50.0, 200.0);
  spec.bandpass.high_hz = uniform(rng, 5000.0, 7600.0);
  for (SilenceSpec* s : {&spec.silence_nearend, &spec.silence_farend, &spec.silence_noise}) {
    if (uniform(rng, 0.0, 1.0) < 0.5) {
      s->length_s = uniform(rng, 0.0, 0.5 * duration_s);
      s->start_s = uniform(rng, 0.0, duration_s - s->length_s);
    }
  }
  return spec;
}

std::string Scenario::metadata() const {
  std::ostringstream os;
  os.precision(17);
  os << "seed=" << spec.seed << '\n'
     << "condition=" << to_string(spec.condition) << '\n'
     << "duration_s=" << spec.duration_s << '\n'
     << "sample_rate=" << spec.sample_rate << '\n'
     << "snr_db=" << spec.snr_db << '\n'
     << "ser_db=" << spec.ser_db << '\n'
     << "nonlinearity=" << to_string(spec.nonlinearity) << '\n'
     << "eta=" << spec.eta << '\n'
     << "remove_dc=" << spec.remove_dc << '\n'
     << "clock_drift=" << spec.clock_drift << '\n'
     << "crossfade=" << spec.crossfade.enabled << '\n'
     << "crossfade_start_s=" << spec.crossfade.start_s << '\n'
     << "crossfade_duration_s=" << spec.crossfade.duration_s << '\n'
     << "direct_path_gain=" << spec.crossfade.direct_path_gain << '\n'
     << "bandpass=" << spec.bandpass.enabled << '\n'
     << "bandpass_low_hz=" << spec.bandpass.low_hz << '\n'
     << "bandpass_high_hz=" << spec.bandpass.high_hz << '\n'
     << "silence_nearend=" << spec.silence_nearend.start_s << ',' << spec.silence_nearend.length_s << '\n'
     << "silence_farend=" << spec.silence_farend.start_s << ',' << spec.silence_farend.length_s << '\n'
     << "silence_noise=" << spec.silence_noise.start_s << ',' << spec.silence_noise.length_s << '\n'
     << "noise_gain=" << noise_gain << '\n'
     << "echo_gain=" << echo_gain << '\n';
  return os.str();
}

Eigen::VectorXd apply_nonlinearity(const Eigen::VectorXd& x, Nonlinearity kind, double eta) {
  switch (kind) {
    case Nonlinearity::None: return x;
    case Nonlinearity::Erfc: {
      if (!(eta > 0)) throw ConfigError("erfc nonlinearity: eta must be > 0");
      return x.unaryExpr([eta](double v) { return std::erfc(eta * v) / eta; });
    }
    case Nonlinearity::NegativeScaling: {
      const double g = std::pow(10.0, eta / 20.0);
      return x.unaryExpr([g](double v) { return v < 0 ? g * v : v; });
    }
  }
  throw ConfigError("unknown nonlinearity");
}

Eigen::VectorXd convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  if (h.size() == 0) throw InputError("convolve: empty impulse response");
  const Index n = x.size(), m = h.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (n == 0) return out;
  if (static_cast<double>(n) * static_cast<double>(m) < 4e6) {
    for (Index j = 0; j < m; ++j) {
      if (h(j) == 0.0) continue;
      out.tail(n - std::min(j, n)) += h(j) * x.head(n - std::min(j, n));
    }
    return out;
  }
  Index size = 1;
  while (size < n + m - 1) size <<= 1;
  Eigen::FFT<double> fft;
  Eigen::VectorXd xp = Eigen::VectorXd::Zero(size), hp = Eigen::VectorXd::Zero(size);
  xp.head(n) = x;
  hp.head(m) = h;
  Eigen::VectorXcd xf, hf;
  fft.fwd(xf, xp);
  fft.fwd(hf, hp);
  const Eigen::VectorXcd prod = xf.cwiseProduct(hf);
  Eigen::VectorXd full;
  fft.inv(full, prod);
  return full.head(n);
}

Eigen::VectorXd scale_direct_path(const Eigen::VectorXd& rir, double gain) {
  Eigen::VectorXd out = rir;
  Index peak = 0;
  rir.cwiseAbs().maxCoeff(&peak);
  const Index start = std::max<Index>(0, peak - 32), stop = std::min<Index>(rir.size(), peak + 33);
  out.segment(start, stop - start) *= gain;
  return out;
}

Eigen::VectorXd make_echo(const Eigen::VectorXd& x_prime, const Eigen::VectorXd& rir_a, const Eigen::VectorXd& rir_b,
                          const CrossfadeSpec& crossfade, double sample_rate) {
  if (rir_a.size() == 0) throw InputError("make_echo: empty RIR");
  require_finite(rir_a, "make_echo rir_a");
  const Eigen::VectorXd da = convolve(x_prime, rir_a);
  if (!crossfade.enabled) return da;
  if (rir_b.size() == 0) throw InputError("make_echo: cross-fade needs a second RIR");
  require_finite(rir_b, "make_echo rir_b");
  const Eigen::VectorXd db = convolve(x_prime, scale_direct_path(rir_b, crossfade.direct_path_gain));
  const double start = crossfade.start_s * sample_rate, len = crossfade.duration_s * sample_rate;
  Eigen::VectorXd d(x_prime.size());
  for (Index i = 0; i < d.size(); ++i) {
    const double a = std::clamp((static_cast<double>(i) - start) / len, 0.0, 1.0);
    d(i) = (1.0 - a) * da(i) + a * db(i);
  }
  return d;
}

double active_energy(const Eigen::VectorXd& x, Index frame) {
  if (frame <= 0) throw ConfigError("active_energy: frame must be positive");
  const Index frames = (x.size() + frame - 1) / frame;
  Eigen::VectorXd energy(frames);
  for (Index f = 0; f < frames; ++f) {
    const Index start = f * frame, len = std::min(frame, x.size() - start);
    energy(f) = x.segment(start, len).squaredNorm();
  }
  if (frames == 0) return 0.0;
  const double threshold = energy.maxCoeff() * 1e-4;
  double total = 0.0;
  for (Index f = 0; f < frames; ++f)
    if (energy(f) > 0 && energy(f) >= threshold) total += energy(f);
  return total;
}

MixResult mix(const Eigen::VectorXd& s, const Eigen::VectorXd& n, const Eigen::VectorXd& d, double snr_db,
              double ser_db) {
  if (s.size() != n.size() || s.size() != d.size()) throw InputError("mix: component lengths differ");
  const double es = active_energy(s), en = active_energy(n), ed = active_energy(d);
  if (!(es > 0)) throw InputError("mix: nearend speech is silent, ratios cannot be met");
  if (!(en > 0)) throw InputError("mix: noise is silent, SNR cannot be met");
  if (!(ed > 0)) throw InputError("mix: echo is silent, SER cannot be met");
  MixResult out;
  out.noise_gain = gain_for_ratio(es, en, snr_db);
  out.echo_gain = gain_for_ratio(es, ed, ser_db);
  out.y = s + out.noise_gain * n + out.echo_gain * d;
  return out;
}

Eigen::VectorXd apply_clock_drift(const Eigen::VectorXd& x, double drift) {
  if (std::abs(drift) > 0.01 + 1e-12) throw ConfigError("clock drift must satisfy |drift| <= 0.01");
  if (drift == 0.0) return x;
  const double ratio = 1.0 + drift;
  const Index out_len = static_cast<Index>(std::llround(static_cast<double>(x.size()) / ratio));
  const double cutoff = std::min(1.0, 1.0 / ratio);
  constexpr Index kHalfWidth = 32;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(out_len);
  for (Index i = 0; i < out_len; ++i) {
    const double t = static_cast<double>(i) * ratio;
    const Index center = static_cast<Index>(std::floor(t));
    double acc = 0.0;
    for (Index j = center - kHalfWidth + 1; j <= center + kHalfWidth; ++j) {
      if (j < 0 || j >= x.size()) continue;
      const double u = t - static_cast<double>(j);
      const double arg = kPi * cutoff * u;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double w = 0.5 + 0.5 * std::cos(kPi * u / static_cast<double>(kHalfWidth));
      acc += x(j) * cutoff * sinc * w;
    }
    y(i) = acc;
  }
  return y;
}

Eigen::VectorXd bandpass_filter(const Eigen::VectorXd& x, double low_hz, double high_hz, double sample_rate) {
  if (!(low_hz > 0 && high_hz > low_hz && high_hz < 0.5 * sample_rate))
    throw ConfigError("bandpass: need 0 < low < high < fs/2");
  Eigen::VectorXd y = x;
  butterworth(low_hz, sample_rate, true).run(y);
  butterworth(high_hz, sample_rate, false).run(y);
  return y;
}

Eigen::VectorXd synthetic_speech(Index samples, double fs, std::mt19937_64& rng) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(samples);
  std::normal_distribution<double> normal(0.0, 1.0);
  Index t = 0;
  while (t < samples) {
    const Index len = static_cast<Index>(uniform(rng, 0.08, 0.3) * fs);
    const Index n = std::min(len, samples - t);
    if (uniform(rng, 0.0, 1.0) < 0.8) {
      const double f0_start = uniform(rng, 90.0, 250.0);
      const double f0_end = f0_start * uniform(rng, 0.8, 1.2);
      const double formants[3] = {uniform(rng, 300, 900), uniform(rng, 900, 2500), uniform(rng, 2500, 3500)};
      const int harmonics = static_cast<int>(4000.0 / std::max(f0_start, f0_end));
      for (int h = 1; h <= harmonics; ++h) {
        double phase = uniform(rng, 0.0, 2 * kPi);
        for (Index i = 0; i < n; ++i) {
          const double f0 = f0_start + (f0_end - f0_start) * static_cast<double>(i) / static_cast<double>(len);
          const double f = h * f0;
          double env = 0.0;
          for (double fm : formants) env += std::exp(-0.5 * std::pow((f - fm) / 200.0, 2));
          const double win = 0.5 - 0.5 * std::cos(2 * kPi * static_cast<double>(i) / static_cast<double>(len));
          out(t + i) += win * (0.2 + env) / h * std::sin(phase);
          phase += 2 * kPi * f / fs;
        }
      }
    } else {
      double prev = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double w = normal(rng);
        const double win = 0.5 - 0.5 * std::cos(2 * kPi * static_cast<double>(i) / static_cast<double>(len));
        out(t + i) += 0.15 * win * (w - prev);
        prev = w;
      }
    }
    t += n;
    const double pause = uniform(rng, 0.0, 1.0) < 0.15 ? uniform(rng, 0.3, 0.8) : uniform(rng, 0.03, 0.25);
    t += static_cast<Index>(pause * fs);
  }
  const double peak = out.cwiseAbs().maxCoeff();
  if (peak > 0) out *= 0.5 / peak;
  return out;
}

Eigen::VectorXd synthetic_noise(Index samples, double fs, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double pole = uniform(rng, 0.5, 0.98);
  const double white_mix = uniform(rng, 0.05, 0.5);
  Eigen::VectorXd out(samples);
  double state = 0.0;
  for (Index i = 0; i < samples; ++i) {
    const double w = normal(rng);
    state = pole * state + (1.0 - pole) * w;
    out(i) = state + white_mix * w;
  }
  // A few louder bursts.
  const int bursts = std::uniform_int_distribution<int>(0, 4)(rng);
  for (int b = 0; b < bursts && samples > 0; ++b) {
    const Index len = std::min<Index>(samples, static_cast<Index>(uniform(rng, 0.05, 0.4) * fs));
    const Index start = std::uniform_int_distribution<Index>(0, samples - len)(rng);
    out.segment(start, len) *= uniform(rng, 1.5, 4.0);
  }
  const double rms = std::sqrt(out.squaredNorm() / std::max<Index>(1, samples));
  if (rms > 0) out *= 0.05 / rms;
  return out;
}

Eigen::VectorXd synthetic_rir(Index length, Index delay, double rt60_s, double fs, std::mt19937_64& rng) {
  if (length <= delay) throw ConfigError("synthetic_rir: delay must be shorter than the RIR");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(length);
  h(delay) = 1.0;
  const double decay = 3.0 * std::log(10.0) / (rt60_s * fs);  // 60 dB amplitude decay over rt60
  for (Index i = delay + 1; i < length; ++i) h(i) += 0.3 * normal(rng) * std::exp(-decay * static_cast<double>(i - delay));
  return h;
}

Scenario generate(const ScenarioSpec& spec) {
  spec.validate();
  const Index n = spec.num_samples();
  const double fs = spec.sample_rate;
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);

  Scenario sc;
  sc.spec = spec;
  sc.s = spec.nearend_source.size() ? fit_length(spec.nearend_source, n) : synthetic_speech(n, fs, rng);
  sc.x = spec.farend_source.size() ? fit_length(spec.farend_source, n) : synthetic_speech(n, fs, rng);
  Eigen::VectorXd noise = spec.noise_source.size() ? fit_length(spec.noise_source, n) : synthetic_noise(n, fs, rng);
  Eigen::VectorXd rir_a = spec.rir_a, rir_b = spec.rir_b;
  if (rir_a.size() == 0) {
    const Index delay = std::uniform_int_distribution<Index>(16, 160)(rng);
    rir_a = synthetic_rir(2048, delay, uniform(rng, 0.1, 0.3), fs, rng);
  }
  if (rir_b.size() == 0) {
    const Index delay = std::uniform_int_distribution<Index>(16, 160)(rng);
    rir_b = synthetic_rir(2048, delay, uniform(rng, 0.1, 0.3), fs, rng);
  }

  if (spec.condition == Condition::FarendOnly) sc.s.setZero();
  if (spec.condition == Condition::NearendOnly) sc.x.setZero();
  insert_silence(sc.s, spec.silence_nearend, fs);
  insert_silence(sc.x, spec.silence_farend, fs);
  insert_silence(noise, spec.silence_noise, fs);

  sc.x_prime = apply_nonlinearity(sc.x, spec.nonlinearity, spec.eta);
  if (spec.remove_dc && sc.x_prime.size()) sc.x_prime.array() -= sc.x_prime.mean();
  const Eigen::VectorXd played = fit_length(apply_clock_drift(sc.x_prime, spec.clock_drift), n);
  Eigen::VectorXd echo = spec.condition == Condition::NearendOnly
                             ? Eigen::VectorXd::Zero(n)
                             : make_echo(played, rir_a, rir_b, spec.crossfade, fs);
  if (spec.bandpass.enabled) {
    sc.s = bandpass_filter(sc.s, spec.bandpass.low_hz, spec.bandpass.high_hz, fs);
    noise = bandpass_filter(noise, spec.bandpass.low_hz, spec.bandpass.high_hz, fs);
    echo = bandpass_filter(echo, spec.bandpass.low_hz, spec.bandpass.high_hz, fs);
  }

  switch (spec.condition) {
    case Condition::DoubleTalk: {
      const MixResult m = mix(sc.s, noise, echo, spec.snr_db, spec.ser_db);
      sc.noise_gain = m.noise_gain;
      sc.echo_gain = m.echo_gain;
      break;
    }
    case Condition::FarendOnly: {
      // No nearend speech: the echo is normalized to unit active power per
      // sample (times 0.01) and snr_db sets the echo-to-noise ratio.
      const double ed = active_energy(echo), en = active_energy(noise);
      if (!(ed > 0)) throw InputError("scenario: farend-only clip has no echo");
      sc.echo_gain = std::sqrt(0.01 * static_cast<double>(n) / ed);
      sc.noise_gain = en > 0 ? gain_for_ratio(sc.echo_gain * sc.echo_gain * ed, en, spec.snr_db) : 0.0;
      break;
    }
    case Condition::NearendOnly: {
      const double es = active_energy(sc.s), en = active_energy(noise);
      if (!(es > 0)) throw InputError("scenario: nearend-only clip has no speech");
      sc.noise_gain = en > 0 ? gain_for_ratio(es, en, spec.snr_db) : 0.0;
      sc.echo_gain = 0.0;
      break;
    }
  }
  sc.n = sc.noise_gain * noise;
  sc.d = sc.echo_gain * echo;
  sc.y = sc.s + sc.n + sc.d;
  return sc;
}

void write_scenario(const Scenario& sc, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int fs = static_cast<int>(sc.spec.sample_rate);
  write_wav(dir / "s.wav", sc.s, fs);
  write_wav(dir / "n.wav", sc.n, fs);
  write_wav(dir / "x.wav", sc.x, fs);
  write_wav(dir / "x_prime.wav", sc.x_prime, fs);
  write_wav(dir / "d.wav", sc.d, fs);
  write_wav(dir / "y.wav", sc.y, fs);
  std::ofstream meta(dir / "metadata.txt");
  if (!meta) throw InputError("cannot write metadata in " + dir.string());
  meta << sc.metadata();
}

Scenario read_scenario(const std::filesystem::path& dir) {
  Scenario sc;
  auto load = [&](const char* name) {
    WavData w = read_wav(dir / name);
    sc.spec.sample_rate = w.sample_rate;
    return w.samples;
  };
  sc.s = load("s.wav");
  sc.n = load("n.wav");
  sc.x = load("x.wav");
  sc.x_prime = load("x_prime.wav");
  sc.d = load("d.wav");
  sc.y = load("y.wav");
  const Index n = sc.y.size();
  for (const Eigen::VectorXd* v : {&sc.s, &sc.n, &sc.x, &sc.x_prime, &sc.d})
    if (v->size() != n) throw InputError("scenario bundle: component lengths differ in " + dir.string());
  std::ifstream meta(dir / "metadata.txt");
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "condition") sc.spec.condition = parse_condition(value);
    if (key == "seed") sc.spec.seed = std::stoull(value);
    if (key == "noise_gain") sc.noise_gain = std::stod(value);
    if (key == "echo_gain") sc.echo_gain = std::stod(value);
  }
  sc.spec.duration_s = static_cast<double>(n) / sc.spec.sample_rate;
  return sc;
}

}  // namespace haec
