#pragma once

// Synthetic echo/noise scenarios with ground truth:
//   y = s + n + d,   d = h(t) * f_NL(x)   (h(t) optionally cross-faded)
// plus clock drift on the loudspeaker path, device bandpass, silent
// segments and SNR/SER mixing over active regions.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "haec/common.hpp"

namespace haec {

enum class Nonlinearity { None, Erfc, NegativeScaling };
enum class Condition { DoubleTalk, FarendOnly, NearendOnly };

std::string to_string(Nonlinearity kind);
std::string to_string(Condition condition);
Condition parse_condition(const std::string& name);

struct CrossfadeSpec {
  bool enabled = false;
  double start_s = 4.0;
  double duration_s = 1.0;
  // Gain applied to the direct-path segment of the second RIR.
  double direct_path_gain = 1.0;
};

struct BandpassSpec {
  bool enabled = false;
  double low_hz = 100.0;
  double high_hz = 7000.0;
};

struct SilenceSpec {
  double start_s = 0.0;
  double length_s = 0.0;
};

struct ScenarioSpec {
  double duration_s = 10.0;
  double sample_rate = 16000.0;
  Condition condition = Condition::DoubleTalk;
  double snr_db = 20.0;
  double ser_db = 0.0;
  Nonlinearity nonlinearity = Nonlinearity::None;
  // erfc: the eta factor (1); negative scaling: gain in dB applied to x < 0.
  double eta = 1.0;
  bool remove_dc = false;
  Eigen::VectorXd rir_a, rir_b;  // empty: synthetic RIRs drawn from the seed
  CrossfadeSpec crossfade;
  double clock_drift = 0.0;
  BandpassSpec bandpass;
  SilenceSpec silence_nearend, silence_farend, silence_noise;
  // Optional source material (resampled/trimmed by the caller); empty means
  // built-in synthetic sources.
  Eigen::VectorXd nearend_source, farend_source, noise_source;
  std::uint64_t seed = 0;

  Index num_samples() const { return static_cast<Index>(std::llround(duration_s * sample_rate)); }
  void validate() const;
};

// Draws every random parameter from the documented ranges:
// SNR ~ U[0,30] dB, SER ~ U[-30,10] dB, 80% nonlinear (half erfc with eta=1,
// half negative-half scaling with eta ~ U[-12,0] dB), drift ~ U[-1%,1%],
// cross-fade in half of the clips (direct-path gain |1 + N(0,1)|), bandpass
// edges U[50,200] Hz / U[5,7.6] kHz, silent segments up to half the clip.
ScenarioSpec sample_scenario_spec(std::uint64_t seed, Condition condition, double duration_s = 10.0);

struct Scenario {
  Eigen::VectorXd s, n, x, x_prime, d, y;
  double noise_gain = 0.0;
  double echo_gain = 0.0;
  ScenarioSpec spec;

  // key=value lines describing all sampled parameters.
  std::string metadata() const;
};

Eigen::VectorXd apply_nonlinearity(const Eigen::VectorXd& x, Nonlinearity kind, double eta);

// Linear convolution truncated to the input length.
Eigen::VectorXd convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h);

// Direct-path segment: +-32 samples around the RIR's largest-magnitude tap.
Eigen::VectorXd scale_direct_path(const Eigen::VectorXd& rir, double gain);

// Echo through rir_a, cross-faded linearly to the direct-path-scaled rir_b
// when enabled: d = (1 - a(n)) (rir_a * x') + a(n) (rir_b' * x').
Eigen::VectorXd make_echo(const Eigen::VectorXd& x_prime, const Eigen::VectorXd& rir_a, const Eigen::VectorXd& rir_b,
                          const CrossfadeSpec& crossfade, double sample_rate);

// Energy over frames (20 ms at 16 kHz) whose energy is within 40 dB of the
// loudest frame.
double active_energy(const Eigen::VectorXd& x, Index frame = 320);

struct MixResult {
  Eigen::VectorXd y;
  double noise_gain = 0.0;
  double echo_gain = 0.0;
};

// Scales n and d so that active-region SNR and SER relative to s hit the
// targets, and returns y = s + g_n n + g_d d.
MixResult mix(const Eigen::VectorXd& s, const Eigen::VectorXd& n, const Eigen::VectorXd& d, double snr_db,
              double ser_db);

// Resamples by (1 + drift) with windowed-sinc interpolation; output length
// round(len / (1 + drift)).
Eigen::VectorXd apply_clock_drift(const Eigen::VectorXd& x, double drift);

// Second-order Butterworth high-pass at low_hz cascaded with a second-order
// Butterworth low-pass at high_hz.
Eigen::VectorXd bandpass_filter(const Eigen::VectorXd& x, double low_hz, double high_hz, double sample_rate);

Scenario generate(const ScenarioSpec& spec);

// Built-in source material.
Eigen::VectorXd synthetic_speech(Index samples, double sample_rate, std::mt19937_64& rng);
Eigen::VectorXd synthetic_noise(Index samples, double sample_rate, std::mt19937_64& rng);
Eigen::VectorXd synthetic_rir(Index length, Index delay, double rt60_s, double sample_rate, std::mt19937_64& rng);

// Bundle directory: s.wav n.wav x.wav x_prime.wav d.wav y.wav (32-bit float)
// and metadata.txt.
void write_scenario(const Scenario& scenario, const std::filesystem::path& dir);
Scenario read_scenario(const std::filesystem::path& dir);

}  // namespace haec
