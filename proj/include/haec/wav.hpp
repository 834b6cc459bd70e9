#pragma once

#include <filesystem>

#include "haec/common.hpp"

namespace haec {

struct WavData {
  Eigen::VectorXd samples;
  int sample_rate = 16000;
};

// Mono RIFF/WAVE, 32-bit IEEE float or 16-bit PCM (scaled to [-1, 1)).
WavData read_wav(const std::filesystem::path& path);

// Writes mono 32-bit IEEE float.
void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples, int sample_rate);

}  // namespace haec
