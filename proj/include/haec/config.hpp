#pragma once

// Flat key=value configuration files. Blank lines and lines starting with
// '#' are ignored. Recognized keys:
//
//   sample_rate frame_len hop
//   fb_length fb_subbands fb_decimation fb_kaiser_beta
//   lec_filter_lengths (comma separated) lec_mu0 lec_delta0 lec_beta
//   lec_time_constant lec_mu_min
//   bark_bands log_floor
//   mask_mode (network | oracle | ones | zeros) weights
//
// The LEC frame rate always follows sample_rate / hop.

#include <filesystem>
#include <string>

#include "haec/pipeline.hpp"

namespace haec {

MaskMode parse_mask_mode(const std::string& name);
std::string to_string(MaskMode mode);

// Applies one entry; unknown keys or malformed values throw ConfigError.
void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value);

PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

std::string format_config(const PipelineConfig& cfg);

}  // namespace haec
