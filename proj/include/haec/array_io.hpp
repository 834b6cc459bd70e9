#pragma once

// Flat little-endian float64 array files:
//   8-byte magic "HAECF64\n"
//   uint64 header count, header values (float64)
//   uint64 value count, values (float64)

#include <filesystem>
#include <vector>

#include "haec/bark.hpp"
#include "haec/common.hpp"
#include "haec/lec.hpp"
#include "haec/subband_fb.hpp"

namespace haec {

struct FlatArray {
  std::vector<double> header;
  Eigen::VectorXd values;
};

void write_flat_array(const std::filesystem::path& path, const FlatArray& array);
FlatArray read_flat_array(const std::filesystem::path& path);

// Header (L_p, K, D); values are the analysis taps. The synthesis window is
// re-derived on load.
void save_prototype(const std::filesystem::path& path, const PrototypeFilter<double>& proto);
PrototypeFilter<double> load_prototype(const std::filesystem::path& path);

// Header (K, B, fs); values are the (K/2+1) x B weights in row-major order
// followed by the B+1 band edges.
void save_bark_map(const std::filesystem::path& path, const BarkMap<double>& map);
BarkMap<double> load_bark_map(const std::filesystem::path& path);

// Diagnostic text dump of the canceller coefficients; not a stable format.
void write_lec_snapshot(const std::filesystem::path& path, const LecState<double>& state);

}  // namespace haec
