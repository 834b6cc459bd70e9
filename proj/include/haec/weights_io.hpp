#pragma once

// Postfilter weights file:
//
//   HAEC-POSTFILTER\n
//   version 1\n
//   num_bands <B>\n
//   num_bins <bins>\n
//   gru_convention pytorch-rzn-dual-bias\n
//   layers <n>\n
//   layer <dense|gru> <in> <out> <linear|relu|sigmoid|tanh>\n   (n lines)
//   tensor <name> <rows> <cols>\n                                (one per tensor)
//   end\n
//   <raw little-endian float32 tensors, row-major, in the listed order>
//
// Per dense layer i: layer<i>.kernel (out x in), layer<i>.bias (out x 1).
// Per GRU layer i: layer<i>.kernel (3h x in), layer<i>.recurrent (3h x h),
// layer<i>.bias (3h x 1), layer<i>.recurrent_bias (3h x 1).

#include <filesystem>
#include <string>

#include "haec/postfilter.hpp"

namespace haec {

inline constexpr const char* kWeightsMagic = "HAEC-POSTFILTER";
inline constexpr int kWeightsVersion = 1;

void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

std::string to_string(LayerKind kind);
std::string to_string(Activation act);

}  // namespace haec
