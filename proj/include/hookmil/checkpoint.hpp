#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hookmil/model.hpp"

namespace hookmil {

// On-disk model snapshot, binary little-endian:
//   "HKCK" | version u16 = 1 | config text length u32 + UTF-8 bytes
//   | tensor count u32 | per tensor: name length u16, name bytes,
//     rows u64, cols u64, rows*cols float64 values row-major.
//
// The config text is the flat key=value rendering of the training config;
// it makes the file self-describing (model kind, K, heads, rounds, ...).

struct CheckpointPayload {
    std::string config_text;
    std::vector<std::pair<std::string, Matrix>> tensors;  // insertion order
};

void write_checkpoint(const std::string& path,
                      const CheckpointPayload& payload);

// Distinct errors for bad magic, unsupported version, and truncation.
CheckpointPayload read_checkpoint(const std::string& path);

// Parameter matrices as named tensors in for_each_param order.
std::vector<std::pair<std::string, Matrix>> snapshot_tensors(
    const ModelParams& params);

// Writes tensors back into an initialized parameter structure. Every
// parameter must be present exactly once with a matching shape, and no
// unknown tensor may remain; violations name the tensor.
void fill_params(ModelParams& params,
                 const std::vector<std::pair<std::string, Matrix>>& tensors);

}  // namespace hookmil
