// Versioned binary model checkpoints with bit-exact round-tripping.
//
// Little-endian layout:
//   byte 0..7    magic "SDDCKPT1"
//   u32          format version (1)
//   u64          config hash of the producing run
//   u32          layer count
//   u32          input dim
//   u32          class count
//   per layer:   u32 out_dim, u32 in_dim, u8 activation (0 relu, 1 none)
//   per layer:   f64[out*in] weights, f64[out] biases,
//                mask bits packed LSB-first, ceil(out*in / 8) bytes
//   u64          FNV-1a checksum of all preceding bytes
#pragma once

#include <cstdint>
#include <string>

#include "sdd/mlp.hpp"

namespace sdd {

void save_checkpoint(const MlpModel& model, uint64_t config_hash,
                     const std::string& path);

struct LoadedCheckpoint {
  MlpModel model;
  uint64_t config_hash = 0;
};

// Errors: IoError (unreadable), MagicError (wrong magic/version),
// TruncatedError (short file), NumericError (checksum mismatch).
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sdd
