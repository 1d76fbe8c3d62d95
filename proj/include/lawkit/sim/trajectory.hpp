#pragma once

#include <stdexcept>
#include <string>

#include "lawkit/sim/mpm.hpp"

namespace lawkit::sim {

class TrajectoryFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// VLTJ v1: "VLTJ", u32 version, u32 frames, u32 particles, u8 has_F, then per
/// frame 3N f32 positions followed by 9N f32 row-major F when has_F.
/// All little-endian. Values are narrowed to f32.
void write_trajectory(const std::string& path, const Trajectory& t);
Trajectory read_trajectory(const std::string& path);

std::string encode_trajectory(const Trajectory& t);
Trajectory decode_trajectory(const std::string& bytes);

/// JSON sidecar with digests, seed and an optional config dump.
void write_sidecar(const std::string& path, const Trajectory& t, const SimConfig& config);
/// Fills the metadata fields of `t` from a sidecar written by write_sidecar.
void read_sidecar(const std::string& path, Trajectory& t);

}  // namespace lawkit::sim
