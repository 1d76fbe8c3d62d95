#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lawkit/fit/loss.hpp"
#include "lawkit/render/splat.hpp"
#include "lawkit/sim/mpm.hpp"

namespace lawkit::fit {

enum class LossMode { Chamfer, Visual, Mixed };

const char* to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& s);

struct SceneObservation {
  sim::Trajectory gt_trajectory;
  FrameSet gt_frames;  // [view][time]; empty unless rendered
  std::vector<render::Camera> cameras;
  LossMode loss_mode = LossMode::Chamfer;
  double lambda = 0.8;

  /// Throws StructureMismatch / std::invalid_argument.
  void validate() const;
};

/// Everything the lower level needs to score a candidate.
struct Scene {
  std::string name;
  std::vector<sim::ParticleState> initial;
  sim::SimConfig config;
  SceneObservation obs;
  std::uint64_t seed = 0;

  /// Keeps frames [0, frames] of the observation and sets config.frames.
  Scene truncated(int frames) const;
};

/// Renders every camera at every state.
FrameSet render_views(const std::vector<std::vector<sim::ParticleState>>& states,
                      const std::vector<render::Camera>& cams);

}  // namespace lawkit::fit
