#include "lawkit/fit/scene.hpp"

#include <stdexcept>

namespace lawkit::fit {

const char* to_string(LossMode m) {
  switch (m) {
    case LossMode::Chamfer: return "chamfer";
    case LossMode::Visual: return "visual";
    case LossMode::Mixed: return "mixed";
  }
  return "?";
}

LossMode loss_mode_from_string(const std::string& s) {
  if (s == "chamfer") return LossMode::Chamfer;
  if (s == "visual") return LossMode::Visual;
  if (s == "mixed") return LossMode::Mixed;
  throw std::invalid_argument("unknown loss mode '" + s + "'");
}

void SceneObservation::validate() const {
  if (gt_trajectory.frame_count() == 0) throw StructureMismatch("observation has no frames");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  if (loss_mode != LossMode::Chamfer) {
    if (cameras.empty() || gt_frames.size() != cameras.size()) {
      throw StructureMismatch("visual loss needs one frame sequence per camera");
    }
    for (const auto& v : gt_frames)
      if (v.size() != gt_trajectory.frame_count())
        throw StructureMismatch("view frame count differs from trajectory frame count");
  }
}

Scene Scene::truncated(int frames) const {
  if (frames < 0 || static_cast<std::size_t>(frames) + 1 > obs.gt_trajectory.frame_count()) {
    throw std::invalid_argument("cannot truncate to " + std::to_string(frames) + " frames");
  }
  Scene s = *this;
  const std::size_t keep = static_cast<std::size_t>(frames) + 1;
  s.config.frames = frames;
  s.obs.gt_trajectory.frames.resize(keep);
  if (s.obs.gt_trajectory.has_F()) s.obs.gt_trajectory.F.resize(keep);
  for (auto& v : s.obs.gt_frames) v.resize(keep);
  return s;
}

FrameSet render_views(const std::vector<std::vector<sim::ParticleState>>& states,
                      const std::vector<render::Camera>& cams) {
  FrameSet out(cams.size());
  for (std::size_t v = 0; v < cams.size(); ++v) {
    out[v].reserve(states.size());
    for (const auto& s : states) out[v].push_back(render::render_frame(s, cams[v]));
  }
  return out;
}

}  // namespace lawkit::fit
