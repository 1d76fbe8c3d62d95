#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lawkit/dsl/typecheck.hpp"
#include "lawkit/dsl/eval.hpp"
#include "lawkit/fit/scene.hpp"
#include "lawkit/render/splat.hpp"
#include "lawkit/sim/mpm.hpp"
#include "lawkit/sim/particles.hpp"

namespace lawkit::scene {

/// Synthetic scene recipe: geometry, hidden reference law and cameras.
struct SceneSpec {
  std::string name;
  sim::SeedSpec geometry;
  std::string elastic = "fixed_corotated";  // catalog entry names
  std::string plastic = "identity_plastic";
  std::vector<std::pair<std::string, double>> theta;  // hidden reference values
  sim::SimConfig config;
  std::vector<render::Camera> cameras;
  fit::LossMode loss_mode = fit::LossMode::Chamfer;
  double lambda = 0.8;

  std::uint64_t seed() const { return geometry.seed; }
  /// Throws std::invalid_argument / sim::ConfigError.
  void validate() const;
  std::string digest() const;
};

std::vector<std::string> bundled_scene_names();
/// Throws std::out_of_range for unknown names.
SceneSpec bundled_scene(const std::string& name);

nlohmann::json to_json(const SceneSpec& s);
SceneSpec spec_from_json(const nlohmann::json& j);
SceneSpec load_spec(const std::string& path);
void save_spec(const std::string& path, const SceneSpec& s);

/// The composed reference law with the hidden values as inits.
dsl::TypedLaw reference_law(const SceneSpec& s);

/// Seed particles and simulate the reference law. Frames are rendered for
/// every camera when `render` is set or the loss mode needs them.
fit::Scene generate_scene(const SceneSpec& s, bool render = false);

/// Rebuild a Scene from a spec and a stored ground-truth trajectory.
fit::Scene scene_from_trajectory(const SceneSpec& s, sim::Trajectory gt);

}  // namespace lawkit::scene
