#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lawkit/dsl/eval.hpp"
#include "lawkit/sim/particles.hpp"

namespace lawkit::sim {

enum class Boundary { StickyWalls, SlipWalls };

const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SimConfig {
  double dt = 2e-4;             // s per substep
  int substeps_per_frame = 20;
  int frames = 10;
  Vec3 gravity = Vec3(0.0, -9.8, 0.0);
  Boundary boundary = Boundary::StickyWalls;
  int margin = 3;               // boundary cells on every face
  int resolution = 32;          // grid cells per axis
  double v_max = 50.0;          // m/s; faster particles abort the run
  double min_det = 1e-6;        // det(F) at or below this aborts the run

  double dx() const { return 1.0 / resolution; }
  /// Throws ConfigError (including the CFL bound dt <= dx / v_max).
  void validate() const;
  std::string digest() const;
};

/// Background grid with (resolution+1)^3 nodes covering [0,1]^3.
struct GridField {
  explicit GridField(int resolution);

  int resolution;
  double dx;
  std::vector<double> mass;      // kg per node
  std::vector<Vec3> momentum;    // kg m/s after p2g, m/s after grid_step
  // Inclusive bounds of nodes touched since clear(); a fresh grid spans
  // every node, and grid_step only visits this box.
  Eigen::Vector3i lo, hi;

  int nodes_per_axis() const { return resolution + 1; }
  std::size_t index(int i, int j, int k) const {
    const std::size_t n = static_cast<std::size_t>(resolution + 1);
    return (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)) * n +
           static_cast<std::size_t>(k);
  }
  void clear();
  double total_mass() const;
  Vec3 total_momentum() const;
};

/// Abort diagnostics; `step` is the global substep index, -1 if unknown.
class SimulationFailure : public std::runtime_error {
 public:
  SimulationFailure(long step, long particle, std::string quantity, const std::string& detail);

  long step() const { return step_; }
  long particle() const { return particle_; }
  const std::string& quantity() const { return quantity_; }
  SimulationFailure at_step(long step) const;

 private:
  long step_;
  long particle_;
  std::string quantity_;
  std::string detail_;
};

/// Scatter mass, momentum and the MLS stress impulse with quadratic B-splines.
void p2g(std::span<const ParticleState> particles, GridField& grid, dsl::Evaluator& law,
         std::span<const double> theta, double dt);
void p2g(std::span<const ParticleState> particles, GridField& grid, const dsl::TypedLaw& law,
         const dsl::ParamVector& theta, double dt);

/// Momentum to velocity, gravity, then boundary conditions on margin nodes.
void grid_step(GridField& grid, double dt, const Vec3& gravity, Boundary boundary, int margin);

/// Gather v and C, advect, and apply the trial update F <- (I + dt C) F.
/// Positions are clamped to [dx, 1 - dx].
void g2p(const GridField& grid, std::span<ParticleState> particles, double dt);

void apply_plasticity(std::span<ParticleState> particles, dsl::Evaluator& law,
                      std::span<const double> theta);
void apply_plasticity(std::span<ParticleState> particles, const dsl::TypedLaw& law,
                      const dsl::ParamVector& theta);

/// Covariance push-forward F A F^T, symmetrised.
Mat3 update_covariance(const Mat3& A, const Mat3& F_step);

/// Owns the grid and evaluator for one run; single-threaded.
class Simulator {
 public:
  Simulator(const dsl::TypedLaw& law, dsl::ParamVector theta, SimConfig config);

  /// One substep. Throws SimulationFailure; particles are left mid-update
  /// on failure and must not be used.
  void step(std::vector<ParticleState>& particles);

  long steps_taken() const { return steps_; }
  const GridField& grid() const { return grid_; }

 private:
  const dsl::TypedLaw* law_;
  dsl::ParamVector theta_;
  SimConfig config_;
  dsl::Evaluator eval_;
  GridField grid_;
  long steps_ = 0;
};

struct Trajectory {
  std::vector<std::vector<Vec3>> frames;
  std::vector<std::vector<Mat3>> F;  // empty unless recorded
  std::string config_digest;
  std::string law_digest;
  std::string scene_digest;
  std::uint64_t seed = 0;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t particle_count() const { return frames.empty() ? 0 : frames.front().size(); }
  bool has_F() const { return !F.empty(); }
};

struct RunOptions {
  bool record_F = false;
  std::uint64_t seed = 0;
  std::string scene_digest;
};

/// Frame 0 is the initial state; one further frame per substeps_per_frame.
/// Throws SimulationFailure without returning a partial trajectory.
Trajectory run_sim(const std::vector<ParticleState>& initial, const dsl::TypedLaw& law,
                   const dsl::ParamVector& theta, const SimConfig& config,
                   const RunOptions& options = {});

/// Same as run_sim but also returns the particle states of every frame
/// (used for rendering).
std::vector<std::vector<ParticleState>> run_sim_states(const std::vector<ParticleState>& initial,
                                                       const dsl::TypedLaw& law,
                                                       const dsl::ParamVector& theta,
                                                       const SimConfig& config);

std::vector<Vec3> positions(const std::vector<ParticleState>& ps);

}  // namespace lawkit::sim
