#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lawkit/math.hpp"

namespace lawkit::sim {

/// One material point; doubles as a Gaussian splat for rendering.
struct ParticleState {
  Vec3 x = Vec3::Zero();            // m
  Vec3 v = Vec3::Zero();            // m/s
  Mat3 F = Mat3::Identity();        // deformation gradient
  Mat3 C = Mat3::Zero();            // affine velocity, 1/s
  double mass = 0.0;                // kg
  double volume0 = 0.0;             // m^3
  Vec3 color = Vec3::Constant(0.8); // RGB in [0,1]
  double opacity = 1.0;
  Mat3 A = Mat3::Zero();            // splat covariance, m^2
};

enum class Shape { Cube, Sphere };

class ShapeOutOfDomain : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SeedSpec {
  Shape shape = Shape::Cube;
  Vec3 center = Vec3::Constant(0.5);
  double extent = 0.2;      // cube edge or sphere diameter, m
  double spacing = 0.02;    // lattice spacing, m
  double density = 1000.0;  // kg/m^3
  Vec3 velocity = Vec3::Zero();
  double jitter = 0.1;      // uniform jitter amplitude as a fraction of spacing
  double margin = 0.0;      // keep-out distance from each domain face, m
  double opacity = 1.0;
  std::uint64_t seed = 0;
};

/// Lattice points centred on spec.center, jittered from the seed.
/// F = I, C = 0, A = (spacing/2)^2 I. Colour varies smoothly with position.
/// Throws ShapeOutOfDomain if the shape does not fit inside the margins.
std::vector<ParticleState> seed_particles(const SeedSpec& spec);

/// Unjittered lattice offsets (in units of spacing) that the shape keeps.
std::vector<Eigen::Vector3i> lattice_offsets(Shape shape, double extent, double spacing);

Vec3 total_momentum(const std::vector<ParticleState>& ps);
double total_mass(const std::vector<ParticleState>& ps);
double kinetic_energy(const std::vector<ParticleState>& ps);

}  // namespace lawkit::sim
