#include "lawkit/sim/particles.hpp"

#include <cmath>
#include <random>

namespace lawkit::sim {

std::vector<Eigen::Vector3i> lattice_offsets(Shape shape, double extent, double spacing) {
  std::vector<Eigen::Vector3i> out;
  if (shape == Shape::Cube) {
    // n points per axis tile the cube exactly: offsets are half-integers
    // around the centre, stored doubled to stay integral.
    const int n = static_cast<int>(std::lround(extent / spacing));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          out.emplace_back(2 * i - (n - 1), 2 * j - (n - 1), 2 * k - (n - 1));
    return out;
  }
  const double r = 0.5 * extent / spacing;
  const int n = static_cast<int>(std::floor(r));
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j)
      for (int k = -n; k <= n; ++k)
        if (std::sqrt(double(i * i + j * j + k * k)) <= r) out.emplace_back(2 * i, 2 * j, 2 * k);
  return out;
}

std::vector<ParticleState> seed_particles(const SeedSpec& spec) {
  if (!(spec.spacing > 0.0) || !(spec.extent > 0.0) || !(spec.density > 0.0)) {
    throw std::invalid_argument("seed_particles: extent, spacing and density must be positive");
  }
  const double half = 0.5 * spec.extent;
  for (int a = 0; a < 3; ++a) {
    if (spec.center(a) - half < spec.margin || spec.center(a) + half > 1.0 - spec.margin) {
      throw ShapeOutOfDomain("shape of extent " + std::to_string(spec.extent) + " at centre (" +
                             std::to_string(spec.center.x()) + ", " +
                             std::to_string(spec.center.y()) + ", " +
                             std::to_string(spec.center.z()) + ") leaves the domain margins");
    }
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jit(-spec.jitter, spec.jitter);
  const double vol = spec.spacing * spec.spacing * spec.spacing;
  const double s2 = 0.25 * spec.spacing * spec.spacing;
  std::vector<ParticleState> out;
  for (const auto& o : lattice_offsets(spec.shape, spec.extent, spec.spacing)) {
    ParticleState p;
    const Vec3 j(jit(rng), jit(rng), jit(rng));
    p.x = spec.center + spec.spacing * (0.5 * o.cast<double>() + j);
    p.v = spec.velocity;
    p.mass = spec.density * vol;
    p.volume0 = vol;
    p.opacity = spec.opacity;
    p.A = s2 * Mat3::Identity();
    const Vec3 rel = (p.x - spec.center) / spec.extent + Vec3::Constant(0.5);
    p.color = Vec3(0.25 + 0.6 * rel.x(), 0.3 + 0.5 * rel.y(), 0.85 - 0.6 * rel.z())
                  .cwiseMax(0.0)
                  .cwiseMin(1.0);
    out.push_back(p);
  }
  return out;
}

Vec3 total_momentum(const std::vector<ParticleState>& ps) {
  Vec3 m = Vec3::Zero();
  for (const auto& p : ps) m += p.mass * p.v;
  return m;
}

double total_mass(const std::vector<ParticleState>& ps) {
  double m = 0.0;
  for (const auto& p : ps) m += p.mass;
  return m;
}

double kinetic_energy(const std::vector<ParticleState>& ps) {
  double e = 0.0;
  for (const auto& p : ps) e += 0.5 * p.mass * p.v.squaredNorm();
  return e;
}

}  // namespace lawkit::sim
