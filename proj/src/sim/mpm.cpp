#include "lawkit/sim/mpm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lawkit/dsl/errors.hpp"
#include "lawkit/dsl/parser.hpp"
#include "lawkit/util/digest.hpp"

namespace lawkit::sim {

const char* to_string(Boundary b) {
  return b == Boundary::StickyWalls ? "sticky_walls" : "slip_walls";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "sticky_walls" || s == "sticky") return Boundary::StickyWalls;
  if (s == "slip_walls" || s == "slip") return Boundary::SlipWalls;
  throw ConfigError("unknown boundary '" + s + "'");
}

void SimConfig::validate() const {
  if (resolution < 8) throw ConfigError("resolution must be >= 8");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (substeps_per_frame < 1) throw ConfigError("substeps_per_frame must be >= 1");
  if (frames < 0) throw ConfigError("frames must be >= 0");
  if (margin < 0 || 2 * margin >= resolution) throw ConfigError("margin out of range");
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
  if (!gravity.allFinite()) throw ConfigError("gravity must be finite");
  if (dt > dx() / v_max) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "dt %.3g violates CFL bound dx/v_max = %.3g", dt, dx() / v_max);
    throw ConfigError(buf);
  }
}

std::string SimConfig::digest() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "dt=%.17g;substeps=%d;frames=%d;g=%.17g,%.17g,%.17g;boundary=%s;margin=%d;"
                "res=%d;vmax=%.17g;mindet=%.17g",
                dt, substeps_per_frame, frames, gravity.x(), gravity.y(), gravity.z(),
                to_string(boundary), margin, resolution, v_max, min_det);
  return util::sha256_hex(buf);
}

GridField::GridField(int res) : resolution(res), dx(1.0 / res) {
  const std::size_t n = static_cast<std::size_t>(res + 1);
  mass.assign(n * n * n, 0.0);
  momentum.assign(n * n * n, Vec3::Zero());
  lo.setConstant(0);
  hi.setConstant(res);
}

void GridField::clear() {
  if ((hi.array() < lo.array()).any()) return;
  for (int i = lo.x(); i <= hi.x(); ++i)
    for (int j = lo.y(); j <= hi.y(); ++j)
      for (int k = lo.z(); k <= hi.z(); ++k) {
        const auto id = index(i, j, k);
        mass[id] = 0.0;
        momentum[id].setZero();
      }
  lo.setConstant(resolution + 1);
  hi.setConstant(-1);
}

double GridField::total_mass() const {
  double s = 0.0;
  for (double m : mass) s += m;
  return s;
}

Vec3 GridField::total_momentum() const {
  Vec3 s = Vec3::Zero();
  for (const auto& p : momentum) s += p;
  return s;
}

namespace {

std::string failure_message(long step, long particle, const std::string& quantity,
                            const std::string& detail) {
  std::string m = "simulation failed";
  if (step >= 0) m += " at step " + std::to_string(step);
  if (particle >= 0) m += ", particle " + std::to_string(particle);
  m += ": " + quantity;
  if (!detail.empty()) m += " (" + detail + ")";
  return m;
}

// Quadratic B-spline stencil for one particle.
struct Stencil {
  Eigen::Vector3i base;
  Vec3 fx;
  double w[3][3];  // [axis][offset]

  Stencil(const Vec3& x, double inv_dx) {
    const Vec3 g = x * inv_dx;
    for (int a = 0; a < 3; ++a) {
      base(a) = static_cast<int>(std::floor(g(a) - 0.5));
      fx(a) = g(a) - base(a);
      w[a][0] = 0.5 * (1.5 - fx(a)) * (1.5 - fx(a));
      w[a][1] = 0.75 - (fx(a) - 1.0) * (fx(a) - 1.0);
      w[a][2] = 0.5 * (fx(a) - 0.5) * (fx(a) - 0.5);
    }
  }
};

}  // namespace

SimulationFailure::SimulationFailure(long step, long particle, std::string quantity,
                                     const std::string& detail)
    : std::runtime_error(failure_message(step, particle, quantity, detail)),
      step_(step),
      particle_(particle),
      quantity_(std::move(quantity)),
      detail_(detail) {}

SimulationFailure SimulationFailure::at_step(long step) const {
  return SimulationFailure(step, particle_, quantity_, detail_);
}

void p2g(std::span<const ParticleState> particles, GridField& grid, dsl::Evaluator& law,
         std::span<const double> theta, double dt) {
  const double inv_dx = 1.0 / grid.dx;
  const double scale = -dt * 4.0 * inv_dx * inv_dx;
  const int res = grid.resolution;
  for (std::size_t p = 0; p < particles.size(); ++p) {
    const auto& ps = particles[p];
    const Stencil st(ps.x, inv_dx);
    if ((st.base.array() < 0).any() || (st.base.array() + 2 > res).any() || !ps.x.allFinite()) {
      throw SimulationFailure(-1, static_cast<long>(p), "position", "particle outside grid");
    }
    Mat3 tau;
    try {
      tau = law.elastic(ps.F, theta);
    } catch (const dsl::EvalError& e) {
      throw SimulationFailure(-1, static_cast<long>(p), "stress", e.what());
    }
    const Mat3 affine = scale * ps.volume0 * tau + ps.mass * ps.C;
    const Vec3 mv = ps.mass * ps.v;
    for (int a = 0; a < 3; ++a) {
      grid.lo(a) = std::min(grid.lo(a), st.base(a));
      grid.hi(a) = std::max(grid.hi(a), st.base(a) + 2);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const double w = st.w[0][i] * st.w[1][j] * st.w[2][k];
          const Vec3 dpos = (Vec3(i, j, k) - st.fx) * grid.dx;
          const auto id = grid.index(st.base.x() + i, st.base.y() + j, st.base.z() + k);
          grid.momentum[id] += w * (mv + affine * dpos);
          grid.mass[id] += w * ps.mass;
        }
  }
}

void p2g(std::span<const ParticleState> particles, GridField& grid, const dsl::TypedLaw& law,
         const dsl::ParamVector& theta, double dt) {
  dsl::Evaluator ev(law);
  p2g(particles, grid, ev, theta.values, dt);
}

void grid_step(GridField& grid, double dt, const Vec3& gravity, Boundary boundary, int margin) {
  const int n = grid.resolution;
  if ((grid.hi.array() < grid.lo.array()).any()) return;
  for (int i = grid.lo.x(); i <= grid.hi.x(); ++i)
    for (int j = grid.lo.y(); j <= grid.hi.y(); ++j)
      for (int k = grid.lo.z(); k <= grid.hi.z(); ++k) {
        const auto id = grid.index(i, j, k);
        const double m = grid.mass[id];
        if (!(m > 0.0)) continue;
        Vec3 v = grid.momentum[id] / m + dt * gravity;
        const int idx[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          const bool low = idx[a] < margin;
          const bool high = idx[a] > n - margin;
          if (!low && !high) continue;
          if (boundary == Boundary::StickyWalls) {
            v.setZero();
            break;
          }
          // slip: drop only the component pointing into the wall
          if ((low && v(a) < 0.0) || (high && v(a) > 0.0)) v(a) = 0.0;
        }
        grid.momentum[id] = v;
      }
}

void g2p(const GridField& grid, std::span<ParticleState> particles, double dt) {
  const double inv_dx = 1.0 / grid.dx;
  const double lo = grid.dx, hi = 1.0 - grid.dx;
  for (auto& ps : particles) {
    const Stencil st(ps.x, inv_dx);
    Vec3 v = Vec3::Zero();
    Mat3 C = Mat3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const double w = st.w[0][i] * st.w[1][j] * st.w[2][k];
          const Vec3 dpos = (Vec3(i, j, k) - st.fx) * grid.dx;
          const Vec3& gv =
              grid.momentum[grid.index(st.base.x() + i, st.base.y() + j, st.base.z() + k)];
          v += w * gv;
          C += (4.0 * inv_dx * inv_dx * w) * gv * dpos.transpose();
        }
    ps.v = v;
    ps.C = C;
    ps.x += dt * v;
    for (int a = 0; a < 3; ++a) ps.x(a) = std::clamp(ps.x(a), lo, hi);
    ps.F = (Mat3::Identity() + dt * C) * ps.F;
  }
}

void apply_plasticity(std::span<ParticleState> particles, dsl::Evaluator& law,
                      std::span<const double> theta) {
  for (std::size_t p = 0; p < particles.size(); ++p) {
    try {
      particles[p].F = law.plastic(particles[p].F, theta);
    } catch (const dsl::EvalError& e) {
      throw SimulationFailure(-1, static_cast<long>(p), "plastic return", e.what());
    }
  }
}

void apply_plasticity(std::span<ParticleState> particles, const dsl::TypedLaw& law,
                      const dsl::ParamVector& theta) {
  dsl::Evaluator ev(law);
  apply_plasticity(particles, ev, theta.values);
}

Mat3 update_covariance(const Mat3& A, const Mat3& F_step) {
  const Mat3 B = F_step * A * F_step.transpose();
  return 0.5 * (B + B.transpose());
}

Simulator::Simulator(const dsl::TypedLaw& law, dsl::ParamVector theta, SimConfig config)
    : law_(&law),
      theta_(std::move(theta)),
      config_(config),
      eval_(law),
      grid_(config.resolution) {
  config_.validate();
  dsl::check_params(law, theta_);
}

void Simulator::step(std::vector<ParticleState>& particles) {
  const long s = steps_;
  const double dt = config_.dt;
  try {
    grid_.clear();
    p2g(particles, grid_, eval_, theta_.values, dt);
    grid_step(grid_, dt, config_.gravity, config_.boundary, config_.margin);
    g2p(grid_, particles, dt);
    const double v2 = config_.v_max * config_.v_max;
    for (std::size_t p = 0; p < particles.size(); ++p) {
      const auto& ps = particles[p];
      if (!ps.v.allFinite() || !ps.C.allFinite()) {
        throw SimulationFailure(s, static_cast<long>(p), "velocity", "non-finite");
      }
      if (ps.v.squaredNorm() > v2) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "|v| = %.4g exceeds %.4g", ps.v.norm(), config_.v_max);
        throw SimulationFailure(s, static_cast<long>(p), "velocity", buf);
      }
    }
    apply_plasticity(particles, eval_, theta_.values);
    for (std::size_t p = 0; p < particles.size(); ++p) {
      auto& ps = particles[p];
      if (!ps.F.allFinite()) {
        throw SimulationFailure(s, static_cast<long>(p), "F", "non-finite");
      }
      const double J = ps.F.determinant();
      if (!(J > config_.min_det)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "det(F) = %.4g", J);
        throw SimulationFailure(s, static_cast<long>(p), "det(F)", buf);
      }
      ps.A = update_covariance(ps.A, Mat3::Identity() + dt * ps.C);
    }
  } catch (const SimulationFailure& f) {
    if (f.step() >= 0) throw;
    throw f.at_step(s);
  }
  ++steps_;
}

std::vector<Vec3> positions(const std::vector<ParticleState>& ps) {
  std::vector<Vec3> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(p.x);
  return out;
}

namespace {

template <class OnFrame>
void drive(const std::vector<ParticleState>& initial, const dsl::TypedLaw& law,
           const dsl::ParamVector& theta, const SimConfig& config, OnFrame&& on_frame) {
  config.validate();
  Simulator sim(law, theta, config);
  std::vector<ParticleState> state = initial;
  on_frame(state);
  for (int f = 0; f < config.frames; ++f) {
    for (int s = 0; s < config.substeps_per_frame; ++s) sim.step(state);
    on_frame(state);
  }
}

}  // namespace

Trajectory run_sim(const std::vector<ParticleState>& initial, const dsl::TypedLaw& law,
                   const dsl::ParamVector& theta, const SimConfig& config,
                   const RunOptions& options) {
  Trajectory t;
  drive(initial, law, theta, config, [&](const std::vector<ParticleState>& s) {
    t.frames.push_back(positions(s));
    if (options.record_F) {
      std::vector<Mat3> Fs;
      Fs.reserve(s.size());
      for (const auto& p : s) Fs.push_back(p.F);
      t.F.push_back(std::move(Fs));
    }
  });
  t.config_digest = config.digest();
  t.law_digest = util::sha256_hex(dsl::print_law(law.ast));
  t.scene_digest = options.scene_digest;
  t.seed = options.seed;
  return t;
}

std::vector<std::vector<ParticleState>> run_sim_states(const std::vector<ParticleState>& initial,
                                                       const dsl::TypedLaw& law,
                                                       const dsl::ParamVector& theta,
                                                       const SimConfig& config) {
  std::vector<std::vector<ParticleState>> out;
  drive(initial, law, theta, config,
        [&](const std::vector<ParticleState>& s) { out.push_back(s); });
  return out;
}

}  // namespace lawkit::sim
