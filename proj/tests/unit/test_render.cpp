#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "lawkit/dsl/catalog.hpp"
#include "lawkit/render/splat.hpp"
#include "lawkit/sim/mpm.hpp"

using namespace lawkit;
using namespace lawkit::render;

namespace {

sim::ParticleState splat_at(const Vec3& x, double s, const Vec3& color, double alpha = 1.0) {
  sim::ParticleState p;
  p.x = x;
  p.A = s * s * Mat3::Identity();
  p.color = color;
  p.opacity = alpha;
  p.mass = 1.0;
  p.volume0 = 1.0;
  return p;
}

Splat2D manual(const Vec2& c, double var, double alpha, const Vec3& color, double depth) {
  Splat2D s;
  s.center = c;
  s.cov = var * Mat2::Identity();
  s.cov_world = s.cov;
  s.alpha = alpha;
  s.color = color;
  s.depth = depth;
  return s;
}

double luminance_sum(const Frame& f) {
  double s = 0.0;
  for (float v : f.rgb) s += v;
  return s;
}

}  // namespace

TEST_SUITE("render") {

TEST_CASE("camera validation") {
  Camera c;
  CHECK_NOTHROW(c.validate());
  c.width = 8;
  CHECK_THROWS(c.validate());
  c = Camera{};
  c.world_window = Eigen::Vector4d(0.2, 0.2, 1.2, 0.8);
  CHECK_THROWS(c.validate());
  CHECK(axis_from_string("-Y") == Axis::NegY);
  CHECK(axis_from_string("Z") == Axis::PosZ);
  CHECK_THROWS(axis_from_string("W"));
}

TEST_CASE("project isotropic and sheared covariance") {
  Camera cam;
  auto p = splat_at(Vec3(0.3, 0.4, 0.7), 0.02, Vec3(1, 0, 0));
  auto s = project_splat(p, cam);
  CHECK(s.cov_world.isApprox(0.0004 * Mat2::Identity()));
  CHECK(s.depth == 0.7);
  CHECK(s.center.isApprox(Vec2(0.3 * 64, 0.6 * 64)));

  p.A = Mat3::Identity();
  p.A(0, 2) = p.A(2, 0) = 0.4;
  p.A(1, 2) = p.A(2, 1) = -0.3;
  p.A(0, 1) = p.A(1, 0) = 0.1;
  s = project_splat(p, cam);
  Mat2 minor;
  minor << 1, 0.1, 0.1, 1;
  CHECK(s.cov_world == minor);
  // rows grow downward, so the pixel covariance flips the off-diagonal
  CHECK(s.cov(0, 1) == doctest::Approx(-0.1 * 64 * 64));
}

TEST_CASE("projected covariance equals the numeric marginal") {
  std::mt19937_64 rng(17);
  for (Axis axis : {Axis::PosZ, Axis::NegX, Axis::PosY}) {
    const Mat3 R = oracle::random_rotation(rng);
    const Mat3 A = R * Vec3(0.01, 0.0025, 0.0009).asDiagonal() * R.transpose();
    Camera cam;
    cam.axis = axis;
    sim::ParticleState p = splat_at(Vec3(0.5, 0.5, 0.5), 0.1, Vec3::Ones());
    p.A = A;
    const auto s = project_splat(p, cam);
    // integrate the 3D density over depth and measure second moments in the plane
    const Mat3 Ai = A.inverse();
    const int n = 80;
    const double h = 1.6 / n;
    Mat2 M = Mat2::Zero();
    double Z = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const Vec3 d(-0.8 + (i + 0.5) * h, -0.8 + (j + 0.5) * h, -0.8 + (k + 0.5) * h);
          const double w = std::exp(-0.5 * d.dot(Ai * d));
          const Vec2 q = cam.plane(p.x + d) - cam.plane(p.x);
          M += w * q * q.transpose();
          Z += w;
        }
    M /= Z;
    CHECK((M - s.cov_world).norm() <= 1e-6);
  }
}

TEST_CASE("mirror cameras flip the right axis") {
  Camera pz, nz;
  nz.axis = Axis::NegZ;
  const Vec3 x(0.2, 0.6, 0.3);
  CHECK(pz.plane(x).isApprox(Vec2(0.2, 0.6)));
  CHECK(nz.plane(x).isApprox(Vec2(0.8, 0.6)));
  CHECK(nz.depth(x) == -0.3);
  std::vector<sim::ParticleState> ps{splat_at(Vec3(0.25, 0.5, 0.4), 0.03, Vec3(1, 0, 0)),
                                     splat_at(Vec3(0.7, 0.3, 0.6), 0.05, Vec3(0, 1, 0))};
  auto a = render_frame(ps, pz), b = render_frame(ps, nz);
  // with no overlap the -Z image is the +Z image mirrored left-right
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c)
      for (int ch = 0; ch < 3; ++ch) CHECK(a.at(r, c, ch) == doctest::Approx(b.at(r, a.width - 1 - c, ch)).epsilon(1e-5));
}

TEST_CASE("composite closed forms") {
  Camera cam;
  cam.background = Vec3(0.1, 0.2, 0.3);
  auto empty = composite({}, cam);
  for (int r = 0; r < cam.height; ++r)
    for (int c = 0; c < cam.width; ++c) CHECK(empty.pixel(r, c).isApprox(Vec3(0.1, 0.2, 0.3), 1e-6));

  const Vec2 centre(10.5, 20.5);
  auto one = composite({manual(centre, 2.0, 1.0, Vec3(0.9, 0.5, 0.1), 0.0)}, cam);
  CHECK(one.pixel(20, 10).isApprox(Vec3(0.9, 0.5, 0.1), 1e-6));

  const Vec3 c1(1, 0, 0), c2(0, 1, 0);
  auto two = composite({manual(centre, 2.0, 0.5, c1, 0.0), manual(centre, 2.0, 0.5, c2, 0.1)}, cam);
  const Vec3 expect = 0.5 * c1 + 0.25 * c2 + 0.25 * cam.background;
  CHECK((two.pixel(20, 10) - expect).norm() <= 1e-6);
}

TEST_CASE("compositing weights sum to one") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  Camera cam;
  cam.width = cam.height = 32;
  std::vector<Splat2D> splats;
  for (int i = 0; i < 60; ++i)
    splats.push_back(manual(Vec2(32 * u(rng), 32 * u(rng)), 1 + 10 * u(rng), u(rng), Vec3::Ones(), i));
  // white splats over black: pixel = total weight; white background = weight + T
  CompositeOptions o;
  o.early_termination = false;
  cam.background = Vec3::Zero();
  auto w = composite(splats, cam, o);
  cam.background = Vec3::Ones();
  auto wt = composite(splats, cam, o);
  // and a black-splat render isolates T
  for (auto& s : splats) s.color.setZero();
  auto t = composite(splats, cam, o);
  for (std::size_t i = 0; i < w.rgb.size(); ++i) {
    CHECK(w.rgb[i] + t.rgb[i] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(wt.rgb[i] == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("stacked opaque splats converge monotonically") {
  Camera cam;
  const Vec3 col(0.2, 0.7, 0.4);
  cam.background = Vec3(1, 1, 1);
  CompositeOptions o;
  o.early_termination = false;
  double prev = 1e9;
  for (int n = 1; n <= 8; ++n) {
    std::vector<Splat2D> s;
    for (int i = 0; i < n; ++i) s.push_back(manual(Vec2(32.5, 32.5), 3.0, 0.9, col, i));
    const double err = (composite(s, cam, o).pixel(32, 32) - col).norm();
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("early termination stops accumulation") {
  Camera cam;
  std::vector<Splat2D> s{manual(Vec2(32.5, 32.5), 3.0, 1.0, Vec3(1, 0, 0), 0),
                         manual(Vec2(32.5, 32.5), 3.0, 1.0, Vec3(0, 1, 0), 1)};
  auto f = composite(s, cam);
  CHECK(f.pixel(32, 32) == Vec3(1, 0, 0));
}

TEST_CASE("singular covariance is skipped and counted") {
  Camera cam;
  auto bad = manual(Vec2(32.5, 32.5), 3.0, 1.0, Vec3(1, 0, 0), 0);
  bad.cov << 1.0, 1.0, 1.0, 1.0;
  auto zero = manual(Vec2(10.5, 10.5), 0.0, 1.0, Vec3(1, 0, 0), 1);
  RenderStats st;
  auto f = composite({bad, zero}, cam, {}, &st);
  CHECK(st.singular_skipped == 2);
  CHECK(luminance_sum(f) == 0.0);
}

TEST_CASE("render determinism, range and frame-0 consistency") {
  auto law = dsl::typecheck(dsl::catalog_entry("fixed_corotated").ast);
  sim::SeedSpec spec;
  spec.extent = 0.3;
  spec.spacing = 0.03;
  auto ps = sim::seed_particles(spec);
  Camera cam;
  auto a = render_frame(ps, cam), b = render_frame(ps, cam);
  CHECK(a == b);
  for (float v : a.rgb) CHECK((v >= 0.0f && v <= 1.0f));
  sim::SimConfig c;
  c.frames = 1;
  auto states = sim::run_sim_states(ps, law, dsl::initial_params(law), c);
  CHECK(render_frame(states[0], cam) == a);
}

TEST_CASE("translation shifts the image") {
  sim::SeedSpec spec;
  spec.extent = 0.2;
  spec.spacing = 0.025;
  spec.center = Vec3(0.45, 0.5, 0.5);
  auto ps = sim::seed_particles(spec);
  for (auto& p : ps) p.A = 0.0001 * Mat3::Identity();
  Camera cam;
  cam.width = cam.height = 64;
  auto base = render_frame(ps, cam);
  for (int k : {1, 3, 5}) {
    for (int axis : {0, 1}) {
      auto moved = ps;
      const double d = k / 64.0;
      for (auto& p : moved) p.x(axis) += d;
      auto img = render_frame(moved, cam);
      int best_dx = 0, best_dy = 0;
      double best = -1e300;
      for (int dy = -7; dy <= 7; ++dy)
        for (int dx = -7; dx <= 7; ++dx) {
          double cc = 0.0;
          for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64; ++c) {
              const int r2 = r + dy, c2 = c + dx;
              if (r2 < 0 || r2 >= 64 || c2 < 0 || c2 >= 64) continue;
              cc += base.at(r, c, 0) * img.at(r2, c2, 0);
            }
          if (cc > best) {
            best = cc;
            best_dx = dx;
            best_dy = dy;
          }
        }
      // +x moves right; +y moves up, which is toward row 0
      CHECK(best_dx == (axis == 0 ? k : 0));
      CHECK(best_dy == (axis == 1 ? -k : 0));
    }
  }
}

TEST_CASE("ppm encoding") {
  Frame f(16, 16, Vec3(1, 0, 0.5));
  auto bytes = encode_ppm(f);
  const std::string header = "P6\n16 16\n255\n";
  CHECK(bytes.substr(0, header.size()) == header);
  CHECK(bytes.size() == header.size() + 16 * 16 * 3);
  CHECK(static_cast<unsigned char>(bytes[header.size()]) == 255);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 1]) == 0);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 2]) == 128);
}

}  // TEST_SUITE
