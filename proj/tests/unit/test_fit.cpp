#include <doctest.h>

#include <cmath>
#include <random>

#include "lawkit/dsl/catalog.hpp"
#include "lawkit/fit/fitness.hpp"
#include "lawkit/fit/loss.hpp"
#include "lawkit/scene/spec.hpp"

using namespace lawkit;
using namespace lawkit::fit;

namespace {

std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Vec3> p(n);
  for (auto& x : p) x = Vec3(u(rng), u(rng), u(rng));
  return p;
}

// independent O(n^2) reference, written out without shared helpers
double brute_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  auto one = [](const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
    double s = 0;
    for (const auto& x : p) {
      double m = 1e300;
      for (const auto& y : q) {
        const double d = (x.x() - y.x()) * (x.x() - y.x()) + (x.y() - y.y()) * (x.y() - y.y()) +
                         (x.z() - y.z()) * (x.z() - y.z());
        m = d < m ? d : m;
      }
      s += m;
    }
    return s / p.size();
  };
  return one(a, b) + one(b, a);
}

render::Frame constant(double v, int n = 32) { return render::Frame(n, n, Vec3::Constant(v)); }

render::Frame noise(std::mt19937_64& rng, int n = 48) {
  std::uniform_real_distribution<double> u(0, 1);
  render::Frame f(n, n, Vec3::Zero());
  for (auto& x : f.rgb) x = static_cast<float>(u(rng));
  return f;
}

scene::SceneSpec tiny_spec(const std::string& elastic = "neo_hookean",
                           const std::string& plastic = "identity_plastic") {
  scene::SceneSpec s;
  s.name = "tiny";
  s.geometry.shape = sim::Shape::Cube;
  s.geometry.center = Vec3(0.5, 0.17, 0.5);
  s.geometry.extent = 0.1;
  s.geometry.spacing = 0.025;
  s.geometry.velocity = Vec3(0.5, -2.0, 0.0);
  s.geometry.seed = 3;
  s.elastic = elastic;
  s.plastic = plastic;
  s.theta = {{"mu", 5e3}, {"lam", 5e3}};
  s.config.dt = 4e-4;
  s.config.frames = 16;
  s.config.substeps_per_frame = 10;
  render::Camera c;
  c.width = c.height = 24;
  s.cameras = {c};
  return s;
}

dsl::TypedLaw law_of(const std::string& name, std::vector<std::pair<std::string, double>> inits = {}) {
  return dsl::typecheck(dsl::with_inits(dsl::catalog_entry(name).ast, inits));
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("chamfer examples") {
  std::vector<Vec3> a{Vec3(0, 0, 0)}, b{Vec3(1, 0, 0)};
  CHECK(chamfer_l2(a, b) == 2.0);
  CHECK(chamfer_l2(a, a) == 0.0);
  std::vector<Vec3> none;
  CHECK_THROWS_AS(chamfer_l2(none, a), EmptySet);
  CHECK_THROWS_AS(chamfer_l2(a, none), EmptySet);
}

TEST_CASE("chamfer matches brute force exactly") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> n(1, 64);
  for (int t = 0; t < 50; ++t) {
    auto a = random_points(rng, n(rng)), b = random_points(rng, n(rng));
    CHECK(chamfer_l2(a, b) == brute_chamfer(a, b));
    CHECK(chamfer_l2(a, b) == chamfer_l2(b, a));
    CHECK(chamfer_l2(a, b) >= 0.0);
  }
}

TEST_CASE("grid chamfer is bitwise equal to brute force") {
  std::mt19937_64 rng(2);
  for (std::size_t n : {100u, 700u, 1500u}) {
    auto a = random_points(rng, n), b = random_points(rng, n + 37);
    // clustered and offset sets stress the search bounds
    for (auto& p : b) p = 0.3 * p + Vec3(0.6, 0.1, 0.2);
    CHECK(chamfer_l2(a, b) == chamfer_l2_brute(a, b));
    CHECK(chamfer_l2(b, a) == chamfer_l2(a, b));
  }
  // duplicates and a degenerate plane
  std::vector<Vec3> flat;
  for (int i = 0; i < 90; ++i) flat.emplace_back(i % 9 * 0.1, i / 9 * 0.1, 0.5);
  auto c = random_points(rng, 120);
  CHECK(chamfer_l2(flat, c) == chamfer_l2_brute(flat, c));
}

TEST_CASE("trajectory chamfer is the per-frame mean") {
  std::mt19937_64 rng(3);
  sim::Trajectory a, b;
  for (int f = 0; f < 4; ++f) {
    a.frames.push_back(random_points(rng, 30));
    b.frames.push_back(random_points(rng, 30));
  }
  double s = 0;
  for (int f = 0; f < 4; ++f) s += chamfer_l2(a.frames[f], b.frames[f]);
  CHECK(trajectory_chamfer(a, b) == s / 4);
  b.frames.pop_back();
  CHECK_THROWS_AS(trajectory_chamfer(a, b), StructureMismatch);
}

TEST_CASE("ssim closed forms and ranges") {
  const auto a = constant(0.2), b = constant(0.6);
  CHECK(dssim(a, a) == 0.0);
  const double C1 = 1e-4;
  const double s = (2 * 0.2 * 0.6 + C1) / (0.2 * 0.2 + 0.6 * 0.6 + C1);
  // the frames hold f32 values, so compare against the f32 inputs
  const double x = double(0.2f), y = double(0.6f);
  const double sf = (2 * x * y + C1) / (x * x + y * y + C1);
  CHECK(std::abs(ssim(a, b) - sf) <= 1e-10);
  CHECK(std::abs(sf - s) < 1e-7);
  CHECK(std::abs(dssim(a, b) - (1 - sf) / 2) <= 1e-10);

  std::mt19937_64 rng(4);
  auto n1 = noise(rng), n2 = noise(rng);
  const double d = dssim(n1, n2);
  CHECK(d > 0.3);
  CHECK(d == doctest::Approx(0.4972).epsilon(5e-3));  // pinned regression value
  CHECK(dssim(n1, n1) == 0.0);
  for (int t = 0; t < 5; ++t) {
    auto p = noise(rng, 20), q = noise(rng, 20);
    const double v = dssim(p, q);
    CHECK((v >= 0.0 && v <= 1.0));
  }
  CHECK_THROWS_AS(dssim(constant(0.1, 32), constant(0.1, 24)), DimensionMismatch);
}

TEST_CASE("visual loss") {
  std::mt19937_64 rng(5);
  FrameSet p{{noise(rng, 24), noise(rng, 24)}}, g{{noise(rng, 24), noise(rng, 24)}};
  const double m = (mse(p[0][0], g[0][0]) + mse(p[0][1], g[0][1])) / 2;
  CHECK(std::abs(visual_loss(p, g, 1.0) - m) <= 1e-12);
  CHECK(visual_loss(g, g, 0.3) == 0.0);
  CHECK(visual_loss(g, g, 1.0) == 0.0);

  const auto a = constant(0.2), b = constant(0.6);
  const double x = double(0.2f), y = double(0.6f);
  const double sf = (2 * x * y + 1e-4) / (x * x + y * y + 1e-4);
  const double hand = 0.8 * (y - x) * (y - x) + 0.2 * (1 - sf) / 2;
  CHECK(std::abs(visual_loss({{a}}, {{b}}, 0.8) - hand) <= 1e-10);

  FrameSet short_gt{{g[0][0]}};
  CHECK_THROWS_AS(visual_loss(p, short_gt, 0.5), StructureMismatch);
  CHECK_THROWS_AS(visual_loss(p, FrameSet{}, 0.5), StructureMismatch);
}

TEST_CASE("finite differences on analytic objectives") {
  auto sq = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
  std::vector<double> x{1, 2};
  auto g = finite_diff_grad(sq, x);
  CHECK(std::abs(g.grad[0] - 2) <= 1e-6);
  CHECK(std::abs(g.grad[1] - 4) <= 1e-6);
  auto prod = [](std::span<const double> x) { return x[0] * x[1]; };
  std::vector<double> y{3, 5};
  g = finite_diff_grad(prod, y);
  CHECK(std::abs(g.grad[0] - 5) <= 1e-6);
  CHECK(std::abs(g.grad[1] - 3) <= 1e-6);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> z{u(rng), u(rng), u(rng)};
    auto f = [](std::span<const double> v) { return std::exp(0.3 * v[0]) * std::sin(v[1]) + v[2] * v[2] * v[0]; };
    const double g0 = 0.3 * std::exp(0.3 * z[0]) * std::sin(z[1]) + z[2] * z[2];
    const double g1 = std::exp(0.3 * z[0]) * std::cos(z[1]);
    const double g2 = 2 * z[2] * z[0];
    auto r = finite_diff_grad(f, z);
    CHECK(std::abs(r.grad[0] - g0) <= 1e-5 * std::max(1.0, std::abs(g0)));
    CHECK(std::abs(r.grad[1] - g1) <= 1e-5 * std::max(1.0, std::abs(g1)));
    CHECK(std::abs(r.grad[2] - g2) <= 1e-5 * std::max(1.0, std::abs(g2)));
  }
}

TEST_CASE("finite differences fall back to one side") {
  // right side fails
  auto wall = [](std::span<const double> x) { return x[0] > 1.0 ? kFailureSentinel : x[0] * x[0]; };
  std::vector<double> x{1.0};
  auto g = finite_diff_grad(wall, x);
  CHECK(!g.degenerate[0]);
  CHECK(g.grad[0] == doctest::Approx(2.0).epsilon(2e-3));
  // both sides fail
  auto spike = [](std::span<const double> x) {
    return x[0] == 1.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  };
  g = finite_diff_grad(spike, x);
  CHECK(g.degenerate[0]);
  CHECK(g.grad[0] == 0.0);
  // bounded: the upper probe would leave the unit box
  FdOptions o;
  o.bounded = true;
  auto lin = [](std::span<const double> v) { return 3.0 * v[0]; };
  std::vector<double> top{1.0};
  g = finite_diff_grad(lin, top, o);
  CHECK(g.evaluations == 2);  // minus probe plus the base value
  CHECK(g.grad[0] == doctest::Approx(3.0));
}

TEST_CASE("unit box mapping round trips") {
  auto law = law_of("von_mises");
  const dsl::ParamVector t{{2.5e4, 300.0, 4.0e3}};
  auto u = to_unit(law, t);
  for (double x : u) CHECK((x >= 0.0 && x <= 1.0));
  auto back = from_unit(law, u);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == doctest::Approx(t[i]).epsilon(1e-12));
  // log params: equal steps in u are equal ratios
  std::vector<double> a{0.5, 0.5, 0.5}, b{0.6, 0.6, 0.6};
  CHECK(from_unit(law, b)[0] / from_unit(law, a)[0] == doctest::Approx(std::pow(1e8, 0.1)));
  std::vector<double> lo{0, 0, 0};
  CHECK(from_unit(law, lo)[0] == law.params()[0].lo);
}

TEST_CASE("downsampling keeps ends and the minimum") {
  CHECK(downsample_indices(5, 3).size() == 5);
  for (std::size_t n : {21u, 61u, 201u})
    for (std::size_t keep : {std::size_t(0), std::size_t(7), n / 2 + 1, n - 2}) {
      auto idx = downsample_indices(n, keep);
      CHECK(idx.size() <= 20);
      CHECK(idx.front() == 0);
      CHECK(idx.back() == n - 1);
      CHECK(std::find(idx.begin(), idx.end(), keep) != idx.end());
      CHECK(std::is_sorted(idx.begin(), idx.end()));
    }
}

TEST_CASE("probe validity examples") {
  auto spec = tiny_spec("fixed_corotated");
  auto sc = scene::generate_scene(spec);
  auto fc = law_of("fixed_corotated");
  auto ok = probe_validity(fc, dsl::initial_params(fc), sc);
  CHECK(ok.valid);
  CHECK(ok.warnings.empty());
  CHECK(probe_battery().size() == 12);
  for (const auto& p : probe_battery()) CHECK(p.F.determinant() > 0.0);

  auto bad = dsl::compile_law(
      "param mu init=1 min=0 max=2\n"
      "elastic { return mu * log(det(F) - 1) * I }\n"
      "plastic { return F }\n");
  auto r = probe_validity(bad, dsl::initial_params(bad), sc);
  CHECK(!r.valid);
  CHECK(r.failed == ValidityCheck::ProbeBattery);
  CHECK(r.message.find("DomainError") != std::string::npos);
  CHECK(r.message.find("identity") != std::string::npos);

  // wave speed sqrt((2 mu + lam) / rho) ~ 550 m/s: dt * c = 0.22 m > dx
  auto stiff = law_of("fixed_corotated", {{"mu", 1e8}, {"lam", 1e8}});
  auto s = probe_validity(stiff, dsl::initial_params(stiff), sc);
  CHECK(!s.valid);
  CHECK(s.failed == ValidityCheck::Probation);
  CHECK(s.message.find("velocity") != std::string::npos);

  auto prestressed = dsl::compile_law(
      "param mu init=100 min=1 max=1000 log\n"
      "elastic { return mu * I }\n"
      "plastic { return F }\n");
  auto w = probe_validity(prestressed, dsl::initial_params(prestressed), sc);
  CHECK(w.warnings.size() == 1);
}

TEST_CASE("total loss dispatch and self-consistency") {
  auto spec = tiny_spec();
  auto sc = scene::generate_scene(spec);
  auto gt = scene::reference_law(spec);
  auto e = evaluate_loss(gt, dsl::initial_params(gt), sc);
  REQUIRE(e.ok());
  CHECK(e.loss <= 1e-10);

  auto other = law_of("neo_hookean", {{"mu", 2e4}});
  const auto th = dsl::initial_params(other);
  auto traj = sim::run_sim(sc.initial, other, th, sc.config);
  CHECK(evaluate_loss(other, th, sc).loss == trajectory_chamfer(traj, sc.obs.gt_trajectory));
  CHECK(total_loss(traj, {}, sc.obs) == trajectory_chamfer(traj, sc.obs.gt_trajectory));

  auto stiff = law_of("fixed_corotated", {{"mu", 1e8}, {"lam", 1e8}});
  auto f = evaluate_loss(stiff, dsl::initial_params(stiff), sc);
  CHECK(!f.ok());
  CHECK(f.loss == kFailureSentinel);
}

TEST_CASE("visual and mixed modes") {
  auto spec = tiny_spec();
  spec.loss_mode = LossMode::Visual;
  auto sc = scene::generate_scene(spec);
  REQUIRE(sc.obs.gt_frames.size() == 1);
  CHECK(sc.obs.gt_frames[0].size() == sc.obs.gt_trajectory.frame_count());
  CHECK_NOTHROW(sc.obs.validate());
  auto gt = scene::reference_law(spec);
  CHECK(evaluate_loss(gt, dsl::initial_params(gt), sc).loss == 0.0);
  auto other = law_of("neo_hookean", {{"mu", 5e2}});
  const double v = evaluate_loss(other, dsl::initial_params(other), sc).loss;
  CHECK(v > 0.0);
  sc.obs.loss_mode = LossMode::Mixed;
  const double m = evaluate_loss(other, dsl::initial_params(other), sc).loss;
  auto traj = sim::run_sim(sc.initial, other, dsl::initial_params(other), sc.config);
  CHECK(m == doctest::Approx(v + trajectory_chamfer(traj, sc.obs.gt_trajectory)).epsilon(1e-12));
}

TEST_CASE("finite-difference sign agrees with a modulus sweep") {
  auto spec = tiny_spec();
  auto sc = scene::generate_scene(spec);
  auto law = law_of("neo_hookean");
  // sweep mu in unit coordinates on both sides of the truth (5e3)
  for (double mu0 : {1.5e3, 2e4}) {
    dsl::ParamVector th{{mu0, 5e3}};
    auto u = to_unit(law, th);
    auto f = [&](std::span<const double> x) { return evaluate_loss(law, from_unit(law, x), sc).loss; };
    std::vector<double> xs, ys;
    for (int k = -2; k <= 2; ++k) {
      auto v = u;
      v[0] += k * 0.004;
      xs.push_back(v[0]);
      ys.push_back(f(v));
    }
    const double secant = (ys[4] - ys[0]) / (xs[4] - xs[0]);
    FdOptions o;
    o.bounded = true;
    auto g = finite_diff_grad(f, u, o);
    CHECK(secant != 0.0);
    CHECK((g.grad[0] > 0) == (secant > 0));
    CHECK((mu0 < 5e3) == (g.grad[0] < 0));
  }
}

TEST_CASE("optimize_params contracts") {
  auto spec = tiny_spec();
  auto sc = scene::generate_scene(spec);
  auto law = law_of("neo_hookean", {{"mu", 2e3}});

  OptimizeOptions o;
  o.budget = 0;
  auto z = optimize_params(law, sc, o);
  CHECK(z.theta_star == dsl::initial_params(law));
  CHECK(z.fitness == evaluate_loss(law, dsl::initial_params(law), sc).loss);
  CHECK(z.feedback.loss_curve.size() == 1);

  o.budget = 25;
  auto a = optimize_params(law, sc, o);
  auto b = optimize_params(law, sc, o);
  CHECK(a.full_loss_curve == b.full_loss_curve);
  CHECK(a.theta_star == b.theta_star);
  REQUIRE(!a.feedback.loss_curve.empty());
  double mn = 1e300;
  for (const auto& [it, l] : a.feedback.loss_curve) mn = std::min(mn, l);
  CHECK(a.fitness == mn);
  CHECK(a.feedback.loss_curve.size() <= 20);
  CHECK(a.fitness < a.full_loss_curve.front());
  for (const auto& [it, t] : a.feedback.theta_trajectory)
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK((t[i] >= law.params()[i].lo && t[i] <= law.params()[i].hi));
  // theta moves toward the truth
  CHECK(a.theta_star[0] > 2e3);

  auto bad = dsl::compile_law(
      "param mu init=1 min=0 max=2\n"
      "elastic { return mu * log(det(F) - 1) * I }\n"
      "plastic { return F }\n");
  auto f = optimize_params(bad, sc, o);
  CHECK(f.fitness == kFailureSentinel);
  REQUIRE(f.feedback.failure.has_value());
  CHECK(f.feedback.loss_curve.empty());

  const auto j = to_json(a, law);
  const auto back = fitted_from_json(j);
  CHECK(back.fitness == a.fitness);
  CHECK(back.theta_star == a.theta_star);
  CHECK(back.feedback.loss_curve == a.feedback.loss_curve);
  CHECK(j["theta_star"][0][0] == "mu");
  const auto csv = loss_curve_csv(a.feedback.loss_curve);
  CHECK(csv.rfind("iteration,loss\n0,", 0) == 0);
}

TEST_CASE("scene truncation") {
  auto spec = tiny_spec();
  auto sc = scene::generate_scene(spec, true);
  auto t = sc.truncated(5);
  CHECK(t.config.frames == 5);
  CHECK(t.obs.gt_trajectory.frame_count() == 6);
  CHECK(t.obs.gt_frames[0].size() == 6);
  CHECK(t.obs.gt_trajectory.frames[5] == sc.obs.gt_trajectory.frames[5]);
  CHECK_THROWS(sc.truncated(17));
}

}  // TEST_SUITE
