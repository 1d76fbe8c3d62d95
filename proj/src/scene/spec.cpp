#include "lawkit/scene/spec.hpp"

#include <fstream>
#include <stdexcept>

#include "lawkit/dsl/catalog.hpp"
#include "lawkit/dsl/parser.hpp"
#include "lawkit/util/digest.hpp"

namespace lawkit::scene {

namespace {

render::Camera cam(render::Axis axis) {
  render::Camera c;
  c.axis = axis;
  c.width = c.height = 48;
  c.world_window = Eigen::Vector4d(0.1, 0.0, 0.9, 0.8);
  c.background = Vec3(0.05, 0.05, 0.08);
  return c;
}

SceneSpec base(const std::string& name) {
  SceneSpec s;
  s.name = name;
  s.geometry.spacing = 0.02;
  s.geometry.density = 1000.0;
  s.geometry.jitter = 0.1;
  s.geometry.margin = 0.1;
  s.config.dt = 4e-4;
  s.config.frames = 30;
  s.cameras = {cam(render::Axis::PosZ), cam(render::Axis::PosX)};
  return s;
}

}  // namespace

std::vector<std::string> bundled_scene_names() { return {"bouncy", "jelly", "plasticine", "sand"}; }

SceneSpec bundled_scene(const std::string& name) {
  if (name == "bouncy") {
    // stiff ball thrown sideways onto the floor
    SceneSpec s = base(name);
    s.geometry.shape = sim::Shape::Sphere;
    s.geometry.center = Vec3(0.4, 0.3, 0.5);
    s.geometry.extent = 0.16;
    s.geometry.velocity = Vec3(1.0, -2.0, 0.0);
    s.geometry.seed = 11;
    s.elastic = "fixed_corotated";
    s.plastic = "identity_plastic";
    s.theta = {{"mu", 1e5}, {"lam", 1e5}};
    return s;
  }
  if (name == "jelly") {
    SceneSpec s = base(name);
    s.geometry.shape = sim::Shape::Cube;
    s.geometry.center = Vec3(0.5, 0.28, 0.5);
    s.geometry.extent = 0.14;
    s.geometry.velocity = Vec3(0.5, -2.0, 0.0);
    s.geometry.seed = 12;
    s.elastic = "neo_hookean";
    s.plastic = "identity_plastic";
    s.theta = {{"mu", 1e4}, {"lam", 1e4}};
    return s;
  }
  if (name == "plasticine") {
    SceneSpec s = base(name);
    s.geometry.shape = sim::Shape::Cube;
    s.geometry.center = Vec3(0.5, 0.25, 0.5);
    s.geometry.extent = 0.12;
    s.geometry.velocity = Vec3(1.0, -2.5, 0.0);
    s.geometry.seed = 13;
    s.elastic = "stvk_hencky";
    s.plastic = "von_mises";
    s.theta = {{"mu", 2e4}, {"lam", 2e4}, {"yield", 400.0}};
    s.config.frames = 20;
    return s;
  }
  if (name == "sand") {
    SceneSpec s = base(name);
    s.geometry.shape = sim::Shape::Sphere;
    s.geometry.center = Vec3(0.5, 0.3, 0.5);
    s.geometry.extent = 0.16;
    s.geometry.velocity = Vec3(0.0, -1.5, 0.0);
    s.geometry.seed = 14;
    s.elastic = "fixed_corotated";
    s.plastic = "drucker_prager";
    s.theta = {{"mu", 1e4}, {"lam", 1e4}, {"alpha", 0.5}};
    return s;
  }
  throw std::out_of_range("unknown bundled scene '" + name + "'");
}

void SceneSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("scene name must not be empty");
  config.validate();
  try {
    dsl::catalog_entry(elastic);
    dsl::catalog_entry(plastic);
  } catch (const std::out_of_range& e) {
    throw std::invalid_argument(std::string("reference law: ") + e.what());
  }
  for (const auto& c : cameras) c.validate();
  if (loss_mode != fit::LossMode::Chamfer && cameras.empty())
    throw std::invalid_argument("visual loss modes need at least one camera");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  reference_law(*this);
}

nlohmann::json to_json(const SceneSpec& s) {
  using nlohmann::json;
  auto v3 = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
  json j;
  j["name"] = s.name;
  const auto& g = s.geometry;
  j["geometry"] = {{"shape", g.shape == sim::Shape::Cube ? "cube" : "sphere"},
                   {"center", v3(g.center)},
                   {"extent", g.extent},
                   {"spacing", g.spacing},
                   {"density", g.density},
                   {"velocity", v3(g.velocity)},
                   {"jitter", g.jitter},
                   {"margin", g.margin},
                   {"opacity", g.opacity},
                   {"seed", g.seed}};
  j["reference"] = {{"elastic", s.elastic}, {"plastic", s.plastic}, {"theta", json::array()}};
  for (const auto& [k, v] : s.theta) j["reference"]["theta"].push_back({k, v});
  const auto& c = s.config;
  j["sim"] = {{"dt", c.dt},
              {"substeps_per_frame", c.substeps_per_frame},
              {"frames", c.frames},
              {"gravity", v3(c.gravity)},
              {"boundary", sim::to_string(c.boundary)},
              {"margin", c.margin},
              {"resolution", c.resolution},
              {"v_max", c.v_max},
              {"min_det", c.min_det}};
  j["cameras"] = json::array();
  for (const auto& cm : s.cameras) {
    j["cameras"].push_back({{"axis", render::to_string(cm.axis)},
                            {"width", cm.width},
                            {"height", cm.height},
                            {"window", {cm.world_window[0], cm.world_window[1], cm.world_window[2], cm.world_window[3]}},
                            {"background", v3(cm.background)}});
  }
  j["loss_mode"] = fit::to_string(s.loss_mode);
  j["lambda"] = s.lambda;
  return j;
}

SceneSpec spec_from_json(const nlohmann::json& j) {
  auto v3 = [](const nlohmann::json& a) {
    return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
  };
  SceneSpec s;
  s.name = j.at("name").get<std::string>();
  const auto& g = j.at("geometry");
  const auto shape = g.at("shape").get<std::string>();
  if (shape != "cube" && shape != "sphere") throw std::invalid_argument("unknown shape '" + shape + "'");
  s.geometry.shape = shape == "cube" ? sim::Shape::Cube : sim::Shape::Sphere;
  s.geometry.center = v3(g.at("center"));
  s.geometry.extent = g.at("extent").get<double>();
  s.geometry.spacing = g.at("spacing").get<double>();
  s.geometry.density = g.value("density", 1000.0);
  s.geometry.velocity = g.contains("velocity") ? v3(g.at("velocity")) : Vec3::Zero();
  s.geometry.jitter = g.value("jitter", 0.1);
  s.geometry.margin = g.value("margin", 0.0);
  s.geometry.opacity = g.value("opacity", 1.0);
  s.geometry.seed = g.value("seed", std::uint64_t{0});
  const auto& r = j.at("reference");
  s.elastic = r.at("elastic").get<std::string>();
  s.plastic = r.at("plastic").get<std::string>();
  for (const auto& e : r.at("theta")) s.theta.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
  if (j.contains("sim")) {
    const auto& c = j.at("sim");
    sim::SimConfig d;
    s.config.dt = c.value("dt", d.dt);
    s.config.substeps_per_frame = c.value("substeps_per_frame", d.substeps_per_frame);
    s.config.frames = c.value("frames", d.frames);
    if (c.contains("gravity")) s.config.gravity = v3(c.at("gravity"));
    s.config.boundary = sim::boundary_from_string(c.value("boundary", std::string("sticky_walls")));
    s.config.margin = c.value("margin", d.margin);
    s.config.resolution = c.value("resolution", d.resolution);
    s.config.v_max = c.value("v_max", d.v_max);
    s.config.min_det = c.value("min_det", d.min_det);
  }
  if (j.contains("cameras")) {
    for (const auto& cj : j.at("cameras")) {
      render::Camera c;
      c.axis = render::axis_from_string(cj.at("axis").get<std::string>());
      c.width = cj.value("width", 64);
      c.height = cj.value("height", 64);
      if (cj.contains("window")) {
        const auto& w = cj.at("window");
        c.world_window = Eigen::Vector4d(w.at(0).get<double>(), w.at(1).get<double>(),
                                         w.at(2).get<double>(), w.at(3).get<double>());
      }
      if (cj.contains("background")) c.background = v3(cj.at("background"));
      s.cameras.push_back(c);
    }
  }
  s.loss_mode = fit::loss_mode_from_string(j.value("loss_mode", std::string("chamfer")));
  s.lambda = j.value("lambda", 0.8);
  return s;
}

std::string SceneSpec::digest() const { return util::sha256_hex(to_json(*this).dump()); }

SceneSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return spec_from_json(nlohmann::json::parse(in));
}

void save_spec(const std::string& path, const SceneSpec& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_json(s).dump(2) << "\n";
}

dsl::TypedLaw reference_law(const SceneSpec& s) {
  const auto& e = dsl::catalog_entry(s.elastic);
  const auto& p = dsl::catalog_entry(s.plastic);
  return dsl::typecheck(dsl::with_inits(dsl::compose_law(e.ast, p.ast), s.theta));
}

fit::Scene scene_from_trajectory(const SceneSpec& s, sim::Trajectory gt) {
  fit::Scene sc;
  sc.name = s.name;
  sc.initial = sim::seed_particles(s.geometry);
  sc.config = s.config;
  sc.seed = s.seed();
  sc.obs.gt_trajectory = std::move(gt);
  sc.obs.cameras = s.cameras;
  sc.obs.loss_mode = s.loss_mode;
  sc.obs.lambda = s.lambda;
  return sc;
}

fit::Scene generate_scene(const SceneSpec& s, bool render) {
  s.validate();
  const auto law = reference_law(s);
  const auto theta = dsl::initial_params(law);
  const auto initial = sim::seed_particles(s.geometry);
  const bool need_frames = render || s.loss_mode != fit::LossMode::Chamfer;
  sim::Trajectory gt;
  fit::FrameSet frames;
  if (need_frames) {
    const auto states = sim::run_sim_states(initial, law, theta, s.config);
    for (const auto& st : states) gt.frames.push_back(sim::positions(st));
    frames = fit::render_views(states, s.cameras);
    gt.config_digest = s.config.digest();
    gt.law_digest = util::sha256_hex(dsl::print_law(law.ast));
  } else {
    sim::RunOptions o;
    o.seed = s.seed();
    gt = sim::run_sim(initial, law, theta, s.config, o);
  }
  gt.seed = s.seed();
  gt.scene_digest = s.digest();
  fit::Scene sc = scene_from_trajectory(s, std::move(gt));
  sc.obs.gt_frames = std::move(frames);
  return sc;
}

}  // namespace lawkit::scene
