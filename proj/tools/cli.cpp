#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lawkit/dsl/catalog.hpp"
#include "lawkit/dsl/parser.hpp"
#include "lawkit/evo/evolution.hpp"
#include "lawkit/fit/loss.hpp"
#include "lawkit/scene/spec.hpp"
#include "lawkit/sim/trajectory.hpp"

namespace lawkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Bundled scene name or a spec file.
scene::SceneSpec resolve_scene(const std::string& arg) {
  if (fs::is_regular_file(arg)) return scene::load_spec(arg);
  try {
    return scene::bundled_scene(arg);
  } catch (const std::out_of_range&) {
    std::string names;
    for (const auto& n : scene::bundled_scene_names()) names += " " + n;
    throw std::invalid_argument("'" + arg + "' is neither a spec file nor a bundled scene (bundled:" + names + ")");
  }
}

std::vector<std::pair<std::string, double>> parse_theta(const std::vector<std::string>& kv) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& s : kv) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--theta expects name=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), std::stod(s.substr(eq + 1)));
  }
  return out;
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.ppm", i);
  return buf;
}

std::string view_dir_name(std::size_t k, const render::Camera& c) {
  std::string a = render::to_string(c.axis);
  for (auto& ch : a) ch = ch == '+' ? 'p' : ch == '-' ? 'n' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return "view" + std::to_string(k) + "_" + a;
}

void write_frames(const fit::FrameSet& frames, const std::vector<render::Camera>& cams, const fs::path& dir) {
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const fs::path vd = dir / view_dir_name(k, cams[k]);
    fs::create_directories(vd);
    for (std::size_t i = 0; i < frames[k].size(); ++i) render::write_ppm((vd / frame_name(i)).string(), frames[k][i]);
  }
}

std::vector<render::Frame> read_frame_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".ppm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<render::Frame> out;
  for (const auto& f : files) out.push_back(render::read_ppm(f.string()));
  return out;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string scene;
  std::string out_dir = ".";
  bool frames = false;
  long seed = -1;
  int horizon = 0;
};

int cmd_gen_scene(const GenArgs& a, std::ostream& out) {
  auto spec = resolve_scene(a.scene);
  if (a.seed >= 0) spec.geometry.seed = static_cast<std::uint64_t>(a.seed);
  if (a.horizon > 0) spec.config.frames = a.horizon;
  spec.validate();
  const auto sc = scene::generate_scene(spec, a.frames);
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  const auto traj = (dir / (spec.name + ".vltj")).string();
  sim::write_trajectory(traj, sc.obs.gt_trajectory);
  sim::write_sidecar(traj + ".json", sc.obs.gt_trajectory, sc.config);
  scene::save_spec((dir / (spec.name + ".spec.json")).string(), spec);
  if (a.frames) {
    auto frames = sc.obs.gt_frames;
    if (frames.empty()) frames = fit::render_views(sim::run_sim_states(sc.initial, scene::reference_law(spec), dsl::initial_params(scene::reference_law(spec)), sc.config), spec.cameras);
    write_frames(frames, spec.cameras, dir / (spec.name + "_frames"));
  }
  out << "scene " << spec.name << ": " << sc.obs.gt_trajectory.particle_count() << " particles, "
      << sc.obs.gt_trajectory.frame_count() << " frames -> " << traj << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct DiscoverArgs {
  std::string scene;
  std::string gt;
  std::string op = "mock";
  std::uint64_t seed = 0;
  std::string schedule = "decoupled";
  int K = 3, M = 4, iterations = 5, alternating = 4;
  double epsilon = 1e-3;
  int eval_budget = 60, refit_budget = 200;
  int threads = 1;
  std::string out_dir;
  bool resume = false;
  std::string replay, record;
  std::string endpoint, model, api_key_env;
  double temperature = 0.7;
  int truncate = 0;
  std::string loss_mode;
};

json run_report(const evo::DiscoveryResult& r, const scene::SceneSpec& spec, const fit::Scene& sc,
                const evo::EvolutionConfig& cfg, const DiscoverArgs& a) {
  json cands = json::array();
  for (const auto& c : r.evaluated) {
    json f = c.fitted && c.fitted->feedback.failure ? json(*c.fitted->feedback.failure) : json(nullptr);
    cands.push_back({{"id", c.id},
                     {"phase", to_string(c.phase_born)},
                     {"iteration", c.lineage.iteration},
                     {"parents", c.lineage.parents},
                     {"fitness", c.fitness()},
                     {"failure", f}});
  }
  json theta = json::array();
  double chamfer = fit::kFailureSentinel;
  if (r.best.fitted && !r.best.failed()) {
    const auto& th = r.best.fitted->theta_star;
    for (std::size_t i = 0; i < th.size(); ++i) theta.push_back({r.best.law.params()[i].name, th[i]});
    try {
      auto traj = sim::run_sim(sc.initial, r.best.law, th, sc.config);
      chamfer = fit::trajectory_chamfer(traj, sc.obs.gt_trajectory);
    } catch (const std::exception&) {
    }
  }
  json config = {{"operator", a.op},
                 {"seed", cfg.seed},
                 {"schedule", evo::to_string(cfg.schedule)},
                 {"parents_K", cfg.parents_K},
                 {"offspring_M", cfg.offspring_M},
                 {"iterations", cfg.iterations},
                 {"alternating_iterations", cfg.alternating_iterations},
                 {"dedup_epsilon", cfg.dedup_epsilon},
                 {"eval_budget", cfg.eval_budget},
                 {"refit_budget", cfg.refit_budget},
                 {"loss_mode", fit::to_string(sc.obs.loss_mode)},
                 {"frames", sc.config.frames}};
  return {{"scene", spec.name},
          {"scene_spec", scene::to_json(spec)},
          {"config", config},
          {"candidates", cands},
          {"best",
           {{"id", r.best.id},
            {"source", r.best.source},
            {"theta", theta},
            {"fitness", r.best.fitness()},
            {"chamfer_vs_gt", chamfer}}},
          {"history_csv", "best_loss.csv"},
          {"transcript_digest", r.transcript_digest}};
}

int cmd_discover(const DiscoverArgs& a, std::ostream& out, std::ostream& err) {
  auto spec = resolve_scene(a.scene);
  if (!a.loss_mode.empty()) spec.loss_mode = fit::loss_mode_from_string(a.loss_mode);
  fit::Scene sc = a.gt.empty() ? scene::generate_scene(spec)
                               : scene::scene_from_trajectory(spec, sim::read_trajectory(a.gt));
  if (a.truncate > 0) sc = sc.truncated(a.truncate);

  evo::EvolutionConfig cfg;
  cfg.parents_K = a.K;
  cfg.offspring_M = a.M;
  cfg.iterations = a.iterations;
  cfg.alternating_iterations = a.alternating;
  cfg.dedup_epsilon = a.epsilon;
  cfg.schedule = evo::schedule_from_string(a.schedule);
  cfg.seed = a.seed;
  cfg.eval_budget = a.eval_budget;
  cfg.refit_budget = a.refit_budget;
  cfg.threads = a.threads;
  cfg.validate();

  std::unique_ptr<llm::Operator> op;
  if (a.op == "mock") {
    op = std::make_unique<llm::MockOperator>(a.seed);
  } else if (a.op == "live") {
    llm::LiveConfig lc;
    if (!a.endpoint.empty()) lc.endpoint = a.endpoint;
    if (!a.model.empty()) lc.model = a.model;
    if (!a.api_key_env.empty()) lc.api_key_env = a.api_key_env;
    lc.temperature = a.temperature;
    if (!a.replay.empty()) {
      lc.cache_dir = a.replay;
      lc.cache_mode = llm::CacheMode::Replay;
    } else if (!a.record.empty()) {
      lc.cache_dir = a.record;
      lc.cache_mode = llm::CacheMode::Record;
    }
    op = std::make_unique<llm::LiveOperator>(lc);
  } else {
    throw std::invalid_argument("--operator must be mock or live");
  }

  const std::string dir = a.out_dir.empty() ? "runs/" + spec.name + "_" + a.schedule + "_s" + std::to_string(a.seed) : a.out_dir;
  const auto t0 = std::chrono::steady_clock::now();
  evo::DiscoveryResult r;
  try {
    r = evo::run_discovery(sc, *op, cfg, {dir, a.resume});
  } catch (const llm::OperatorUnavailable& e) {
    err << "operator unavailable: " << e.what() << "\nstate is checkpointed in " << dir
        << "; rerun the same command with --resume to continue\n";
    return kOperatorError;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto rep = run_report(r, spec, sc, cfg, a);
  write_file(fs::path(dir) / "run_report.json", rep.dump(1) + "\n");
  write_file(fs::path(dir) / "timing.json", json{{"wall_s", wall}}.dump() + "\n");
  std::ostringstream csv;
  csv.precision(17);
  csv << "id,phase,iteration,fitness\n";
  for (const auto& c : r.evaluated) csv << c.id << "," << to_string(c.phase_born) << "," << c.lineage.iteration << "," << c.fitness() << "\n";
  write_file(fs::path(dir) / "candidates.csv", csv.str());
  if (r.best.fitted && !r.best.failed()) {
    std::vector<std::pair<std::string, double>> inits;
    for (const auto& t : rep["best"]["theta"]) inits.emplace_back(t[0].get<std::string>(), t[1].get<double>());
    write_file(fs::path(dir) / "best_fitted.law", dsl::print_law(dsl::with_inits(r.best.law.ast, inits)));
  }

  out << "scene " << spec.name << ", schedule " << a.schedule << ", seed " << a.seed << ", "
      << r.evaluated.size() << " candidates, " << sci(wall) << " s\n";
  out << "best " << r.best.id << " fitness " << sci(r.best.fitness()) << " chamfer_vs_gt "
      << sci(rep["best"]["chamfer_vs_gt"].get<double>()) << "\n";
  out << r.best.source;
  out << "report: " << (fs::path(dir) / "run_report.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> trajs;
  std::vector<std::string> labels;
  int truncate = 0;
  std::vector<std::string> frame_dirs;
  std::string csv;
};

sim::Trajectory truncated(sim::Trajectory t, int n) {
  if (n > 0 && static_cast<std::size_t>(n) < t.frames.size()) {
    t.frames.resize(static_cast<std::size_t>(n));
    if (t.has_F()) t.F.resize(static_cast<std::size_t>(n));
  }
  return t;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.trajs.size() < 2) throw std::invalid_argument("eval needs a ground truth and at least one prediction");
  if (!a.labels.empty() && a.labels.size() != a.trajs.size() - 1)
    throw std::invalid_argument("--labels needs one label per prediction");
  auto gt = truncated(sim::read_trajectory(a.trajs[0]), a.truncate);
  std::vector<EvalColumn> cols;
  for (std::size_t i = 1; i < a.trajs.size(); ++i) {
    auto p = truncated(sim::read_trajectory(a.trajs[i]), a.truncate);
    EvalColumn c;
    c.label = a.labels.empty() ? fs::path(a.trajs[i]).stem().string() : a.labels[i - 1];
    c.chamfer = fit::per_frame_chamfer(p, gt);
    cols.push_back(std::move(c));
  }
  out << format_eval_table(fs::path(a.trajs[0]).stem().string(), cols);

  if (!a.frame_dirs.empty()) {
    if (a.frame_dirs.size() != 2) throw std::invalid_argument("--frames expects two view directories (gt, prediction)");
    auto fa = read_frame_dir(a.frame_dirs[0]);
    auto fb = read_frame_dir(a.frame_dirs[1]);
    if (fa.size() != fb.size()) throw fit::StructureMismatch("frame directories hold different frame counts");
    double m = 0, d = 0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      m += fit::mse(fb[i], fa[i]);
      d += fit::dssim(fb[i], fa[i]);
    }
    const double n = static_cast<double>(std::max<std::size_t>(fa.size(), 1));
    out << "pixel mse " << sci(m / n) << "  d-ssim " << sci(d / n) << "  (" << fa.size() << " frames)\n";
  }
  if (!a.csv.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "frame";
    for (const auto& c : cols) os << "," << c.label;
    os << "\n";
    for (std::size_t f = 0; f < cols.front().chamfer.size(); ++f) {
      os << f;
      for (const auto& c : cols) os << "," << c.chamfer[f];
      os << "\n";
    }
    write_file(a.csv, os.str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  std::string law;
  std::string scene;
  std::vector<std::string> theta;
  int frames = 0;
  std::string out = "sim.vltj";
  bool record_F = false;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  auto spec = resolve_scene(a.scene);
  auto ast = dsl::parse_law(read_file(a.law));
  ast = dsl::with_inits(ast, parse_theta(a.theta));
  auto law = dsl::typecheck(ast);
  auto cfg = spec.config;
  if (a.frames > 0) cfg.frames = a.frames;
  cfg.validate();
  const auto theta = dsl::initial_params(law);
  fit::Scene probe_scene;
  probe_scene.initial = sim::seed_particles(spec.geometry);
  probe_scene.config = cfg;
  probe_scene.seed = spec.seed();
  auto rep = fit::probe_validity(law, theta, probe_scene);
  if (!rep.valid) throw sim::SimulationFailure(0, 0, "validity", rep.message);
  sim::RunOptions ro;
  ro.record_F = a.record_F;
  ro.seed = spec.seed();
  ro.scene_digest = spec.digest();
  auto traj = sim::run_sim(probe_scene.initial, law, theta, cfg, ro);
  sim::write_trajectory(a.out, traj);
  sim::write_sidecar(a.out + ".json", traj, cfg);
  out << "simulated " << traj.frame_count() << " frames of " << traj.particle_count() << " particles -> " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct RenderArgs {
  std::string traj;
  std::string scene;
  std::vector<std::string> axes;
  int width = 0, height = 0;
  std::vector<double> window;
  std::string out_dir = "frames";
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
  auto spec = resolve_scene(a.scene);
  auto traj = sim::read_trajectory(a.traj);
  auto base = sim::seed_particles(spec.geometry);
  if (base.size() != traj.particle_count())
    throw fit::StructureMismatch("trajectory has " + std::to_string(traj.particle_count()) + " particles, scene seeds " +
                                 std::to_string(base.size()));
  std::vector<render::Camera> cams = spec.cameras;
  if (!a.axes.empty()) {
    render::Camera proto = cams.empty() ? render::Camera{} : cams.front();
    cams.clear();
    for (const auto& s : a.axes) {
      auto c = proto;
      c.axis = render::axis_from_string(s);
      cams.push_back(c);
    }
  }
  for (auto& c : cams) {
    if (a.width > 0) c.width = a.width;
    if (a.height > 0) c.height = a.height;
    if (!a.window.empty()) {
      if (a.window.size() != 4) throw std::invalid_argument("--window expects r0,u0,r1,u1");
      c.world_window = Eigen::Vector4d(a.window[0], a.window[1], a.window[2], a.window[3]);
    }
    c.validate();
  }
  std::vector<std::vector<sim::ParticleState>> states(traj.frame_count(), base);
  for (std::size_t f = 0; f < traj.frame_count(); ++f) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      auto& p = states[f][i];
      p.x = traj.frames[f][i];
      if (traj.has_F()) {
        p.F = traj.F[f][i];
        p.A = p.F * base[i].A * p.F.transpose();
      }
    }
  }
  auto frames = fit::render_views(states, cams);
  write_frames(frames, cams, a.out_dir);
  out << "rendered " << traj.frame_count() << " frames x " << cams.size() << " views -> " << a.out_dir << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_report(const std::string& dir, std::ostream& out) {
  const json r = json::parse(read_file((fs::path(dir) / "run_report.json").string()));
  out << "scene " << r["scene"].get<std::string>() << "  schedule " << r["config"]["schedule"].get<std::string>()
      << "  operator " << r["config"]["operator"].get<std::string>() << "  seed " << r["config"]["seed"].get<std::uint64_t>()
      << "\n\n";
  out << "id      phase     iter  fitness        parents\n";
  for (const auto& c : r["candidates"]) {
    char buf[128];
    std::string parents;
    for (const auto& p : c["parents"]) parents += (parents.empty() ? "" : ",") + p.get<std::string>();
    std::snprintf(buf, sizeof buf, "%-7s %-9s %4d  %-13s  %s\n", c["id"].get<std::string>().c_str(),
                  c["phase"].get<std::string>().c_str(), c["iteration"].get<int>(), sci(c["fitness"].get<double>()).c_str(),
                  parents.empty() ? "-" : parents.c_str());
    out << buf;
  }
  const auto& b = r["best"];
  out << "\nbest " << b["id"].get<std::string>() << "  fitness " << sci(b["fitness"].get<double>())
      << "  chamfer_vs_gt " << sci(b["chamfer_vs_gt"].get<double>()) << "\n";
  for (const auto& t : b["theta"]) out << "  " << t[0].get<std::string>() << " = " << sci(t[1].get<double>()) << "\n";
  out << b["source"].get<std::string>();
  out << "history: " << (fs::path(dir) / r["history_csv"].get<std::string>()).string() << "\n";
  return kOk;
}

}  // namespace

std::string format_eval_table(const std::string& gt_label, const std::vector<EvalColumn>& cols) {
  std::ostringstream os;
  os << "chamfer vs " << gt_label << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-6s", "frame");
  os << buf;
  for (const auto& c : cols) {
    std::snprintf(buf, sizeof buf, " %14s", c.label.substr(0, 14).c_str());
    os << buf;
  }
  os << "\n";
  const std::size_t n = cols.empty() ? 0 : cols.front().chamfer.size();
  for (const auto& c : cols)
    if (c.chamfer.size() != n) throw fit::StructureMismatch("columns have different frame counts");
  for (std::size_t f = 0; f < n; ++f) {
    std::snprintf(buf, sizeof buf, "%-6zu", f);
    os << buf;
    for (const auto& c : cols) {
      std::snprintf(buf, sizeof buf, " %14.6e", c.chamfer[f]);
      os << buf;
    }
    os << "\n";
  }
  std::snprintf(buf, sizeof buf, "%-6s", "mean");
  os << buf;
  for (const auto& c : cols) {
    double s = 0;
    for (double v : c.chamfer) s += v;
    std::snprintf(buf, sizeof buf, " %14.6e", n ? s / static_cast<double>(n) : 0.0);
    os << buf;
  }
  os << "\n";
  return os.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"lawkit: constitutive law discovery from particle dynamics"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for candidate evaluation")->check(CLI::PositiveNumber);

  GenArgs ga;
  auto* gen = app.add_subcommand("gen-scene", "Generate a ground-truth trajectory for a scene");
  gen->add_option("scene", ga.scene, "Bundled scene name or spec file")->required();
  gen->add_option("--out-dir", ga.out_dir, "Output directory");
  gen->add_flag("--render", ga.frames, "Also write PPM frames for every camera");
  gen->add_option("--seed", ga.seed, "Override the particle seed");
  gen->add_option("--frames", ga.horizon, "Override the number of frames");

  DiscoverArgs da;
  auto* disc = app.add_subcommand("discover", "Run law discovery on a scene");
  disc->add_option("scene", da.scene, "Bundled scene name or spec file")->required();
  disc->add_option("--gt", da.gt, "Ground-truth trajectory (default: regenerate from the spec)");
  disc->add_option("--operator", da.op, "Proposal operator")->check(CLI::IsMember({"mock", "live"}));
  disc->add_option("--seed", da.seed, "Run seed");
  disc->add_option("--schedule", da.schedule, "decoupled or joint_only")->check(CLI::IsMember({"decoupled", "joint_only"}));
  disc->add_option("-K,--parents", da.K, "Parents per iteration");
  disc->add_option("-M,--offspring", da.M, "Offspring per iteration");
  disc->add_option("--iterations", da.iterations, "Evolution iterations");
  disc->add_option("--alternating", da.alternating, "Alternating elastic/plastic iterations before joint ones");
  disc->add_option("--epsilon", da.epsilon, "Relative dedup threshold");
  disc->add_option("--eval-budget", da.eval_budget, "Adam iterations per candidate");
  disc->add_option("--refit-budget", da.refit_budget, "Adam iterations for the final refit");
  disc->add_option("--out-dir", da.out_dir, "Run directory");
  disc->add_flag("--resume", da.resume, "Continue from the run directory's checkpoint");
  disc->add_option("--replay", da.replay, "Replay recorded live responses from this directory (no network)");
  disc->add_option("--record", da.record, "Record live responses into this directory");
  disc->add_option("--endpoint", da.endpoint, "Chat-completions URL");
  disc->add_option("--model", da.model, "Model name sent to the endpoint");
  disc->add_option("--api-key-env", da.api_key_env, "Environment variable holding the API key");
  disc->add_option("--temperature", da.temperature, "Sampling temperature");
  disc->add_option("--truncate", da.truncate, "Fit only the first N frames");
  disc->add_option("--loss-mode", da.loss_mode, "chamfer, visual or mixed");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Compare trajectories against a ground truth");
  ev->add_option("trajectories", ea.trajs, "Ground truth followed by predictions")->required()->expected(2, -1);
  ev->add_option("--labels", ea.labels, "Column labels for the predictions")->delimiter(',');
  ev->add_option("--truncate", ea.truncate, "Compare only the first N frames");
  ev->add_option("--frames", ea.frame_dirs, "Two view directories (gt, prediction) for pixel metrics")->expected(2);
  ev->add_option("--csv", ea.csv, "Write per-frame values to this CSV");

  SimArgs sa;
  auto* simc = app.add_subcommand("simulate", "Simulate a law file on a scene");
  simc->add_option("law", sa.law, "Law source file")->required();
  simc->add_option("--scene", sa.scene, "Bundled scene name or spec file")->required();
  simc->add_option("--theta", sa.theta, "Parameter override name=value (repeatable)");
  simc->add_option("--frames", sa.frames, "Number of frames (default: the scene's)");
  simc->add_option("--out", sa.out, "Output trajectory");
  simc->add_flag("--record-F", sa.record_F, "Store deformation gradients");

  RenderArgs ra;
  auto* ren = app.add_subcommand("render", "Render a trajectory to PPM frames");
  ren->add_option("trajectory", ra.traj, "Trajectory file")->required();
  ren->add_option("--scene", ra.scene, "Scene the trajectory belongs to (particle colours and sizes)")->required();
  ren->add_option("--axis", ra.axes, "Camera axis (+X,-X,+Y,-Y,+Z,-Z), repeatable");
  ren->add_option("--width", ra.width, "Image width");
  ren->add_option("--height", ra.height, "Image height");
  ren->add_option("--window", ra.window, "World window r0,u0,r1,u1")->delimiter(',');
  ren->add_option("--out-dir", ra.out_dir, "Output directory");

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "Summarise a discovery run directory");
  rep->add_option("run_dir", report_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  da.threads = threads;

  try {
    if (*gen) return cmd_gen_scene(ga, out);
    if (*disc) return cmd_discover(da, out, err);
    if (*ev) return cmd_eval(ea, out);
    if (*simc) return cmd_simulate(sa, out);
    if (*ren) return cmd_render(ra, out);
    if (*rep) return cmd_report(report_dir, out);
  } catch (const dsl::ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const dsl::TypeError& e) {
    err << "type error: " << e.what() << "\n";
    return kParseError;
  } catch (const sim::SimulationFailure& e) {
    err << "simulation failure: " << e.what() << "\n";
    return kSimFailure;
  } catch (const llm::OperatorUnavailable& e) {
    err << "operator unavailable: " << e.what() << "\n";
    return kOperatorError;
  } catch (const evo::LockHeld& e) {
    err << e.what() << "\n";
    return kLocked;
  } catch (const sim::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

}  // namespace lawkit::cli
