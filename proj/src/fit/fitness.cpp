#include "lawkit/fit/fitness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "lawkit/dsl/errors.hpp"
#include "lawkit/util/parallel.hpp"

namespace lawkit::fit {

const char* to_string(ValidityCheck c) {
  switch (c) {
    case ValidityCheck::None: return "none";
    case ValidityCheck::ProbeBattery: return "probe battery";
    case ValidityCheck::RestStress: return "rest stress";
    case ValidityCheck::Probation: return "probation simulation";
  }
  return "?";
}

namespace {

Mat3 stretch(int axis, double s) {
  Mat3 F = Mat3::Identity();
  F(axis, axis) = s;
  return F;
}

Mat3 shear(int a, int b, double g) {
  Mat3 F = Mat3::Identity();
  F(a, b) = g;
  return F;
}

std::vector<Probe> make_battery() {
  std::vector<Probe> out;
  out.push_back({"identity", Mat3::Identity()});
  const char* ax = "xyz";
  for (int a = 0; a < 3; ++a) out.push_back({std::string("stretch +10% ") + ax[a], stretch(a, 1.1)});
  for (int a = 0; a < 3; ++a) out.push_back({std::string("stretch -10% ") + ax[a], stretch(a, 0.9)});
  out.push_back({"shear xy", shear(0, 1, 0.1)});
  out.push_back({"shear yz", shear(1, 2, 0.1)});
  out.push_back({"shear zx", shear(2, 0, 0.1)});
  out.push_back({"compression 20%", 0.8 * Mat3::Identity()});
  // fixed rotation of a random-looking stretch; det > 0
  const Eigen::Quaterniond q = Eigen::Quaterniond(0.8, 0.3, -0.4, 0.33).normalized();
  const Eigen::Quaterniond q2 = Eigen::Quaterniond(0.2, -0.7, 0.5, 0.4).normalized();
  const Mat3 S = Vec3(1.23, 0.87, 0.95).asDiagonal();
  out.push_back({"rotated random stretch", q.toRotationMatrix() * S * q2.toRotationMatrix()});
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const std::vector<Probe>& probe_battery() {
  static const std::vector<Probe> b = make_battery();
  return b;
}

ValidityReport probe_validity(const dsl::TypedLaw& law, const dsl::ParamVector& theta,
                              const Scene& scene, const ProbationOptions& opts) {
  ValidityReport r;
  auto fail = [&](ValidityCheck c, std::string msg) {
    r.valid = false;
    r.failed = c;
    r.message = std::move(msg);
    return r;
  };
  try {
    dsl::check_params(law, theta);
  } catch (const std::invalid_argument& e) {
    return fail(ValidityCheck::ProbeBattery, e.what());
  }

  dsl::Evaluator ev(law);
  for (const auto& p : probe_battery()) {
    try {
      ev.elastic(p.F, theta.values);
    } catch (const dsl::EvalError& e) {
      return fail(ValidityCheck::ProbeBattery, "elastic at probe '" + p.name + "': " + e.what());
    }
    try {
      const Mat3 Fp = ev.plastic(p.F, theta.values);
      if (!(Fp.determinant() > 0.0)) {
        return fail(ValidityCheck::ProbeBattery,
                    "plastic at probe '" + p.name + "': corrected F has det <= 0");
      }
    } catch (const dsl::EvalError& e) {
      return fail(ValidityCheck::ProbeBattery, "plastic at probe '" + p.name + "': " + e.what());
    }
  }

  // soft: stress at rest should vanish relative to the modulus scale
  double scale = 1.0;
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (law.params()[i].log_scale) scale = std::max(scale, std::abs(theta[i]));
  const double rest = ev.elastic(Mat3::Identity(), theta.values).norm();
  if (rest > 1e-3 * scale) {
    std::ostringstream os;
    os << "stress at F = I has norm " << rest << " (modulus scale " << scale << ")";
    r.warnings.push_back(os.str());
  }

  try {
    std::vector<sim::ParticleState> ps = scene.initial;
    std::mt19937_64 rng(scene.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> u(-opts.velocity_jitter, opts.velocity_jitter);
    for (auto& p : ps) p.v += Vec3(u(rng), u(rng), u(rng));
    sim::Simulator sim(law, theta, scene.config);
    for (int s = 0; s < opts.substeps; ++s) sim.step(ps);
  } catch (const sim::SimulationFailure& e) {
    return fail(ValidityCheck::Probation, e.what());
  }
  return r;
}

double total_loss(const sim::Trajectory& pred, const FrameSet& pred_frames,
                  const SceneObservation& obs) {
  switch (obs.loss_mode) {
    case LossMode::Chamfer: return trajectory_chamfer(pred, obs.gt_trajectory);
    case LossMode::Visual: return visual_loss(pred_frames, obs.gt_frames, obs.lambda);
    case LossMode::Mixed:
      return trajectory_chamfer(pred, obs.gt_trajectory) +
             visual_loss(pred_frames, obs.gt_frames, obs.lambda);
  }
  return kFailureSentinel;
}

LossEval evaluate_loss(const dsl::TypedLaw& law, const dsl::ParamVector& theta, const Scene& scene) {
  LossEval out;
  try {
    double loss;
    if (scene.obs.loss_mode == LossMode::Chamfer) {
      const auto traj = sim::run_sim(scene.initial, law, theta, scene.config);
      loss = total_loss(traj, {}, scene.obs);
    } else {
      const auto states = sim::run_sim_states(scene.initial, law, theta, scene.config);
      sim::Trajectory traj;
      for (const auto& s : states) traj.frames.push_back(sim::positions(s));
      loss = total_loss(traj, render_views(states, scene.obs.cameras), scene.obs);
    }
    if (!std::isfinite(loss)) {
      out.failure = "non-finite loss";
      return out;
    }
    out.loss = std::min(loss, kFailureSentinel);
  } catch (const sim::SimulationFailure& e) {
    out.failure = e.what();
  } catch (const dsl::EvalError& e) {
    out.failure = e.what();
  }
  return out;
}

std::vector<double> to_unit(const dsl::TypedLaw& law, const dsl::ParamVector& theta) {
  std::vector<double> u(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto& p = law.params()[i];
    u[i] = p.log_scale ? (std::log(theta[i]) - std::log(p.lo)) / (std::log(p.hi) - std::log(p.lo))
                       : (theta[i] - p.lo) / (p.hi - p.lo);
    u[i] = std::clamp(u[i], 0.0, 1.0);
  }
  return u;
}

dsl::ParamVector from_unit(const dsl::TypedLaw& law, std::span<const double> u) {
  dsl::ParamVector t;
  t.values.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& p = law.params()[i];
    const double x = p.log_scale
                         ? std::exp(std::log(p.lo) + u[i] * (std::log(p.hi) - std::log(p.lo)))
                         : p.lo + u[i] * (p.hi - p.lo);
    t.values[i] = std::clamp(x, p.lo, p.hi);
  }
  return t;
}

GradResult finite_diff_grad(const std::function<double(std::span<const double>)>& objective,
                            std::span<const double> x, const FdOptions& opts,
                            std::optional<double> f0) {
  const std::size_t n = x.size();
  GradResult r;
  r.grad.assign(n, 0.0);
  r.degenerate.assign(n, false);
  auto usable = [](double f) { return std::isfinite(f) && f < kFailureSentinel; };

  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = std::max(opts.rel_step * std::abs(x[i]), opts.rel_step * 0.01);

  // probes 2i (plus) and 2i+1 (minus); out-of-box probes are skipped
  std::vector<double> val(2 * n, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < 2 * n; ++k) {
    const double xi = x[k / 2] + (k % 2 == 0 ? h[k / 2] : -h[k / 2]);
    if (opts.bounded && (xi < 0.0 || xi > 1.0)) continue;
    todo.push_back(k);
  }
  util::parallel_for(todo.size(), opts.threads, [&](std::size_t t) {
    const std::size_t k = todo[t];
    std::vector<double> y(x.begin(), x.end());
    y[k / 2] += k % 2 == 0 ? h[k / 2] : -h[k / 2];
    val[k] = objective(y);
  });
  r.evaluations = static_cast<int>(todo.size());

  bool need_f0 = false;
  for (std::size_t i = 0; i < n; ++i)
    if (!usable(val[2 * i]) || !usable(val[2 * i + 1])) need_f0 = true;
  double base = std::numeric_limits<double>::quiet_NaN();
  if (need_f0) {
    if (f0) {
      base = *f0;
    } else {
      base = objective(x);
      ++r.evaluations;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double fp = val[2 * i], fm = val[2 * i + 1];
    if (usable(fp) && usable(fm)) {
      r.grad[i] = (fp - fm) / (2.0 * h[i]);
    } else if (usable(fp) && usable(base)) {
      r.grad[i] = (fp - base) / h[i];
    } else if (usable(fm) && usable(base)) {
      r.grad[i] = (base - fm) / h[i];
    } else {
      r.degenerate[i] = true;
    }
  }
  return r;
}

std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t keep, std::size_t max_points) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  if (n <= max_points) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  for (std::size_t k = 0; k < max_points; ++k)
    idx.push_back(static_cast<std::size_t>(std::llround(double(k) * double(n - 1) / double(max_points - 1))));
  if (std::find(idx.begin(), idx.end(), keep) == idx.end()) {
    // replace the nearest interior sample
    std::size_t best = 1;
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
      const auto d = [&](std::size_t v) { return v > keep ? v - keep : keep - v; };
      if (d(idx[k]) < d(idx[best])) best = k;
    }
    idx[best] = keep;
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

Fitted optimize_params(const dsl::TypedLaw& law, const Scene& scene, const OptimizeOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Fitted out;
  Feedback& fb = out.feedback;
  fb.theta_init = dsl::initial_params(law);
  fb.theta_final = fb.theta_init;
  out.theta_star = fb.theta_init;

  const auto report = probe_validity(law, fb.theta_init, scene, opts.probation);
  fb.warnings = report.warnings;
  if (!report.valid) {
    fb.failure = std::string("validity check failed (") + to_string(report.failed) + "): " + report.message;
    fb.wall_time = seconds_since(t0);
    return out;
  }

  auto transform = [&](double l) {
    if (l >= kFailureSentinel) return l;
    switch (opts.descent) {
      case Descent::Raw: return l;
      case Descent::Sqrt: return std::sqrt(l);
      case Descent::Log: return std::log(std::max(l, 1e-300));
    }
    return l;
  };
  auto objective = [&](std::span<const double> u) {
    return transform(evaluate_loss(law, from_unit(law, u), scene).loss);
  };

  const std::size_t n = law.param_count;
  std::vector<double> u = to_unit(law, fb.theta_init);
  std::vector<double> m(n, 0.0), v(n, 0.0);
  dsl::ParamVector theta = fb.theta_init;
  std::vector<dsl::ParamVector> snaps;
  std::vector<int> iters;

  for (int it = 0; it <= opts.budget; ++it) {
    if (it > 0) theta = from_unit(law, u);
    const LossEval e = evaluate_loss(law, theta, scene);
    if (!e.ok()) {
      fb.failure = "iteration " + std::to_string(it) + ": " + *e.failure;
      break;
    }
    out.full_loss_curve.push_back(e.loss);
    snaps.push_back(theta);
    iters.push_back(it);
    if (it == opts.budget) break;

    FdOptions fd;
    fd.rel_step = opts.rel_step;
    fd.bounded = true;
    fd.threads = opts.threads;
    const auto g = finite_diff_grad(objective, u, fd, transform(e.loss));
    const double b1t = 1.0 - std::pow(opts.beta1, it + 1);
    const double b2t = 1.0 - std::pow(opts.beta2, it + 1);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g.grad[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g.grad[i] * g.grad[i];
      const double mh = m[i] / b1t, vh = v[i] / b2t;
      u[i] = std::clamp(u[i] - opts.lr * mh / (std::sqrt(vh) + opts.eps), 0.0, 1.0);
    }
  }

  if (!snaps.empty()) {
    const auto& c = out.full_loss_curve;
    const std::size_t best = static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin());
    out.fitness = c[best];
    out.theta_star = snaps[best];
    fb.theta_final = snaps.back();
    for (std::size_t k : downsample_indices(c.size(), best)) {
      fb.loss_curve.emplace_back(iters[k], c[k]);
      fb.theta_trajectory.emplace_back(iters[k], snaps[k]);
    }
  }
  fb.wall_time = seconds_since(t0);
  return out;
}

namespace {

nlohmann::json named(const dsl::TypedLaw& law, const dsl::ParamVector& t) {
  auto j = nlohmann::json::array();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::string name = i < static_cast<std::size_t>(law.param_count) ? law.params()[i].name : "p" + std::to_string(i);
    j.push_back({name, t[i]});
  }
  return j;
}

dsl::ParamVector unnamed(const nlohmann::json& j) {
  dsl::ParamVector t;
  for (const auto& e : j) t.values.push_back(e.at(1).get<double>());
  return t;
}

}  // namespace

nlohmann::json to_json(const Feedback& f, const dsl::TypedLaw& law) {
  nlohmann::json j;
  j["loss_curve"] = nlohmann::json::array();
  for (const auto& [it, l] : f.loss_curve) j["loss_curve"].push_back({it, l});
  j["theta_init"] = named(law, f.theta_init);
  j["theta_final"] = named(law, f.theta_final);
  j["theta_trajectory"] = nlohmann::json::array();
  for (const auto& [it, t] : f.theta_trajectory) j["theta_trajectory"].push_back({it, named(law, t)});
  j["failure"] = f.failure ? nlohmann::json(*f.failure) : nlohmann::json(nullptr);
  j["warnings"] = f.warnings;
  j["wall_time"] = f.wall_time;
  return j;
}

nlohmann::json to_json(const Fitted& f, const dsl::TypedLaw& law) {
  nlohmann::json j;
  j["theta_star"] = named(law, f.theta_star);
  j["fitness"] = f.fitness;
  j["feedback"] = to_json(f.feedback, law);
  return j;
}

Fitted fitted_from_json(const nlohmann::json& j) {
  Fitted f;
  f.theta_star = unnamed(j.at("theta_star"));
  f.fitness = j.at("fitness").get<double>();
  const auto& fj = j.at("feedback");
  Feedback& fb = f.feedback;
  for (const auto& e : fj.at("loss_curve")) fb.loss_curve.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
  fb.theta_init = unnamed(fj.at("theta_init"));
  fb.theta_final = unnamed(fj.at("theta_final"));
  for (const auto& e : fj.at("theta_trajectory"))
    fb.theta_trajectory.emplace_back(e.at(0).get<int>(), unnamed(e.at(1)));
  if (!fj.at("failure").is_null()) fb.failure = fj.at("failure").get<std::string>();
  fb.warnings = fj.value("warnings", std::vector<std::string>{});
  fb.wall_time = fj.value("wall_time", 0.0);
  return f;
}

std::string loss_curve_csv(const std::vector<std::pair<int, double>>& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,loss\n";
  for (const auto& [it, l] : curve) os << it << "," << l << "\n";
  return os.str();
}

}  // namespace lawkit::fit
