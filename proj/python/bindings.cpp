// Python bindings for the main lawkit operations.

#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "lawkit/dsl/catalog.hpp"
#include "lawkit/dsl/eval.hpp"
#include "lawkit/dsl/parser.hpp"
#include "lawkit/evo/evolution.hpp"
#include "lawkit/fit/fitness.hpp"
#include "lawkit/fit/loss.hpp"
#include "lawkit/scene/spec.hpp"
#include "lawkit/sim/mpm.hpp"

namespace py = pybind11;
using namespace lawkit;

namespace {

dsl::ParamVector theta_for(const dsl::TypedLaw& law, const std::optional<std::map<std::string, double>>& theta) {
  auto v = dsl::initial_params(law);
  if (!theta) return v;
  for (const auto& [name, x] : *theta) {
    std::size_t i = 0;
    while (i < law.params().size() && law.params()[i].name != name) ++i;
    if (i == law.params().size()) throw std::invalid_argument("law has no parameter '" + name + "'");
    v.values[i] = x;
  }
  return v;
}

py::dict param_dict(const dsl::TypedLaw& law, const dsl::ParamVector& th) {
  py::dict d;
  for (std::size_t i = 0; i < law.params().size() && i < th.size(); ++i) d[py::str(law.params()[i].name)] = th[i];
  return d;
}

py::array_t<double> frames_array(const sim::Trajectory& t) {
  const auto nf = static_cast<py::ssize_t>(t.frame_count()), np = static_cast<py::ssize_t>(t.particle_count());
  py::array_t<double> a({nf, np, py::ssize_t(3)});
  auto m = a.mutable_unchecked<3>();
  for (py::ssize_t f = 0; f < nf; ++f)
    for (py::ssize_t p = 0; p < np; ++p)
      for (int k = 0; k < 3; ++k) m(f, p, k) = t.frames[std::size_t(f)][std::size_t(p)][k];
  return a;
}

std::vector<Vec3> points(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw std::invalid_argument("expected an (n, 3) array");
  auto r = a.unchecked<2>();
  std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[std::size_t(i)] = Vec3(r(i, 0), r(i, 1), r(i, 2));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "lawkit core: law DSL, MPM simulation, fitting and discovery";

  py::register_exception<dsl::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<dsl::TypeError>(m, "TypeError", PyExc_ValueError);
  py::register_exception<sim::SimulationFailure>(m, "SimulationFailure", PyExc_RuntimeError);

  m.def("catalog", [] {
    std::vector<std::string> names;
    for (const auto& e : dsl::builtin_catalog()) names.push_back(e.name);
    return names;
  }, "Names of the built-in laws.");
  m.def("catalog_source", [](const std::string& n) { return dsl::print_law(dsl::catalog_entry(n).ast); });
  m.def("format_law", [](const std::string& src) { return dsl::print_law(dsl::parse_law(src)); },
        "Canonical text of a law source.");
  m.def("law_params", [](const std::string& src) {
    auto law = dsl::compile_law(src);
    std::vector<py::dict> out;
    for (const auto& p : law.params()) {
      py::dict d;
      d["name"] = p.name;
      d["init"] = p.init;
      d["lo"] = p.lo;
      d["hi"] = p.hi;
      d["log"] = p.log_scale;
      out.push_back(d);
    }
    return out;
  }, "Parse and typecheck a law; returns its parameter declarations.");

  m.def("elastic", [](const std::string& src, const Mat3& F, std::optional<std::map<std::string, double>> theta) {
    auto law = dsl::compile_law(src);
    auto th = theta_for(law, theta);
    return dsl::Evaluator(law).elastic(F, th.values);
  }, py::arg("law"), py::arg("F"), py::arg("theta") = py::none());
  m.def("plastic", [](const std::string& src, const Mat3& F, std::optional<std::map<std::string, double>> theta) {
    auto law = dsl::compile_law(src);
    auto th = theta_for(law, theta);
    return dsl::Evaluator(law).plastic(F, th.values);
  }, py::arg("law"), py::arg("F"), py::arg("theta") = py::none());

  py::class_<fit::Scene>(m, "Scene")
      .def_readonly("name", &fit::Scene::name)
      .def_property_readonly("frames", [](const fit::Scene& s) { return s.config.frames; })
      .def_property_readonly("particles", [](const fit::Scene& s) { return s.initial.size(); })
      .def_property_readonly("ground_truth", [](const fit::Scene& s) { return frames_array(s.obs.gt_trajectory); })
      .def("truncated", &fit::Scene::truncated, py::arg("frames"));

  m.def("bundled_scenes", &scene::bundled_scene_names);
  m.def("generate_scene", [](const std::string& name) {
    py::gil_scoped_release nogil;
    return scene::generate_scene(scene::bundled_scene(name));
  }, py::arg("name"), "Simulate a bundled scene's hidden reference law.");
  m.def("load_scene", [](const std::string& path) {
    py::gil_scoped_release nogil;
    return scene::generate_scene(scene::load_spec(path));
  }, py::arg("spec_path"));

  m.def("simulate", [](const std::string& src, const fit::Scene& sc, std::optional<std::map<std::string, double>> theta,
                       int frames) {
    auto law = dsl::compile_law(src);
    auto th = theta_for(law, theta);
    auto cfg = sc.config;
    if (frames > 0) cfg.frames = frames;
    sim::Trajectory t;
    {
      py::gil_scoped_release nogil;
      t = sim::run_sim(sc.initial, law, th, cfg);
    }
    return frames_array(t);
  }, py::arg("law"), py::arg("scene"), py::arg("theta") = py::none(), py::arg("frames") = 0,
        "Particle positions, shape (frames + 1, particles, 3).");

  m.def("chamfer", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                      const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
    return fit::chamfer_l2(points(a), points(b));
  });

  m.def("optimize", [](const std::string& src, const fit::Scene& sc, int budget) {
    auto law = dsl::compile_law(src);
    fit::OptimizeOptions o;
    o.budget = budget;
    fit::Fitted f;
    {
      py::gil_scoped_release nogil;
      f = fit::optimize_params(law, sc, o);
    }
    py::dict d;
    d["theta"] = param_dict(law, f.theta_star);
    d["fitness"] = f.fitness;
    d["loss_curve"] = f.full_loss_curve;
    d["failure"] = f.feedback.failure ? py::cast(*f.feedback.failure) : py::none();
    return d;
  }, py::arg("law"), py::arg("scene"), py::arg("budget") = 60, "Fit a law's parameters to a scene.");

  m.def("discover", [](const fit::Scene& sc, std::uint64_t seed, int iterations, int alternating, int parents,
                       int offspring, int eval_budget, int refit_budget, const std::string& schedule,
                       const std::string& run_dir) {
    evo::EvolutionConfig c;
    c.seed = seed;
    c.iterations = iterations;
    c.alternating_iterations = alternating;
    c.parents_K = parents;
    c.offspring_M = offspring;
    c.eval_budget = eval_budget;
    c.refit_budget = refit_budget;
    c.schedule = evo::schedule_from_string(schedule);
    llm::MockOperator op(seed);
    evo::DiscoveryResult r;
    {
      py::gil_scoped_release nogil;
      r = evo::run_discovery(sc, op, c, {run_dir, false});
    }
    py::dict d;
    d["id"] = r.best.id;
    d["source"] = r.best.source;
    d["fitness"] = r.best.fitness();
    d["theta"] = r.best.fitted ? param_dict(r.best.law, r.best.fitted->theta_star) : py::dict();
    std::vector<double> curve;
    for (const auto& s : r.history) curve.push_back(s.best_fitness());
    d["best_loss"] = curve;
    d["evaluated"] = r.evaluated.size();
    d["transcript_digest"] = r.transcript_digest;
    return d;
  }, py::arg("scene"), py::arg("seed") = 0, py::arg("iterations") = 5, py::arg("alternating") = 4,
        py::arg("parents") = 3, py::arg("offspring") = 4, py::arg("eval_budget") = 60, py::arg("refit_budget") = 200,
        py::arg("schedule") = "decoupled", py::arg("run_dir") = "",
        "Bilevel discovery with the offline mutation operator.");
}
