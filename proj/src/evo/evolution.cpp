#include "lawkit/evo/evolution.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lawkit/dsl/catalog.hpp"
#include "lawkit/dsl/parser.hpp"
#include "lawkit/util/parallel.hpp"

namespace lawkit::evo {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Schedule s) { return s == Schedule::Decoupled ? "decoupled" : "joint_only"; }

Schedule schedule_from_string(const std::string& s) {
  if (s == "decoupled") return Schedule::Decoupled;
  if (s == "joint_only" || s == "joint") return Schedule::JointOnly;
  throw std::invalid_argument("unknown schedule '" + s + "'");
}

void EvolutionConfig::validate() const {
  if (parents_K < 1) throw std::invalid_argument("parents_K must be >= 1");
  if (offspring_M < 1) throw std::invalid_argument("offspring_M must be >= 1");
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (!(dedup_epsilon > 0)) throw std::invalid_argument("dedup_epsilon must be > 0");
  if (schedule == Schedule::Decoupled && iterations > 0 && alternating_iterations >= iterations)
    throw std::invalid_argument("alternating_iterations must be < iterations");
  if (alternating_iterations < 0) throw std::invalid_argument("alternating_iterations must be >= 0");
  if (eval_budget < 0 || refit_budget < 0) throw std::invalid_argument("budgets must be >= 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

double Snapshot::best_fitness() const {
  double b = fit::kFailureSentinel;
  for (const auto& e : population) b = std::min(b, e.fitness);
  return b;
}

std::string candidate_id(int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%04d", n);
  return buf;
}

std::vector<Candidate> init_population() {
  const auto& e = dsl::catalog_entry("fixed_corotated");
  Candidate c;
  c.id = candidate_id(0);
  c.law = dsl::typecheck(e.ast);
  c.source = e.source;
  c.phase_born = Phase::Init;
  return {c};
}

namespace {

bool by_fitness(const Candidate& a, const Candidate& b) {
  if (a.fitness() != b.fitness()) return a.fitness() < b.fitness();
  return a.id < b.id;
}

bool references(const dsl::Block& b, const std::string& name) {
  auto r = dsl::referenced_params(b);
  return std::find(r.begin(), r.end(), name) != r.end();
}

}  // namespace

std::vector<Candidate> dedup(std::vector<Candidate> population, double epsilon) {
  std::sort(population.begin(), population.end(), by_fitness);
  std::vector<Candidate> out;
  for (auto& c : population) {
    if (!out.empty()) {
      const double kept = out.back().fitness();
      if (std::abs(c.fitness() - kept) / std::max(std::abs(kept), 1e-12) <= epsilon) continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Candidate> select_topk(std::vector<Candidate> population, int K) {
  std::sort(population.begin(), population.end(), by_fitness);
  if (static_cast<int>(population.size()) > K) population.resize(static_cast<std::size_t>(K));
  return population;
}

Phase phase_for_iteration(int i, const EvolutionConfig& cfg) {
  if (cfg.schedule == Schedule::JointOnly) return Phase::Joint;
  if (i < cfg.alternating_iterations) return i % 2 == 0 ? Phase::Elastic : Phase::Plastic;
  return Phase::Joint;
}

Enforced enforce_phase(const dsl::LawAst& offspring, const dsl::LawAst& parent, Phase phase) {
  Enforced r{offspring, false, ""};
  if (phase != Phase::Elastic && phase != Phase::Plastic) return r;
  const bool el = phase == Phase::Elastic;
  const dsl::Block& frozen_parent = el ? parent.plastic : parent.elastic;
  dsl::Block& frozen = el ? r.ast.plastic : r.ast.elastic;
  std::vector<std::string> why;
  if (!(frozen == frozen_parent)) {
    frozen = frozen_parent;
    why.push_back(std::string(el ? "plastic" : "elastic") + " body restored from parent");
  }
  // frozen-body params come from the parent verbatim; the rest from the offspring
  std::vector<dsl::ParamSpec> params;
  auto push = [&](const dsl::ParamSpec& p) {
    for (const auto& q : params)
      if (q.name == p.name) return;
    if (references(r.ast.elastic, p.name) || references(r.ast.plastic, p.name)) params.push_back(p);
  };
  for (const auto& p : offspring.params) {
    const int pi = parent.param_index(p.name);
    if (references(frozen_parent, p.name) && pi >= 0) {
      const auto& pp = parent.params[static_cast<std::size_t>(pi)];
      if (!(pp == p)) why.push_back("declaration of '" + p.name + "' restored from parent");
      push(pp);
    } else {
      push(p);
    }
  }
  for (const auto& p : parent.params)
    if (references(frozen_parent, p.name)) push(p);
  r.ast.params = params;
  if (!why.empty()) {
    r.repaired = true;
    std::string s = "phase " + std::string(lawkit::to_string(phase)) + ": ";
    for (std::size_t i = 0; i < why.size(); ++i) s += (i ? "; " : "") + why[i];
    r.note = s;
    r.ast = dsl::parse_law(dsl::print_law(r.ast));
  }
  return r;
}

Candidate enforce_phase(Candidate offspring, const dsl::LawAst& parent, Phase phase) {
  auto e = enforce_phase(offspring.law.ast, parent, phase);
  if (!e.repaired) return offspring;
  offspring.law = dsl::typecheck(e.ast);
  offspring.source = dsl::print_law(e.ast);
  offspring.notes.push_back(e.note);
  return offspring;
}

llm::ParentInfo parent_info(const Candidate& c) { return {c.id, c.law.ast, c.source, c.fitted}; }

void evaluate_candidate(Candidate& c, const fit::Scene& scene, const EvolutionConfig& cfg, int budget) {
  auto o = cfg.optimizer;
  o.budget = budget;
  c.fitted = fit::optimize_params(c.law, scene, o);
}

namespace {

// Parent whose frozen body (and its declarations) the offspring shares; for
// Joint, one sharing either body; otherwise the best parent.
std::size_t pick_parent(const dsl::LawAst& off, const std::vector<dsl::LawAst>& parents, Phase phase) {
  auto same_decls = [&](const dsl::LawAst& p, const dsl::Block& body) {
    for (const auto& name : dsl::referenced_params(body)) {
      const int a = off.param_index(name), b = p.param_index(name);
      if (a < 0 || b < 0 || !(off.params[static_cast<std::size_t>(a)] == p.params[static_cast<std::size_t>(b)]))
        return false;
    }
    return true;
  };
  auto shares = [&](const dsl::LawAst& p, bool decls) {
    const bool el = off.elastic == p.elastic && (!decls || same_decls(p, p.elastic));
    const bool pl = off.plastic == p.plastic && (!decls || same_decls(p, p.plastic));
    if (phase == Phase::Elastic) return pl;
    if (phase == Phase::Plastic) return el;
    return el || pl;
  };
  for (bool decls : {true, false})
    for (std::size_t i = 0; i < parents.size(); ++i)
      if (shares(parents[i], decls)) return i;
  return 0;
}

std::optional<std::string> check_source(const std::string& src, const fit::Scene& scene,
                                        const EvolutionConfig& cfg) {
  try {
    auto law = dsl::compile_law(src);
    auto rep = fit::probe_validity(law, dsl::initial_params(law), scene, cfg.optimizer.probation);
    if (!rep.valid) return std::string("validity check failed (") + fit::to_string(rep.failed) + "): " + rep.message;
  } catch (const std::exception& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

}  // namespace

std::vector<Candidate> evolve_iteration(const std::vector<Candidate>& parents, Phase phase, llm::Operator& op,
                                        const fit::Scene& scene, const EvolutionConfig& cfg, int iteration,
                                        int& next_id) {
  llm::ProposalRequest req;
  for (const auto& p : parents) req.parents.push_back(parent_info(p));
  req.phase = phase;
  req.offspring = cfg.offspring_M;
  req.iteration = iteration;
  auto sources = op.propose(req);
  if (static_cast<int>(sources.size()) > cfg.offspring_M) sources.resize(static_cast<std::size_t>(cfg.offspring_M));

  std::vector<dsl::LawAst> shown;
  for (const auto& p : req.parents) shown.push_back(llm::with_fitted_inits(p));

  std::vector<Candidate> kids;
  for (const auto& src0 : sources) {
    Candidate c;
    c.id = candidate_id(next_id++);
    c.phase_born = phase;
    c.lineage.iteration = iteration;
    std::string src = src0;
    if (auto err = check_source(src, scene, cfg)) {
      auto rep = llm::repair_loop(
          src, *err, op, [&](const std::string& s) { return check_source(s, scene, cfg); }, phase, cfg.max_repairs);
      if (!rep.source) {
        c.source = rep.last_source;
        c.lineage.parents = {parents.front().id};
        fit::Fitted f;
        std::string diag;
        for (std::size_t i = 0; i < rep.errors.size(); ++i) diag += (i ? "\n" : "") + rep.errors[i];
        f.feedback.failure = "rejected after " + std::to_string(rep.attempts) + " repair attempts:\n" + diag;
        c.fitted = f;
        c.notes.push_back("invalid proposal");
        kids.push_back(std::move(c));
        continue;
      }
      c.notes.push_back("repaired after " + std::to_string(rep.attempts) + " attempts");
      src = *rep.source;
    }
    auto ast = dsl::parse_law(src);
    const std::size_t pi = pick_parent(ast, shown, phase);
    c.lineage.parents = {parents[pi].id};
    c.law = dsl::typecheck(ast);
    c.source = src;
    c = enforce_phase(std::move(c), shown[pi], phase);
    kids.push_back(std::move(c));
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < kids.size(); ++i)
    if (!kids[i].fitted) todo.push_back(i);
  util::parallel_for(todo.size(), cfg.threads,
                     [&](std::size_t k) { evaluate_candidate(kids[todo[k]], scene, cfg, cfg.eval_budget); });
  return kids;
}

// ---------------------------------------------------------------------------
// serialization

json to_json(const Candidate& c) {
  json j;
  j["id"] = c.id;
  j["source"] = c.source;
  j["lineage"] = {{"parents", c.lineage.parents}, {"iteration", c.lineage.iteration}};
  j["phase_born"] = lawkit::to_string(c.phase_born);
  j["notes"] = c.notes;
  j["fitted"] = c.fitted ? fit::to_json(*c.fitted, c.law) : json(nullptr);
  return j;
}

Candidate candidate_from_json(const json& j) {
  Candidate c;
  c.id = j.at("id").get<std::string>();
  c.source = j.at("source").get<std::string>();
  c.lineage.parents = j.at("lineage").at("parents").get<std::vector<std::string>>();
  c.lineage.iteration = j.at("lineage").at("iteration").get<int>();
  c.phase_born = phase_from_string(j.at("phase_born").get<std::string>());
  c.notes = j.value("notes", std::vector<std::string>{});
  if (!j.at("fitted").is_null()) c.fitted = fit::fitted_from_json(j.at("fitted"));
  try {
    c.law = dsl::compile_law(c.source);
  } catch (const std::exception&) {
    // rejected proposals keep their text only
  }
  return c;
}

json to_json(const Snapshot& s) {
  json pop = json::array();
  for (const auto& e : s.population) pop.push_back({e.id, e.fitness, lawkit::to_string(e.phase_born)});
  return {{"iteration", s.iteration}, {"phase", lawkit::to_string(s.phase)}, {"population", pop}};
}

Snapshot snapshot_from_json(const json& j) {
  Snapshot s;
  s.iteration = j.at("iteration").get<int>();
  s.phase = phase_from_string(j.at("phase").get<std::string>());
  for (const auto& e : j.at("population"))
    s.population.push_back({e.at(0).get<std::string>(), e.at(1).get<double>(), phase_from_string(e.at(2).get<std::string>())});
  return s;
}

json to_json(const DiscoveryResult& r) {
  json h = json::array();
  for (const auto& s : r.history) h.push_back(to_json(s));
  json ev = json::array();
  for (const auto& c : r.evaluated) ev.push_back(to_json(c));
  return {{"best", to_json(r.best)}, {"history", h}, {"evaluated", ev}, {"transcript_digest", r.transcript_digest}};
}

std::string best_loss_csv(const std::vector<Snapshot>& history) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,phase,best_loss\n";
  for (const auto& s : history) os << s.iteration << "," << lawkit::to_string(s.phase) << "," << s.best_fitness() << "\n";
  return os.str();
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, p);
}

class RunLock {
 public:
  explicit RunLock(const fs::path& p) : path_(p) {
    fd_ = ::open(p.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw LockHeld("run directory is locked by another process (" + p.string() + ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd_, pid.data(), pid.size()) < 0) {
    }
  }
  ~RunLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

Snapshot snapshot_of(const std::vector<Candidate>& pop, int iteration, Phase phase) {
  Snapshot s;
  s.iteration = iteration;
  s.phase = phase;
  for (const auto& c : pop) s.population.push_back({c.id, c.fitness(), c.phase_born});
  return s;
}

}  // namespace

void write_result(const DiscoveryResult& r, const std::string& dir) {
  fs::create_directories(dir);
  write_text(fs::path(dir) / "report.json", to_json(r).dump(1));
  write_text(fs::path(dir) / "best.law", r.best.source);
  write_text(fs::path(dir) / "best_loss.csv", best_loss_csv(r.history));
  if (r.best.fitted) write_text(fs::path(dir) / "best_loss_curve.csv", fit::loss_curve_csv(r.best.fitted->feedback.loss_curve));
}

DiscoveryResult run_discovery(const fit::Scene& scene_in, llm::Operator& op, const EvolutionConfig& cfg,
                              const RunDirOptions& run) {
  cfg.validate();
  fit::Scene scene = scene_in;
  if (cfg.loss_mode) scene.obs.loss_mode = *cfg.loss_mode;
  scene.obs.validate();

  std::optional<RunLock> lock;
  fs::path ckpt;
  if (!run.dir.empty()) {
    fs::create_directories(run.dir);
    lock.emplace(fs::path(run.dir) / "lock");
    ckpt = fs::path(run.dir) / "checkpoint.json";
  }

  std::vector<Candidate> all;
  std::vector<Candidate> population;
  std::vector<Snapshot> history;
  int next_id = 0;
  int start = 0;

  auto lookup = [&](const std::string& id) -> const Candidate& {
    for (const auto& c : all)
      if (c.id == id) return c;
    throw std::runtime_error("checkpoint references unknown candidate " + id);
  };

  if (run.resume && !ckpt.empty() && fs::exists(ckpt)) {
    std::ifstream in(ckpt);
    json j = json::parse(in);
    if (j.at("scene_digest").get<std::string>() != scene.obs.gt_trajectory.scene_digest ||
        j.at("seed").get<std::uint64_t>() != cfg.seed)
      throw std::runtime_error("checkpoint belongs to a different scene or seed");
    for (const auto& c : j.at("evaluated")) all.push_back(candidate_from_json(c));
    for (const auto& id : j.at("population")) population.push_back(lookup(id.get<std::string>()));
    for (const auto& s : j.at("history")) history.push_back(snapshot_from_json(s));
    next_id = j.at("next_id").get<int>();
    start = j.at("completed").get<int>();
    op.transcript() = llm::OperatorTranscript::from_json(j.at("transcript"));
  } else {
    population = init_population();
    next_id = static_cast<int>(population.size());
    for (auto& c : population) evaluate_candidate(c, scene, cfg, cfg.eval_budget);
    all = population;
    history.push_back(snapshot_of(population, -1, Phase::Init));
  }

  auto checkpoint = [&](int completed) {
    if (ckpt.empty()) return;
    json ev = json::array();
    for (const auto& c : all) ev.push_back(to_json(c));
    json pop = json::array();
    for (const auto& c : population) pop.push_back(c.id);
    json h = json::array();
    for (const auto& s : history) h.push_back(to_json(s));
    json j = {{"completed", completed},
              {"next_id", next_id},
              {"seed", cfg.seed},
              {"scene_digest", scene.obs.gt_trajectory.scene_digest},
              {"population", pop},
              {"history", h},
              {"evaluated", ev},
              {"transcript", op.transcript().to_json()}};
    write_text(ckpt, j.dump(1));
    const std::string tag = completed == 0 ? "init" : std::to_string(completed - 1);
    write_text(fs::path(run.dir) / ("iteration_" + tag + ".json"), to_json(history.back()).dump(1));
    write_text(fs::path(run.dir) / "best_loss.csv", best_loss_csv(history));
  };
  if (start == 0) checkpoint(0);

  for (int it = start; it < cfg.iterations; ++it) {
    const Phase phase = phase_for_iteration(it, cfg);
    auto parents = select_topk(dedup(population, cfg.dedup_epsilon), cfg.parents_K);
    auto kids = evolve_iteration(parents, phase, op, scene, cfg, it, next_id);
    for (const auto& k : kids) all.push_back(k);
    // elitism: parents compete with their offspring
    std::vector<Candidate> pool = parents;
    pool.insert(pool.end(), kids.begin(), kids.end());
    population = dedup(std::move(pool), cfg.dedup_epsilon);
    history.push_back(snapshot_of(population, it, phase));
    checkpoint(it + 1);
  }

  DiscoveryResult r;
  Candidate best = select_topk(dedup(population, cfg.dedup_epsilon), 1).front();
  if (!best.failed()) evaluate_candidate(best, scene, cfg, std::max(cfg.refit_budget, cfg.eval_budget));
  r.best = best;
  r.history = std::move(history);
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  r.evaluated = std::move(all);
  r.transcript_digest = op.transcript().digest();
  if (!run.dir.empty()) {
    write_result(r, run.dir);
    write_text(fs::path(run.dir) / "transcript.json", op.transcript().to_json().dump(1));
  }
  return r;
}

}  // namespace lawkit::evo
