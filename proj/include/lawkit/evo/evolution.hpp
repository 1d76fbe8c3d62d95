#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lawkit/dsl/typecheck.hpp"
#include "lawkit/fit/fitness.hpp"
#include "lawkit/llm/operator.hpp"
#include "lawkit/phase.hpp"

namespace lawkit::evo {

enum class Schedule { Decoupled, JointOnly };

const char* to_string(Schedule s);
Schedule schedule_from_string(const std::string& s);

struct EvolutionConfig {
  int parents_K = 3;
  int offspring_M = 4;
  int iterations = 5;
  double dedup_epsilon = 1e-3;  // relative
  Schedule schedule = Schedule::Decoupled;
  int alternating_iterations = 4;
  std::uint64_t seed = 0;
  int eval_budget = 60;    // Adam iterations per candidate
  int refit_budget = 200;  // final refit of the winner
  std::optional<fit::LossMode> loss_mode;  // overrides the scene's
  int threads = 1;
  int max_repairs = 2;
  fit::OptimizeOptions optimizer;  // budget is taken from eval_budget / refit_budget

  /// Throws std::invalid_argument.
  void validate() const;
};

struct Lineage {
  std::vector<std::string> parents;
  int iteration = -1;  // -1 for the initial population
};

struct Candidate {
  std::string id;
  dsl::TypedLaw law;
  std::string source;
  std::optional<fit::Fitted> fitted;
  Lineage lineage;
  Phase phase_born = Phase::Init;
  std::vector<std::string> notes;  // phase repairs, operator diagnostics

  double fitness() const { return fitted ? fitted->fitness : fit::kFailureSentinel; }
  bool failed() const { return fitness() >= fit::kFailureSentinel; }
};

struct SnapshotEntry {
  std::string id;
  double fitness = fit::kFailureSentinel;
  Phase phase_born = Phase::Init;
};

/// Population after one iteration; iteration -1 is the evaluated initial population.
struct Snapshot {
  int iteration = -1;
  Phase phase = Phase::Init;
  std::vector<SnapshotEntry> population;
  double best_fitness() const;
};

struct DiscoveryResult {
  Candidate best;                     // refit with the large budget
  std::vector<Snapshot> history;
  std::vector<Candidate> evaluated;   // every candidate, in id order
  std::string transcript_digest;
};

/// Fixed corotated elasticity with identity plasticity.
std::vector<Candidate> init_population();

/// Sorted by fitness (then id); a candidate survives when its relative gap to
/// the last survivor exceeds epsilon. Sentinel failures collapse to one.
std::vector<Candidate> dedup(std::vector<Candidate> population, double epsilon);

/// K lowest losses, ties to the lower id.
std::vector<Candidate> select_topk(std::vector<Candidate> population, int K);

Phase phase_for_iteration(int i, const EvolutionConfig& cfg);

struct Enforced {
  dsl::LawAst ast;
  bool repaired = false;
  std::string note;
};

/// Restores the frozen body and its parameter declarations from `parent`.
Enforced enforce_phase(const dsl::LawAst& offspring, const dsl::LawAst& parent, Phase phase);

/// Candidate form: `parent` is the law the operator was shown (fitted
/// values as inits). Adds a note when anything was restored.
Candidate enforce_phase(Candidate offspring, const dsl::LawAst& parent, Phase phase);

/// Operator-facing view of a candidate.
llm::ParentInfo parent_info(const Candidate& c);

/// Fits one candidate with `budget` Adam iterations.
void evaluate_candidate(Candidate& c, const fit::Scene& scene, const EvolutionConfig& cfg, int budget);

/// Proposes, validates (with repair), phase-enforces and evaluates offspring.
/// `next_id` is advanced for every candidate created.
std::vector<Candidate> evolve_iteration(const std::vector<Candidate>& parents, Phase phase,
                                        llm::Operator& op, const fit::Scene& scene,
                                        const EvolutionConfig& cfg, int iteration, int& next_id);

class LockHeld : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunDirOptions {
  std::string dir;      // empty: no checkpoints
  bool resume = false;  // continue from dir/checkpoint.json when present
};

DiscoveryResult run_discovery(const fit::Scene& scene, llm::Operator& op, const EvolutionConfig& cfg,
                              const RunDirOptions& run = {});

std::string candidate_id(int n);

nlohmann::json to_json(const Candidate& c);
Candidate candidate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Snapshot& s);
Snapshot snapshot_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DiscoveryResult& r);

/// iteration,phase,best_loss rows, one per snapshot.
std::string best_loss_csv(const std::vector<Snapshot>& history);

/// Writes report.json, best.law, best_loss.csv and the winner's loss curve.
void write_result(const DiscoveryResult& r, const std::string& dir);

}  // namespace lawkit::evo
