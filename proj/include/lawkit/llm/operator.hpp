#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lawkit/llm/prompt.hpp"
#include "lawkit/llm/transcript.hpp"

namespace lawkit::llm {

class OperatorUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class AuthError : public OperatorUnavailable {
 public:
  using OperatorUnavailable::OperatorUnavailable;
};
class CacheMiss : public OperatorUnavailable {
 public:
  using OperatorUnavailable::OperatorUnavailable;
};
class NoBlocksFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fenced code blocks in order, fences and info strings stripped; at most
/// `max_blocks` are returned. Throws NoBlocksFound.
std::vector<std::string> extract_offspring(const std::string& response, int max_blocks);

struct ProposalRequest {
  std::vector<ParentInfo> parents;  // best first
  Phase phase = Phase::Joint;
  int offspring = 4;
  int iteration = 0;
};

struct RepairRequest {
  std::string source;
  std::string error;
  Phase phase = Phase::Joint;
  int attempt = 1;
};

/// Proposal operator: a source of offspring law texts.
class Operator {
 public:
  virtual ~Operator() = default;
  /// Up to `offspring` sources; live operators may return fewer or invalid ones.
  virtual std::vector<std::string> propose(const ProposalRequest& req) = 0;
  /// One corrected source.
  virtual std::string repair(const RepairRequest& req) = 0;
  virtual std::string name() const = 0;

  OperatorTranscript& transcript() { return transcript_; }
  const OperatorTranscript& transcript() const { return transcript_; }

 protected:
  OperatorTranscript transcript_;
};

struct RepairOutcome {
  std::optional<std::string> source;  // set on success
  std::string last_source;
  std::vector<std::string> errors;    // every error seen, first one included
  int attempts = 0;
};

/// `validate` returns an error text or nullopt. Re-prompts with the exact
/// error and offending source up to max_retries times.
RepairOutcome repair_loop(const std::string& source, const std::string& error, Operator& op,
                          const std::function<std::optional<std::string>(const std::string&)>& validate,
                          Phase phase, int max_retries = 2);

/// Deterministic scripted operator over a fixed bank of pre-validated
/// mutations, filtered by phase.
class MockOperator : public Operator {
 public:
  explicit MockOperator(std::uint64_t seed) : seed_(seed) {}
  std::vector<std::string> propose(const ProposalRequest& req) override;
  /// The mock cannot fix text; it returns the source unchanged.
  std::string repair(const RepairRequest& req) override;
  std::string name() const override { return "mock"; }

 private:
  std::uint64_t seed_;
};

struct Mutation {
  std::string name;
  Phase phase;  // Elastic or Plastic
};

/// The full bank, in a fixed order.
const std::vector<Mutation>& mutation_bank();

/// Applies one bank mutation; nullopt when it does not apply or would leave
/// the law unchanged. `variant` picks among a mutation's discrete choices.
std::optional<dsl::LawAst> apply_mutation(const std::string& name, const dsl::LawAst& parent,
                                          std::uint64_t variant);

/// Bank names applicable to `parent` under `phase` (Joint uses every entry).
std::vector<std::string> applicable_mutations(const dsl::LawAst& parent, Phase phase);

/// Pure function of (parents, phase, offspring, seed).
std::vector<std::string> propose_mock(const std::vector<ParentInfo>& parents, Phase phase,
                                      int offspring, std::uint64_t seed);

/// Parent law with its fitted theta written back as declared inits.
dsl::LawAst with_fitted_inits(const ParentInfo& p);

enum class CacheMode { Off, Record, Replay };

struct LiveConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "default";
  double temperature = 0.7;
  std::string api_key_env = "LAWKIT_API_KEY";
  int max_attempts = 5;
  double backoff_base_s = 1.0;
  int max_in_flight = 2;
  int timeout_s = 120;
  std::string cache_dir;  // empty: no cache
  CacheMode cache_mode = CacheMode::Off;
  PromptConfig prompt;
};

struct LiveResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  std::vector<BackoffRecord> backoffs;
  bool from_cache = false;
};

/// Chat-completions client with backoff, bounded concurrency and a
/// content-addressed response cache.
class LiveOperator : public Operator {
 public:
  explicit LiveOperator(LiveConfig cfg);
  ~LiveOperator() override;

  std::vector<std::string> propose(const ProposalRequest& req) override;
  std::string repair(const RepairRequest& req) override;
  std::string name() const override { return "live"; }

  /// One completion for `bundle`; consults the cache first. Throws AuthError
  /// (no key, before any network traffic), CacheMiss (replay mode) or
  /// OperatorUnavailable (retries exhausted / fatal status).
  LiveResponse propose_live(const PromptBundle& bundle);

  /// Number of HTTP requests actually sent.
  int network_calls() const;

 private:
  struct Impl;
  Impl* impl_;
  LiveConfig cfg_;
  LiveResponse complete(const PromptBundle& bundle, const std::string& kind,
                        std::vector<std::string>* sources, int max_blocks);
};

/// Cache file path for a prompt digest inside `dir`.
std::string cache_path(const std::string& dir, const std::string& digest);

}  // namespace lawkit::llm
