#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lawkit/dsl/ast.hpp"
#include "lawkit/fit/fitness.hpp"
#include "lawkit/phase.hpp"

namespace lawkit::llm {

/// What the operator sees of one parent.
struct ParentInfo {
  std::string id;
  dsl::LawAst ast;
  std::string source;
  std::optional<fit::Fitted> fitted;
};

struct ParentPayload {
  std::string id;
  std::string source;
  double fitness = fit::kFailureSentinel;
  std::string loss_summary;
  std::string theta_summary;
  std::optional<std::string> failure;
};

struct PromptConfig {
  std::size_t max_bytes = 32 * 1024;
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  Phase phase = Phase::Joint;
  std::vector<ParentPayload> parents;
  std::string grammar_reference;
  int offspring_requested = 0;

  std::size_t bytes() const { return system_text.size() + user_text.size(); }
  /// SHA-256 over the texts that reach the model.
  std::string digest() const;
};

/// Short DSL reference included in every system prompt.
const std::string& grammar_reference();

ParentPayload make_payload(const ParentInfo& p);

/// Parents must be ordered best first. Drops trailing parents (and then
/// trims sources) until the bundle fits in cfg.max_bytes.
PromptBundle build_prompt(const std::vector<ParentInfo>& parents, Phase phase, int offspring,
                          const PromptConfig& cfg = {});

/// Follow-up prompt asking for a corrected version of one law.
PromptBundle build_repair_prompt(const std::string& source, const std::string& error, Phase phase);

/// Follow-up prompt asking for `missing` more laws after a short response.
PromptBundle build_more_prompt(const PromptBundle& original, int missing);

}  // namespace lawkit::llm
