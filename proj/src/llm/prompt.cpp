#include "lawkit/llm/prompt.hpp"

#include <cstdio>
#include <sstream>

#include "lawkit/dsl/parser.hpp"
#include "lawkit/util/digest.hpp"

namespace lawkit::llm {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const char* kSystem =
    "You are an expert in continuum mechanics and material modelling. You design "
    "constitutive laws for a material point method simulator. A law has an elastic "
    "part that maps the deformation gradient F to Kirchhoff stress, and a plastic "
    "part that maps a trial F to the corrected F after return mapping. Laws are "
    "written in the small language described below; nothing else is executed.\n\n";

std::string frozen_instruction(Phase phase, const std::vector<ParentInfo>& parents) {
  std::ostringstream os;
  switch (phase) {
    case Phase::Elastic:
      os << "Phase: ELASTIC. Modify only the elastic body. Copy the plastic body and the "
            "parameters it uses exactly as written in the parent you start from.";
      break;
    case Phase::Plastic:
      os << "Phase: PLASTIC. Modify only the plastic body. Copy the elastic body and the "
            "parameters it uses exactly as written in the parent you start from.";
      break;
    default:
      os << "Phase: JOINT. You may refine both bodies together.";
      return os.str();
  }
  os << "\nFrozen body per parent:\n";
  for (const auto& p : parents) {
    os << "- " << p.id << ":\n```\n"
       << (phase == Phase::Elastic ? "plastic " : "elastic ")
       << dsl::print_block(phase == Phase::Elastic ? p.ast.plastic : p.ast.elastic) << "\n```\n";
  }
  return os.str();
}

}  // namespace

const std::string& grammar_reference() {
  static const std::string g =
      "Grammar:\n"
      "  law      := param* elastic-block plastic-block\n"
      "  param    := 'param' NAME 'init=' NUM 'min=' NUM 'max=' NUM ['log']\n"
      "  block    := ('elastic' | 'plastic') '{' (let ';')* 'return' expr [';'] '}'\n"
      "  let      := 'let' NAME '=' expr | 'let' '(' NAME ',' NAME ',' NAME ')' '=' 'svd(' expr ')'\n"
      "  expr     := 'if' expr CMP expr 'then' expr 'else' expr | arithmetic with + - * / and ( )\n"
      "  CMP      := < <= > >= == !=\n"
      "Names: F (input matrix), I (identity), declared params, earlier lets.\n"
      "Types: scalar, vec3, mat3. mat*mat, mat*vec, scalar*any; vec+-scalar broadcasts; "
      "mat+-scalar is an error. Both blocks must return mat3.\n"
      "Builtins: svd det trace transpose inverse diag outer log exp sqrt abs pow min max "
      "clamp(x,lo,hi) vlog vexp vsum vnorm vmax dev normf.\n"
      "svd(F) returns (U, S, V) with F = U diag(S) V^T, det U = det V = 1.\n"
      "Comments start with '#'. Param bounds must satisfy min <= init <= max, and min > 0 for 'log'.\n";
  return g;
}

ParentPayload make_payload(const ParentInfo& p) {
  ParentPayload out;
  out.id = p.id;
  out.source = p.source.empty() ? dsl::print_law(p.ast) : p.source;
  if (!p.fitted) return out;
  const auto& f = *p.fitted;
  out.fitness = f.fitness;
  std::ostringstream loss;
  for (std::size_t i = 0; i < f.feedback.loss_curve.size(); ++i) {
    if (i) loss << ", ";
    loss << f.feedback.loss_curve[i].first << ":" << fmt(f.feedback.loss_curve[i].second);
  }
  out.loss_summary = loss.str();
  std::ostringstream th;
  const auto& params = p.ast.params;
  for (std::size_t k = 0; k < f.feedback.theta_trajectory.size(); ++k) {
    const auto& [it, t] = f.feedback.theta_trajectory[k];
    // first, last and a few in between keep the payload short
    if (k != 0 && k + 1 != f.feedback.theta_trajectory.size() && k % 5 != 0) continue;
    th << "  iter " << it << ":";
    for (std::size_t i = 0; i < t.size(); ++i)
      th << " " << (i < params.size() ? params[i].name : "p" + std::to_string(i)) << "=" << fmt(t[i]);
    th << "\n";
  }
  out.theta_summary = th.str();
  out.failure = f.feedback.failure;
  return out;
}

std::string PromptBundle::digest() const {
  return util::sha256_hex(system_text + "\x1f" + user_text);
}

PromptBundle build_prompt(const std::vector<ParentInfo>& parents_in, Phase phase, int offspring,
                          const PromptConfig& cfg) {
  std::vector<ParentInfo> parents = parents_in;
  std::size_t source_cap = std::string::npos;
  for (;;) {
    PromptBundle b;
    b.phase = phase;
    b.offspring_requested = offspring;
    b.grammar_reference = grammar_reference();
    b.system_text = std::string(kSystem) + b.grammar_reference;
    std::ostringstream u;
    u << "Parent laws, best first (lower loss is better):\n\n";
    for (std::size_t k = 0; k < parents.size(); ++k) {
      auto pay = make_payload(parents[k]);
      if (pay.source.size() > source_cap) pay.source = pay.source.substr(0, source_cap) + "\n# [truncated]\n";
      u << "## Parent " << (k + 1) << " (" << pay.id << ")\n";
      u << "Fitness: " << (pay.fitness >= fit::kFailureSentinel ? std::string("failed") : fmt(pay.fitness)) << "\n";
      u << "```\n" << pay.source << (pay.source.ends_with("\n") ? "" : "\n") << "```\n";
      if (!pay.loss_summary.empty()) u << "Loss curve (iteration:loss): " << pay.loss_summary << "\n";
      if (!pay.theta_summary.empty()) u << "Parameter trajectory:\n" << pay.theta_summary;
      if (pay.failure) u << "Failure: " << *pay.failure << "\n";
      u << "\n";
      b.parents.push_back(std::move(pay));
    }
    u << frozen_instruction(phase, parents) << "\n\n";
    u << "Work in three steps. First, analyse what the parents' loss curves and parameter "
         "trajectories say about where each law falls short. Second, write a short plan for "
         "improving it. Third, write exactly "
      << offspring << " new laws, each complete (params, elastic block, plastic block) in its own "
                      "fenced code block. Parameter inits are your proposal for starting values. "
                      "Stress must vanish at F = I and laws must stay finite for moderate "
                      "stretch, shear and compression.\n";
    b.user_text = u.str();
    if (b.bytes() <= cfg.max_bytes) return b;
    if (parents.size() > 1) {
      parents.pop_back();
    } else if (source_cap == std::string::npos || source_cap > 256) {
      source_cap = source_cap == std::string::npos ? 4096 : source_cap / 2;
    } else {
      return b;  // nothing left to trim
    }
  }
}

PromptBundle build_repair_prompt(const std::string& source, const std::string& error, Phase phase) {
  PromptBundle b;
  b.phase = phase;
  b.offspring_requested = 1;
  b.grammar_reference = grammar_reference();
  b.system_text = std::string(kSystem) + b.grammar_reference;
  std::ostringstream u;
  u << "This law was rejected:\n```\n" << source << (source.ends_with("\n") ? "" : "\n") << "```\n";
  u << "Error:\n" << error << "\n\n";
  if (phase == Phase::Elastic) u << "Keep the plastic body unchanged.\n";
  if (phase == Phase::Plastic) u << "Keep the elastic body unchanged.\n";
  u << "Return one corrected, complete law in a single fenced code block.\n";
  b.user_text = u.str();
  return b;
}

PromptBundle build_more_prompt(const PromptBundle& original, int missing) {
  PromptBundle b = original;
  b.offspring_requested = missing;
  b.user_text += "\nYour previous answer had too few code blocks. Write " + std::to_string(missing) +
                 " more complete laws, each in its own fenced code block.\n";
  return b;
}

}  // namespace lawkit::llm
