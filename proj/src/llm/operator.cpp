#include "lawkit/llm/operator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lawkit/dsl/catalog.hpp"
#include "lawkit/dsl/parser.hpp"
#include "lawkit/dsl/typecheck.hpp"

namespace lawkit::llm {

using dsl::Block;
using dsl::Expr;
using dsl::ExprKind;
using dsl::LawAst;
using dsl::ParamSpec;

std::vector<std::string> extract_offspring(const std::string& response, int max_blocks) {
  std::vector<std::string> out;
  std::istringstream in(response);
  std::string line;
  bool inside = false;
  std::string fence;
  std::string cur;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view t = line;
    while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
    if (!inside) {
      if (t.starts_with("```") || t.starts_with("~~~")) {
        inside = true;
        fence = std::string(t.substr(0, 3));
        cur.clear();
      }
      continue;
    }
    std::string_view r = t;
    while (!r.empty() && (r.back() == ' ' || r.back() == '\t')) r.remove_suffix(1);
    if (r == fence || (r.size() > 3 && r.starts_with(fence) && r.find_first_not_of(fence[0]) == std::string_view::npos)) {
      inside = false;
      if (cur.find_first_not_of(" \t\n") != std::string::npos) out.push_back(cur);
      if (static_cast<int>(out.size()) >= max_blocks) break;
      continue;
    }
    cur += line;
    cur += '\n';
  }
  // an unterminated final block still counts
  if (inside && static_cast<int>(out.size()) < max_blocks && cur.find_first_not_of(" \t\n") != std::string::npos)
    out.push_back(cur);
  if (out.empty()) throw NoBlocksFound("response contains no fenced code blocks");
  return out;
}

RepairOutcome repair_loop(const std::string& source, const std::string& error, Operator& op,
                          const std::function<std::optional<std::string>(const std::string&)>& validate,
                          Phase phase, int max_retries) {
  RepairOutcome r;
  r.last_source = source;
  r.errors.push_back(error);
  std::string cur = source;
  std::string err = error;
  for (int a = 1; a <= max_retries; ++a) {
    cur = op.repair({cur, err, phase, a});
    r.attempts = a;
    r.last_source = cur;
    auto e = validate(cur);
    if (!e) {
      r.source = cur;
      return r;
    }
    err = *e;
    r.errors.push_back(err);
  }
  return r;
}

// ---------------------------------------------------------------------------
// scripted mutations

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

const char* kElasticTemplates[] = {"fixed_corotated", "neo_hookean", "stvk_hencky"};
const char* kPlasticTemplates[] = {"identity_plastic", "von_mises", "drucker_prager"};

bool references(const Block& b, const std::string& name) {
  auto r = dsl::referenced_params(b);
  return std::find(r.begin(), r.end(), name) != r.end();
}

const ParamSpec* find_param(const std::vector<ParamSpec>& ps, const std::string& name) {
  for (const auto& p : ps)
    if (p.name == name) return &p;
  return nullptr;
}

// Keep declarations in the order of `base`, then `extra`, dropping unused
// ones; a name already in `base` keeps its base spec.
std::vector<ParamSpec> rebuild_params(const LawAst& law, const std::vector<ParamSpec>& base,
                                      const std::vector<ParamSpec>& extra) {
  std::vector<ParamSpec> out;
  auto take = [&](const ParamSpec& p) {
    if (find_param(out, p.name)) return;
    if (references(law.elastic, p.name) || references(law.plastic, p.name)) out.push_back(p);
  };
  for (const auto& p : base) take(p);
  for (const auto& p : extra) take(p);
  return out;
}

// Parse a law text and return it; templates are fixed so a failure here is a bug.
LawAst reparse(const LawAst& law) { return dsl::parse_law(dsl::print_law(law)); }

// Parse an expression using the given parameter names.
Expr parse_snippet(const std::string& expr, const std::vector<std::string>& params) {
  std::string src;
  for (const auto& p : params) src += "param " + p + " init=1 min=0 max=2\n";
  src += "elastic { return (" + expr + ") * I }\nplastic { return F }\n";
  auto ast = dsl::parse_law(src);
  return ast.elastic.result.args.at(0);
}

bool replace_all(Expr& e, const std::function<bool(const Expr&)>& match, const Expr& with) {
  if (match(e)) {
    e = with;
    return true;
  }
  bool any = false;
  for (auto& a : e.args) any = replace_all(a, match, with) || any;
  return any;
}

bool replace_in_block(Block& b, const std::function<bool(const Expr&)>& match, const Expr& with) {
  bool any = false;
  for (auto& l : b.lets) any = replace_all(l.value, match, with) || any;
  any = replace_all(b.result, match, with) || any;
  return any;
}

bool contains(const Expr& e, const std::function<bool(const Expr&)>& match) {
  if (match(e)) return true;
  for (const auto& a : e.args)
    if (contains(a, match)) return true;
  return false;
}

bool block_contains(const Block& b, const std::function<bool(const Expr&)>& match) {
  for (const auto& l : b.lets)
    if (contains(l.value, match)) return true;
  return contains(b.result, match);
}

bool is_det_f(const Expr& e) {
  return e.kind == ExprKind::Call && e.fn == dsl::Builtin::Det && e.args.size() == 1 &&
         e.args[0].kind == ExprKind::Input;
}

bool is_clamp_of_det(const Expr& e) {
  return e.kind == ExprKind::Call && e.fn == dsl::Builtin::Clamp && !e.args.empty() && is_det_f(e.args[0]);
}

// Swap one body for a catalog template's; the other body and its params stay.
std::optional<LawAst> swap_body(const LawAst& parent, const std::string& tmpl, bool elastic) {
  const auto& t = dsl::catalog_entry(tmpl).ast;
  LawAst out = parent;
  if (elastic) {
    if (parent.elastic == t.elastic) return std::nullopt;
    out.elastic = t.elastic;
  } else {
    if (parent.plastic == t.plastic) return std::nullopt;
    out.plastic = t.plastic;
  }
  out.params = rebuild_params(out, parent.params, t.params);
  return out;
}

std::optional<LawAst> scale_param(const LawAst& parent, const std::string& name, double factor) {
  LawAst out = parent;
  const int i = out.param_index(name);
  if (i < 0) return std::nullopt;
  auto& p = out.params[static_cast<std::size_t>(i)];
  const double v = std::clamp(p.init * factor, p.lo, p.hi);
  if (v == p.init) return std::nullopt;
  p.init = v;
  return out;
}

// Log-scale params used only by the elastic body.
std::vector<std::string> elastic_moduli(const LawAst& law) {
  std::vector<std::string> out;
  for (const auto& p : law.params)
    if (p.log_scale && references(law.elastic, p.name) && !references(law.plastic, p.name))
      out.push_back(p.name);
  return out;
}

// Params of the plastic body not used by the elastic one.
std::vector<std::string> plastic_params(const LawAst& law) {
  std::vector<std::string> out;
  for (const auto& p : law.params)
    if (references(law.plastic, p.name) && !references(law.elastic, p.name)) out.push_back(p.name);
  return out;
}

std::optional<LawAst> add_volumetric(const LawAst& parent) {
  if (parent.param_index("kvol") >= 0) return std::nullopt;
  LawAst out = parent;
  Expr add;
  add.kind = ExprKind::Binary;
  add.op = dsl::BinOp::Add;
  add.args = {out.elastic.result, parse_snippet("kvol * det(F) * (det(F) - 1)", {"kvol"})};
  // parse_snippet wraps scalars; turn the term back into a matrix
  Expr term;
  term.kind = ExprKind::Binary;
  term.op = dsl::BinOp::Mul;
  term.args = {add.args[1], Expr{}};
  term.args[1].kind = ExprKind::Identity;
  add.args[1] = term;
  out.elastic.result = add;
  out.params.push_back({"kvol", 1000.0, 1.0, 1e8, true});
  return reparse(out);
}

std::optional<LawAst> clamp_guard(const LawAst& parent) {
  if (!block_contains(parent.elastic, is_det_f) || block_contains(parent.elastic, is_clamp_of_det))
    return std::nullopt;
  LawAst out = parent;
  replace_in_block(out.elastic, is_det_f, parse_snippet("clamp(det(F), 0.2, 5)", {}));
  return reparse(out);
}

std::optional<LawAst> hardening(const LawAst& parent) {
  if (!references(parent.plastic, "yield") || references(parent.elastic, "yield") ||
      parent.param_index("hard") >= 0)
    return std::nullopt;
  LawAst out = parent;
  auto is_yield = [](const Expr& e) { return e.kind == ExprKind::Param && e.name == "yield"; };
  replace_in_block(out.plastic, is_yield, parse_snippet("yield * exp(hard * (1 - det(F)))", {"yield", "hard"}));
  out.params.push_back({"hard", 10.0, 1.0, 50.0, false});
  return reparse(out);
}

struct Choice {
  std::string mutation;
  std::uint64_t variant;
};

// Every concrete (mutation, variant) that changes `parent`, in bank order.
std::vector<Choice> enumerate_choices(const LawAst& parent, Phase phase) {
  std::vector<Choice> out;
  for (const auto& name : applicable_mutations(parent, phase)) {
    for (std::uint64_t v = 0; v < 6; ++v) {
      auto m = apply_mutation(name, parent, v);
      if (!m) continue;
      bool dup = false;
      for (const auto& c : out)
        if (c.mutation == name && *apply_mutation(c.mutation, parent, c.variant) == *m) dup = true;
      if (!dup) out.push_back({name, v});
    }
  }
  return out;
}

}  // namespace

const std::vector<Mutation>& mutation_bank() {
  static const std::vector<Mutation> bank = {
      {"swap_elastic", Phase::Elastic},   {"scale_modulus", Phase::Elastic},
      {"add_volumetric", Phase::Elastic}, {"clamp_guard", Phase::Elastic},
      {"swap_plastic", Phase::Plastic},   {"perturb_yield", Phase::Plastic},
      {"hardening", Phase::Plastic},
  };
  return bank;
}

std::optional<LawAst> apply_mutation(const std::string& name, const LawAst& parent, std::uint64_t variant) {
  if (name == "swap_elastic") {
    std::vector<std::string> opts;
    for (const char* t : kElasticTemplates)
      if (dsl::catalog_entry(t).ast.elastic != parent.elastic) opts.emplace_back(t);
    if (variant >= opts.size()) return std::nullopt;
    return swap_body(parent, opts[variant], true);
  }
  if (name == "swap_plastic") {
    std::vector<std::string> opts;
    for (const char* t : kPlasticTemplates)
      if (dsl::catalog_entry(t).ast.plastic != parent.plastic) opts.emplace_back(t);
    if (variant >= opts.size()) return std::nullopt;
    return swap_body(parent, opts[variant], false);
  }
  if (name == "scale_modulus") {
    auto ps = elastic_moduli(parent);
    if (variant >= 2 * ps.size()) return std::nullopt;
    return scale_param(parent, ps[variant / 2], variant % 2 == 0 ? 2.0 : 0.5);
  }
  if (name == "perturb_yield") {
    auto ps = plastic_params(parent);
    if (variant >= 2 * ps.size()) return std::nullopt;
    return scale_param(parent, ps[variant / 2], variant % 2 == 0 ? 1.5 : 0.67);
  }
  if (variant != 0) return std::nullopt;
  if (name == "add_volumetric") return add_volumetric(parent);
  if (name == "clamp_guard") return clamp_guard(parent);
  if (name == "hardening") return hardening(parent);
  throw std::invalid_argument("unknown mutation '" + name + "'");
}

std::vector<std::string> applicable_mutations(const LawAst& parent, Phase phase) {
  std::vector<std::string> out;
  for (const auto& m : mutation_bank()) {
    if (phase != Phase::Joint && m.phase != phase) continue;
    for (std::uint64_t v = 0; v < 6; ++v) {
      if (apply_mutation(m.name, parent, v)) {
        out.push_back(m.name);
        break;
      }
    }
  }
  return out;
}

LawAst with_fitted_inits(const ParentInfo& p) {
  LawAst out = p.ast;
  if (!p.fitted || p.fitted->fitness >= fit::kFailureSentinel) return out;
  const auto& th = p.fitted->theta_star;
  if (th.size() != out.params.size()) return out;
  for (std::size_t i = 0; i < th.size(); ++i)
    out.params[i].init = std::clamp(th[i], out.params[i].lo, out.params[i].hi);
  return out;
}

std::vector<std::string> propose_mock(const std::vector<ParentInfo>& parents, Phase phase, int offspring,
                                      std::uint64_t seed) {
  std::vector<std::string> out;
  if (parents.empty() || offspring <= 0) return out;
  const Phase eff = phase == Phase::Init ? Phase::Joint : phase;
  std::vector<LawAst> bases;
  std::vector<std::vector<Choice>> choices;
  std::vector<std::uint64_t> offsets;
  for (const auto& p : parents) {
    bases.push_back(with_fitted_inits(p));
    choices.push_back(enumerate_choices(bases.back(), eff));
    offsets.push_back(splitmix(seed ^ fnv1a(dsl::print_law(p.ast))));
  }
  std::vector<std::size_t> used(parents.size(), 0);
  std::vector<std::string> seen;
  for (const auto& b : bases) seen.push_back(dsl::print_law(b));
  // round-robin over parents; each parent walks its choice list from a seeded offset
  std::size_t k = 0;
  std::size_t stalls = 0;
  while (static_cast<int>(out.size()) < offspring && stalls < parents.size()) {
    const std::size_t pi = k % parents.size();
    ++k;
    const auto& cs = choices[pi];
    bool produced = false;
    while (used[pi] < cs.size()) {
      const auto& c = cs[(offsets[pi] + used[pi]) % cs.size()];
      ++used[pi];
      auto m = apply_mutation(c.mutation, bases[pi], c.variant);
      auto src = dsl::print_law(*m);
      if (std::find(seen.begin(), seen.end(), src) != seen.end()) continue;
      seen.push_back(src);
      out.push_back(src);
      produced = true;
      break;
    }
    stalls = produced ? 0 : stalls + 1;
  }
  return out;
}

std::vector<std::string> MockOperator::propose(const ProposalRequest& req) {
  const std::uint64_t s = splitmix(seed_ ^ splitmix(static_cast<std::uint64_t>(req.iteration) + 1));
  auto out = propose_mock(req.parents, req.phase, req.offspring, s);
  TranscriptEntry e;
  e.kind = "propose";
  e.prompt_digest = build_prompt(req.parents, req.phase, req.offspring).digest();
  e.sources = out;
  e.timestamp = utc_timestamp();
  transcript_.append(std::move(e));
  return out;
}

std::string MockOperator::repair(const RepairRequest& req) {
  TranscriptEntry e;
  e.kind = "repair";
  e.prompt_digest = build_repair_prompt(req.source, req.error, req.phase).digest();
  e.sources = {req.source};
  e.repair_attempts = req.attempt;
  e.timestamp = utc_timestamp();
  transcript_.append(std::move(e));
  return req.source;
}

}  // namespace lawkit::llm
