#include "lawkit/dsl/catalog.hpp"

#include <stdexcept>

#include "lawkit/dsl/parser.hpp"

namespace lawkit::dsl {

namespace {

// Moduli in Pa; the domain is a unit cube with ~1000 kg/m^3 material.
constexpr const char* kModuli =
    "param mu init=10000 min=1 max=100000000 log\n"
    "param lam init=10000 min=1 max=100000000 log\n";

constexpr const char* kFixedCorotatedBody =
    "elastic {\n"
    "  let (U, S, V) = svd(F);\n"
    "  let R = U * transpose(V);\n"
    "  let J = det(F);\n"
    "  return 2 * mu * (F - R) * transpose(F) + lam * J * (J - 1) * I\n"
    "}\n";

constexpr const char* kIdentityBody =
    "plastic {\n"
    "  return F\n"
    "}\n";

std::string elastic_entry(const char* comment, const char* body) {
  return std::string(comment) + kModuli + body + kIdentityBody;
}

std::string plastic_entry(const char* comment, const char* extra_params, const char* body) {
  return std::string(comment) + kModuli + extra_params + kFixedCorotatedBody + body;
}

std::vector<CatalogEntry> build() {
  std::vector<std::pair<std::string, std::pair<std::string, bool>>> src = {
      {"fixed_corotated",
       {elastic_entry("# Fixed corotated elasticity\n", kFixedCorotatedBody), false}},
      {"neo_hookean",
       {elastic_entry("# Compressible Neo-Hookean elasticity\n",
                      "elastic {\n"
                      "  let J = det(F);\n"
                      "  return mu * (F * transpose(F) - I) + lam * log(J) * I\n"
                      "}\n"),
        false}},
      {"stvk_hencky",
       {elastic_entry("# St. Venant-Kirchhoff on Hencky strain\n",
                      "elastic {\n"
                      "  let (U, S, V) = svd(F);\n"
                      "  let e = vlog(S);\n"
                      "  return U * (2 * mu * diag(e) + lam * vsum(e) * I) * transpose(U)\n"
                      "}\n"),
        false}},
      {"identity_plastic",
       {std::string("# Purely elastic: no plastic flow\n") + kModuli + kFixedCorotatedBody +
            kIdentityBody,
        true}},
      {"von_mises",
       {plastic_entry("# von Mises return map on Hencky strain (yield stress in Pa)\n",
                      "param yield init=1000 min=1 max=10000000 log\n",
                      "plastic {\n"
                      "  let (U, S, V) = svd(F);\n"
                      "  let e = vlog(S);\n"
                      "  let ehat = e - vsum(e) / 3;\n"
                      "  let n = vnorm(ehat);\n"
                      "  let dg = n - yield / (2 * mu);\n"
                      "  return if dg <= 0 then F else U * diag(vexp(e - dg / n * ehat)) * transpose(V)\n"
                      "}\n"),
        true}},
      {"drucker_prager",
       {plastic_entry("# Drucker-Prager sand return map (alpha: friction coefficient)\n",
                      "param alpha init=0.3 min=0.01 max=2\n",
                      "plastic {\n"
                      "  let (U, S, V) = svd(F);\n"
                      "  let e = vlog(S);\n"
                      "  let tr = vsum(e);\n"
                      "  let ehat = e - tr / 3;\n"
                      "  let n = vnorm(ehat);\n"
                      "  let dg = n + (3 * lam + 2 * mu) / (2 * mu) * tr * alpha;\n"
                      "  return if tr >= 0 then U * transpose(V) else if dg <= 0 then F else U * diag(vexp(e - dg / n * ehat)) * transpose(V)\n"
                      "}\n"),
        true}},
  };
  std::vector<CatalogEntry> out;
  for (auto& [name, body] : src) {
    CatalogEntry e;
    e.name = name;
    e.source = body.first;
    e.ast = parse_law(e.source);
    e.is_plastic = body.second;
    out.push_back(std::move(e));
  }
  return out;
}

bool uses(const Block& b, const std::string& name) {
  for (const auto& p : referenced_params(b)) {
    if (p == name) return true;
  }
  return false;
}

}  // namespace

const std::vector<CatalogEntry>& builtin_catalog() {
  static const std::vector<CatalogEntry> catalog = build();
  return catalog;
}

const CatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& e : builtin_catalog()) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("no catalog law named '" + name + "'");
}

LawAst compose_law(const LawAst& elastic, const LawAst& plastic) {
  LawAst out;
  out.elastic = elastic.elastic;
  out.plastic = plastic.plastic;
  auto take = [&](const std::vector<ParamSpec>& from) {
    for (const auto& p : from) {
      if (out.param_index(p.name) >= 0) continue;
      if (uses(out.elastic, p.name) || uses(out.plastic, p.name)) out.params.push_back(p);
    }
  };
  take(elastic.params);
  take(plastic.params);
  out.source_text = print_law(out);
  return out;
}

LawAst with_inits(LawAst law, const std::vector<std::pair<std::string, double>>& inits) {
  for (const auto& [name, value] : inits) {
    const int i = law.param_index(name);
    if (i < 0) throw std::invalid_argument("law has no parameter '" + name + "'");
    auto& p = law.params[static_cast<std::size_t>(i)];
    if (value < p.lo || value > p.hi) {
      throw std::invalid_argument("init for '" + name + "' outside its bounds");
    }
    p.init = value;
  }
  law.source_text = print_law(law);
  return law;
}

}  // namespace lawkit::dsl
