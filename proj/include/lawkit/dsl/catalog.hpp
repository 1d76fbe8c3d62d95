#pragma once

#include <string>
#include <vector>

#include "lawkit/dsl/ast.hpp"

namespace lawkit::dsl {

struct CatalogEntry {
  std::string name;
  std::string source;
  LawAst ast;
  bool is_plastic = false;  // entry contributes its plastic body
};

/// Classical laws as DSL sources. Elastic entries pair the elastic kernel
/// with identity plasticity; plastic entries pair the return map with fixed
/// corotated elasticity.
const std::vector<CatalogEntry>& builtin_catalog();

/// Throws std::out_of_range for unknown names.
const CatalogEntry& catalog_entry(const std::string& name);

/// Combine the elastic body of `elastic` with the plastic body of `plastic`.
/// Parameters are the union in declaration order; on a name clash the
/// elastic side's spec wins.
LawAst compose_law(const LawAst& elastic, const LawAst& plastic);

/// Replace declared initial values by name (values clamped to bounds are
/// rejected with std::invalid_argument).
LawAst with_inits(LawAst law, const std::vector<std::pair<std::string, double>>& inits);

}  // namespace lawkit::dsl
