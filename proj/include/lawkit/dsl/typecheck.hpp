#pragma once

#include "lawkit/dsl/ast.hpp"
#include "lawkit/dsl/errors.hpp"

namespace lawkit::dsl {

/// A law whose every subexpression carries a type and whose bodies both
/// return Mat3. Immutable once built; safe to evaluate concurrently.
struct TypedLaw {
  LawAst ast;
  ValueType elastic_type = ValueType::Mat3;
  ValueType plastic_type = ValueType::Mat3;
  int param_count = 0;

  const std::vector<ParamSpec>& params() const { return ast.params; }
};

TypedLaw typecheck(LawAst ast);

/// parse_law followed by typecheck.
TypedLaw compile_law(std::string_view source);

}  // namespace lawkit::dsl
