#pragma once

#include <string_view>

#include "lawkit/dsl/ast.hpp"
#include "lawkit/dsl/errors.hpp"

namespace lawkit::dsl {

/// Parse a law from DSL source. Identifier resolution happens here, so an
/// undefined symbol is reported as UnknownIdentifier before any later syntax
/// problem. Throws ParseError.
LawAst parse_law(std::string_view source);

/// Canonical source for a law. parse_law(print_law(a)) == a.
std::string print_law(const LawAst& law);
std::string print_expr(const Expr& e);
std::string print_block(const Block& b);

}  // namespace lawkit::dsl
