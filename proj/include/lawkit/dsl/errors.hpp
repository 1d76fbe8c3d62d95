#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lawkit/dsl/ast.hpp"

namespace lawkit::dsl {

enum class ParseErrorKind { Syntax, UnknownIdentifier, DuplicateParam };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, SourcePos pos, std::string detail,
             std::vector<std::string> expected = {});

  ParseErrorKind kind() const { return kind_; }
  SourcePos pos() const { return pos_; }
  const std::string& detail() const { return detail_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  ParseErrorKind kind_;
  SourcePos pos_;
  std::string detail_;
  std::vector<std::string> expected_;
};

enum class TypeErrorKind { Type, ReturnType };

class TypeError : public std::runtime_error {
 public:
  TypeError(TypeErrorKind kind, SourcePos pos, const std::string& msg);

  TypeErrorKind kind() const { return kind_; }
  SourcePos pos() const { return pos_; }

 private:
  TypeErrorKind kind_;
  SourcePos pos_;
};

enum class EvalErrorKind { NonFinite, Domain };

/// Raised when evaluation produces NaN/Inf or hits a domain violation.
/// `node_id` identifies the offending subexpression (pre-order id).
class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind kind, int node_id, const std::string& msg);

  EvalErrorKind kind() const { return kind_; }
  int node_id() const { return node_id_; }

 private:
  EvalErrorKind kind_;
  int node_id_;
};

class NonFiniteInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lawkit::dsl
