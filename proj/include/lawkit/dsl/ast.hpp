#pragma once

#include <string>
#include <vector>

namespace lawkit::dsl {

struct SourcePos {
  int line = 0;
  int column = 0;
};

enum class ValueType { Unknown, Scalar, Vec3, Mat3, Triple };

const char* to_string(ValueType t);

enum class ExprKind { Number, Param, Local, Input, Identity, Negate, Binary, Call, If };

enum class BinOp { Add, Sub, Mul, Div };

enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

enum class Builtin {
  Svd, Det, Trace, Transpose, Inverse, Diag, Outer,
  Log, Exp, Sqrt, Abs, Pow, Min, Max, Clamp,
  Vlog, Vexp, Vsum, Vnorm, Vmax,
  Dev, NormFro,
};

const char* builtin_name(Builtin b);
int builtin_arity(Builtin b);
bool lookup_builtin(const std::string& name, Builtin& out);

/// Expression node. Children live in `args`; for `If` the layout is
/// [cmp_lhs, cmp_rhs, then, else]. `type`, `slot` and `id` are filled by the
/// typechecker and do not take part in structural equality.
struct Expr {
  ExprKind kind = ExprKind::Number;
  double number = 0.0;
  std::string name;
  BinOp op = BinOp::Add;
  CmpOp cmp = CmpOp::Lt;
  Builtin fn = Builtin::Det;
  std::vector<Expr> args;
  SourcePos pos;

  ValueType type = ValueType::Unknown;
  int slot = -1;
  int id = -1;

  friend bool operator==(const Expr& a, const Expr& b);
};

struct Let {
  std::vector<std::string> names;  // one name, or three for `let (U,S,V) = svd(...)`
  Expr value;
  SourcePos pos;
  std::vector<int> slots;

  friend bool operator==(const Let& a, const Let& b) {
    return a.names == b.names && a.value == b.value;
  }
};

struct Block {
  std::vector<Let> lets;
  Expr result;
  int slot_count = 0;

  friend bool operator==(const Block& a, const Block& b) {
    return a.lets == b.lets && a.result == b.result;
  }
};

struct ParamSpec {
  std::string name;
  double init = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct LawAst {
  std::vector<ParamSpec> params;
  Block elastic;
  Block plastic;
  std::string source_text;

  /// Structural equality: parameters and both bodies; source text ignored.
  friend bool operator==(const LawAst& a, const LawAst& b) {
    return a.params == b.params && a.elastic == b.elastic && a.plastic == b.plastic;
  }

  int param_index(const std::string& name) const;
};

/// Number of expression nodes in a block (let values plus return).
int count_nodes(const Block& b);
int count_nodes(const Expr& e);

/// Names of parameters referenced anywhere in the block.
std::vector<std::string> referenced_params(const Block& b);

}  // namespace lawkit::dsl
