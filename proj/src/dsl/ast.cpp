#include "lawkit/dsl/ast.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace lawkit::dsl {

namespace {

struct BuiltinInfo {
  Builtin fn;
  const char* name;
  int arity;
};

constexpr std::array<BuiltinInfo, 22> kBuiltins{{
    {Builtin::Svd, "svd", 1},         {Builtin::Det, "det", 1},
    {Builtin::Trace, "trace", 1},     {Builtin::Transpose, "transpose", 1},
    {Builtin::Inverse, "inverse", 1}, {Builtin::Diag, "diag", 1},
    {Builtin::Outer, "outer", 2},     {Builtin::Log, "log", 1},
    {Builtin::Exp, "exp", 1},         {Builtin::Sqrt, "sqrt", 1},
    {Builtin::Abs, "abs", 1},         {Builtin::Pow, "pow", 2},
    {Builtin::Min, "min", 2},         {Builtin::Max, "max", 2},
    {Builtin::Clamp, "clamp", 3},     {Builtin::Vlog, "vlog", 1},
    {Builtin::Vexp, "vexp", 1},       {Builtin::Vsum, "vsum", 1},
    {Builtin::Vnorm, "vnorm", 1},     {Builtin::Vmax, "vmax", 2},
    {Builtin::Dev, "dev", 1},         {Builtin::NormFro, "norm_fro", 1},
}};

const BuiltinInfo& info(Builtin b) {
  for (const auto& i : kBuiltins) {
    if (i.fn == b) return i;
  }
  return kBuiltins[0];
}

void collect_params(const Expr& e, std::vector<std::string>& out) {
  if (e.kind == ExprKind::Param &&
      std::find(out.begin(), out.end(), e.name) == out.end()) {
    out.push_back(e.name);
  }
  for (const auto& a : e.args) collect_params(a, out);
}

}  // namespace

const char* to_string(ValueType t) {
  switch (t) {
    case ValueType::Scalar: return "Scalar";
    case ValueType::Vec3: return "Vec3";
    case ValueType::Mat3: return "Mat3";
    case ValueType::Triple: return "(Mat3, Vec3, Mat3)";
    case ValueType::Unknown: break;
  }
  return "Unknown";
}

const char* builtin_name(Builtin b) { return info(b).name; }

int builtin_arity(Builtin b) { return info(b).arity; }

bool lookup_builtin(const std::string& name, Builtin& out) {
  for (const auto& i : kBuiltins) {
    if (name == i.name) {
      out = i.fn;
      return true;
    }
  }
  return false;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Number:
      if (a.number != b.number) return false;
      break;
    case ExprKind::Param:
    case ExprKind::Local:
      if (a.name != b.name) return false;
      break;
    case ExprKind::Binary:
      if (a.op != b.op) return false;
      break;
    case ExprKind::Call:
      if (a.fn != b.fn) return false;
      break;
    case ExprKind::If:
      if (a.cmp != b.cmp) return false;
      break;
    default:
      break;
  }
  return a.args == b.args;
}

int LawAst::param_index(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int count_nodes(const Expr& e) {
  int n = 1;
  for (const auto& a : e.args) n += count_nodes(a);
  return n;
}

int count_nodes(const Block& b) {
  int n = count_nodes(b.result);
  for (const auto& l : b.lets) n += count_nodes(l.value);
  return n;
}

std::vector<std::string> referenced_params(const Block& b) {
  std::vector<std::string> out;
  for (const auto& l : b.lets) collect_params(l.value, out);
  collect_params(b.result, out);
  return out;
}

}  // namespace lawkit::dsl
