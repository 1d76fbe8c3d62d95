#include "lawkit/dsl/typecheck.hpp"

#include <map>
#include <string>

#include "lawkit/dsl/parser.hpp"

namespace lawkit::dsl {

namespace {

using T = ValueType;

struct Binding {
  T type;
  int slot;
};

class Checker {
 public:
  explicit Checker(const LawAst& law) : law_(law) {}

  void block(Block& b, const char* which) {
    scope_.clear();
    int next_slot = 0;
    for (auto& l : b.lets) {
      if (l.names.size() == 3) {
        if (l.value.kind != ExprKind::Call || l.value.fn != Builtin::Svd) {
          throw TypeError(TypeErrorKind::Type, l.pos,
                          "only svd(...) can be destructured into three names");
        }
        check(l.value);
        l.slots = {next_slot, next_slot + 1, next_slot + 2};
        scope_[l.names[0]] = {T::Mat3, next_slot};
        scope_[l.names[1]] = {T::Vec3, next_slot + 1};
        scope_[l.names[2]] = {T::Mat3, next_slot + 2};
        next_slot += 3;
      } else {
        const T t = check(l.value);
        if (t == T::Triple) {
          throw TypeError(TypeErrorKind::Type, l.pos,
                          "svd returns a triple; destructure it with let (U, S, V) = svd(...)");
        }
        l.slots = {next_slot};
        scope_[l.names[0]] = {t, next_slot};
        ++next_slot;
      }
    }
    const T r = check(b.result);
    if (r != T::Mat3) {
      throw TypeError(TypeErrorKind::ReturnType, b.result.pos,
                      std::string(which) + " body must return Mat3, got " + to_string(r));
    }
    b.slot_count = next_slot;
  }

 private:
  [[noreturn]] void bad(const Expr& e, const std::string& msg) {
    throw TypeError(TypeErrorKind::Type, e.pos, msg + " in `" + print_expr(e) + "`");
  }

  T check(Expr& e) {
    e.id = next_id_++;
    e.type = infer(e);
    return e.type;
  }

  T infer(Expr& e) {
    switch (e.kind) {
      case ExprKind::Number:
        return T::Scalar;
      case ExprKind::Param: {
        const int idx = law_.param_index(e.name);
        if (idx < 0) bad(e, "undeclared parameter '" + e.name + "'");
        e.slot = idx;
        return T::Scalar;
      }
      case ExprKind::Local: {
        auto it = scope_.find(e.name);
        if (it == scope_.end()) bad(e, "unbound name '" + e.name + "'");
        e.slot = it->second.slot;
        return it->second.type;
      }
      case ExprKind::Input:
      case ExprKind::Identity:
        return T::Mat3;
      case ExprKind::Negate: {
        const T t = check(e.args[0]);
        if (t == T::Triple) bad(e, "cannot negate a triple");
        return t;
      }
      case ExprKind::Binary:
        return binary(e);
      case ExprKind::Call:
        return call(e);
      case ExprKind::If: {
        const T l = check(e.args[0]);
        const T r = check(e.args[1]);
        if (l != T::Scalar || r != T::Scalar) bad(e, "comparison operands must be Scalar");
        const T a = check(e.args[2]);
        const T b = check(e.args[3]);
        if (a != b) {
          bad(e, std::string("if branches differ: ") + to_string(a) + " vs " + to_string(b));
        }
        if (a == T::Triple) bad(e, "if branches cannot be triples");
        return a;
      }
    }
    bad(e, "unknown expression");
  }

  T binary(Expr& e) {
    const T a = check(e.args[0]);
    const T b = check(e.args[1]);
    auto fail = [&]() -> T {
      static constexpr const char* names[] = {"add", "subtract", "multiply", "divide"};
      bad(e, std::string("cannot ") + names[static_cast<int>(e.op)] + " " + to_string(a) +
                 " and " + to_string(b));
    };
    if (a == T::Triple || b == T::Triple) fail();
    switch (e.op) {
      case BinOp::Add:
      case BinOp::Sub:
        if (a == b) return a;
        if ((a == T::Vec3 && b == T::Scalar) || (a == T::Scalar && b == T::Vec3)) return T::Vec3;
        return fail();
      case BinOp::Mul:
        if (a == T::Scalar) return b;
        if (b == T::Scalar) return a;
        if (a == T::Mat3 && b == T::Mat3) return T::Mat3;
        if (a == T::Mat3 && b == T::Vec3) return T::Vec3;
        return fail();
      case BinOp::Div:
        if (b == T::Scalar) return a;
        return fail();
    }
    return fail();
  }

  T call(Expr& e) {
    std::vector<T> in;
    for (auto& a : e.args) in.push_back(check(a));
    auto want = [&](std::initializer_list<T> sig) {
      std::size_t i = 0;
      for (T t : sig) {
        if (i >= in.size() || in[i] != t) {
          std::string s = std::string(builtin_name(e.fn)) + " expects (";
          std::size_t k = 0;
          for (T w : sig) s += (k++ ? ", " : "") + std::string(to_string(w));
          s += ")";
          bad(e, s);
        }
        ++i;
      }
    };
    switch (e.fn) {
      case Builtin::Svd: want({T::Mat3}); return T::Triple;
      case Builtin::Det:
      case Builtin::Trace:
      case Builtin::NormFro: want({T::Mat3}); return T::Scalar;
      case Builtin::Transpose:
      case Builtin::Inverse:
      case Builtin::Dev: want({T::Mat3}); return T::Mat3;
      case Builtin::Diag: want({T::Vec3}); return T::Mat3;
      case Builtin::Outer: want({T::Vec3, T::Vec3}); return T::Mat3;
      case Builtin::Log:
      case Builtin::Exp:
      case Builtin::Sqrt:
      case Builtin::Abs: want({T::Scalar}); return T::Scalar;
      case Builtin::Pow:
      case Builtin::Min:
      case Builtin::Max: want({T::Scalar, T::Scalar}); return T::Scalar;
      case Builtin::Clamp: want({T::Scalar, T::Scalar, T::Scalar}); return T::Scalar;
      case Builtin::Vlog:
      case Builtin::Vexp: want({T::Vec3}); return T::Vec3;
      case Builtin::Vsum:
      case Builtin::Vnorm: want({T::Vec3}); return T::Scalar;
      case Builtin::Vmax: want({T::Vec3, T::Scalar}); return T::Vec3;
    }
    bad(e, "unknown builtin");
  }

  const LawAst& law_;
  std::map<std::string, Binding> scope_;
  int next_id_ = 0;
};

}  // namespace

TypedLaw typecheck(LawAst ast) {
  Checker c(ast);
  c.block(ast.elastic, "elastic");
  c.block(ast.plastic, "plastic");
  TypedLaw out;
  out.param_count = static_cast<int>(ast.params.size());
  out.ast = std::move(ast);
  return out;
}

TypedLaw compile_law(std::string_view source) { return typecheck(parse_law(source)); }

}  // namespace lawkit::dsl
