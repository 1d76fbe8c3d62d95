#include "lawkit/dsl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lawkit/dsl/parser.hpp"
#include "lawkit/dsl/svd3.hpp"

namespace lawkit::dsl {

namespace {

bool finite(const Value& v) {
  switch (v.type) {
    case ValueType::Scalar: return std::isfinite(v.s);
    case ValueType::Vec3: return v.v.allFinite();
    case ValueType::Mat3: return v.m.allFinite();
    default: return true;
  }
}

Value scalar(double s) {
  Value v;
  v.type = ValueType::Scalar;
  v.s = s;
  return v;
}

Value vec(const Vec3& x) {
  Value v;
  v.type = ValueType::Vec3;
  v.v = x;
  return v;
}

Value mat(const Mat3& x) {
  Value v;
  v.type = ValueType::Mat3;
  v.m = x;
  return v;
}

[[noreturn]] void domain(const Expr& e, const std::string& what) {
  throw EvalError(EvalErrorKind::Domain, e.id, what + " in `" + print_expr(e) + "`");
}

bool compare(CmpOp op, double a, double b) {
  switch (op) {
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
  }
  return false;
}

}  // namespace

ParamVector initial_params(const TypedLaw& law) {
  ParamVector p;
  for (const auto& s : law.params()) p.values.push_back(s.init);
  return p;
}

void check_params(const TypedLaw& law, const ParamVector& theta) {
  if (static_cast<int>(theta.size()) != law.param_count) {
    throw std::invalid_argument("parameter vector has " + std::to_string(theta.size()) +
                                " entries, law declares " + std::to_string(law.param_count));
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto& s = law.params()[i];
    if (!(theta[i] >= s.lo && theta[i] <= s.hi)) {
      throw std::invalid_argument("parameter '" + s.name + "' = " + std::to_string(theta[i]) +
                                  " outside [" + std::to_string(s.lo) + ", " +
                                  std::to_string(s.hi) + "]");
    }
  }
}

Evaluator::Evaluator(const TypedLaw& law)
    : law_(&law),
      slots_(static_cast<std::size_t>(
          std::max({law.ast.elastic.slot_count, law.ast.plastic.slot_count, 1}))) {}

Mat3 Evaluator::elastic(const Mat3& F, std::span<const double> theta) {
  return run(law_->ast.elastic, F, theta);
}

Mat3 Evaluator::plastic(const Mat3& F, std::span<const double> theta) {
  return run(law_->ast.plastic, F, theta);
}

Mat3 Evaluator::run(const Block& body, const Mat3& F, std::span<const double> theta) {
  input_ = &F;
  theta_ = theta;
  for (const auto& l : body.lets) {
    if (l.slots.size() == 3) {
      const Value arg = eval(l.value.args[0]);
      const Svd3 d = svd3(arg.m);
      slots_[l.slots[0]] = mat(d.U);
      slots_[l.slots[1]] = vec(d.S);
      slots_[l.slots[2]] = mat(d.V);
    } else {
      slots_[l.slots[0]] = eval(l.value);
    }
  }
  return eval(body.result).m;
}

Value Evaluator::eval(const Expr& e) {
  Value out;
  switch (e.kind) {
    case ExprKind::Number:
      return scalar(e.number);
    case ExprKind::Param:
      return scalar(theta_[static_cast<std::size_t>(e.slot)]);
    case ExprKind::Local:
      return slots_[static_cast<std::size_t>(e.slot)];
    case ExprKind::Input:
      return mat(*input_);
    case ExprKind::Identity:
      return mat(Mat3::Identity());
    case ExprKind::Negate: {
      out = eval(e.args[0]);
      out.s = -out.s;
      out.v = -out.v;
      out.m = -out.m;
      return out;
    }
    case ExprKind::If: {
      const double a = eval(e.args[0]).s;
      const double b = eval(e.args[1]).s;
      return eval(e.args[compare(e.cmp, a, b) ? 2 : 3]);
    }
    case ExprKind::Binary: {
      const Value a = eval(e.args[0]);
      const Value b = eval(e.args[1]);
      const ValueType ta = a.type;
      const ValueType tb = b.type;
      using T = ValueType;
      switch (e.op) {
        case BinOp::Add:
        case BinOp::Sub: {
          const double sign = e.op == BinOp::Add ? 1.0 : -1.0;
          if (ta == T::Scalar && tb == T::Scalar) out = scalar(a.s + sign * b.s);
          else if (ta == T::Vec3 && tb == T::Vec3) out = vec(a.v + sign * b.v);
          else if (ta == T::Mat3 && tb == T::Mat3) out = mat(a.m + sign * b.m);
          else if (ta == T::Vec3) out = vec(a.v + Vec3::Constant(sign * b.s));
          else out = vec(Vec3::Constant(a.s) + sign * b.v);
          break;
        }
        case BinOp::Mul:
          if (ta == T::Scalar && tb == T::Scalar) out = scalar(a.s * b.s);
          else if (ta == T::Scalar && tb == T::Vec3) out = vec(a.s * b.v);
          else if (ta == T::Scalar) out = mat(a.s * b.m);
          else if (tb == T::Scalar && ta == T::Vec3) out = vec(a.v * b.s);
          else if (tb == T::Scalar) out = mat(a.m * b.s);
          else if (tb == T::Vec3) out = vec(a.m * b.v);
          else out = mat(a.m * b.m);
          break;
        case BinOp::Div:
          if (ta == T::Scalar) out = scalar(a.s / b.s);
          else if (ta == T::Vec3) out = vec(a.v / b.s);
          else out = mat(a.m / b.s);
          break;
      }
      break;
    }
    case ExprKind::Call: {
      const Value a = eval(e.args[0]);
      switch (e.fn) {
        case Builtin::Svd:
          domain(e, "svd used outside a destructuring let");
        case Builtin::Det: out = scalar(a.m.determinant()); break;
        case Builtin::Trace: out = scalar(a.m.trace()); break;
        case Builtin::NormFro: out = scalar(a.m.norm()); break;
        case Builtin::Transpose: out = mat(a.m.transpose()); break;
        case Builtin::Inverse: {
          const double d = a.m.determinant();
          const double scale = a.m.norm();
          if (d == 0.0 || std::abs(d) <= 1e-14 * scale * scale * scale) {
            domain(e, "inverse of a singular matrix");
          }
          out = mat(a.m.inverse());
          break;
        }
        case Builtin::Dev: out = mat(a.m - (a.m.trace() / 3.0) * Mat3::Identity()); break;
        case Builtin::Diag: out = mat(a.v.asDiagonal()); break;
        case Builtin::Outer: out = mat(a.v * eval(e.args[1]).v.transpose()); break;
        case Builtin::Log:
          if (!(a.s > 0.0)) domain(e, "log of non-positive value " + std::to_string(a.s));
          out = scalar(std::log(a.s));
          break;
        case Builtin::Exp: out = scalar(std::exp(a.s)); break;
        case Builtin::Sqrt:
          if (a.s < 0.0) domain(e, "sqrt of negative value " + std::to_string(a.s));
          out = scalar(std::sqrt(a.s));
          break;
        case Builtin::Abs: out = scalar(std::abs(a.s)); break;
        case Builtin::Pow: {
          const double b = eval(e.args[1]).s;
          if (a.s < 0.0 && b != std::floor(b)) domain(e, "pow of negative base with fractional exponent");
          if (a.s == 0.0 && b < 0.0) domain(e, "pow of zero with negative exponent");
          out = scalar(std::pow(a.s, b));
          break;
        }
        case Builtin::Min: out = scalar(std::min(a.s, eval(e.args[1]).s)); break;
        case Builtin::Max: out = scalar(std::max(a.s, eval(e.args[1]).s)); break;
        case Builtin::Clamp: {
          const double lo = eval(e.args[1]).s;
          const double hi = eval(e.args[2]).s;
          if (lo > hi) domain(e, "clamp with lower bound above upper bound");
          out = scalar(std::clamp(a.s, lo, hi));
          break;
        }
        case Builtin::Vlog:
          if (!(a.v.minCoeff() > 0.0)) domain(e, "vlog of non-positive component");
          out = vec(a.v.array().log().matrix());
          break;
        case Builtin::Vexp: out = vec(a.v.array().exp().matrix()); break;
        case Builtin::Vsum: out = scalar(a.v.sum()); break;
        case Builtin::Vnorm: out = scalar(a.v.norm()); break;
        case Builtin::Vmax: out = vec(a.v.cwiseMax(eval(e.args[1]).s)); break;
      }
      break;
    }
  }
  if (!finite(out)) {
    throw EvalError(EvalErrorKind::NonFinite, e.id, "non-finite value in `" + print_expr(e) + "`");
  }
  return out;
}

Mat3 eval_elastic(const TypedLaw& law, const Mat3& F, const ParamVector& theta) {
  check_params(law, theta);
  Evaluator ev(law);
  return ev.elastic(F, theta.values);
}

Mat3 eval_plastic(const TypedLaw& law, const Mat3& F, const ParamVector& theta) {
  check_params(law, theta);
  Evaluator ev(law);
  return ev.plastic(F, theta.values);
}

}  // namespace lawkit::dsl
