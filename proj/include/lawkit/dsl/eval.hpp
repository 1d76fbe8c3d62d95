#pragma once

#include <span>
#include <vector>

#include "lawkit/dsl/typecheck.hpp"
#include "lawkit/math.hpp"

namespace lawkit::dsl {

/// Parameter values aligned with a law's ParamSpec order, in linear units.
struct ParamVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// Declared initial values of a law.
ParamVector initial_params(const TypedLaw& law);

/// Throws std::invalid_argument if theta does not fit the law's specs.
void check_params(const TypedLaw& law, const ParamVector& theta);

struct Value {
  ValueType type = ValueType::Unknown;
  double s = 0.0;
  Vec3 v;
  Mat3 m;
};

/// Reusable evaluation scratch for one law. Not shareable across threads;
/// create one per evaluating thread.
class Evaluator {
 public:
  explicit Evaluator(const TypedLaw& law);

  /// Kirchhoff stress for deformation gradient F.
  Mat3 elastic(const Mat3& F, std::span<const double> theta);
  /// Deformation gradient after the plastic return map.
  Mat3 plastic(const Mat3& F, std::span<const double> theta);

 private:
  Mat3 run(const Block& body, const Mat3& F, std::span<const double> theta);
  Value eval(const Expr& e);

  const TypedLaw* law_;
  std::vector<Value> slots_;
  const Mat3* input_ = nullptr;
  std::span<const double> theta_;
};

/// Throw EvalError on non-finite results or domain violations.
Mat3 eval_elastic(const TypedLaw& law, const Mat3& F, const ParamVector& theta);
Mat3 eval_plastic(const TypedLaw& law, const Mat3& F, const ParamVector& theta);

}  // namespace lawkit::dsl
