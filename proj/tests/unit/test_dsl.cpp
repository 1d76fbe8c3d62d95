#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "../support/oracles.hpp"
#include "lawkit/dsl/catalog.hpp"
#include "lawkit/dsl/eval.hpp"
#include "lawkit/dsl/parser.hpp"
#include "lawkit/dsl/svd3.hpp"
#include "lawkit/dsl/typecheck.hpp"

using namespace lawkit;
using namespace lawkit::dsl;

namespace {

ParseErrorKind parse_error_kind(const std::string& src) {
  try {
    parse_law(src);
  } catch (const ParseError& e) {
    return e.kind();
  }
  FAIL("expected a parse error for: " << src);
  return ParseErrorKind::Syntax;
}

TypeErrorKind type_error_kind(const std::string& src) {
  try {
    compile_law(src);
  } catch (const TypeError& e) {
    return e.kind();
  }
  FAIL("expected a type error for: " << src);
  return TypeErrorKind::Type;
}

TypedLaw catalog_law(const std::string& name) { return typecheck(catalog_entry(name).ast); }

ParamVector params(std::initializer_list<double> v) { return ParamVector{std::vector<double>(v)}; }

// Random well-typed expression generator for the print/parse property.
struct ExprGen {
  std::mt19937_64 rng;
  int depth_left = 4;

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  std::string scalar(int d) {
    if (d <= 0) {
      switch (pick(4)) {
        case 0: return "mu";
        case 1: return "2.5";
        case 2: return "det(F)";
        default: return "-0.125";
      }
    }
    switch (pick(8)) {
      case 0: return scalar(d - 1) + " + " + scalar(d - 1);
      case 1: return "(" + scalar(d - 1) + " - " + scalar(d - 1) + ") * " + scalar(d - 1);
      case 2: return scalar(d - 1) + " / (" + scalar(d - 1) + ")";
      case 3: return "-" + scalar(d - 1);
      case 4: return "trace(" + mat(d - 1) + ")";
      case 5: return "max(" + scalar(d - 1) + ", " + scalar(d - 1) + ")";
      case 6: return "vsum(" + vec(d - 1) + ")";
      default: return "clamp(" + scalar(d - 1) + ", -1, 1e3)";
    }
  }

  std::string vec(int d) {
    if (d <= 0) return pick(2) ? "S" : "e";
    switch (pick(4)) {
      case 0: return vec(d - 1) + " - " + scalar(d - 1);
      case 1: return scalar(d - 1) + " * " + vec(d - 1);
      case 2: return "vmax(" + vec(d - 1) + ", " + scalar(d - 1) + ")";
      default: return mat(d - 1) + " * " + vec(d - 1);
    }
  }

  std::string mat(int d) {
    if (d <= 0) {
      switch (pick(3)) {
        case 0: return "F";
        case 1: return "I";
        default: return "U";
      }
    }
    switch (pick(7)) {
      case 0: return mat(d - 1) + " * " + mat(d - 1);
      case 1: return mat(d - 1) + " - (" + mat(d - 1) + " + " + mat(d - 1) + ")";
      case 2: return scalar(d - 1) + " * transpose(" + mat(d - 1) + ")";
      case 3: return "diag(" + vec(d - 1) + ")";
      case 4: return "-dev(" + mat(d - 1) + ")";
      case 5: return "outer(" + vec(d - 1) + ", " + vec(d - 1) + ")";
      default:
        return "if " + scalar(d - 1) + " <= " + scalar(d - 1) + " then " + mat(d - 1) +
               " else " + mat(d - 1);
    }
  }
};

}  // namespace

TEST_SUITE("dsl") {
  TEST_CASE("minimal law parses with no params and two bodies") {
    const LawAst ast = parse_law("elastic { return I } plastic { return F }");
    CHECK(ast.params.empty());
    CHECK(ast.elastic.lets.empty());
    CHECK(ast.elastic.result.kind == ExprKind::Identity);
    CHECK(ast.plastic.result.kind == ExprKind::Input);
    const TypedLaw law = typecheck(ast);
    CHECK(law.param_count == 0);
  }

  TEST_CASE("fixed corotated golden structure") {
    const LawAst& ast = catalog_entry("fixed_corotated").ast;
    REQUIRE(ast.params.size() == 2);
    CHECK(ast.params[0].name == "mu");
    CHECK(ast.params[1].name == "lam");
    REQUIRE(ast.elastic.lets.size() == 3);
    CHECK(ast.elastic.lets[0].names == std::vector<std::string>{"U", "S", "V"});
    // Hand-walked: svd(F)=2, U*transpose(V)=4, det(F)=2, return expression=20.
    CHECK(count_nodes(ast.elastic) == 28);
    CHECK(count_nodes(ast.plastic) == 1);
  }

  TEST_CASE("undefined symbols are UnknownIdentifier") {
    CHECK(parse_error_kind("elastic { return Q }") == ParseErrorKind::UnknownIdentifier);
    CHECK(parse_error_kind("elastic { return foo(F) } plastic { return F }") ==
          ParseErrorKind::UnknownIdentifier);
    // let bindings do not leak between bodies
    CHECK(parse_error_kind("elastic { let A = F; return A } plastic { return A }") ==
          ParseErrorKind::UnknownIdentifier);
  }

  TEST_CASE("duplicate parameters are rejected") {
    CHECK(parse_error_kind("param k init=1 min=0 max=2\nparam k init=1 min=0 max=2\n"
                           "elastic { return k * I } plastic { return F }") ==
          ParseErrorKind::DuplicateParam);
  }

  TEST_CASE("syntax errors carry position and expected tokens") {
    try {
      parse_law("elastic {\n  let x = det(F)\n  return x * I\n} plastic { return F }");
      FAIL("expected SyntaxError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseErrorKind::Syntax);
      CHECK(e.pos().line == 3);
      CHECK(e.pos().column == 3);
      CHECK(e.expected() == std::vector<std::string>{"';'"});
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK(parse_error_kind("param k init=5 min=0 max=2\nelastic { return I } plastic { return F }") ==
          ParseErrorKind::Syntax);
    CHECK(parse_error_kind("param k init=1 min=0 max=2 log\nelastic { return I } plastic { return F }") ==
          ParseErrorKind::Syntax);
    CHECK(parse_error_kind("elastic { return det(F, F) * I } plastic { return F }") ==
          ParseErrorKind::Syntax);
    CHECK(parse_error_kind("elastic { let F = I; return F } plastic { return F }") ==
          ParseErrorKind::Syntax);
  }

  TEST_CASE("comments and optional trailing semicolon") {
    const LawAst ast = parse_law(
        "# header\nparam k init=1 min=0 max=2 # stiffness\n"
        "elastic { return k * (F - I); } plastic { return F }");
    CHECK(ast.params.size() == 1);
  }

  TEST_CASE("typecheck rejects scalar returns and ill-typed arithmetic") {
    CHECK(type_error_kind("elastic { return det(F) } plastic { return F }") ==
          TypeErrorKind::ReturnType);
    CHECK(type_error_kind("elastic { return F + 1 } plastic { return F }") == TypeErrorKind::Type);
    CHECK(type_error_kind("elastic { return F } plastic { let (U,S,V) = svd(F); return S }") ==
          TypeErrorKind::ReturnType);
    CHECK(type_error_kind("elastic { let x = svd(F); return F } plastic { return F }") ==
          TypeErrorKind::Type);
    CHECK(type_error_kind("elastic { let (a,b,c) = transpose(F); return F } plastic { return F }") ==
          TypeErrorKind::Type);
    CHECK(type_error_kind("elastic { return if F < 1 then F else I } plastic { return F }") ==
          TypeErrorKind::Type);
    CHECK(type_error_kind("elastic { return if 1 < 2 then F else 3 } plastic { return F }") ==
          TypeErrorKind::Type);
  }

  TEST_CASE("identity plasticity and the Hencky template typecheck") {
    const TypedLaw a = compile_law("elastic { return I } plastic { return F }");
    CHECK(a.plastic_type == ValueType::Mat3);
    const TypedLaw b = compile_law(
        "elastic { let (U, S, V) = svd(F); let e = vlog(S); return U * diag(e) * transpose(U) }"
        " plastic { return F }");
    const auto& lets = b.ast.elastic.lets;
    CHECK(lets[1].value.type == ValueType::Vec3);
    CHECK(b.ast.elastic.result.type == ValueType::Mat3);
    CHECK(b.ast.elastic.result.args[0].args[1].type == ValueType::Mat3);  // diag(e)
    CHECK(b.ast.elastic.slot_count == 4);
  }

  TEST_CASE("every subexpression gets a type and a unique id") {
    const TypedLaw law = catalog_law("drucker_prager");
    std::vector<int> ids;
    std::function<void(const Expr&)> walk = [&](const Expr& e) {
      CHECK(e.type != ValueType::Unknown);
      ids.push_back(e.id);
      for (const auto& a : e.args) walk(a);
    };
    for (const Block* b : {&law.ast.elastic, &law.ast.plastic}) {
      for (const auto& l : b->lets) walk(l.value);
      walk(b->result);
    }
    std::sort(ids.begin(), ids.end());
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
  }

  TEST_CASE("svd3 of identity") {
    const Svd3 d = svd3(Mat3::Identity());
    CHECK((d.U - Mat3::Identity()).norm() == 0.0);
    CHECK((d.V - Mat3::Identity()).norm() == 0.0);
    CHECK((d.S - Vec3::Ones()).norm() == 0.0);
  }

  TEST_CASE("svd3 of a reflection follows the rotation convention") {
    const Mat3 M = Vec3(-2, 1, 1).asDiagonal();
    const Svd3 d = svd3(M);
    // Reference: singular values are sqrt of the eigenvalues of M^T M.
    Eigen::SelfAdjointEigenSolver<Mat3> es(M.transpose() * M);
    Vec3 ref = es.eigenvalues().cwiseSqrt();
    std::sort(ref.data(), ref.data() + 3, std::greater<>());
    CHECK((d.S.cwiseAbs() - ref).norm() < 1e-14);
    CHECK(d.S.prod() == doctest::Approx(-2.0));
    CHECK(d.S(2) < 0.0);
    CHECK(d.U.determinant() == doctest::Approx(1.0));
    CHECK(d.V.determinant() == doctest::Approx(1.0));
    CHECK((d.U * d.S.asDiagonal() * d.V.transpose() - M).norm() < 1e-14);
  }

  TEST_CASE("svd3 property: reconstruction and proper rotations") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 1000; ++k) {
      Mat3 M;
      for (int i = 0; i < 9; ++i) M(i) = u(rng);
      if (M.determinant() <= 0.0) M.col(0) *= -1.0;
      const Svd3 d = svd3(M);
      const double rel = (d.U * d.S.asDiagonal() * d.V.transpose() - M).norm() / M.norm();
      REQUIRE(rel < 1e-9);
      REQUIRE(std::abs(d.U.determinant() - 1.0) < 1e-12);
      REQUIRE(std::abs(d.V.determinant() - 1.0) < 1e-12);
      REQUIRE(std::abs(d.S(0)) >= std::abs(d.S(1)));
      REQUIRE(std::abs(d.S(1)) >= std::abs(d.S(2)));
      REQUIRE(d.S.minCoeff() > 0.0);
    }
  }

  TEST_CASE("svd3 rejects non-finite input") {
    Mat3 M = Mat3::Identity();
    M(1, 2) = std::nan("");
    CHECK_THROWS_AS(svd3(M), NonFiniteInput);
  }

  TEST_CASE("fixed corotated is stress free at F = I") {
    const TypedLaw law = catalog_law("fixed_corotated");
    for (double mu : {1.0, 123.0, 1e6}) {
      const Mat3 tau = eval_elastic(law, Mat3::Identity(), params({mu, 2.0 * mu}));
      CHECK(tau.norm() == 0.0);
    }
  }

  TEST_CASE("Neo-Hookean closed form at diag(2,1,1)") {
    const TypedLaw law = compile_law(
        "param mu init=1 min=0 max=10\nparam lam init=0 min=0 max=10\n"
        "elastic { return mu * (F * transpose(F) - I) + lam * log(det(F)) * I }"
        " plastic { return F }");
    const Mat3 tau = eval_elastic(law, Vec3(2, 1, 1).asDiagonal(), params({1.0, 0.0}));
    CHECK((tau - Mat3(Vec3(3, 0, 0).asDiagonal())).norm() == 0.0);
  }

  TEST_CASE("fixed corotated matches the closed form at diag(1.1, 0.9, 1.0)") {
    const TypedLaw law = catalog_law("fixed_corotated");
    const Mat3 F = Vec3(1.1, 0.9, 1.0).asDiagonal();
    const Mat3 tau = eval_elastic(law, F, params({1.0, 1.0}));
    CHECK(oracle::rel_err(tau, oracle::fixed_corotated(F, 1.0, 1.0)) < 1e-10);
    // Hand evaluation: R = I, J = 0.99.
    const Mat3 hand = Vec3(0.22 - 0.0099, -0.18 - 0.0099, -0.0099).asDiagonal();
    CHECK((tau - hand).norm() < 1e-12);
  }

  TEST_CASE("identity plasticity returns F unchanged") {
    const TypedLaw law = catalog_law("identity_plastic");
    std::mt19937_64 rng(3);
    for (int k = 0; k < 10; ++k) {
      const Mat3 F = oracle::random_F(rng);
      CHECK((eval_plastic(law, F, initial_params(law)) - F).norm() == 0.0);
    }
  }

  TEST_CASE("von Mises leaves states inside the yield surface alone") {
    const TypedLaw law = catalog_law("von_mises");
    const Mat3 F = Vec3(1.01, 1.0, 0.995).asDiagonal();
    // mu, lam, yield: yield/(2 mu) = 0.5 dwarfs the deviatoric strain.
    const Mat3 out = eval_plastic(law, F, params({1.0, 1.0, 1.0}));
    CHECK((out - F).norm() == 0.0);
  }

  TEST_CASE("von Mises return map matches a hand-coded projection") {
    LawAst ast = catalog_entry("von_mises").ast;
    ast.params[2].lo = 1e-3;  // allow a yield stress of 0.1 Pa
    const TypedLaw law = typecheck(ast);
    const Mat3 F = Vec3(1.5, 1.0, 1.0).asDiagonal();
    const Mat3 out = eval_plastic(law, F, params({1.0, 1.0, 0.1}));
    // Diagonal F: U = V = I, eps = (ln 1.5, 0, 0).
    const Vec3 eps(std::log(1.5), 0.0, 0.0);
    const Vec3 dev = eps - Vec3::Constant(eps.sum() / 3.0);
    const double dg = dev.norm() - 0.1 / 2.0;
    const Vec3 corrected = eps - dg * dev / dev.norm();
    const Mat3 want = corrected.array().exp().matrix().asDiagonal();
    CHECK((out - want).norm() < 1e-9);
    // The corrected deviatoric strain sits on the yield surface.
    const Vec3 d2 = corrected - Vec3::Constant(corrected.sum() / 3.0);
    CHECK(d2.norm() == doctest::Approx(0.05).epsilon(1e-12));
  }

  TEST_CASE("domain violations raise EvalError with the offending node") {
    const TypedLaw law = compile_law("elastic { return log(det(F) - 1) * I } plastic { return F }");
    try {
      eval_elastic(law, Mat3::Identity(), {});
      FAIL("expected DomainError");
    } catch (const EvalError& e) {
      CHECK(e.kind() == EvalErrorKind::Domain);
      CHECK(e.node_id() == law.ast.elastic.result.args[0].id);
    }
    const TypedLaw inv = compile_law("elastic { return inverse(F - I) } plastic { return F }");
    CHECK_THROWS_AS(eval_elastic(inv, Mat3::Identity(), {}), EvalError);
    const TypedLaw sq = compile_law("elastic { return sqrt(0 - det(F)) * I } plastic { return F }");
    CHECK_THROWS_AS(eval_elastic(sq, Mat3::Identity(), {}), EvalError);
  }

  TEST_CASE("non-finite intermediates are reported, never returned") {
    const TypedLaw law = compile_law("elastic { return 1 / (det(F) - 1) * I } plastic { return F }");
    try {
      eval_elastic(law, Mat3::Identity(), {});
      FAIL("expected EvalError");
    } catch (const EvalError& e) {
      CHECK(e.kind() == EvalErrorKind::NonFinite);
      CHECK(e.node_id() >= 0);
    }
    const TypedLaw big = compile_law("elastic { return exp(1000) * I } plastic { return F }");
    CHECK_THROWS_AS(eval_elastic(big, Mat3::Identity(), {}), EvalError);
  }

  TEST_CASE("parameter vectors are validated") {
    const TypedLaw law = catalog_law("neo_hookean");
    CHECK_THROWS_AS(eval_elastic(law, Mat3::Identity(), params({1.0})), std::invalid_argument);
    CHECK_THROWS_AS(eval_elastic(law, Mat3::Identity(), params({1e9, 1.0})), std::invalid_argument);
  }

  TEST_CASE("catalog contents") {
    std::vector<std::string> names;
    for (const auto& e : builtin_catalog()) names.push_back(e.name);
    for (const char* n : {"fixed_corotated", "neo_hookean", "stvk_hencky", "von_mises",
                          "drucker_prager", "identity_plastic"}) {
      CHECK(std::find(names.begin(), names.end(), n) != names.end());
    }
  }

  TEST_CASE("catalog entries round-trip through the printer") {
    for (const auto& e : builtin_catalog()) {
      const LawAst again = parse_law(print_law(e.ast));
      CHECK_MESSAGE(again == e.ast, e.name);
      CHECK_NOTHROW(typecheck(e.ast));
    }
  }

  TEST_CASE("catalog elastic laws are stress free at rest") {
    for (const auto& e : builtin_catalog()) {
      const TypedLaw law = typecheck(e.ast);
      const Mat3 tau = eval_elastic(law, Mat3::Identity(), initial_params(law));
      CHECK_MESSAGE(tau.norm() == doctest::Approx(0.0), e.name);
    }
  }

  TEST_CASE("print/parse round trip on random expressions") {
    ExprGen gen{std::mt19937_64(5)};
    for (int k = 0; k < 300; ++k) {
      const std::string src = "param mu init=1 min=0 max=2\nelastic { let (U, S, V) = svd(F);"
                              " let e = S; return " + gen.mat(4) + " } plastic { return F }";
      const LawAst a = parse_law(src);
      const LawAst b = parse_law(print_law(a));
      REQUIRE_MESSAGE(a == b, src);
      CHECK(print_law(b) == print_law(a));
    }
  }

  TEST_CASE("evaluation is deterministic") {
    const TypedLaw law = catalog_law("drucker_prager");
    std::mt19937_64 rng(9);
    const Mat3 F = oracle::random_F(rng);
    const Mat3 a = eval_plastic(law, F, initial_params(law));
    for (int k = 0; k < 5; ++k) {
      const Mat3 b = eval_plastic(law, F, initial_params(law));
      CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 9) == 0);
    }
  }

  TEST_CASE("builtin laws match independent closed forms") {
    std::mt19937_64 rng(2024);
    const double mu = 3.0e3;
    const double lam = 7.0e3;
    const auto fc = catalog_law("fixed_corotated");
    const auto nh = catalog_law("neo_hookean");
    const auto sv = catalog_law("stvk_hencky");
    const auto vm = catalog_law("von_mises");
    const auto dp = catalog_law("drucker_prager");
    const auto id = catalog_law("identity_plastic");
    for (int k = 0; k < 100; ++k) {
      const Mat3 F = oracle::random_F(rng);
      REQUIRE(oracle::rel_err(eval_elastic(fc, F, params({mu, lam})), oracle::fixed_corotated(F, mu, lam)) < 1e-9);
      REQUIRE(oracle::rel_err(eval_elastic(nh, F, params({mu, lam})), oracle::neo_hookean(F, mu, lam)) < 1e-9);
      REQUIRE(oracle::rel_err(eval_elastic(sv, F, params({mu, lam})), oracle::stvk_hencky(F, mu, lam)) < 1e-9);
      REQUIRE(oracle::rel_err(eval_plastic(vm, F, params({mu, lam, 500.0})), oracle::von_mises(F, mu, 500.0)) < 1e-9);
      REQUIRE(oracle::rel_err(eval_plastic(dp, F, params({mu, lam, 0.3})), oracle::drucker_prager(F, mu, lam, 0.3)) < 1e-9);
      REQUIRE(oracle::rel_err(eval_plastic(id, F, params({mu, lam})), F) == 0.0);
    }
  }

  TEST_CASE("fixed corotated is frame indifferent") {
    const TypedLaw law = catalog_law("fixed_corotated");
    std::mt19937_64 rng(77);
    for (int k = 0; k < 50; ++k) {
      const Mat3 F = oracle::random_F(rng);
      const Mat3 Q = oracle::random_rotation(rng);
      const ParamVector th = params({2.0, 3.0});
      const Mat3 lhs = eval_elastic(law, Q * F, th);
      const Mat3 rhs = Q * eval_elastic(law, F, th) * Q.transpose();
      CHECK((lhs - rhs).norm() <= 1e-8);
    }
  }

  TEST_CASE("compose_law merges bodies and shared parameters") {
    const LawAst law = compose_law(catalog_entry("stvk_hencky").ast, catalog_entry("von_mises").ast);
    REQUIRE(law.params.size() == 3);
    CHECK(law.params[0].name == "mu");
    CHECK(law.params[2].name == "yield");
    CHECK(law.elastic == catalog_entry("stvk_hencky").ast.elastic);
    CHECK(law.plastic == catalog_entry("von_mises").ast.plastic);
    CHECK(parse_law(law.source_text) == law);
    const LawAst pure = compose_law(catalog_entry("neo_hookean").ast, catalog_entry("identity_plastic").ast);
    CHECK(pure.params.size() == 2);
  }
}
