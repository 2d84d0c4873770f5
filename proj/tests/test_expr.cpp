#include <doctest.h>

#include <cmath>
#include <random>

#include "trisym/expr.hpp"

using namespace trisym;

namespace {

EvalPoint pt(real t, real x1, real xi1) {
  vec x(1), xi(1);
  x << x1;
  xi << xi1;
  return EvalPoint::make(t, x, xi);
}

}  // namespace

TEST_CASE("numbers, variables and the weight symbol") {
  const auto p = pt(0.5, -2.0, 3.0);
  CHECK(Expr::parse("1.25e2", 1, 1)(p) == 125.0);
  CHECK(Expr::parse("t", 1, 1)(p) == 0.5);
  CHECK(Expr::parse("x1", 1, 1)(p) == -2.0);
  CHECK(Expr::parse("xi1", 1, 1)(p) == 3.0);
  CHECK(Expr::parse("bracket_xi", 1, 1)(p) == doctest::Approx(std::sqrt(10.0)));
  CHECK(p.bxi == doctest::Approx(std::sqrt(1.0 + 9.0)));
}

TEST_CASE("precedence and associativity") {
  const auto p = pt(0.0, 3.0, 0.0);
  CHECK(Expr::parse("2+3*4", 1, 1)(p) == 14.0);
  CHECK(Expr::parse("2*3+4", 1, 1)(p) == 10.0);
  CHECK(Expr::parse("(2+3)*4", 1, 1)(p) == 20.0);
  CHECK(Expr::parse("2^3^2", 1, 1)(p) == 512.0);   // right associative
  CHECK(Expr::parse("-2^2", 1, 1)(p) == -4.0);     // minus applies to the power
  CHECK(Expr::parse("-x1^2", 1, 1)(p) == -9.0);
  CHECK(Expr::parse("(-2)^2", 1, 1)(p) == 4.0);
  CHECK(Expr::parse("6/3/2", 1, 1)(p) == 1.0);     // division is left associative
  CHECK(Expr::parse("1 - 2 - 3", 1, 1)(p) == -4.0);
  CHECK(Expr::parse("--2", 1, 1)(p) == 2.0);
}

TEST_CASE("functions") {
  const auto p = pt(0.25, -3.0, 0.0);
  CHECK(Expr::parse("abs(x1)", 1, 1)(p) == 3.0);
  CHECK(Expr::parse("sqrt(t)", 1, 1)(p) == 0.5);
  CHECK(Expr::parse("exp(0)", 1, 1)(p) == 1.0);
  CHECK(Expr::parse("min(t, x1)", 1, 1)(p) == -3.0);
  CHECK(Expr::parse("max(t, x1)", 1, 1)(p) == 0.25);

  // sstep: C^3 ramp, 0 below 0, 1 above 1, value 1/2 at the midpoint.
  CHECK(Expr::parse("sstep(-1)", 1, 1)(p) == 0.0);
  CHECK(Expr::parse("sstep(0)", 1, 1)(p) == 0.0);
  CHECK(Expr::parse("sstep(2)", 1, 1)(p) == 1.0);
  CHECK(Expr::parse("sstep(1)", 1, 1)(p) == 1.0);
  CHECK(Expr::parse("sstep(0.5)", 1, 1)(p) == doctest::Approx(0.5));
  // Monotone on [0, 1].
  real prev = 0.0;
  const auto s = Expr::parse("sstep(t)", 1, 1);
  for (int k = 1; k <= 20; ++k) {
    const real v = s(pt(k / 20.0, 0.0, 0.0));
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("parse errors carry a position") {
  const auto expect_fail = [](const char* src, int nx = 1, int nxi = 1) {
    try {
      Expr::parse(src, nx, nxi);
      FAIL_CHECK("no error for: " << src);
    } catch (const ExprParseError& e) {
      CHECK(e.position <= std::string(src).size());
      CHECK(std::string(e.what()).find("position") != std::string::npos);
    }
  };
  expect_fail("2 +");
  expect_fail("(1 + 2");
  expect_fail("1 + * 2");
  expect_fail("foo(2)");
  expect_fail("min(1)");
  expect_fail("x0");
  expect_fail("x2", 1, 1);      // nx = 1
  expect_fail("xi2", 1, 1);     // nxi = 1
  expect_fail("x1", 0, 1);      // no space coordinates at all
  expect_fail("1 2");
  expect_fail("zeta");

  try {
    Expr::parse("1 + #", 1, 1);
    FAIL_CHECK("no error for trailing garbage");
  } catch (const ExprParseError& e) {
    CHECK(e.position == 4);
  }
}

TEST_CASE("high coordinate indices work when the arity allows them") {
  vec x(3), xi(2);
  x << 1.0, 2.0, 3.0;
  xi << 4.0, 5.0;
  const auto p = EvalPoint::make(0.0, x, xi);
  CHECK(Expr::parse("x3", 3, 2)(p) == 3.0);
  CHECK(Expr::parse("xi2", 3, 2)(p) == 5.0);
}

TEST_CASE("source text of a parsed expression is the original input") {
  const std::string src = "t + 3*x1^2 - sstep(xi1/2)";
  const auto e = Expr::parse(src, 1, 1);
  CHECK(e.source() == src);
}

TEST_CASE("composed expressions round-trip through their source text") {
  const Expr t = Expr::var_t();
  const Expr x1 = Expr::var_x(0);
  const Expr bxi = Expr::var_bxi();
  const Expr e = (t * t + Expr::constant(3.0) * x1) / bxi - expr_abs(x1 - t);
  const Expr r = Expr::parse(e.source(), 1, 1);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<real> dist(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = pt(dist(rng), dist(rng), dist(rng));
    CHECK(e(p) == doctest::Approx(r(p)).epsilon(1e-15));
  }
}

TEST_CASE("dependence flags") {
  CHECK(Expr::parse("t", 1, 1).depends_on_t());
  CHECK_FALSE(Expr::parse("x1", 1, 1).depends_on_t());
  CHECK(Expr::parse("x1", 1, 1).depends_on_x());
  CHECK_FALSE(Expr::parse("t", 1, 1).depends_on_x());
  CHECK(Expr::parse("xi1", 1, 1).depends_on_xi());
  CHECK(Expr::parse("bracket_xi", 1, 1).depends_on_xi());
  CHECK_FALSE(Expr::parse("t + x1", 1, 1).depends_on_xi());
  CHECK_FALSE(Expr{}.depends_on_t());
}

TEST_CASE("empty expressions refuse to evaluate") {
  CHECK(Expr{}.empty());
  CHECK_THROWS_AS(Expr{}(pt(0, 0, 0)), std::logic_error);
  CHECK_FALSE(Expr::constant(1.0).empty());
}
