#include <doctest.h>

#include <cmath>
#include <random>

#include "trisym/poly.hpp"

using namespace trisym;

namespace {

MonicPolynomial<real> from_roots(const std::vector<real>& r) {
  std::vector<real> c{1.0};
  for (real lam : r) {
    std::vector<real> nc(c.size() + 1, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      nc[j] += c[j];
      nc[j + 1] -= lam * c[j];
    }
    c = std::move(nc);
  }
  vec a(static_cast<Eigen::Index>(c.size()) - 1);
  for (std::size_t i = 1; i < c.size(); ++i) a[static_cast<Eigen::Index>(i - 1)] = c[i];
  return MonicPolynomial<real>(std::move(a));
}

}  // namespace

TEST_CASE("ascending coefficient layout round-trips") {
  const MonicPolynomial<real> p{-1.0, 2.0, 5.0};  // z^3 - z^2 + 2z + 5
  const auto c = p.ascending();
  REQUIRE(c.size() == 4);
  CHECK(c[0] == 5.0);
  CHECK(c[1] == 2.0);
  CHECK(c[2] == -1.0);
  CHECK(c[3] == 1.0);
  const auto q = MonicPolynomial<real>::from_ascending(c);
  CHECK((q.a - p.a).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p(2.0) == doctest::Approx(8.0 - 4.0 + 4.0 + 5.0));
}

TEST_CASE("derivative coefficients") {
  const MonicPolynomial<real> p{0.0, -1.0, 0.0};  // z^3 - z
  const auto d = derivative_ascending(p);         // 3z^2 - 1
  REQUIRE(d.size() == 3);
  CHECK(d[0] == -1.0);
  CHECK(d[1] == 0.0);
  CHECK(d[2] == 3.0);
}

TEST_CASE("construction rejects bad input") {
  CHECK_THROWS_AS(MonicPolynomial<real>(vec{}), std::invalid_argument);
  vec bad(2);
  bad << 1.0, std::numeric_limits<real>::quiet_NaN();
  CHECK_THROWS_AS(MonicPolynomial<real>(std::move(bad)), std::invalid_argument);
}

TEST_CASE("closed-form roots for low degree") {
  const auto r1 = roots(MonicPolynomial<real>{-3.0});
  REQUIRE(r1.values.size() == 1);
  CHECK(r1.values[0].real() == doctest::Approx(3.0));

  const auto r2 = roots(MonicPolynomial<real>{0.0, -1.0});  // z^2 - 1
  REQUIRE(r2.values.size() == 2);
  CHECK(r2.values[0].real() == doctest::Approx(-1.0));
  CHECK(r2.values[1].real() == doctest::Approx(1.0));

  const auto r3 = roots(MonicPolynomial<real>{0.0, -1.0, 0.0});  // z^3 - z
  REQUIRE(r3.values.size() == 3);
  CHECK(r3.values[0].real() == doctest::Approx(-1.0));
  CHECK(r3.values[1].real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r3.values[2].real() == doctest::Approx(1.0));
  CHECK(r3.residual <= 1e-12);
}

TEST_CASE("cubic complex branch keeps the conjugate pair") {
  // z^3 - 1: one real root, two complex on the unit circle.
  const auto rs = roots(MonicPolynomial<real>{0.0, 0.0, -1.0});
  int n_real = 0;
  for (const auto& z : rs.values)
    if (std::abs(z.imag()) < 1e-12) ++n_real;
  CHECK(n_real == 1);
  for (const auto& z : rs.values) CHECK(std::abs(z) == doctest::Approx(1.0));
}

TEST_CASE("companion roots with polishing match constructed roots") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<real> dist(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 4 + static_cast<int>(rng() % 3);  // degrees 4..6
    std::vector<real> r(static_cast<std::size_t>(m));
    for (auto& v : r) v = dist(rng);
    std::sort(r.begin(), r.end());
    const auto p = from_roots(r);
    const auto rs = roots(p, 1e-7);
    REQUIRE(static_cast<int>(rs.values.size()) == m);
    for (int i = 0; i < m; ++i) {
      CHECK(std::abs(rs.values[static_cast<std::size_t>(i)].imag()) <= 1e-6);
      CHECK(rs.values[static_cast<std::size_t>(i)].real() ==
            doctest::Approx(r[static_cast<std::size_t>(i)]).epsilon(1e-5));
    }
  }
}

TEST_CASE("roots throws NonConvergence when the residual tolerance is zero") {
  // Irrational roots cannot evaluate to exactly zero in double arithmetic.
  const MonicPolynomial<real> p{0.0, 0.0, -2.0, 0.0, 0.3};
  CHECK_THROWS_AS(roots(p, 0.0), NonConvergence);
}

TEST_CASE("hyperbolicity test") {
  CHECK(is_hyperbolic(MonicPolynomial<real>{0.0, -1.0}));      // z^2 - 1
  CHECK(is_hyperbolic(MonicPolynomial<real>{0.0, 0.0, 0.0}));  // z^3
  CHECK_FALSE(is_hyperbolic(MonicPolynomial<real>{0.0, 1.0}));  // z^2 + 1
}

TEST_CASE("difference product equals the square root of the discriminant") {
  const auto rs = roots(MonicPolynomial<real>{0.0, -1.0, 0.0});  // roots -1, 0, 1
  CHECK(difference_product(rs) == doctest::Approx(-2.0));
  CHECK(difference_product(rs) * difference_product(rs) ==
        doctest::Approx(discriminant(MonicPolynomial<real>{0.0, -1.0, 0.0})));

  const auto bad = roots(MonicPolynomial<real>{0.0, 1.0});  // z^2 + 1
  CHECK_THROWS_AS(difference_product(bad), NotHyperbolic);
}

TEST_CASE("discriminant closed forms and resultant branch agree") {
  CHECK(discriminant(MonicPolynomial<real>{5.0}) == 1.0);
  CHECK(discriminant(MonicPolynomial<real>{0.0, -1.0}) == doctest::Approx(4.0));
  CHECK(discriminant(MonicPolynomial<real>{0.0, -1.0, 0.0}) == doctest::Approx(4.0));

  // Roots -2, -1, 1, 2: difference product 72, discriminant 5184.
  const auto p = from_roots({-2.0, -1.0, 1.0, 2.0});
  CHECK(discriminant(p) == doctest::Approx(5184.0).epsilon(1e-10));
  CHECK(difference_product(roots(p)) == doctest::Approx(72.0).epsilon(1e-8));

  // Repeated root: discriminant vanishes.
  const auto q = from_roots({1.0, 1.0, -1.0, 2.0});
  CHECK(std::abs(discriminant(q)) <= 1e-10);
}

TEST_CASE("discriminant matches the squared difference product on random polys") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<real> dist(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 5);
    std::vector<real> r(static_cast<std::size_t>(m));
    for (auto& v : r) v = dist(rng);
    const auto p = from_roots(r);
    const auto rs = roots(p, 1e-6);
    const real dp = difference_product(rs, 1e-5);
    const real d = discriminant(p);
    CHECK(std::abs(d - dp * dp) <= 1e-7 * std::max(1.0, std::abs(d)));
  }
}

TEST_CASE("root scaling normalizes magnitudes") {
  const auto p = from_roots({100.0, 200.0, -50.0});
  const real s = root_scale(p);
  CHECK(s >= 100.0);
  const auto ph = rescale_roots(p, s);
  for (const auto& z : roots(ph).values) CHECK(std::abs(z) <= 4.0);
}

TEST_CASE("one smoothing sweep per extra degree splits repeated roots") {
  // z^3 with eps = 1: two sweeps of q + q' give z^3 + 6z^2 + 6z.
  const auto q = nuij_smooth(MonicPolynomial<real>{0.0, 0.0, 0.0}, 1.0);
  REQUIRE(q.degree() == 3);
  CHECK(q.a[0] == doctest::Approx(6.0));
  CHECK(q.a[1] == doctest::Approx(6.0));
  CHECK(q.a[2] == doctest::Approx(0.0));

  for (real eps : {1e-3, 1e-2, 1e-1}) {
    const auto sm = nuij_smooth(MonicPolynomial<real>{0.0, 0.0, 0.0}, eps);
    const auto rs = roots(sm);
    CHECK(is_hyperbolic(sm));
    // Roots 0, -3 eps +- sqrt(3) eps: the smallest gap grows linearly in eps.
    real gap = std::numeric_limits<real>::infinity();
    for (std::size_t k = 1; k < rs.values.size(); ++k)
      gap = std::min(gap, rs.values[k].real() - rs.values[k - 1].real());
    CHECK(gap == doctest::Approx((3.0 - std::sqrt(3.0)) * eps).epsilon(1e-6));
  }
}

TEST_CASE("smoothing keeps simple hyperbolic polynomials hyperbolic") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<real> dist(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 4);
    std::vector<real> r(static_cast<std::size_t>(m));
    for (auto& v : r) v = dist(rng);
    if (trial % 3 == 0 && m >= 2) r[1] = r[0];  // force a repeated root
    const auto sm = nuij_smooth(from_roots(r), 1e-2);
    CHECK(is_hyperbolic(sm, 1e-6));
  }
}

TEST_CASE("companion pair reproduces the polynomial spectrum") {
  const auto p = from_roots({-1.5, 0.25, 2.0});
  const auto cp = companion(p);
  Eigen::EigenSolver<mat> es(cp.A);
  std::vector<real> ev;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(es.eigenvalues()[i].imag()) <= 1e-9);
    ev.push_back(es.eigenvalues()[i].real());
  }
  std::sort(ev.begin(), ev.end());
  CHECK(ev[0] == doctest::Approx(-1.5));
  CHECK(ev[1] == doctest::Approx(0.25));
  CHECK(ev[2] == doctest::Approx(2.0));

  // The flipped form is the antidiagonal conjugate of the standard one.
  CHECK((cp.A_flip - cp.J * cp.A * cp.J).cwiseAbs().maxCoeff() == 0.0);
}
