#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "trisym/types.hpp"

namespace trisym {

// Monic polynomial p(z) = z^m + a[0] z^{m-1} + ... + a[m-1].
template <class Scalar>
struct MonicPolynomial {
  vector<Scalar> a;

  MonicPolynomial() = default;

  explicit MonicPolynomial(vector<Scalar> coeffs) : a(std::move(coeffs)) {
    if (a.size() < 1) throw std::invalid_argument("degree must be at least 1");
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (!std::isfinite(static_cast<double>(a[i])))
        throw std::invalid_argument("non-finite coefficient");
  }

  MonicPolynomial(std::initializer_list<Scalar> coeffs)
      : MonicPolynomial(
            Eigen::Map<const vector<Scalar>>(coeffs.begin(),
                                             static_cast<Eigen::Index>(coeffs.size()))
                .eval()) {}

  int degree() const { return static_cast<int>(a.size()); }

  // Coefficients in ascending order, c[k] multiplies z^k; c[m] = 1.
  std::vector<Scalar> ascending() const {
    const int m = degree();
    std::vector<Scalar> c(m + 1);
    c[m] = Scalar(1);
    for (int k = 0; k < m; ++k) c[k] = a[m - 1 - k];
    return c;
  }

  static MonicPolynomial from_ascending(const std::vector<Scalar>& c) {
    const int m = static_cast<int>(c.size()) - 1;
    vector<Scalar> a(m);
    for (int k = 0; k < m; ++k) a[k] = c[m - 1 - k];
    return MonicPolynomial(std::move(a));
  }

  template <class T>
  T operator()(const T& z) const {
    T v = T(1);
    for (Eigen::Index i = 0; i < a.size(); ++i) v = v * z + T(a[i]);
    return v;
  }
};

// Ascending coefficients of p'.
template <class Scalar>
std::vector<Scalar> derivative_ascending(const MonicPolynomial<Scalar>& p) {
  const auto c = p.ascending();
  const int m = p.degree();
  std::vector<Scalar> d(m);
  for (int k = 0; k < m; ++k) d[k] = Scalar(k + 1) * c[k + 1];
  return d;
}

template <class Scalar>
struct RootSet {
  std::vector<std::complex<Scalar>> values;  // sorted by (re, im)
  Scalar residual = Scalar(0);               // max relative evaluation residual
  int degree = 0;
};

namespace detail {

template <class Scalar>
std::array<std::complex<Scalar>, 2> quadratic_roots(Scalar a1, Scalar a2) {
  using C = std::complex<Scalar>;
  const Scalar disc = a1 * a1 - Scalar(4) * a2;
  if (disc >= Scalar(0)) {
    const Scalar sq = std::sqrt(disc);
    const Scalar q = -(a1 + std::copysign(sq, a1)) / Scalar(2);
    const Scalar r1 = q;
    const Scalar r2 = (q != Scalar(0)) ? a2 / q : -a1 - q;
    return {C(r1, 0), C(r2, 0)};
  }
  const Scalar re = -a1 / Scalar(2);
  const Scalar im = std::sqrt(-disc) / Scalar(2);
  return {C(re, -im), C(re, im)};
}

// Roots of z^3 + a1 z^2 + a2 z + a3, all branches real-arithmetic.
template <class Scalar>
std::array<std::complex<Scalar>, 3> cubic_roots(Scalar a1, Scalar a2, Scalar a3) {
  using C = std::complex<Scalar>;
  const Scalar third = Scalar(1) / Scalar(3);
  const Scalar shift = a1 * third;
  const Scalar P = a2 - a1 * a1 * third;
  const Scalar Q = a3 - a1 * a2 * third + Scalar(2) * a1 * a1 * a1 / Scalar(27);
  const Scalar halfQ = Q / Scalar(2);
  const Scalar thirdP = P * third;
  const Scalar D = halfQ * halfQ + thirdP * thirdP * thirdP;

  std::array<std::complex<Scalar>, 3> y;
  if (D <= Scalar(0)) {
    // Three real roots; acos branch.
    const Scalar m2 = -thirdP;
    if (m2 <= Scalar(0)) {
      // Forces P ~ 0 and Q ~ 0: (numerically) triple root.
      const Scalar r = std::cbrt(-Q);
      y = {C(r, 0), C(r, 0), C(r, 0)};
    } else {
      const Scalar R = std::sqrt(m2);
      Scalar cphi = -halfQ / (R * R * R);
      cphi = std::clamp(cphi, Scalar(-1), Scalar(1));
      const Scalar phi = std::acos(cphi) * third;
      const Scalar tau = Scalar(2) * Scalar(M_PI) * third;
      y = {C(Scalar(2) * R * std::cos(phi), 0),
           C(Scalar(2) * R * std::cos(phi - tau), 0),
           C(Scalar(2) * R * std::cos(phi + tau), 0)};
    }
  } else {
    const Scalar sqD = std::sqrt(D);
    const Scalar t1 = -halfQ + sqD;
    const Scalar t2 = -halfQ - sqD;
    const Scalar tb = (std::abs(t1) >= std::abs(t2)) ? t1 : t2;
    const Scalar u = std::cbrt(tb);
    const Scalar v = (u != Scalar(0)) ? -thirdP / u : Scalar(0);
    const Scalar re = -(u + v) / Scalar(2);
    const Scalar im = std::sqrt(Scalar(3)) / Scalar(2) * (u - v);
    y = {C(u + v, 0), C(re, -std::abs(im)), C(re, std::abs(im))};
  }
  for (auto& z : y) z -= shift;
  return y;
}

template <class Scalar>
void sort_roots(std::vector<std::complex<Scalar>>& r) {
  std::sort(r.begin(), r.end(), [](const auto& u, const auto& v) {
    if (u.real() != v.real()) return u.real() < v.real();
    return u.imag() < v.imag();
  });
}

}  // namespace detail

// All m roots; closed forms for m <= 3, companion eigenvalues plus Newton
// polishing above. Throws NonConvergence when the relative evaluation
// residual exceeds tol.
template <class Scalar>
RootSet<Scalar> roots(const MonicPolynomial<Scalar>& p, Scalar tol = Scalar(1e-9)) {
  using C = std::complex<Scalar>;
  const int m = p.degree();
  RootSet<Scalar> rs;
  rs.degree = m;
  rs.values.reserve(m);

  if (m == 1) {
    rs.values.push_back(C(-p.a[0], 0));
  } else if (m == 2) {
    const auto r = detail::quadratic_roots(p.a[0], p.a[1]);
    rs.values.assign(r.begin(), r.end());
  } else if (m == 3) {
    const auto r = detail::cubic_roots(p.a[0], p.a[1], p.a[2]);
    rs.values.assign(r.begin(), r.end());
  } else {
    matrix<Scalar> A = matrix<Scalar>::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) A(i, i + 1) = Scalar(1);
    for (int j = 0; j < m; ++j) A(m - 1, j) = -p.a[m - 1 - j];
    Eigen::EigenSolver<matrix<Scalar>> es(A);
    if (es.info() != Eigen::Success)
      throw NonConvergence("companion eigenvalue iteration failed");
    const auto d = derivative_ascending(p);
    for (int i = 0; i < m; ++i) {
      C z(es.eigenvalues()[i].real(), es.eigenvalues()[i].imag());
      for (int it = 0; it < 3; ++it) {
        C pv = p(z);
        C dv = C(0);
        for (int k = m - 1; k >= 0; --k) dv = dv * z + C(d[k]);
        if (std::abs(dv) > Scalar(0)) {
          const C step = pv / dv;
          if (std::abs(step) < Scalar(1) + std::abs(z)) z -= step;
        }
      }
      rs.values.push_back(z);
    }
  }

  detail::sort_roots(rs.values);

  Scalar worst = Scalar(0);
  const auto c = p.ascending();
  for (const auto& z : rs.values) {
    const Scalar az = std::abs(z);
    Scalar scale = Scalar(0);
    Scalar zp = Scalar(1);
    for (int k = 0; k <= m; ++k) {
      scale += std::abs(c[k]) * zp;
      zp *= az;
    }
    worst = std::max(worst, std::abs(p(std::complex<Scalar>(z))) /
                                std::max(Scalar(1), scale));
  }
  rs.residual = worst;
  if (worst > tol)
    throw NonConvergence("root residual " + std::to_string(static_cast<double>(worst)) +
                         " exceeds tolerance");
  return rs;
}

template <class Scalar>
bool is_hyperbolic(const MonicPolynomial<Scalar>& p, Scalar tol = Scalar(1e-9)) {
  const auto rs = roots(p, std::max(tol, Scalar(1e-9)));
  for (const auto& z : rs.values)
    if (std::abs(z.imag()) > tol * (Scalar(1) + std::abs(z))) return false;
  return true;
}

// Product over i < j of (lambda_i - lambda_j), roots taken in the set's
// sorted order. Its square is the discriminant. For m = 1 the empty product
// is 1. Throws NotHyperbolic when imaginary parts are not negligible.
template <class Scalar>
Scalar difference_product(const RootSet<Scalar>& rs, Scalar tol = Scalar(1e-9)) {
  Scalar prod = Scalar(1);
  for (const auto& z : rs.values)
    if (std::abs(z.imag()) > tol * (Scalar(1) + std::abs(z)))
      throw NotHyperbolic("complex roots in difference_product");
  const int m = static_cast<int>(rs.values.size());
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      prod *= rs.values[i].real() - rs.values[j].real();
  return prod;
}

// Root magnitude scale s = max(1, max_i |a_i|^{1/i}); p_hat(z) = p(s z)/s^m
// has roots of size O(1).
template <class Scalar>
Scalar root_scale(const MonicPolynomial<Scalar>& p) {
  Scalar s = Scalar(1);
  for (int i = 1; i <= p.degree(); ++i) {
    const double mag = std::pow(std::abs(static_cast<double>(p.a[i - 1])),
                                1.0 / static_cast<double>(i));
    s = std::max(s, Scalar(mag));
  }
  return s;
}

template <class Scalar>
MonicPolynomial<Scalar> rescale_roots(const MonicPolynomial<Scalar>& p, Scalar s) {
  vector<Scalar> a = p.a;
  Scalar f = s;
  for (int i = 0; i < p.degree(); ++i) {
    a[i] /= f;
    f *= s;
  }
  return MonicPolynomial<Scalar>(std::move(a));
}

namespace detail {

// Resultant of p (degree m, descending coeffs dp) and p' (degree m-1, dq) via
// the Sylvester determinant, accumulated in a wider scalar.
template <class Scalar>
Scalar sylvester_resultant(const std::vector<Scalar>& dp, const std::vector<Scalar>& dq,
                           int m) {
  using W = wide_t<Scalar>;
  const int n = 2 * m - 1;
  matrix<W> S = matrix<W>::Zero(n, n);
  for (int i = 0; i < m - 1; ++i)
    for (int k = 0; k <= m; ++k) S(i, i + k) = static_cast<W>(dp[k]);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k <= m - 1; ++k) S(m - 1 + j, j + k) = static_cast<W>(dq[k]);
  Eigen::PartialPivLU<matrix<W>> lu(S);
  return static_cast<Scalar>(lu.determinant());
}

}  // namespace detail

// Discriminant of p: the squared difference product of the roots. Closed
// forms through degree 3; resultant of (p, p') at root-normalized scale above
// that.
template <class Scalar>
Scalar discriminant(const MonicPolynomial<Scalar>& p) {
  const int m = p.degree();
  if (m == 1) return Scalar(1);
  if (m == 2) return p.a[0] * p.a[0] - Scalar(4) * p.a[1];
  if (m == 3) {
    const Scalar b = p.a[0], c = p.a[1], d = p.a[2];
    return Scalar(18) * b * c * d - Scalar(4) * b * b * b * d + b * b * c * c -
           Scalar(4) * c * c * c - Scalar(27) * d * d;
  }
  const Scalar s = root_scale(p);
  const auto ph = rescale_roots(p, s);
  std::vector<Scalar> dp(m + 1), dq(m);
  dp[0] = Scalar(1);
  for (int i = 0; i < m; ++i) dp[i + 1] = ph.a[i];
  for (int k = 0; k <= m - 1; ++k) dq[k] = Scalar(m - k) * dp[k];
  const Scalar res = detail::sylvester_resultant(dp, dq, m);
  const int sign = ((m * (m - 1) / 2) % 2 == 0) ? 1 : -1;
  Scalar unscale = Scalar(1);
  for (int i = 0; i < m * (m - 1); ++i) unscale *= s;
  return Scalar(sign) * res * unscale;
}

// One smoothing sweep applies q <- q + eps q'; m-1 sweeps split any repeated
// roots while keeping the polynomial monic and hyperbolic.
template <class Scalar>
MonicPolynomial<Scalar> nuij_smooth(const MonicPolynomial<Scalar>& p, Scalar eps) {
  const int m = p.degree();
  auto c = p.ascending();
  for (int sweep = 0; sweep < m - 1; ++sweep)
    for (int k = 0; k < m; ++k) c[k] += eps * Scalar(k + 1) * c[k + 1];
  return MonicPolynomial<Scalar>::from_ascending(c);
}

template <class Scalar>
struct CompanionPair {
  matrix<Scalar> A;       // superdiagonal ones, last row -a_m ... -a_1
  matrix<Scalar> A_flip;  // first row -a_1 ... -a_m, subdiagonal ones
  matrix<Scalar> J;       // antidiagonal reversal
};

template <class Scalar>
CompanionPair<Scalar> companion(const MonicPolynomial<Scalar>& p) {
  const int m = p.degree();
  CompanionPair<Scalar> cp;
  cp.A = matrix<Scalar>::Zero(m, m);
  cp.A_flip = matrix<Scalar>::Zero(m, m);
  cp.J = matrix<Scalar>::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) cp.A(i, i + 1) = Scalar(1);
  for (int j = 0; j < m; ++j) cp.A(m - 1, j) = -p.a[m - 1 - j];
  for (int j = 0; j < m; ++j) cp.A_flip(0, j) = -p.a[j];
  for (int i = 1; i < m; ++i) cp.A_flip(i, i - 1) = Scalar(1);
  for (int i = 0; i < m; ++i) cp.J(i, m - 1 - i) = Scalar(1);
  return cp;
}

}  // namespace trisym
