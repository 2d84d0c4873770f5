#pragma once

#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "trisym/poly.hpp"
#include "trisym/types.hpp"

namespace trisym {

// Bezout matrix of (p, p'): the symmetric m x m matrix H with
//   (p(z) p'(w) - p(w) p'(z)) / (z - w) = sum_{u,v} H(u,v) z^u w^v.
// H is positive semidefinite exactly when p has only real roots, and it
// symmetrizes the companion matrix of p.
template <class Scalar>
matrix<Scalar> bezout_matrix(const MonicPolynomial<Scalar>& p) {
  const int m = p.degree();
  const auto pc = p.ascending();            // pc[k], k = 0..m
  const auto qc = derivative_ascending(p);  // qc[k], k = 0..m-1
  const auto P = [&](int k) -> Scalar { return (k >= 0 && k <= m) ? pc[k] : Scalar(0); };
  const auto Q = [&](int k) -> Scalar { return (k >= 0 && k < m) ? qc[k] : Scalar(0); };
  matrix<Scalar> H(m, m);
  for (int u = 0; u < m; ++u)
    for (int v = u; v < m; ++v) {
      Scalar s = Scalar(0);
      for (int l = 0; l <= std::min(u, v); ++l)
        s += P(u + v + 1 - l) * Q(l) - P(l) * Q(u + v + 1 - l);
      H(u, v) = s;
      H(v, u) = s;
    }
  return H;
}

template <class Scalar>
matrix<Scalar> flip_matrix(int m) {
  matrix<Scalar> J = matrix<Scalar>::Zero(m, m);
  for (int i = 0; i < m; ++i) J(i, m - 1 - i) = Scalar(1);
  return J;
}

// J H J^T: the symmetrizer for the flipped companion form.
template <class Scalar>
matrix<Scalar> flipped_symmetrizer(const matrix<Scalar>& H) {
  const auto J = flip_matrix<Scalar>(static_cast<int>(H.rows()));
  return (J * H * J.transpose()).eval();
}

// || H A - (H A)^T ||_inf normalized by max(1, ||H|| ||A||).
template <class Scalar>
Scalar symmetrizer_residual(const matrix<Scalar>& H, const matrix<Scalar>& A) {
  if (H.rows() != H.cols() || A.rows() != A.cols() || H.rows() != A.rows())
    throw DimensionMismatch("symmetrizer_residual needs equal square matrices");
  const matrix<Scalar> M = H * A;
  const Scalar num = (M - M.transpose()).template lpNorm<Eigen::Infinity>();
  const Scalar den = std::max(Scalar(1), H.template lpNorm<Eigen::Infinity>() *
                                             A.template lpNorm<Eigen::Infinity>());
  return num / den;
}

// Rows are the coefficient vectors of p_k(z) = p(z)/(z - lambda_k), so that
// C^T C = H and |det C| = |difference product|. Needs separated real roots.
template <class Scalar>
matrix<Scalar> c_factor(const MonicPolynomial<Scalar>& p, Scalar tol = Scalar(1e-9)) {
  const int m = p.degree();
  const auto rs = roots(p, std::max(tol, Scalar(1e-9)));
  // A root of multiplicity k is resolved only to about eps^(1/k), so a split
  // multiple root is indistinguishable from a tight complex cluster. Reject
  // clusters first, then anything still carrying a genuine imaginary part.
  const Scalar band = std::max(tol, Scalar(1e-4));
  Scalar maxmod = Scalar(0);
  for (const auto& z : rs.values) maxmod = std::max(maxmod, std::abs(z));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (std::abs(rs.values[i] - rs.values[j]) <= band * (Scalar(1) + maxmod))
        throw RootsNotSeparated("coincident roots in c_factor");
  for (const auto& z : rs.values)
    if (std::abs(z.imag()) > band * (Scalar(1) + std::abs(z)))
      throw NotHyperbolic("c_factor needs real roots");
  // Polish the roots in extended precision, then read each row off by
  // synthetic division of p itself. Multiplying out the other roots instead
  // would amplify the solver's root error when two admissible roots are close.
  const auto asc = p.ascending();
  std::vector<long double> cw(asc.begin(), asc.end());
  std::vector<long double> lam(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    lam[static_cast<std::size_t>(i)] = static_cast<long double>(rs.values[i].real());
  for (auto& x : lam) {
    for (int it = 0; it < 4; ++it) {
      long double v = cw[static_cast<std::size_t>(m)], dv = 0.0L;
      for (int k = m - 1; k >= 0; --k) {
        dv = dv * x + v;
        v = v * x + cw[static_cast<std::size_t>(k)];
      }
      if (dv == 0.0L) break;
      const long double step = v / dv;
      x -= step;
      if (std::abs(step) <= 1e-30L * (1.0L + std::abs(x))) break;
    }
  }

  matrix<Scalar> C = matrix<Scalar>::Zero(m, m);
  std::vector<long double> q(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    q[static_cast<std::size_t>(m - 1)] = 1.0L;
    for (int j = m - 1; j >= 1; --j)
      q[static_cast<std::size_t>(j - 1)] =
          cw[static_cast<std::size_t>(j)] +
          lam[static_cast<std::size_t>(k)] * q[static_cast<std::size_t>(j)];
    for (int j = 0; j < m; ++j) C(k, j) = static_cast<Scalar>(q[static_cast<std::size_t>(j)]);
  }
  return C;
}

// Everything needed to certify the symmetrizer numerically, computed at
// root-normalized scale (coefficients a_i / s^i with s = root_scale) where the
// determinant comparison is well conditioned, then restored.
template <class Scalar>
struct BezoutCertificate {
  matrix<Scalar> H;        // Bezout matrix of p itself
  Scalar scale;            // root scale s
  Scalar det_h_scaled;     // det of the Bezout matrix of the rescaled p
  Scalar disc_scaled;      // discriminant of the rescaled p
  Scalar det_h;            // s^{m(m-1)} * det_h_scaled
  Scalar delta_sq;         // s^{m(m-1)} * disc_scaled
  Scalar det_residual;     // |det_h_scaled - disc_scaled| / max(1, |disc_scaled|)
  Scalar sym_residual;     // symmetrizer residual against the companion matrix
};

template <class Scalar>
BezoutCertificate<Scalar> bezout_certificate(const MonicPolynomial<Scalar>& p) {
  using W = wide_t<Scalar>;
  const int m = p.degree();
  BezoutCertificate<Scalar> cert;
  cert.H = bezout_matrix(p);
  cert.scale = root_scale(p);
  const auto ph = rescale_roots(p, cert.scale);
  const matrix<Scalar> Hs = bezout_matrix(ph);
  matrix<W> Hw = Hs.template cast<W>();
  Eigen::PartialPivLU<matrix<W>> lu(Hw);
  cert.det_h_scaled = static_cast<Scalar>(lu.determinant());
  cert.disc_scaled = discriminant(ph);
  Scalar unscale = Scalar(1);
  for (int i = 0; i < m * (m - 1); ++i) unscale *= cert.scale;
  cert.det_h = cert.det_h_scaled * unscale;
  cert.delta_sq = cert.disc_scaled * unscale;
  cert.det_residual = std::abs(cert.det_h_scaled - cert.disc_scaled) /
                      std::max(Scalar(1), std::abs(cert.disc_scaled));
  cert.sym_residual = symmetrizer_residual(cert.H, companion(p).A);
  return cert;
}

}  // namespace trisym
