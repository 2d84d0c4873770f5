#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "trisym/cubic.hpp"
#include "trisym/expr.hpp"
#include "trisym/types.hpp"

namespace trisym {

// One frequency mode of the first-order 3x3 system
//   dU/dt = i (phi <xi> I + <xi> A(a,b,c) + B) U + i F,   F = (f, 0, 0).
// The symbol must not depend on x along the mode; construction verifies that
// numerically at probe points.
struct ModeSystem {
  CubicSymbol sym;
  std::array<Expr, 9> b_entries;
  std::array<Expr, 9> b_adjoint_entries;  // empty entries: reuse b_entries
  Expr f;                                 // forcing; empty means zero
  vec xi;
  real bxi = 1;

  EvalPoint point_at(real t) const {
    return EvalPoint::make(t, vec::Zero(sym.nx), xi);
  }
};

enum class Direction { Forward, BackwardAdjoint };

struct EnergyRunConfig {
  real n_weight = 4;
  real gamma = 0;
  real lambda = 1;
  real t_start = 1e-3;
  real t_end = 0.5;
  long steps = 1024;
  Direction direction = Direction::Forward;
  cvec3 u0 = cvec3::Zero();

  void validate() const {
    if (!(t_start > 0) || !(t_end > t_start) || !std::isfinite(t_end))
      throw std::invalid_argument("need 0 < t_start < t_end < inf");
    if (steps < 16 || steps > (1L << 26))
      throw std::invalid_argument("steps must lie in [16, 2^26]");
    if (!(lambda > 0) || !std::isfinite(lambda))
      throw std::invalid_argument("lambda must be positive");
    if (!(gamma >= 0) || !std::isfinite(gamma))
      throw std::invalid_argument("gamma must be nonnegative");
    if (!std::isfinite(n_weight)) throw std::invalid_argument("n_weight must be finite");
    for (int i = 0; i < 3; ++i)
      if (!std::isfinite(u0[i].real()) || !std::isfinite(u0[i].imag()))
        throw std::invalid_argument("u0 must be finite");
  }
};

inline ModeSystem make_mode_system(CubicSymbol sym, std::array<Expr, 9> b_entries, Expr f,
                                   vec xi, real t_probe_lo = 1e-3, real t_probe_hi = 1.0,
                                   std::array<Expr, 9> b_adjoint = {}) {
  ModeSystem m;
  m.sym = std::move(sym);
  m.b_entries = std::move(b_entries);
  m.b_adjoint_entries = std::move(b_adjoint);
  m.f = std::move(f);
  m.xi = std::move(xi);
  if (m.xi.size() != m.sym.nxi)
    throw DimensionMismatch("xi size does not match the symbol's frequency arity");
  m.bxi = std::sqrt(1.0 + m.xi.squaredNorm());

  if (m.sym.nx > 0) {
    // The energy layer treats the mode as an ODE in t; any x dependence in
    // the inputs would silently be sampled at x = 0 only, so reject it.
    std::vector<vec> probes;
    probes.push_back(vec::Zero(m.sym.nx));
    vec p1(m.sym.nx), p2(m.sym.nx);
    for (int d = 0; d < m.sym.nx; ++d) {
      p1[d] = 0.37 + 0.11 * d;
      p2[d] = -0.83 + 0.07 * d;
    }
    probes.push_back(p1);
    probes.push_back(p2);
    const real tm = 0.5 * (t_probe_lo + t_probe_hi);
    for (real t : {t_probe_lo, tm, t_probe_hi}) {
      const EvalPoint base = EvalPoint::make(t, probes[0], m.xi);
      const auto check = [&](const Expr& e, const char* what) {
        if (e.empty()) return;
        const real v0 = e(base);
        for (std::size_t i = 1; i < probes.size(); ++i) {
          const real vi = e(EvalPoint::make(t, probes[i], m.xi));
          if (std::abs(vi - v0) > 1e-14 * std::max(1.0, std::abs(v0)))
            throw std::invalid_argument(std::string(what) +
                                        " depends on x; modes need x-free data");
        }
      };
      check(m.sym.a, "a");
      check(m.sym.b, "b");
      check(m.sym.c, "c");
      check(m.sym.phi, "phi");
      check(m.f, "f");
      for (const auto& e : m.b_entries) check(e, "B entry");
      for (const auto& e : m.b_adjoint_entries) check(e, "adjoint B entry");
    }
  }
  return m;
}

struct EnergyTrace {
  std::vector<real> t;
  std::vector<cvec3> u;
  std::vector<real> f;              // forcing samples
  std::vector<real> w;              // U* S~ U at the trace's lambda
  std::vector<real> e;              // weighted energy (raw weights)
  std::vector<real> cancel_resid;   // symmetry cancellation residual
  std::vector<real> keiyaku_resid;  // filled by verify_keiyaku, 0 at edges
  std::vector<real> err_pt;         // |fine - coarse| per record
  real err_est = 0;
  EnergyRunConfig config;
  vec xi;
  real bxi = 1;

  std::size_t size() const { return t.size(); }
};

namespace detail {

struct ModeRhs {
  const ModeSystem& m;
  bool adjoint;

  cmat3 matrix_at(real t) const {
    const EvalPoint p = m.point_at(t);
    const auto v = eval_symbol(m.sym, p);
    mat3 B;
    const auto& entries =
        (adjoint && !m.b_adjoint_entries[0].empty()) ? m.b_adjoint_entries : m.b_entries;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto& e = entries[static_cast<std::size_t>(3 * i + j)];
        B(i, j) = e.empty() ? 0.0 : e(p);
      }
    const mat3 R = v.phi * m.bxi * mat3::Identity() + m.bxi * a_matrix(v.a, v.b, v.c) + B;
    return cplx(0, 1) * R.cast<cplx>();
  }

  cvec3 forcing_at(real t) const {
    if (m.f.empty()) return cvec3::Zero();
    cvec3 F = cvec3::Zero();
    F[0] = cplx(0, 1) * m.f(m.point_at(t));
    return F;
  }

  cvec3 operator()(real t, const cvec3& u) const { return matrix_at(t) * u + forcing_at(t); }
};

inline std::vector<cvec3> rk4_path(const ModeRhs& rhs, const cvec3& u0, real t0, real h,
                                   long n) {
  std::vector<cvec3> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  cvec3 u = u0;
  out.push_back(u);
  for (long k = 0; k < n; ++k) {
    const real t = t0 + h * static_cast<real>(k);
    const cvec3 k1 = rhs(t, u);
    const cvec3 k2 = rhs(t + h / 2, u + (h / 2) * k1);
    const cvec3 k3 = rhs(t + h / 2, u + (h / 2) * k2);
    const cvec3 k4 = rhs(t + h, u + h * k3);
    u += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(u);
  }
  return out;
}

}  // namespace detail

inline mat3 s_tilde_at(const ModeSystem& m, real t, real lambda, const SymbolValues& v) {
  return s_matrix(v.a, v.b, v.c) + (lambda / (t * m.bxi * m.bxi)) * mat3::Identity();
}

// Fourth-order fixed-step integration with a mandatory half-step companion
// run; the trace keeps the finer solution at the requested resolution's
// points. Throws StepSizeTooCoarse when the two runs disagree beyond
// 1e-6 * max |U|.
inline EnergyTrace integrate_mode(const ModeSystem& m, const EnergyRunConfig& cfg) {
  cfg.validate();
  const bool backward = cfg.direction == Direction::BackwardAdjoint;
  detail::ModeRhs rhs{m, backward};

  const long n = cfg.steps;
  const real span = cfg.t_end - cfg.t_start;
  const real h = backward ? -span / static_cast<real>(n) : span / static_cast<real>(n);
  const real t0 = backward ? cfg.t_end : cfg.t_start;

  const auto coarse = detail::rk4_path(rhs, cfg.u0, t0, h, n);
  const auto fine = detail::rk4_path(rhs, cfg.u0, t0, h / 2, 2 * n);

  EnergyTrace tr;
  tr.config = cfg;
  tr.xi = m.xi;
  tr.bxi = m.bxi;
  tr.t.resize(static_cast<std::size_t>(n) + 1);
  tr.u.resize(tr.t.size());
  tr.err_pt.resize(tr.t.size());
  real umax = 0;
  for (long k = 0; k <= n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    tr.t[ku] = t0 + h * static_cast<real>(k);
    tr.u[ku] = fine[static_cast<std::size_t>(2 * k)];
    tr.err_pt[ku] = (tr.u[ku] - coarse[ku]).cwiseAbs().maxCoeff();
    umax = std::max(umax, tr.u[ku].cwiseAbs().maxCoeff());
    tr.err_est = std::max(tr.err_est, tr.err_pt[ku]);
  }
  tr.t.back() = backward ? cfg.t_start : cfg.t_end;

  if (tr.err_est > 1e-6 * std::max(umax, 1e-300))
    throw StepSizeTooCoarse("half-step disagreement " + to_shortest_string(tr.err_est) +
                            " exceeds 1e-6 * max|U| = " +
                            to_shortest_string(1e-6 * umax));

  tr.f.resize(tr.size());
  tr.w.resize(tr.size());
  tr.e.resize(tr.size());
  tr.cancel_resid.resize(tr.size());
  tr.keiyaku_resid.assign(tr.size(), 0.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const real t = tr.t[k];
    const EvalPoint p = m.point_at(t);
    const auto v = eval_symbol(m.sym, p);
    tr.f[k] = m.f.empty() ? 0.0 : m.f(p);
    const mat3 St = s_tilde_at(m, t, cfg.lambda, v);
    const cvec3& U = tr.u[k];
    const cplx qs = U.dot(St.cast<cplx>() * U);   // U* S~ U
    const mat3 SA = sa_matrix(v.a, v.b, v.c);
    const cplx qsa = U.dot(SA.cast<cplx>() * U);  // U* (S A) U
    tr.w[k] = qs.real();
    tr.cancel_resid[k] = (std::abs(qs.imag()) + std::abs(qsa.imag())) /
                         std::max(1e-30, std::abs(qs.real()) + std::abs(qsa.real()));
    const real lt = std::log(t);
    const real sign = backward ? 1.0 : -1.0;
    tr.e[k] = std::exp(sign * (cfg.n_weight * lt + cfg.gamma * t)) * tr.w[k];
  }
  return tr;
}

// Largest symmetry cancellation residual over the trace; the identity behind
// the energy derivative requires it to sit at rounding level.
inline real cancellation_check(const EnergyTrace& tr) {
  real worst = 0;
  for (real r : tr.cancel_resid) worst = std::max(worst, r);
  return worst;
}

}  // namespace trisym
