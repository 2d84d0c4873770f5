#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "trisym/expr.hpp"
#include "trisym/grid.hpp"
#include "trisym/types.hpp"

namespace trisym {

// Time-dependent cubic symbol tau^3 + a tau^2 - b tau + c after factoring out
// the phase phi; coefficients are scalar expressions over (t, x, xi).
// Time derivatives are used analytically when provided and by central
// differences otherwise.
struct CubicSymbol {
  int nx = 0;
  int nxi = 0;
  Expr a, b, c, phi;
  Expr da_dt, db_dt, dc_dt, dphi_dt;
};

struct SymbolValues {
  real a = 0, b = 0, c = 0, phi = 0;
  real da = 0, db = 0, dc = 0, dphi = 0;
};

namespace detail {

inline real fd_time(const Expr& f, const EvalPoint& p) {
  const real h = 1e-6 * std::max(1.0, std::abs(p.t));
  EvalPoint hi = p, lo = p;
  hi.t = p.t + h;
  lo.t = p.t - h;
  return (f(hi) - f(lo)) / (2 * h);
}

inline real eval_dt(const Expr& analytic, const Expr& f, const EvalPoint& p) {
  return analytic.empty() ? fd_time(f, p) : analytic(p);
}

}  // namespace detail

inline SymbolValues eval_symbol(const CubicSymbol& s, const EvalPoint& p,
                                bool with_dt = false) {
  SymbolValues v;
  v.a = s.a(p);
  v.b = s.b(p);
  v.c = s.c(p);
  v.phi = s.phi.empty() ? 0.0 : s.phi(p);
  if (with_dt) {
    v.da = detail::eval_dt(s.da_dt, s.a, p);
    v.db = detail::eval_dt(s.db_dt, s.b, p);
    v.dc = detail::eval_dt(s.dc_dt, s.c, p);
    v.dphi = s.phi.empty() ? 0.0 : detail::eval_dt(s.dphi_dt, s.phi, p);
  }
  return v;
}

// Companion-form coefficient matrix of tau^3 + a tau^2 - b tau + c.
inline mat3 a_matrix(real a, real b, real c) {
  mat3 A;
  A << -a, b, -c, 1, 0, 0, 0, 1, 0;
  return A;
}

// Symmetrizer: the reversed Bezout matrix of the cubic, divided by 3,
// normalized so S(0,0,0) has 1 in the top-left corner.
inline mat3 s_matrix(real a, real b, real c) {
  mat3 S;
  S << 3, 2 * a, -b,
       2 * a, 2 * (a * a + b), -a * b - 3 * c,
       -b, -a * b - 3 * c, b * b - 2 * a * c;
  return S / 3.0;
}

// S * A, symmetric whenever S is the symmetrizer above.
inline mat3 sa_matrix(real a, real b, real c) {
  mat3 M;
  M << -a, 2 * b, -3 * c,
       2 * b, a * b - 3 * c, -2 * a * c,
       -3 * c, -2 * a * c, b * c;
  return M / 3.0;
}

// det S = discriminant(tau^3 + a tau^2 - b tau + c) / 27. The grouping keeps
// the c = 0 specialization exact: 27 det S = b^2 (a^2 + 4 b).
inline real det_s(real a, real b, real c) {
  const real x = b * b * (a * a + 4 * b) - 4 * a * a * a * c - 18 * a * b * c - 27 * c * c;
  return x / 27.0;
}

inline mat3 s_matrix_dt(const SymbolValues& v) {
  mat3 D;
  const real off = -(v.da * v.b + v.a * v.db) - 3 * v.dc;
  D << 0, 2 * v.da, -v.db,
       2 * v.da, 2 * (2 * v.a * v.da + v.db), off,
       -v.db, off, 2 * v.b * v.db - 2 * (v.da * v.c + v.a * v.dc);
  return D / 3.0;
}

struct ConditionReport {
  std::string name;
  bool holds = false;
  real margin = 0;
  std::map<std::string, real> constants;
  bool has_worst = false;
  EvalPoint worst;
  real worst_value = 0;
};

struct PsdResult {
  bool psd = false;
  real min_eig_ratio = 0;  // smallest eigenvalue over max(1, ||M||)
  real min_minor_ratio = 0;
};

inline PsdResult check_psd(const mat3& M, real tol = 1e-12) {
  PsdResult r;
  const real norm = std::max(1.0, M.cwiseAbs().maxCoeff());
  const real m1 = M(0, 0);
  const real m2 = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  const real m3 = M.determinant();
  r.min_minor_ratio = std::min({m1 / norm, m2 / (norm * norm), m3 / (norm * norm * norm)});
  Eigen::SelfAdjointEigenSolver<mat3> es(0.5 * (M + M.transpose()));
  r.min_eig_ratio = es.eigenvalues().minCoeff() / norm;
  r.psd = r.min_minor_ratio >= -tol && r.min_eig_ratio >= -tol;
  return r;
}

namespace detail {

inline bool smallness_filter(const SymbolValues& v, real eps_bar) {
  if (!(v.b > 0)) return false;
  if (std::abs(v.a * v.c) > eps_bar * v.b * v.b) return false;
  if (std::abs(v.c) > eps_bar * std::pow(v.b, 1.5)) return false;
  return true;
}

inline real guarded_ratio(real num, real den) {
  if (std::abs(num) <= 1e-300) return 0.0;
  return std::abs(num) / std::max(den, 1e-300);
}

// Largest value in [lo, hi] where pred holds, assuming pred is monotone
// (true below, false above). Returns 0 when pred(lo) fails.
template <class Pred>
real bisect_max(Pred pred, real lo, real hi, int iters = 60) {
  if (!pred(lo)) return 0.0;
  if (pred(hi)) return hi;
  for (int i = 0; i < iters; ++i) {
    const real mid = 0.5 * (lo + hi);
    (pred(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

// Determinant lower bound on the smallness-filtered set: delta such that
// det S >= delta * b^2 (a^2 + b), with the triangle-inequality floor
// min(1 - 4 eps_bar, 4 - 18 eps_bar - 27 eps_bar^2) / 27 (sharp as a^2/b
// grows with c at the aligned corner of the filter).
inline ConditionReport check_lemma_setudo(const CubicSymbol& sym, const SampleGrid& grid,
                                          real eps_bar = 0.02) {
  if (!(eps_bar > 0) || eps_bar > 0.02)
    throw std::invalid_argument("eps_bar must lie in (0, 0.02]");
  ConditionReport rep;
  rep.name = "lemma_det_lower_bound";
  real delta = std::numeric_limits<real>::infinity();
  std::size_t kept = 0;
  grid.for_each([&](const EvalPoint& p) {
    const auto v = eval_symbol(sym, p);
    if (!detail::smallness_filter(v, eps_bar)) return;
    ++kept;
    const real den = v.b * v.b * (v.a * v.a + v.b);
    const real ratio = det_s(v.a, v.b, v.c) / den;
    if (ratio < delta) {
      delta = ratio;
      rep.worst = p;
      rep.worst_value = ratio;
      rep.has_worst = true;
    }
  });
  if (kept == 0) throw EmptyFilteredSet("no grid point satisfies the smallness filter");
  const real floor =
      std::min(1.0 - 4.0 * eps_bar, 4.0 - 18.0 * eps_bar - 27.0 * eps_bar * eps_bar) / 27.0;
  rep.constants["delta"] = delta;
  rep.constants["delta_floor"] = floor;
  rep.constants["eps_bar"] = eps_bar;
  rep.constants["points_kept"] = static_cast<real>(kept);
  rep.margin = delta - floor;
  rep.holds = delta >= floor * (1.0 - 1e-12);
  return rep;
}

struct PositivityOptions {
  real eps_bar = 0.02;  // filter for points the positivity lemma covers
  real tol = 1e-12;
};

namespace detail {

struct PencilPoint {
  EvalPoint pt;
  mat3 p0;  // constant part (3S)
  mat3 p1;  // part multiplied by eps
};

// Shared skeleton: M(eps) = P0 - eps P1 must stay positive semidefinite on
// the filtered points; eps_max found by bisection on [1e-12, 1].
inline void finish_positivity(ConditionReport& rep, const std::vector<PencilPoint>& pts,
                              real eps, real tol) {
  if (pts.empty()) throw EmptyFilteredSet("no grid point passes the positivity filter");
  const auto scan = [&](real e, EvalPoint* worst) {
    real min_ratio = std::numeric_limits<real>::infinity();
    bool all = true;
    for (const auto& q : pts) {
      const mat3 M = q.p0 - e * q.p1;
      const auto r = check_psd(M, tol);
      if (!r.psd) all = false;
      if (r.min_eig_ratio < min_ratio) {
        min_ratio = r.min_eig_ratio;
        if (worst) *worst = q.pt;
      }
    }
    return std::pair<bool, real>{all, min_ratio};
  };
  const auto [ok, min_ratio] = scan(eps, &rep.worst);
  rep.holds = ok;
  rep.has_worst = true;
  rep.worst_value = min_ratio;
  rep.margin = min_ratio + tol;
  rep.constants["min_eig_ratio"] = min_ratio;
  rep.constants["points_kept"] = static_cast<real>(pts.size());
  rep.constants["eps_max"] =
      bisect_max([&](real e) { return scan(e, nullptr).first; }, 1e-12, 1.0);
  rep.constants["eps"] = eps;
}

}  // namespace detail

// 3S - eps1 t diag(1, 1, b) >= 0 on the filtered grid, with the precondition
// b >= delta1 t checked over the whole grid first.
inline ConditionReport check_positivity_tj(const CubicSymbol& sym, const SampleGrid& grid,
                                           real eps1, real delta1,
                                           PositivityOptions opt = {}) {
  ConditionReport rep;
  rep.name = "positivity_weight_pencil";
  real b_slack = std::numeric_limits<real>::infinity();
  std::vector<detail::PencilPoint> pts;
  grid.for_each([&](const EvalPoint& p) {
    const auto v = eval_symbol(sym, p);
    b_slack = std::min(b_slack, v.b - delta1 * p.t);
    if (!detail::smallness_filter(v, opt.eps_bar)) return;
    detail::PencilPoint q;
    q.pt = p;
    q.p0 = 3.0 * s_matrix(v.a, v.b, v.c);
    q.p1 = p.t * vec3(1, 1, v.b).asDiagonal();
    pts.push_back(std::move(q));
  });
  rep.constants["b_minus_delta1_t_min"] = b_slack;
  detail::finish_positivity(rep, pts, eps1, opt.tol);
  if (b_slack < -opt.tol) {
    rep.holds = false;
    rep.constants["precondition_failed"] = 1.0;
  }
  rep.constants["eps1"] = eps1;
  rep.constants["delta1"] = delta1;
  return rep;
}

// 3S - eps t (dS/dt) >= 0 on the filtered grid.
inline ConditionReport check_positivity_dts(const CubicSymbol& sym, const SampleGrid& grid,
                                            real eps, PositivityOptions opt = {}) {
  ConditionReport rep;
  rep.name = "positivity_time_derivative_pencil";
  std::vector<detail::PencilPoint> pts;
  real dtc_over_b = 0;
  grid.for_each([&](const EvalPoint& p) {
    const auto v = eval_symbol(sym, p, true);
    if (!detail::smallness_filter(v, opt.eps_bar)) return;
    dtc_over_b = std::max(dtc_over_b, detail::guarded_ratio(v.dc, v.b));
    detail::PencilPoint q;
    q.pt = p;
    q.p0 = 3.0 * s_matrix(v.a, v.b, v.c);
    q.p1 = p.t * s_matrix_dt(v);
    pts.push_back(std::move(q));
  });
  detail::finish_positivity(rep, pts, eps, opt.tol);
  rep.constants["dtc_over_b"] = dtc_over_b;
  return rep;
}

// 3S - eps t^2 B^T S B >= 0 on the filtered grid; B has evaluable entries.
inline ConditionReport check_positivity_b(const CubicSymbol& sym, const SampleGrid& grid,
                                          const std::array<Expr, 9>& b_entries, real eps,
                                          PositivityOptions opt = {}) {
  ConditionReport rep;
  rep.name = "positivity_lower_order_pencil";
  std::vector<detail::PencilPoint> pts;
  grid.for_each([&](const EvalPoint& p) {
    const auto v = eval_symbol(sym, p);
    if (!detail::smallness_filter(v, opt.eps_bar)) return;
    mat3 B;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        B(i, j) = b_entries[static_cast<std::size_t>(3 * i + j)](p);
    const mat3 S = s_matrix(v.a, v.b, v.c);
    detail::PencilPoint q;
    q.pt = p;
    q.p0 = 3.0 * S;
    q.p1 = p.t * p.t * B.transpose() * S * B;
    pts.push_back(std::move(q));
  });
  detail::finish_positivity(rep, pts, eps, opt.tol);
  return rep;
}

namespace detail {

inline ConditionReport discriminant_condition(const CubicSymbol& sym, const SampleGrid& grid,
                                              real delta, bool quadratic_weight,
                                              const char* name) {
  ConditionReport rep;
  rep.name = name;
  real delta0_min = std::numeric_limits<real>::infinity();

  std::vector<std::pair<EvalPoint, SymbolValues>> pts;
  grid.for_each([&](const EvalPoint& p) {
    const auto v = eval_symbol(sym, p);
    pts.emplace_back(p, v);
    delta0_min = std::min(delta0_min, 4.0 * (v.a * v.a + 3 * v.b));
  });
  if (pts.empty()) throw EmptyFilteredSet("empty grid");

  // Normalized margin of 27 det S - delta t (a^2+3b)^2 (or t^2 (a^2+3b)).
  const auto min_margin = [&](real d, const EvalPoint** worst, real* raw_at_worst) {
    real mn = std::numeric_limits<real>::infinity();
    for (const auto& [p, v] : pts) {
      const real q = v.a * v.a + 3 * v.b;
      const real lhs = 27.0 * det_s(v.a, v.b, v.c);
      const real rhs = quadratic_weight ? d * p.t * q * q : d * p.t * p.t * q;
      const real norm = (lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
      if (norm < mn) {
        mn = norm;
        if (worst) *worst = &p;
        if (raw_at_worst) *raw_at_worst = lhs - rhs;
      }
    }
    return mn;
  };

  const EvalPoint* worst = nullptr;
  real raw = 0;
  rep.margin = min_margin(delta, &worst, &raw);
  rep.holds = rep.margin >= -1e-12;
  if (worst) {
    rep.worst = *worst;
    rep.worst_value = raw;
    rep.has_worst = true;
  }
  rep.constants["delta"] = delta;
  rep.constants["margin_raw"] = raw;
  rep.constants["delta0_min"] = delta0_min;
  rep.constants["delta_star"] = detail::bisect_max(
      [&](real d) { return min_margin(d, nullptr, nullptr) >= -1e-12; }, 0.0, 4.0);
  return rep;
}

}  // namespace detail

// 27 det S >= delta t (a^2 + 3b)^2 over the grid.
inline ConditionReport condition_e(const CubicSymbol& sym, const SampleGrid& grid,
                                   real delta) {
  return detail::discriminant_condition(sym, grid, delta, true, "condition_e");
}

// 27 det S >= delta t^2 (a^2 + 3b) over the grid.
inline ConditionReport condition_h(const CubicSymbol& sym, const SampleGrid& grid,
                                   real delta) {
  return detail::discriminant_condition(sym, grid, delta, false, "condition_h");
}

struct CharacteristicSample {
  EvalPoint pt;
  real delta = 0;       // 27 det S
  real delta0 = 0;      // 4 (a^2 + 3 b)
  int multiplicity = 1;
  bool effective = false;
  real dtb = 0;
};

struct ClassificationReport {
  std::size_t n_simple = 0, n_double = 0, n_triple = 0;
  bool all_triples_effective = true;
  std::vector<CharacteristicSample> degenerate;
};

// Root multiplicity of the cubic at each grid point: discriminant ~ 0 means a
// repeated root, and additionally a^2 + 3b ~ 0 means a triple one. At triple
// points effectiveness is db/dt > 0.
inline ClassificationReport classify_characteristics(const CubicSymbol& sym,
                                                     const SampleGrid& grid,
                                                     real tol = 1e-9) {
  ClassificationReport rep;
  grid.for_each([&](const EvalPoint& p) {
    const auto v = eval_symbol(sym, p, true);
    // Scale reference with the weights of a (degree 1), b (2), c (3) so the
    // census is invariant under root rescaling; tol floors it so exact-zero
    // symbols still register as triple rather than dividing noise by noise.
    const real g = std::max({tol, v.a * v.a, std::abs(v.b), std::cbrt(v.c * v.c)});
    const real delta = 27.0 * det_s(v.a, v.b, v.c);
    const real q = v.a * v.a + 3 * v.b;
    if (std::abs(delta) > tol * g * g * g) {
      ++rep.n_simple;
      return;
    }
    CharacteristicSample s;
    s.pt = p;
    s.delta = delta;
    s.delta0 = 4.0 * q;
    s.dtb = v.db;
    if (std::abs(q) <= tol * g) {
      s.multiplicity = 3;
      s.effective = v.db > 0;
      ++rep.n_triple;
      if (!s.effective) rep.all_triples_effective = false;
    } else {
      s.multiplicity = 2;
      ++rep.n_double;
    }
    rep.degenerate.push_back(std::move(s));
  });
  return rep;
}

// ---- growth-structure clause checks -----------------------------------

struct MikiOptions {
  real delta1_floor = 1e-6;
  real eps_bar = 0.02;
  real c_cap = 1e8;  // derivative-ratio cap: catches structural violations
};

struct MikiReport {
  bool holds = false;                 // clause set needed on the full domain
  bool holds_with_smallness = false;  // additionally the eps_bar smallness pair
  real delta1 = 0;
  std::vector<ConditionReport> clauses;
};

namespace detail {

// Mixed central difference of f in the listed coordinates (ids: 0..nx-1 are
// space, nx..nx+nxi-1 are frequency). Frequency shifts rebuild bracket_xi.
inline real fd_mixed(const Expr& f, const EvalPoint& base, int nx,
                     const std::vector<int>& coords, std::size_t from = 0) {
  if (from == coords.size()) return f(base);
  const int id = coords[from];
  EvalPoint hi = base, lo = base;
  real h;
  if (id < nx) {
    h = 1e-5 * (1.0 + std::abs(base.x[id]));
    hi.x[id] += h;
    lo.x[id] -= h;
  } else {
    const int d = id - nx;
    h = 1e-5 * (1.0 + std::abs(base.xi[d]));
    hi.xi[d] += h;
    lo.xi[d] -= h;
    hi = EvalPoint::make(hi.t, hi.x, hi.xi);
    lo = EvalPoint::make(lo.t, lo.x, lo.xi);
  }
  return (fd_mixed(f, hi, nx, coords, from + 1) - fd_mixed(f, lo, nx, coords, from + 1)) /
         (2 * h);
}

// All multi-indices of exact order k over dim coordinates (combinations with
// repetition, nondecreasing ids).
inline void enumerate_indices(int dim, int k, std::vector<int>& cur,
                              const std::function<void(const std::vector<int>&)>& fn,
                              int start = 0) {
  if (static_cast<int>(cur.size()) == k) {
    fn(cur);
    return;
  }
  for (int d = start; d < dim; ++d) {
    cur.push_back(d);
    enumerate_indices(dim, k, cur, fn, d);
    cur.pop_back();
  }
}

// Largest bxi^{#frequency derivatives} |d^alpha f| over multi-indices of
// exact order k at a point.
inline real max_scaled_derivative(const Expr& f, const EvalPoint& p, int nx, int nxi,
                                  int k) {
  real worst = 0;
  std::vector<int> cur;
  enumerate_indices(nx + nxi, k, cur, [&](const std::vector<int>& coords) {
    real scale = 1;
    for (int id : coords)
      if (id >= nx) scale *= p.bxi;
    worst = std::max(worst, scale * std::abs(fd_mixed(f, p, nx, coords)));
  });
  return worst;
}

}  // namespace detail

inline MikiReport check_miki(const CubicSymbol& sym, const SampleGrid& grid,
                             MikiOptions opt = {}) {
  MikiReport rep;
  const Expr ac = sym.a * sym.c;

  ConditionReport lower;   lower.name = "b_lower_bound";
  ConditionReport c2;      c2.name = "c_vs_b_squared";
  ConditionReport dc1;     dc1.name = "first_derivatives_c_vs_b";
  ConditionReport dc2;     dc2.name = "second_derivatives_c_vs_sqrt_b";
  ConditionReport dac3;    dac3.name = "third_derivatives_ac_vs_sqrt_b";
  ConditionReport dtc;     dtc.name = "time_derivative_c_vs_b";
  ConditionReport small1;  small1.name = "ac_smallness";
  ConditionReport small2;  small2.name = "c_three_halves_smallness";

  real delta1 = std::numeric_limits<real>::infinity();
  real b_min = std::numeric_limits<real>::infinity();
  const auto track = [](ConditionReport& r, real value, const EvalPoint& p) {
    if (value > r.margin || !r.has_worst) {
      r.margin = value;
      r.worst = p;
      r.worst_value = value;
      r.has_worst = true;
    }
  };

  // Ratio clauses divide by powers of b, so they are read only where b rises
  // above the evaluation noise floor of the composed expressions; at the
  // vanishing set itself the quotients are 0/0 at rounding level.
  real b_max = 0;
  grid.for_each([&](const EvalPoint& p) {
    b_max = std::max(b_max, eval_symbol(sym, p).b);
  });
  const real b_ratio_floor = 1e-10 * std::max(b_max, 1e-30);
  long points_kept = 0;

  grid.for_each([&](const EvalPoint& p) {
    const auto v = eval_symbol(sym, p, true);
    b_min = std::min(b_min, v.b);
    if (p.t > 0) delta1 = std::min(delta1, v.b / p.t);
    if (!(v.b > b_ratio_floor)) return;
    ++points_kept;

    const real b2 = v.b * v.b;
    const real sb = std::sqrt(std::max(v.b, 0.0));
    track(c2, detail::guarded_ratio(v.c, b2), p);
    track(dtc, detail::guarded_ratio(v.dc, v.b), p);
    track(dc1, detail::guarded_ratio(
                   detail::max_scaled_derivative(sym.c, p, sym.nx, sym.nxi, 1), v.b),
          p);
    track(dc2, detail::guarded_ratio(
                   detail::max_scaled_derivative(sym.c, p, sym.nx, sym.nxi, 2), sb),
          p);
    track(dac3,
          detail::guarded_ratio(detail::max_scaled_derivative(ac, p, sym.nx, sym.nxi, 3), sb),
          p);
    track(small1, detail::guarded_ratio(v.a * v.c, b2), p);
    track(small2, detail::guarded_ratio(v.c, std::pow(std::max(v.b, 0.0), 1.5)), p);
  });

  if (!std::isfinite(delta1)) delta1 = 0;  // grid had no t > 0 points
  rep.delta1 = delta1;
  lower.constants["delta1"] = delta1;
  lower.constants["b_min"] = b_min;
  lower.constants["points_above_b_floor"] = static_cast<real>(points_kept);
  lower.holds = delta1 >= opt.delta1_floor && b_min >= -1e-12;
  lower.margin = delta1 - opt.delta1_floor;

  const auto cap_clause = [&](ConditionReport& r) {
    r.constants["constant"] = r.margin;
    r.constants["cap"] = opt.c_cap;
    r.holds = r.margin <= opt.c_cap;
  };
  cap_clause(c2);
  cap_clause(dc1);
  cap_clause(dc2);
  cap_clause(dac3);
  cap_clause(dtc);

  const auto small_clause = [&](ConditionReport& r) {
    r.constants["constant"] = r.margin;
    r.constants["eps_bar"] = opt.eps_bar;
    r.holds = r.margin <= opt.eps_bar * (1.0 + 1e-9);
  };
  small_clause(small1);
  small_clause(small2);

  rep.holds = lower.holds && c2.holds && dc1.holds && dc2.holds && dac3.holds && dtc.holds;
  rep.holds_with_smallness = rep.holds && small1.holds && small2.holds;
  rep.clauses = {lower, c2, dc1, dc2, dac3, dtc, small1, small2};
  return rep;
}

// ---- q-form construction ------------------------------------------------

struct QForm {
  Expr q1, q2, q3;
};

// Factor the full cubic in tau with coefficients q1, q2, q3 (homogeneous
// weights carried by bracket_xi) around the phase phi: with ib = 1/bracket_xi,
//   a = 3 phi + q1 ib
//   b = -(3 phi^2 + 2 q1 phi ib + q2 ib^2)
//   c = phi^3 + q1 phi^2 ib + q2 phi ib^2 + q3 ib^3
// so that tau^3 + q1 tau^2 + q2 tau + q3 equals
// (tau - phi L)^3 + a L (tau - phi L)^2 - b L^2 (tau - phi L) + c L^3 at
// L = bracket_xi.
inline CubicSymbol from_q_form(const QForm& q, const Expr& phi, int nx, int nxi) {
  const Expr one = Expr::constant(1);
  const Expr three = Expr::constant(3);
  const Expr two = Expr::constant(2);
  const Expr ib = one / Expr::var_bxi();
  CubicSymbol s;
  s.nx = nx;
  s.nxi = nxi;
  s.phi = phi;
  s.a = three * phi + q.q1 * ib;
  s.b = -(three * phi * phi + two * q.q1 * phi * ib + q.q2 * ib * ib);
  s.c = phi * phi * phi + q.q1 * phi * phi * ib + q.q2 * phi * ib * ib + q.q3 * ib * ib * ib;
  return s;
}

// ---- extension past the local patch -------------------------------------

struct ExtensionSpec {
  Expr chi;        // 1 on the patch, falls to 0 outside; t-independent
  Expr chi_tilde;  // 0 well inside, 1 where chi decays; chi + chi_tilde >= 1
  real m_const = 0;
  real m_prime = 0;  // low-frequency guard coefficient
};

struct ExtensionResult {
  CubicSymbol extended;
  real cover_min = 0;
  real chi_min = 0, chi_max = 0;
  real chi_tilde_min = 0, chi_tilde_max = 0;
};

// a~ = chi a, b~ = chi^2 b + M chi_tilde (+ M' at low frequency),
// c~ = chi^3 c. The cutoff pair must cover: chi + chi_tilde >= 1 with both in
// [0, 1] on the validation grid.
inline ExtensionResult extend_symbols(const CubicSymbol& sym, const ExtensionSpec& ext,
                                      const SampleGrid& validation) {
  if (ext.chi.depends_on_t() || ext.chi_tilde.depends_on_t())
    throw std::invalid_argument("cutoffs must not depend on t");

  ExtensionResult res;
  res.cover_min = std::numeric_limits<real>::infinity();
  res.chi_min = res.chi_tilde_min = std::numeric_limits<real>::infinity();
  res.chi_max = res.chi_tilde_max = -std::numeric_limits<real>::infinity();
  validation.for_each([&](const EvalPoint& p) {
    const real ch = ext.chi(p);
    const real ct = ext.chi_tilde(p);
    res.cover_min = std::min(res.cover_min, ch + ct);
    res.chi_min = std::min(res.chi_min, ch);
    res.chi_max = std::max(res.chi_max, ch);
    res.chi_tilde_min = std::min(res.chi_tilde_min, ct);
    res.chi_tilde_max = std::max(res.chi_tilde_max, ct);
  });
  const real tol = 1e-9;
  if (res.cover_min < 1.0 - tol)
    throw CutoffOverlapInvalid("cutoffs leave a gap: min(chi + chi_tilde) = " +
                               to_shortest_string(res.cover_min));
  if (res.chi_min < -tol || res.chi_max > 1.0 + tol || res.chi_tilde_min < -tol ||
      res.chi_tilde_max > 1.0 + tol)
    throw CutoffOverlapInvalid("cutoff values leave [0, 1]");

  Expr guard = Expr::constant(ext.m_const) * ext.chi_tilde;
  if (ext.m_prime != 0 && sym.nxi > 0) {
    Expr sumsq = Expr::var_xi(0) * Expr::var_xi(0);
    for (int d = 1; d < sym.nxi; ++d) sumsq = sumsq + Expr::var_xi(d) * Expr::var_xi(d);
    const Expr chi0 = smootherstep(Expr::constant(2) - expr_sqrt(sumsq));
    guard = guard + Expr::constant(ext.m_prime) * chi0;
  }

  CubicSymbol e;
  e.nx = sym.nx;
  e.nxi = sym.nxi;
  e.phi = sym.phi;
  e.dphi_dt = sym.dphi_dt;
  e.a = ext.chi * sym.a;
  e.b = ext.chi * ext.chi * sym.b + guard;
  e.c = ext.chi * ext.chi * ext.chi * sym.c;
  if (!sym.da_dt.empty()) e.da_dt = ext.chi * sym.da_dt;
  if (!sym.db_dt.empty()) e.db_dt = ext.chi * ext.chi * sym.db_dt;
  if (!sym.dc_dt.empty()) e.dc_dt = ext.chi * ext.chi * ext.chi * sym.dc_dt;
  res.extended = std::move(e);
  return res;
}

}  // namespace trisym
