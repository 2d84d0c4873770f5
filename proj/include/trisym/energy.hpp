#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "trisym/mode.hpp"

namespace trisym {

struct KeiyakuOptions {
  real tol = 1e-8;
  real w_floor_rel = 1e-280;
  std::vector<real> n_list;      // optional threshold search
  std::vector<real> gamma_list;
};

struct KeiyakuReport {
  bool holds = false;     // residual check passes and N exceeds the measured N*
  bool resid_ok = false;
  real max_resid = -std::numeric_limits<real>::infinity();
  real n_star_measured = 0;
  long worst_index = -1;
  real n_weight = 0, gamma = 0, lambda = 0;
  bool threshold_found = false;
  real threshold_n = 0, threshold_gamma = 0;
};

namespace detail {

// Cached per-(trace, lambda) series for the discrete energy inequality.
struct KeiyakuData {
  std::vector<real> t, w, g;  // g_k = <S~F, F>(t_k) = f_k^2 * S~_11
  real h = 0;
};

inline KeiyakuData keiyaku_data(const EnergyTrace& tr, const ModeSystem& m, real lambda) {
  if (tr.config.direction != Direction::Forward)
    throw std::invalid_argument("the discrete energy inequality applies to forward runs");
  KeiyakuData d;
  d.t = tr.t;
  d.h = tr.t[1] - tr.t[0];
  d.w.resize(tr.size());
  d.g.resize(tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const real t = tr.t[k];
    const auto v = eval_symbol(m.sym, m.point_at(t));
    const mat3 St = s_tilde_at(m, t, lambda, v);
    const cplx qs = tr.u[k].dot(St.cast<cplx>() * tr.u[k]);
    d.w[k] = qs.real();
    d.g[k] = tr.f[k] * tr.f[k] * (1.0 + lambda / (t * m.bxi * m.bxi));
  }
  return d;
}

// Max over interior points of t (W' - gamma W - t <S~F,F>) / W, the smallest
// N* making the differential inequality an identity-side bound.
inline real measure_n_star(const KeiyakuData& d, real gamma, real w_floor_rel) {
  const std::size_t n = d.t.size();
  real wmax = 0;
  for (real w : d.w) wmax = std::max(wmax, std::abs(w));
  const real floor = w_floor_rel * std::max(wmax, 1e-300);
  real n_star = 0;
  for (std::size_t k = 2; k + 2 < n; ++k) {
    if (!(d.w[k] > floor)) continue;
    const real dw =
        (d.w[k - 2] - 8 * d.w[k - 1] + 8 * d.w[k + 1] - d.w[k + 2]) / (12 * d.h);
    const real r = d.t[k] * (dw - d.t[k] * d.g[k] - gamma * d.w[k]) / d.w[k];
    n_star = std::max(n_star, r);
  }
  return n_star;
}

// Signed residuals of the derivative of the rebased weighted energy
//   e(t) = (t / t_k)^{-N} e^{-gamma (t - t_k)} W(t)
// at its own base point against t <S~F,F> - (N - N*) W / t. Rebasing to
// weight 1 at t_k keeps every term representable for any N, and at the base
// point the weight derivative is exactly -(N/t_k + gamma), so
//   e'(t_k) = W'(t_k) - (N/t_k + gamma) W(t_k)
// with only W' needing a stencil. W varies on the physical oscillation
// scale, not the weight scale N/t, so a stencil resolves it at any N. The
// seven-point sixth-order stencil keeps this check independent of the
// five-point N* measurement. Positive residual = violation.
inline std::pair<real, long> keiyaku_residuals(const KeiyakuData& d, real n_weight,
                                               real gamma, real n_star,
                                               real w_floor_rel,
                                               std::vector<real>* out) {
  const std::size_t n = d.t.size();
  real wmax = 0;
  for (real w : d.w) wmax = std::max(wmax, std::abs(w));
  const real floor = w_floor_rel * std::max(wmax, 1e-300);
  real worst = -std::numeric_limits<real>::infinity();
  long worst_idx = -1;
  if (out) out->assign(n, 0.0);
  for (std::size_t k = 3; k + 3 < n; ++k) {
    if (!(d.w[k] > floor)) continue;
    const real tk = d.t[k];
    const real dw = (-d.w[k - 3] + 9 * d.w[k - 2] - 45 * d.w[k - 1] + 45 * d.w[k + 1] -
                     9 * d.w[k + 2] + d.w[k + 3]) /
                    (60 * d.h);
    const real de = dw - (n_weight / tk + gamma) * d.w[k];
    const real rhs = tk * d.g[k] - (n_weight - n_star) * d.w[k] / tk;
    const real scale =
        std::max({std::abs(de), std::abs(tk * d.g[k]),
                  std::abs(n_weight - n_star) * std::abs(d.w[k]) / tk,
                  std::abs(d.w[k]) / tk, 1e-300});
    const real resid = (de - rhs) / scale;
    if (out) (*out)[k] = resid;
    if (resid > worst) {
      worst = resid;
      worst_idx = static_cast<long>(k);
    }
  }
  return {worst, worst_idx};
}

}  // namespace detail

// Checks the discrete form of the weighted-energy differential inequality
//   dE/dt <= t^{-N+1} e^{-gt} <S~F,F> - (N - N*) t^{-N-1} e^{-gt} <S~U,U>
// with N* measured from the run itself. The five-point derivative is rebased
// to weight 1 at the center point, which keeps every term representable for
// large N. Fills tr.keiyaku_resid.
inline KeiyakuReport verify_keiyaku(EnergyTrace& tr, const ModeSystem& m,
                                    KeiyakuOptions opt = {}) {
  KeiyakuReport rep;
  rep.n_weight = tr.config.n_weight;
  rep.gamma = tr.config.gamma;
  rep.lambda = tr.config.lambda;
  const auto d = detail::keiyaku_data(tr, m, tr.config.lambda);

  rep.n_star_measured = detail::measure_n_star(d, rep.gamma, opt.w_floor_rel);
  const auto [worst, idx] =
      detail::keiyaku_residuals(d, rep.n_weight, rep.gamma, rep.n_star_measured,
                                opt.w_floor_rel, &tr.keiyaku_resid);
  rep.max_resid = worst;
  rep.worst_index = idx;
  rep.resid_ok = worst <= opt.tol;
  rep.holds = rep.resid_ok && rep.n_weight > rep.n_star_measured;

  if (!opt.n_list.empty() && !opt.gamma_list.empty()) {
    for (real n : opt.n_list) {
      for (real g : opt.gamma_list) {
        const real ns = detail::measure_n_star(d, g, opt.w_floor_rel);
        if (!(n > ns)) continue;
        const auto [w2, i2] =
            detail::keiyaku_residuals(d, n, g, ns, opt.w_floor_rel, nullptr);
        (void)i2;
        if (w2 <= opt.tol) {
          rep.threshold_found = true;
          rep.threshold_n = n;
          rep.threshold_gamma = g;
          break;
        }
      }
      if (rep.threshold_found) break;
    }
  }
  return rep;
}

struct EstimateReport {
  bool holds = false;
  real c_over_c = std::numeric_limits<real>::infinity();
  real worst_t = 0;
  real n_weight = 0, gamma = 0;
};

namespace detail {

inline void check_trace_family(const std::vector<EnergyTrace>& traces, Direction dir) {
  if (traces.empty()) throw std::invalid_argument("need at least one mode trace");
  const auto& t0 = traces.front().t;
  for (const auto& tr : traces) {
    if (tr.config.direction != dir)
      throw std::invalid_argument("trace direction does not match the estimate form");
    if (tr.t.size() != t0.size())
      throw DimensionMismatch("mode traces have different resolutions");
    for (std::size_t k = 0; k < t0.size(); ++k)
      if (std::abs(tr.t[k] - t0[k]) > 1e-12 * std::max(1.0, std::abs(t0[k])))
        throw DimensionMismatch("mode traces sample different time grids");
  }
}

}  // namespace detail

// Smallest C/c in the a-priori estimate
//   c [ t^{-N+2} e^{-gt} ||U(t)||^2 + int_eps^t tau^{-N+1} e^{-g tau} ||U||^2 ]
//     <= C [ eps^{-N-1} e^{-g eps} ||U(eps)||^2
//            + int_eps^t tau^{-N+1} e^{-g tau} ||f||^2 ],
// norms summed over the supplied modes. All weights are rebased by
// eps^{N-1} e^{g eps}, which leaves the ratio invariant and avoids overflow.
inline EstimateReport verify_estimate_forward(const std::vector<EnergyTrace>& traces,
                                              real n_weight, real gamma) {
  detail::check_trace_family(traces, Direction::Forward);
  EstimateReport rep;
  rep.n_weight = n_weight;
  rep.gamma = gamma;

  const auto& t = traces.front().t;
  const std::size_t n = t.size();
  std::vector<real> u2(n, 0.0), f2(n, 0.0);
  for (const auto& tr : traces)
    for (std::size_t k = 0; k < n; ++k) {
      u2[k] += tr.u[k].squaredNorm();
      f2[k] += tr.f[k] * tr.f[k];
    }

  const real eps = t.front();
  const real lnk = (n_weight - 1.0) * std::log(eps) + gamma * eps;
  const auto wt = [&](real tau, real power) {
    return std::exp(power * std::log(tau) - gamma * tau + lnk);
  };
  const real boundary = wt(eps, -n_weight - 1.0) * u2[0];  // = eps^{-2} u2[0]

  real iu = 0, iff = 0;
  real best = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const real h = t[k] - t[k - 1];
    iu += 0.5 * h * (wt(t[k - 1], -n_weight + 1.0) * u2[k - 1] +
                     wt(t[k], -n_weight + 1.0) * u2[k]);
    iff += 0.5 * h * (wt(t[k - 1], -n_weight + 1.0) * f2[k - 1] +
                      wt(t[k], -n_weight + 1.0) * f2[k]);
    const real lhs = wt(t[k], -n_weight + 2.0) * u2[k] + iu;
    const real rhs = boundary + iff;
    real ratio;
    if (rhs > 1e-300) ratio = lhs / rhs;
    else ratio = (lhs <= 1e-300) ? 0.0 : std::numeric_limits<real>::infinity();
    if (ratio > best) {
      best = ratio;
      rep.worst_t = t[k];
    }
  }
  rep.c_over_c = best;
  rep.holds = std::isfinite(best);
  return rep;
}

inline EstimateReport verify_estimate_forward(const std::vector<EnergyTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("estimate needs at least one trace");
  const auto& cfg = traces.front().config;
  return verify_estimate_forward(traces, cfg.n_weight, cfg.gamma);
}

// Backward counterpart for adjoint runs from T0 down:
//   c [ t^{N+2} e^{gt} ||V(t)||^2 + int_t^{T0} tau^{N+1} e^{g tau} ||V||^2 ]
//     <= C [ T0^{N-1} e^{g T0} ||V(T0)||^2
//            + int_t^{T0} tau^{N+1} e^{g tau} ||g||^2 ],
// rebased by T0^{-N-1} e^{-g T0}.
inline EstimateReport verify_estimate_backward(const std::vector<EnergyTrace>& traces,
                                               real n_weight, real gamma) {
  detail::check_trace_family(traces, Direction::BackwardAdjoint);
  EstimateReport rep;
  rep.n_weight = n_weight;
  rep.gamma = gamma;

  const auto& t = traces.front().t;  // decreasing from T0
  const std::size_t n = t.size();
  std::vector<real> v2(n, 0.0), g2(n, 0.0);
  for (const auto& tr : traces)
    for (std::size_t k = 0; k < n; ++k) {
      v2[k] += tr.u[k].squaredNorm();
      g2[k] += tr.f[k] * tr.f[k];
    }

  const real t0 = t.front();
  const real lnk = -(n_weight + 1.0) * std::log(t0) - gamma * t0;
  const auto wt = [&](real tau, real power) {
    return std::exp(power * std::log(tau) + gamma * tau + lnk);
  };
  const real boundary = wt(t0, n_weight - 1.0) * v2[0];  // = t0^{-2} v2[0]

  real iv = 0, ig = 0;
  real best = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const real h = t[k - 1] - t[k];
    iv += 0.5 * h * (wt(t[k - 1], n_weight + 1.0) * v2[k - 1] +
                     wt(t[k], n_weight + 1.0) * v2[k]);
    ig += 0.5 * h * (wt(t[k - 1], n_weight + 1.0) * g2[k - 1] +
                     wt(t[k], n_weight + 1.0) * g2[k]);
    const real lhs = wt(t[k], n_weight + 2.0) * v2[k] + iv;
    const real rhs = boundary + ig;
    real ratio;
    if (rhs > 1e-300) ratio = lhs / rhs;
    else ratio = (lhs <= 1e-300) ? 0.0 : std::numeric_limits<real>::infinity();
    if (ratio > best) {
      best = ratio;
      rep.worst_t = t[k];
    }
  }
  rep.c_over_c = best;
  rep.holds = std::isfinite(best);
  return rep;
}

inline EstimateReport verify_estimate_backward(const std::vector<EnergyTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("estimate needs at least one trace");
  const auto& cfg = traces.front().config;
  return verify_estimate_backward(traces, cfg.n_weight, cfg.gamma);
}

// ---- parameter scan ------------------------------------------------------

struct ScanOptions {
  std::vector<real> n_list, gamma_list, lambda_list;
  real keiyaku_tol = 1e-8;
  real w_floor_rel = 1e-280;
};

struct ScanCell {
  real n_weight = 0, gamma = 0, lambda = 0;
  bool feasible = false, keiyaku_ok = false, estimate_ok = false;
  real n_star = 0;
  real c_over_c = 0;
};

struct ScanReport {
  std::vector<ScanCell> cells;
  std::size_t feasible_count = 0;
  long monotone_violations = 0;
  bool has_min_feasible = false;
  ScanCell min_feasible;
};

// Grid over (N, gamma, lambda): a cell is feasible when every mode satisfies
// the discrete energy inequality with its measured N* < N and the forward
// estimate ratio is finite. Modes are integrated once and reweighted per cell.
inline ScanReport parameter_scan(const std::vector<ModeSystem>& modes,
                                 const EnergyRunConfig& base, const ScanOptions& opt) {
  if (modes.empty()) throw std::invalid_argument("scan needs at least one mode");
  if (opt.n_list.empty() || opt.gamma_list.empty() || opt.lambda_list.empty())
    throw std::invalid_argument("scan lists must be nonempty");

  std::vector<EnergyTrace> traces;
  traces.reserve(modes.size());
  for (const auto& m : modes) traces.push_back(integrate_mode(m, base));

  // Estimate ratios do not involve lambda; compute one per (N, gamma).
  std::map<std::pair<real, real>, EstimateReport> est;
  for (real n : opt.n_list)
    for (real g : opt.gamma_list) est[{n, g}] = verify_estimate_forward(traces, n, g);

  ScanReport rep;
  for (real lam : opt.lambda_list) {
    std::vector<detail::KeiyakuData> data;
    data.reserve(modes.size());
    for (std::size_t i = 0; i < modes.size(); ++i)
      data.push_back(detail::keiyaku_data(traces[i], modes[i], lam));

    for (real n : opt.n_list)
      for (real g : opt.gamma_list) {
        ScanCell cell;
        cell.n_weight = n;
        cell.gamma = g;
        cell.lambda = lam;
        cell.keiyaku_ok = true;
        for (const auto& d : data) {
          const real ns = detail::measure_n_star(d, g, opt.w_floor_rel);
          cell.n_star = std::max(cell.n_star, ns);
          if (!(n > ns)) {
            cell.keiyaku_ok = false;
            continue;
          }
          const auto [worst, idx] =
              detail::keiyaku_residuals(d, n, g, ns, opt.w_floor_rel, nullptr);
          (void)idx;
          if (worst > opt.keiyaku_tol) cell.keiyaku_ok = false;
        }
        const auto& er = est[{n, g}];
        cell.estimate_ok = er.holds;
        cell.c_over_c = er.c_over_c;
        cell.feasible = cell.keiyaku_ok && cell.estimate_ok;
        if (cell.feasible) ++rep.feasible_count;
        rep.cells.push_back(cell);
      }
  }

  // Feasibility should be upward closed in (N, gamma) for each lambda.
  const std::size_t ng = opt.gamma_list.size();
  const std::size_t nn = opt.n_list.size();
  const auto at = [&](std::size_t il, std::size_t in, std::size_t ig) -> const ScanCell& {
    return rep.cells[il * nn * ng + in * ng + ig];
  };
  for (std::size_t il = 0; il < opt.lambda_list.size(); ++il)
    for (std::size_t in = 0; in < nn; ++in)
      for (std::size_t ig = 0; ig < ng; ++ig) {
        if (!at(il, in, ig).feasible) continue;
        for (std::size_t jn = in; jn < nn; ++jn)
          for (std::size_t jg = ig; jg < ng; ++jg)
            if (!at(il, jn, jg).feasible) ++rep.monotone_violations;
      }

  for (const auto& cell : rep.cells)
    if (cell.feasible && !rep.has_min_feasible) {
      rep.min_feasible = cell;
      rep.has_min_feasible = true;
    }
  return rep;
}

// Forward/backward duality probe: integrates U forward and V backward on the
// same grid and reports the relative drift of V* S U, which is conserved for
// a time-independent symbol with S-self-adjoint lower order term.
inline real duality_pairing_drift(const ModeSystem& m, const EnergyRunConfig& fwd_cfg,
                                  const cvec3& v_terminal) {
  EnergyRunConfig bwd_cfg = fwd_cfg;
  bwd_cfg.direction = Direction::BackwardAdjoint;
  bwd_cfg.u0 = v_terminal;
  const auto fu = integrate_mode(m, fwd_cfg);
  const auto bv = integrate_mode(m, bwd_cfg);
  const std::size_t n = fu.size();
  cplx p0;
  real drift = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const real t = fu.t[k];
    const auto v = eval_symbol(m.sym, m.point_at(t));
    const mat3 S = s_matrix(v.a, v.b, v.c);
    const cvec3& U = fu.u[k];
    const cvec3& V = bv.u[n - 1 - k];
    const cplx p = V.dot(S.cast<cplx>() * U);
    if (k == 0) p0 = p;
    else drift = std::max(drift, std::abs(p - p0) / std::max(1e-300, std::abs(p0)));
  }
  return drift;
}

}  // namespace trisym
