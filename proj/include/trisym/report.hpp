#pragma once

// JSON views of the check reports.  nlohmann::json keeps object keys sorted,
// so dumps are deterministic for identical inputs.

#include <json.hpp>

#include "trisym/cubic.hpp"
#include "trisym/energy.hpp"
#include "trisym/grid.hpp"
#include "trisym/mode.hpp"

namespace trisym {

using json = nlohmann::json;

inline json to_json(const EvalPoint& p) {
  json j;
  j["t"] = p.t;
  j["x"] = p.x;
  j["xi"] = p.xi;
  j["bracket_xi"] = p.bxi;
  return j;
}

inline json to_json(const ConditionReport& r) {
  json j;
  j["name"] = r.name;
  j["holds"] = r.holds;
  j["margin"] = r.margin;
  json c = json::object();
  for (const auto& [k, v] : r.constants) c[k] = v;
  j["constants"] = c;
  if (r.has_worst) {
    j["worst_point"] = to_json(r.worst);
    j["worst_value"] = r.worst_value;
  }
  return j;
}

inline json to_json(const MikiReport& r) {
  json j;
  j["holds"] = r.holds;
  j["holds_with_smallness"] = r.holds_with_smallness;
  j["delta1"] = r.delta1;
  json cl = json::array();
  for (const auto& c : r.clauses) cl.push_back(to_json(c));
  j["clauses"] = cl;
  return j;
}

inline json to_json(const CharacteristicSample& s) {
  json j;
  j["point"] = to_json(s.pt);
  j["delta"] = s.delta;
  j["delta0"] = s.delta0;
  j["multiplicity"] = s.multiplicity;
  j["effective"] = s.effective;
  j["db_dt"] = s.dtb;
  return j;
}

inline json to_json(const ClassificationReport& r, std::size_t degenerate_cap = 64) {
  json j;
  j["n_simple"] = r.n_simple;
  j["n_double"] = r.n_double;
  j["n_triple"] = r.n_triple;
  j["all_triples_effective"] = r.all_triples_effective;
  json deg = json::array();
  for (std::size_t k = 0; k < r.degenerate.size() && k < degenerate_cap; ++k)
    deg.push_back(to_json(r.degenerate[k]));
  j["degenerate_points"] = deg;
  j["degenerate_truncated"] = r.degenerate.size() > degenerate_cap;
  return j;
}

inline json to_json(const KeiyakuReport& r) {
  json j;
  j["holds"] = r.holds;
  j["residual_ok"] = r.resid_ok;
  j["max_residual"] = r.max_resid;
  j["n_star_measured"] = r.n_star_measured;
  j["n_weight"] = r.n_weight;
  j["gamma"] = r.gamma;
  j["lambda"] = r.lambda;
  j["threshold_found"] = r.threshold_found;
  if (r.threshold_found) {
    j["threshold_n"] = r.threshold_n;
    j["threshold_gamma"] = r.threshold_gamma;
  }
  return j;
}

inline json to_json(const EstimateReport& r) {
  json j;
  j["holds"] = r.holds;
  j["c_over_c"] = r.c_over_c;
  j["worst_t"] = r.worst_t;
  j["n_weight"] = r.n_weight;
  j["gamma"] = r.gamma;
  return j;
}

inline json to_json(const ScanCell& c) {
  json j;
  j["n_weight"] = c.n_weight;
  j["gamma"] = c.gamma;
  j["lambda"] = c.lambda;
  j["feasible"] = c.feasible;
  j["keiyaku_ok"] = c.keiyaku_ok;
  j["estimate_ok"] = c.estimate_ok;
  j["n_star"] = c.n_star;
  j["c_over_c"] = c.c_over_c;
  return j;
}

inline json to_json(const ScanReport& r) {
  json j;
  json cells = json::array();
  for (const auto& c : r.cells) cells.push_back(to_json(c));
  j["cells"] = cells;
  j["feasible_count"] = r.feasible_count;
  j["monotone_violations"] = r.monotone_violations;
  j["has_min_feasible"] = r.has_min_feasible;
  if (r.has_min_feasible) j["min_feasible"] = to_json(r.min_feasible);
  return j;
}

inline json trace_summary_json(const EnergyTrace& tr) {
  json j;
  j["points"] = tr.size();
  j["t_first"] = tr.t.empty() ? 0.0 : tr.t.front();
  j["t_last"] = tr.t.empty() ? 0.0 : tr.t.back();
  real umax = 0, emax = 0, cmax = 0, kmax = 0, errmax = 0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    umax = std::max(umax, tr.u[k].norm());
    emax = std::max(emax, tr.e[k]);
    cmax = std::max(cmax, tr.cancel_resid[k]);
    kmax = std::max(kmax, tr.keiyaku_resid[k]);
    errmax = std::max(errmax, tr.err_pt[k]);
  }
  j["max_u_norm"] = umax;
  j["max_weighted_energy"] = emax;
  j["max_cancel_resid"] = cmax;
  j["max_keiyaku_resid"] = kmax;
  j["max_step_error"] = errmax;
  j["xi"] = tr.xi;
  j["bracket_xi"] = tr.bxi;
  return j;
}

}  // namespace trisym
