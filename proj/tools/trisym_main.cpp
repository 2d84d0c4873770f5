// trisym: command line front end for the symmetrizer and energy-estimate
// library. Reports are JSON with sorted keys and shortest-round-trip numbers,
// so identical inputs produce byte-identical output.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trisym/bezout.hpp"
#include "trisym/csv.hpp"
#include "trisym/cubic.hpp"
#include "trisym/energy.hpp"
#include "trisym/report.hpp"

using namespace trisym;

namespace {

constexpr const char* kVersion = "1.0.0";

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  real tol = 1e-9;
  long seed = 0;
  std::string cmdline;
};

void add_common(CLI::App* sub, CommonOpts& o, bool needs_config) {
  auto* c = sub->add_option("--config", o.config_path, "JSON config file");
  if (needs_config) c->required();
  sub->add_option("--out", o.out_dir, "directory for report.json and data files");
  sub->add_option("--tol", o.tol, "numerical tolerance for direct checks");
  sub->add_option("--seed", o.seed, "reserved; recorded in run_info.txt only");
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << body;
}

// Prints the report and, with --out, writes report.json plus one CSV per
// integrated mode. run_info.txt carries timing metadata and is the only
// output file that is not reproducible byte for byte.
int emit_report(const json& report, const CommonOpts& o, int code,
                const std::vector<EnergyTrace>* traces = nullptr) {
  const std::string dump = report.dump(2) + "\n";
  std::cout << dump;
  if (!o.out_dir.empty()) {
    const std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    write_text_file(dir / "report.json", dump);
    if (traces)
      for (std::size_t i = 0; i < traces->size(); ++i)
        write_trace_csv((dir / ("mode_" + std::to_string(i) + ".csv")).string(),
                        (*traces)[i]);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    std::ostringstream info;
    info << "command: " << o.cmdline << "\n"
         << "version: " << kVersion << "\n"
         << "seed: " << o.seed << "\n"
         << "time: " << stamp << "\n"
         << "exit_code: " << code << "\n"
         << "note: metadata sidecar, excluded from the byte-reproducibility contract\n";
    write_text_file(dir / "run_info.txt", info.str());
  }
  return code;
}

// ---- config file ---------------------------------------------------------

void reject_unknown_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("unknown key \"" + item.key() + "\" in " + where);
  }
}

real num_field(const json& j, const char* key, real def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number())
    throw std::invalid_argument(std::string(key) + " must be a number");
  return j.at(key).get<real>();
}

real num_field_req(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw std::invalid_argument(where + " needs \"" + key + "\"");
  return num_field(j, key, 0);
}

long int_field(const json& j, const char* key, long def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number_integer())
    throw std::invalid_argument(std::string(key) + " must be an integer");
  return j.at(key).get<long>();
}

bool bool_field(const json& j, const char* key, bool def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean())
    throw std::invalid_argument(std::string(key) + " must be a boolean");
  return j.at(key).get<bool>();
}

std::string str_field(const json& j, const char* key, const char* def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string())
    throw std::invalid_argument(std::string(key) + " must be a string");
  return j.at(key).get<std::string>();
}

// Missing field: parses `def` when given, otherwise yields an empty
// expression (callers treat that as "not provided").
Expr expr_field(const json& sec, const char* key, int nx, int nxi, const char* def,
                const std::string& where) {
  std::string src;
  if (sec.contains(key)) {
    if (!sec.at(key).is_string())
      throw std::invalid_argument(where + "." + key + " must be an expression string");
    src = sec.at(key).get<std::string>();
  } else if (def) {
    src = def;
  } else {
    return Expr{};
  }
  try {
    return Expr::parse(src, nx, nxi);
  } catch (const ExprParseError& e) {
    throw ExprParseError(where + "." + key + ": " + e.what(), e.position);
  }
}

std::array<Expr, 9> expr_matrix_field(const json& sec, const char* key, int nx, int nxi,
                                      const std::string& where) {
  const auto& arr = sec.at(key);
  if (!arr.is_array() || arr.size() != 9)
    throw std::invalid_argument(where + "." + key + " must be an array of 9 expressions");
  std::array<Expr, 9> out;
  for (std::size_t i = 0; i < 9; ++i) {
    if (!arr[i].is_string())
      throw std::invalid_argument(where + "." + key + " entries must be strings");
    try {
      out[i] = Expr::parse(arr[i].get<std::string>(), nx, nxi);
    } catch (const ExprParseError& e) {
      throw ExprParseError(where + "." + key + "[" + std::to_string(i) + "]: " + e.what(),
                           e.position);
    }
  }
  return out;
}

std::vector<real> num_list_field(const json& sec, const char* key,
                                 const std::string& where) {
  std::vector<real> out;
  if (!sec.contains(key)) return out;
  const auto& arr = sec.at(key);
  if (!arr.is_array()) throw std::invalid_argument(where + "." + key + " must be an array");
  for (const auto& v : arr) {
    if (!v.is_number())
      throw std::invalid_argument(where + "." + key + " entries must be numbers");
    out.push_back(v.get<real>());
  }
  return out;
}

cvec3 cvec3_field(const json& sec, const char* key, const cvec3& def,
                  const std::string& where) {
  if (!sec.contains(key)) return def;
  const auto& arr = sec.at(key);
  if (!arr.is_array() || arr.size() != 3)
    throw std::invalid_argument(where + "." + key + " must be three [re, im] pairs");
  cvec3 out;
  for (int i = 0; i < 3; ++i) {
    const auto& p = arr[static_cast<std::size_t>(i)];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw std::invalid_argument(where + "." + key + " entries must be [re, im] pairs");
    out[i] = cplx(p[0].get<real>(), p[1].get<real>());
  }
  return out;
}

GridAxis axis_field(const json& a, const std::string& where) {
  reject_unknown_keys(a, where, {"min", "max", "count", "spacing"});
  GridAxis ax;
  ax.lo = num_field_req(a, "min", where);
  ax.hi = num_field_req(a, "max", where);
  if (!a.contains("count")) throw std::invalid_argument(where + " needs \"count\"");
  ax.count = static_cast<int>(int_field(a, "count", 1));
  const std::string sp = str_field(a, "spacing", "linear");
  if (sp == "log")
    ax.spacing = GridAxis::Spacing::Log;
  else if (sp != "linear")
    throw std::invalid_argument(where + ".spacing must be \"linear\" or \"log\"");
  return ax;
}

struct FileConfig {
  real tolerance = 1e-9;
  int nx = 0, nxi = 0;

  bool has_symbol = false;
  CubicSymbol sym;
  bool has_grid = false;
  SampleGrid grid;

  real eps_bar = 0.02, delta1 = 1e-6, eps1 = 0.1, eps_dts = 0.1, eps_b = 0.1;
  real delta_e = 0.25, delta_h = 0.25;
  bool lemma_floor = false;
  bool has_cond_b = false;
  std::array<Expr, 9> cond_b;

  bool has_extend = false;
  ExtensionSpec ext;

  bool has_energy = false;
  EnergyRunConfig run;
  std::vector<vec> xi_list;
  std::array<Expr, 9> b_entries{};
  std::array<Expr, 9> b_adjoint{};
  Expr forcing;
  std::vector<real> n_list, gamma_list, lambda_list;
  cvec3 v_terminal = cvec3::Zero();
  bool has_v_terminal = false;

  json raw;
};

FileConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  json j = json::parse(in);
  reject_unknown_keys(j, "config",
                      {"tolerance", "arity", "symbol", "q_form", "grid", "conditions",
                       "extend", "energy"});

  FileConfig c;
  c.raw = j;
  c.tolerance = num_field(j, "tolerance", 1e-9);
  if (!(c.tolerance > 0)) throw std::invalid_argument("tolerance must be positive");

  if (j.contains("arity")) {
    reject_unknown_keys(j["arity"], "arity", {"x", "xi"});
    c.nx = static_cast<int>(int_field(j["arity"], "x", 0));
    c.nxi = static_cast<int>(int_field(j["arity"], "xi", 0));
    if (c.nx < 0 || c.nx > 8 || c.nxi < 0 || c.nxi > 8)
      throw std::invalid_argument("arity entries must lie in [0, 8]");
  }

  if (j.contains("symbol") && j.contains("q_form"))
    throw std::invalid_argument("give either \"symbol\" or \"q_form\", not both");

  if (j.contains("symbol")) {
    const auto& s = j["symbol"];
    reject_unknown_keys(s, "symbol",
                        {"a", "b", "c", "phi", "da_dt", "db_dt", "dc_dt", "dphi_dt"});
    c.sym.nx = c.nx;
    c.sym.nxi = c.nxi;
    c.sym.a = expr_field(s, "a", c.nx, c.nxi, "0", "symbol");
    c.sym.b = expr_field(s, "b", c.nx, c.nxi, "0", "symbol");
    c.sym.c = expr_field(s, "c", c.nx, c.nxi, "0", "symbol");
    c.sym.phi = expr_field(s, "phi", c.nx, c.nxi, "0", "symbol");
    c.sym.da_dt = expr_field(s, "da_dt", c.nx, c.nxi, nullptr, "symbol");
    c.sym.db_dt = expr_field(s, "db_dt", c.nx, c.nxi, nullptr, "symbol");
    c.sym.dc_dt = expr_field(s, "dc_dt", c.nx, c.nxi, nullptr, "symbol");
    c.sym.dphi_dt = expr_field(s, "dphi_dt", c.nx, c.nxi, nullptr, "symbol");
    c.has_symbol = true;
  } else if (j.contains("q_form")) {
    const auto& q = j["q_form"];
    reject_unknown_keys(q, "q_form", {"q1", "q2", "q3", "phi"});
    QForm qf;
    qf.q1 = expr_field(q, "q1", c.nx, c.nxi, "0", "q_form");
    qf.q2 = expr_field(q, "q2", c.nx, c.nxi, "0", "q_form");
    qf.q3 = expr_field(q, "q3", c.nx, c.nxi, "0", "q_form");
    const Expr phi = expr_field(q, "phi", c.nx, c.nxi, "0", "q_form");
    c.sym = from_q_form(qf, phi, c.nx, c.nxi);
    c.has_symbol = true;
  }

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown_keys(g, "grid", {"t", "x", "xi"});
    if (!g.contains("t")) throw std::invalid_argument("grid needs a \"t\" axis");
    c.grid.t = axis_field(g["t"], "grid.t");
    auto read_axes = [&](const char* key, int want) {
      std::vector<GridAxis> axes;
      if (g.contains(key)) {
        const auto& arr = g.at(key);
        if (!arr.is_array())
          throw std::invalid_argument(std::string("grid.") + key + " must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
          axes.push_back(
              axis_field(arr[i], "grid." + std::string(key) + "[" + std::to_string(i) + "]"));
      }
      if (static_cast<int>(axes.size()) != want)
        throw std::invalid_argument(std::string("grid.") + key + " must list exactly " +
                                    std::to_string(want) + " axes (arity)");
      return axes;
    };
    c.grid.x = read_axes("x", c.nx);
    c.grid.xi = read_axes("xi", c.nxi);
    c.has_grid = true;
  }

  if (j.contains("conditions")) {
    const auto& s = j["conditions"];
    reject_unknown_keys(s, "conditions",
                        {"eps_bar", "delta1", "eps1", "eps_dts", "eps_b", "delta_e",
                         "delta_h", "b_matrix", "lemma_floor"});
    c.eps_bar = num_field(s, "eps_bar", c.eps_bar);
    c.delta1 = num_field(s, "delta1", c.delta1);
    c.eps1 = num_field(s, "eps1", c.eps1);
    c.eps_dts = num_field(s, "eps_dts", c.eps_dts);
    c.eps_b = num_field(s, "eps_b", c.eps_b);
    c.delta_e = num_field(s, "delta_e", c.delta_e);
    c.delta_h = num_field(s, "delta_h", c.delta_h);
    c.lemma_floor = bool_field(s, "lemma_floor", false);
    if (s.contains("b_matrix")) {
      c.cond_b = expr_matrix_field(s, "b_matrix", c.nx, c.nxi, "conditions");
      c.has_cond_b = true;
    }
  }

  if (j.contains("extend")) {
    const auto& s = j["extend"];
    reject_unknown_keys(s, "extend", {"chi", "chi_tilde", "m_const", "m_prime"});
    if (!s.contains("chi") || !s.contains("chi_tilde"))
      throw std::invalid_argument("extend needs \"chi\" and \"chi_tilde\"");
    c.ext.chi = expr_field(s, "chi", c.nx, c.nxi, nullptr, "extend");
    c.ext.chi_tilde = expr_field(s, "chi_tilde", c.nx, c.nxi, nullptr, "extend");
    c.ext.m_const = num_field(s, "m_const", 0);
    c.ext.m_prime = num_field(s, "m_prime", 0);
    c.has_extend = true;
  }

  if (j.contains("energy")) {
    const auto& e = j["energy"];
    reject_unknown_keys(e, "energy",
                        {"n_weight", "gamma", "lambda", "t_start", "t_end", "steps",
                         "direction", "u0", "v_terminal", "xi_list", "b_matrix",
                         "b_adjoint", "f", "n_list", "gamma_list", "lambda_list"});
    c.run.n_weight = num_field(e, "n_weight", c.run.n_weight);
    c.run.gamma = num_field(e, "gamma", c.run.gamma);
    c.run.lambda = num_field(e, "lambda", c.run.lambda);
    c.run.t_start = num_field(e, "t_start", c.run.t_start);
    c.run.t_end = num_field(e, "t_end", c.run.t_end);
    c.run.steps = int_field(e, "steps", c.run.steps);
    const std::string dir = str_field(e, "direction", "forward");
    if (dir == "forward")
      c.run.direction = Direction::Forward;
    else if (dir == "backward")
      c.run.direction = Direction::BackwardAdjoint;
    else
      throw std::invalid_argument("energy.direction must be \"forward\" or \"backward\"");
    cvec3 u0_def = cvec3::Zero();
    u0_def[0] = cplx(1, 0);
    c.run.u0 = cvec3_field(e, "u0", u0_def, "energy");
    if (e.contains("v_terminal")) {
      c.v_terminal = cvec3_field(e, "v_terminal", cvec3::Zero(), "energy");
      c.has_v_terminal = true;
    }
    if (!e.contains("xi_list"))
      throw std::invalid_argument("energy needs \"xi_list\"");
    const auto& xl = e.at("xi_list");
    if (!xl.is_array() || xl.empty())
      throw std::invalid_argument("energy.xi_list must be a nonempty array");
    for (const auto& row : xl) {
      if (!row.is_array() || static_cast<int>(row.size()) != c.nxi)
        throw std::invalid_argument(
            "each energy.xi_list entry must list exactly arity.xi numbers");
      vec v(c.nxi);
      for (int i = 0; i < c.nxi; ++i) {
        if (!row[static_cast<std::size_t>(i)].is_number())
          throw std::invalid_argument("energy.xi_list entries must be numbers");
        v[i] = row[static_cast<std::size_t>(i)].get<real>();
      }
      c.xi_list.push_back(std::move(v));
    }
    if (e.contains("b_matrix"))
      c.b_entries = expr_matrix_field(e, "b_matrix", c.nx, c.nxi, "energy");
    if (e.contains("b_adjoint"))
      c.b_adjoint = expr_matrix_field(e, "b_adjoint", c.nx, c.nxi, "energy");
    c.forcing = expr_field(e, "f", c.nx, c.nxi, nullptr, "energy");
    c.n_list = num_list_field(e, "n_list", "energy");
    c.gamma_list = num_list_field(e, "gamma_list", "energy");
    c.lambda_list = num_list_field(e, "lambda_list", "energy");
    c.has_energy = true;
  }

  return c;
}

const FileConfig& need_symbol_grid(const FileConfig& c) {
  if (!c.has_symbol)
    throw std::invalid_argument("config needs a \"symbol\" or \"q_form\" section");
  if (!c.has_grid) throw std::invalid_argument("config needs a \"grid\" section");
  return c;
}

// ---- polynomial commands -------------------------------------------------

MonicPolynomial<real> poly_from_string(const std::string& s) {
  std::vector<real> vals;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string item = s.substr(pos, comma - pos);
    std::size_t used = 0;
    real v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad coefficient \"" + item + "\"");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
      ++used;
    if (used != item.size())
      throw std::invalid_argument("bad coefficient \"" + item + "\"");
    vals.push_back(v);
    pos = comma + 1;
  }
  vec a(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) a[static_cast<Eigen::Index>(i)] = vals[i];
  return MonicPolynomial<real>(std::move(a));
}

json coeff_json(const vec& a) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < a.size(); ++i) arr.push_back(a[i]);
  return arr;
}

json matrix_json(const mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json roots_json(const RootSet<real>& rs) {
  json arr = json::array();
  for (const auto& z : rs.values) {
    json pair = json::array();
    pair.push_back(z.real());
    pair.push_back(z.imag());
    arr.push_back(pair);
  }
  return arr;
}

int cmd_poly_check(const std::string& coeffs, const CommonOpts& o) {
  const auto p = poly_from_string(coeffs);
  json rep;
  rep["command"] = "poly check";
  rep["coefficients"] = coeff_json(p.a);
  rep["degree"] = p.degree();
  const auto rs = roots(p, o.tol);
  const bool hyp = is_hyperbolic(p, o.tol);
  rep["roots"] = roots_json(rs);
  rep["root_residual"] = rs.residual;
  rep["hyperbolic"] = hyp;
  rep["holds"] = hyp;
  return emit_report(rep, o, hyp ? 0 : 2);
}

int cmd_poly_symmetrize(const std::string& coeffs, const CommonOpts& o) {
  const auto p = poly_from_string(coeffs);
  const auto cert = bezout_certificate(p);
  json rep;
  rep["command"] = "poly symmetrize";
  rep["coefficients"] = coeff_json(p.a);
  rep["degree"] = p.degree();
  rep["h_matrix"] = matrix_json(cert.H);
  rep["det_h"] = cert.det_h;
  rep["difference_product_squared"] = cert.delta_sq;
  rep["det_residual"] = cert.det_residual;
  rep["sym_residual"] = cert.sym_residual;
  Eigen::SelfAdjointEigenSolver<mat> es(cert.H);
  rep["h_min_eigenvalue"] = es.eigenvalues().minCoeff();
  const bool hyp = is_hyperbolic(p, o.tol);
  rep["hyperbolic"] = hyp;
  bool c_ok = false;
  try {
    const mat C = c_factor(p, o.tol);
    rep["c_factor"] = matrix_json(C);
    rep["c_factor_residual"] =
        ((C.transpose() * C - cert.H).lpNorm<Eigen::Infinity>() /
         std::max<real>(1, cert.H.lpNorm<Eigen::Infinity>()));
    c_ok = true;
  } catch (const NotHyperbolic&) {
  } catch (const RootsNotSeparated&) {
  } catch (const NonConvergence&) {
  }
  rep["c_factor_available"] = c_ok;
  const bool holds = hyp && cert.det_residual <= o.tol && cert.sym_residual <= o.tol;
  rep["holds"] = holds;
  return emit_report(rep, o, holds ? 0 : 2);
}

int cmd_poly_nuij(const std::string& coeffs, real eps, const CommonOpts& o) {
  const auto p = poly_from_string(coeffs);
  if (!(eps > 0) || !std::isfinite(eps))
    throw std::invalid_argument("--eps must be positive");
  const auto q = nuij_smooth(p, eps);
  json rep;
  rep["command"] = "poly nuij";
  rep["coefficients"] = coeff_json(p.a);
  rep["eps"] = eps;
  rep["smoothed_coefficients"] = coeff_json(q.a);
  const auto rs = roots(q, o.tol);
  rep["roots"] = roots_json(rs);
  rep["root_residual"] = rs.residual;
  real gap = std::numeric_limits<real>::infinity();
  std::vector<real> re;
  for (const auto& z : rs.values) re.push_back(z.real());
  std::sort(re.begin(), re.end());
  for (std::size_t k = 1; k < re.size(); ++k) gap = std::min(gap, re[k] - re[k - 1]);
  if (re.size() < 2) gap = 0;
  rep["min_root_gap"] = gap;
  const bool hyp = is_hyperbolic(q, o.tol);
  rep["hyperbolic"] = hyp;
  const bool holds = hyp && (p.degree() < 2 || gap > 0);
  rep["holds"] = holds;
  return emit_report(rep, o, holds ? 0 : 2);
}

// ---- cubic commands ------------------------------------------------------

int cmd_cubic_conditions(const CommonOpts& o) {
  const FileConfig cfg = load_config(o.config_path);
  need_symbol_grid(cfg);
  json rep;
  rep["command"] = "cubic conditions";

  const auto cls = classify_characteristics(cfg.sym, cfg.grid, cfg.tolerance);
  const auto ce = condition_e(cfg.sym, cfg.grid, cfg.delta_e);
  const auto ch = condition_h(cfg.sym, cfg.grid, cfg.delta_h);
  MikiOptions mo;
  mo.delta1_floor = cfg.delta1;
  mo.eps_bar = cfg.eps_bar;
  const auto mk = check_miki(cfg.sym, cfg.grid, mo);
  const auto ptj = check_positivity_tj(cfg.sym, cfg.grid, cfg.eps1, cfg.delta1);
  const auto pdt = check_positivity_dts(cfg.sym, cfg.grid, cfg.eps_dts);

  rep["classification"] = to_json(cls);
  rep["condition_e"] = to_json(ce);
  rep["condition_h"] = to_json(ch);
  rep["growth_clauses"] = to_json(mk);
  rep[ptj.name] = to_json(ptj);
  rep[pdt.name] = to_json(pdt);

  bool holds = cls.all_triples_effective && ce.holds && ch.holds && mk.holds &&
               ptj.holds && pdt.holds;
  if (cfg.has_cond_b) {
    const auto pb = check_positivity_b(cfg.sym, cfg.grid, cfg.cond_b, cfg.eps_b);
    rep[pb.name] = to_json(pb);
    holds = holds && pb.holds;
  }
  if (cfg.lemma_floor) {
    const auto lm = check_lemma_setudo(cfg.sym, cfg.grid, cfg.eps_bar);
    rep[lm.name] = to_json(lm);
    holds = holds && lm.holds;
  }
  rep["holds"] = holds;
  rep["config"] = cfg.raw;
  return emit_report(rep, o, holds ? 0 : 2);
}

int cmd_cubic_classify(const CommonOpts& o) {
  const FileConfig cfg = load_config(o.config_path);
  need_symbol_grid(cfg);
  const auto cls = classify_characteristics(cfg.sym, cfg.grid, cfg.tolerance);
  json rep;
  rep["command"] = "cubic classify";
  rep["classification"] = to_json(cls);
  rep["holds"] = cls.all_triples_effective;
  rep["config"] = cfg.raw;
  return emit_report(rep, o, cls.all_triples_effective ? 0 : 2);
}

int cmd_cubic_extend(const CommonOpts& o) {
  const FileConfig cfg = load_config(o.config_path);
  need_symbol_grid(cfg);
  if (!cfg.has_extend)
    throw std::invalid_argument("config needs an \"extend\" section");
  const auto res = extend_symbols(cfg.sym, cfg.ext, cfg.grid);
  json rep;
  rep["command"] = "cubic extend";
  json ext;
  ext["cover_min"] = res.cover_min;
  ext["chi_min"] = res.chi_min;
  ext["chi_max"] = res.chi_max;
  ext["chi_tilde_min"] = res.chi_tilde_min;
  ext["chi_tilde_max"] = res.chi_tilde_max;
  rep["extension"] = ext;
  MikiOptions mo;
  mo.delta1_floor = cfg.delta1;
  mo.eps_bar = cfg.eps_bar;
  const auto mk = check_miki(res.extended, cfg.grid, mo);
  rep["growth_clauses"] = to_json(mk);
  const bool holds = mk.holds_with_smallness;
  rep["holds"] = holds;
  rep["config"] = cfg.raw;
  return emit_report(rep, o, holds ? 0 : 2);
}

// ---- energy commands -----------------------------------------------------

std::vector<ModeSystem> build_modes(const FileConfig& cfg) {
  if (!cfg.has_symbol)
    throw std::invalid_argument("config needs a \"symbol\" or \"q_form\" section");
  if (!cfg.has_energy) throw std::invalid_argument("config needs an \"energy\" section");
  std::vector<ModeSystem> modes;
  modes.reserve(cfg.xi_list.size());
  for (const auto& xi : cfg.xi_list)
    modes.push_back(make_mode_system(cfg.sym, cfg.b_entries, cfg.forcing, xi,
                                     cfg.run.t_start, cfg.run.t_end, cfg.b_adjoint));
  return modes;
}

int cmd_energy_run(const CommonOpts& o) {
  const FileConfig cfg = load_config(o.config_path);
  const auto modes = build_modes(cfg);
  std::vector<EnergyTrace> traces;
  traces.reserve(modes.size());
  json mode_reports = json::array();
  bool holds = true;
  const bool forward = cfg.run.direction == Direction::Forward;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    traces.push_back(integrate_mode(modes[i], cfg.run));
    json mj;
    mj["trace"] = trace_summary_json(traces.back());
    if (forward) {
      KeiyakuOptions ko;
      ko.n_list = cfg.n_list;
      ko.gamma_list = cfg.gamma_list;
      const auto kr = verify_keiyaku(traces.back(), modes[i], ko);
      mj["energy_identity"] = to_json(kr);
      holds = holds && kr.holds;
    }
    mode_reports.push_back(mj);
  }
  json rep;
  rep["command"] = "energy run";
  rep["modes"] = mode_reports;
  const auto est =
      forward ? verify_estimate_forward(traces) : verify_estimate_backward(traces);
  rep["estimate"] = to_json(est);
  holds = holds && est.holds;
  rep["holds"] = holds;
  rep["config"] = cfg.raw;
  return emit_report(rep, o, holds ? 0 : 2, &traces);
}

int cmd_energy_scan(const CommonOpts& o) {
  const FileConfig cfg = load_config(o.config_path);
  const auto modes = build_modes(cfg);
  ScanOptions so;
  so.n_list = cfg.n_list.empty() ? std::vector<real>{cfg.run.n_weight} : cfg.n_list;
  so.gamma_list = cfg.gamma_list.empty() ? std::vector<real>{cfg.run.gamma} : cfg.gamma_list;
  so.lambda_list =
      cfg.lambda_list.empty() ? std::vector<real>{cfg.run.lambda} : cfg.lambda_list;
  EnergyRunConfig base = cfg.run;
  base.direction = Direction::Forward;
  const auto scan = parameter_scan(modes, base, so);
  json rep;
  rep["command"] = "energy scan";
  rep["scan"] = to_json(scan);
  const bool holds = scan.feasible_count > 0 && scan.monotone_violations == 0;
  rep["holds"] = holds;
  rep["config"] = cfg.raw;
  return emit_report(rep, o, holds ? 0 : 2);
}

int cmd_energy_adjoint(const CommonOpts& o) {
  const FileConfig cfg = load_config(o.config_path);
  const auto modes = build_modes(cfg);
  EnergyRunConfig fwd = cfg.run;
  fwd.direction = Direction::Forward;
  const cvec3 vt = cfg.has_v_terminal ? cfg.v_terminal : cfg.run.u0;
  json rows = json::array();
  real worst = 0;
  for (const auto& m : modes) {
    const real d = duality_pairing_drift(m, fwd, vt);
    json r;
    json xi = json::array();
    for (Eigen::Index i = 0; i < m.xi.size(); ++i) xi.push_back(m.xi[i]);
    r["xi"] = xi;
    r["pairing_drift"] = d;
    rows.push_back(r);
    worst = std::max(worst, d);
  }
  json rep;
  rep["command"] = "energy adjoint";
  rep["modes"] = rows;
  rep["max_pairing_drift"] = worst;
  const bool holds = worst <= 1e-6;
  rep["holds"] = holds;
  rep["config"] = cfg.raw;
  return emit_report(rep, o, holds ? 0 : 2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symmetrizer certificates and weighted energy estimates for third-order "
               "hyperbolic symbols"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("trisym ") + kVersion);

  CommonOpts o;
  {
    std::ostringstream cl;
    for (int i = 0; i < argc; ++i) cl << (i ? " " : "") << argv[i];
    o.cmdline = cl.str();
  }

  std::string coeffs;
  real nuij_eps = 1;
  std::function<int()> action;

  auto* poly = app.add_subcommand("poly", "monic polynomial checks");
  poly->require_subcommand(1);
  {
    auto* sub = poly->add_subcommand("check", "real-rootedness and root certificate");
    sub->add_option("--coeffs", coeffs, "comma-separated a1,...,am for z^m+a1 z^(m-1)+...+am")
        ->required();
    add_common(sub, o, false);
    sub->callback([&] { action = [&] { return cmd_poly_check(coeffs, o); }; });
  }
  {
    auto* sub = poly->add_subcommand(
        "symmetrize", "Bezout form, determinant certificate and C factor");
    sub->add_option("--coeffs", coeffs, "comma-separated a1,...,am")->required();
    add_common(sub, o, false);
    sub->callback([&] { action = [&] { return cmd_poly_symmetrize(coeffs, o); }; });
  }
  {
    auto* sub = poly->add_subcommand("nuij", "root-splitting smoothing p + eps p'");
    sub->add_option("--coeffs", coeffs, "comma-separated a1,...,am")->required();
    sub->add_option("--eps", nuij_eps, "smoothing strength (positive)");
    add_common(sub, o, false);
    sub->callback([&] { action = [&] { return cmd_poly_nuij(coeffs, nuij_eps, o); }; });
  }

  auto* cubic = app.add_subcommand("cubic", "pointwise cubic symbol checks");
  cubic->require_subcommand(1);
  {
    auto* sub = cubic->add_subcommand(
        "conditions", "discriminant bounds, pencil positivity and growth clauses");
    add_common(sub, o, true);
    sub->callback([&] { action = [&] { return cmd_cubic_conditions(o); }; });
  }
  {
    auto* sub = cubic->add_subcommand("classify", "root multiplicity census over the grid");
    add_common(sub, o, true);
    sub->callback([&] { action = [&] { return cmd_cubic_classify(o); }; });
  }
  {
    auto* sub = cubic->add_subcommand(
        "extend", "cutoff extension of a local symbol with growth-clause revalidation");
    add_common(sub, o, true);
    sub->callback([&] { action = [&] { return cmd_cubic_extend(o); }; });
  }

  auto* energy = app.add_subcommand("energy", "single-mode weighted energy runs");
  energy->require_subcommand(1);
  {
    auto* sub = energy->add_subcommand(
        "run", "integrate modes and verify the discrete energy inequality");
    add_common(sub, o, true);
    sub->callback([&] { action = [&] { return cmd_energy_run(o); }; });
  }
  {
    auto* sub = energy->add_subcommand("scan", "feasibility scan over N, gamma, lambda");
    add_common(sub, o, true);
    sub->callback([&] { action = [&] { return cmd_energy_scan(o); }; });
  }
  {
    auto* sub = energy->add_subcommand(
        "adjoint", "forward/backward duality pairing drift");
    add_common(sub, o, true);
    sub->callback([&] { action = [&] { return cmd_energy_adjoint(o); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    return action();
  } catch (const ExprParseError& e) {
    std::cerr << "trisym: input error: " << e.what() << " (position " << e.position
              << ")\n";
    return 1;
  } catch (const CutoffOverlapInvalid& e) {
    std::cerr << "trisym: input error: " << e.what() << "\n";
    return 1;
  } catch (const EmptyFilteredSet& e) {
    std::cerr << "trisym: input error: " << e.what() << "\n";
    return 1;
  } catch (const StepSizeTooCoarse& e) {
    std::cerr << "trisym: " << e.what() << "\n";
    return 3;
  } catch (const NonConvergence& e) {
    std::cerr << "trisym: check failed: " << e.what() << "\n";
    return 2;
  } catch (const NotHyperbolic& e) {
    std::cerr << "trisym: check failed: " << e.what() << "\n";
    return 2;
  } catch (const RootsNotSeparated& e) {
    std::cerr << "trisym: check failed: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "trisym: input error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "trisym: input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "trisym: error: " << e.what() << "\n";
    return 1;
  }
}
