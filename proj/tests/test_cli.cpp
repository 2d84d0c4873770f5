#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + TRISYM_CLI_PATH + "\" " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config_arg(const char* name) {
  return std::string("--config \"") + TRISYM_CONFIG_DIR + "/" + name + "\"";
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "trisym_cli_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const char* name, const json& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << body.dump(2) << "\n";
  return p;
}

json small_energy_config(long steps, double xi0) {
  json j;
  j["arity"] = {{"x", 0}, {"xi", 1}};
  j["symbol"] = {{"a", "0"}, {"b", "t"}, {"c", "0"}, {"phi", "0"}};
  j["energy"] = {{"n_weight", 4},
                 {"gamma", 10},
                 {"lambda", 1},
                 {"t_start", 1e-3},
                 {"t_end", 0.5},
                 {"steps", steps},
                 {"u0", json::array({{1, 0}, {0, 0}, {0, 0}})},
                 {"xi_list", json::array({{xi0}})}};
  return j;
}

}  // namespace

TEST_CASE("polynomial subcommands report certificates") {
  const auto chk = run_cli("poly check --coeffs 0,-1");
  CHECK(chk.exit_code == 0);
  const json jc = json::parse(chk.out);
  CHECK(jc.at("hyperbolic") == true);
  CHECK(jc.at("degree") == 2);
  CHECK(jc.at("roots").size() == 2);

  const auto non = run_cli("poly check --coeffs 0,1");
  CHECK(non.exit_code == 2);  // complex roots: checked, and the check fails
  CHECK(json::parse(non.out).at("hyperbolic") == false);

  const auto sym = run_cli("poly symmetrize --coeffs 0,-1,0");
  CHECK(sym.exit_code == 0);
  const json js = json::parse(sym.out);
  CHECK(js.at("det_h").get<double>() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(js.at("h_matrix")[0][0].get<double>() == doctest::Approx(1.0));
  CHECK(js.at("h_matrix")[1][1].get<double>() == doctest::Approx(2.0));
  CHECK(js.at("h_matrix")[2][2].get<double>() == doctest::Approx(3.0));
  CHECK(js.at("c_factor_available") == true);
  CHECK(js.at("holds") == true);

  const auto nu = run_cli("poly nuij --coeffs 0,0,0 --eps 1");
  CHECK(nu.exit_code == 0);
  const json jn = json::parse(nu.out);
  REQUIRE(jn.at("smoothed_coefficients").size() == 3);
  CHECK(jn.at("smoothed_coefficients")[0].get<double>() == doctest::Approx(6.0));
  CHECK(jn.at("smoothed_coefficients")[1].get<double>() == doctest::Approx(6.0));
  CHECK(jn.at("smoothed_coefficients")[2].get<double>() == doctest::Approx(0.0));
  CHECK(jn.at("min_root_gap").get<double>() ==
        doctest::Approx(3.0 - std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("malformed input exits with the input-error code") {
  CHECK(run_cli("poly check --coeffs 1,2,oops").exit_code == 1);
  CHECK(run_cli("poly nuij --coeffs 0,0,0 --eps -1").exit_code == 1);
  CHECK(run_cli("poly check").exit_code == 1);  // missing required option
}

TEST_CASE("identical invocations produce byte-identical reports") {
  const std::string args = "cubic conditions " + config_arg("canonical.json");
  const auto first = run_cli(args);
  const auto second = run_cli(args);
  CHECK(first.exit_code == 0);
  CHECK(first.out == second.out);
  CHECK(first.out.size() > 1000);
}

TEST_CASE("shipped well-posed configurations pass every check") {
  const auto cond = run_cli("cubic conditions " + config_arg("canonical.json"));
  CHECK(cond.exit_code == 0);
  const json jc = json::parse(cond.out);
  CHECK(jc.at("holds") == true);
  CHECK(jc.at("classification").at("all_triples_effective") == true);
  CHECK(jc.at("condition_e").at("holds") == true);
  CHECK(jc.at("condition_h").at("holds") == true);

  CHECK(run_cli("cubic conditions " + config_arg("well_posed.json")).exit_code == 0);
  CHECK(run_cli("cubic classify " + config_arg("canonical.json")).exit_code == 0);
}

TEST_CASE("the model family fails the discriminant bound but not the rest") {
  const auto r = run_cli("cubic conditions " + config_arg("example_family.json"));
  CHECK(r.exit_code == 2);
  const json j = json::parse(r.out);
  CHECK(j.at("holds") == false);
  CHECK(j.at("condition_e").at("holds") == false);
  CHECK(j.at("condition_h").at("holds") == true);
  CHECK(j.at("growth_clauses").at("holds") == true);
}

TEST_CASE("cutoff extension validates and revalidates growth clauses") {
  const auto r = run_cli("cubic extend " + config_arg("extend_family.json"));
  CHECK(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("extension").at("cover_min").get<double>() >= 1.0);
  CHECK(j.at("growth_clauses").at("holds_with_smallness") == true);
}

TEST_CASE("energy run reports per-mode identities and the estimate") {
  const auto cfgp = write_config("run_small.json", small_energy_config(2048, 1.0));
  const auto r = run_cli("energy run --config \"" + cfgp.string() + "\"");
  CHECK(r.exit_code == 0);
  const json j = json::parse(r.out);
  REQUIRE(j.at("modes").size() == 1);
  CHECK(j.at("modes")[0].at("energy_identity").at("holds") == true);
  CHECK(j.at("modes")[0].at("trace").at("points") == 2049);
  CHECK(j.at("estimate").at("holds") == true);
  CHECK(j.at("holds") == true);
}

TEST_CASE("a run that cannot meet the accuracy gate exits distinctly") {
  const auto cfgp = write_config("run_coarse.json", small_energy_config(16, 128.0));
  CHECK(run_cli("energy run --config \"" + cfgp.string() + "\"").exit_code == 3);
}

TEST_CASE("config validation refuses unknown keys and bad expressions") {
  json j = small_energy_config(2048, 1.0);
  j["bogus_key"] = 1;
  const auto p1 = write_config("run_badkey.json", j);
  CHECK(run_cli("energy run --config \"" + p1.string() + "\"").exit_code == 1);

  json j2 = small_energy_config(2048, 1.0);
  j2["symbol"]["b"] = "t + ";
  const auto p2 = write_config("run_badexpr.json", j2);
  CHECK(run_cli("energy run --config \"" + p2.string() + "\"").exit_code == 1);

  CHECK(run_cli("energy run --config /nonexistent/nope.json").exit_code == 1);
}

TEST_CASE("parameter scan over a small grid") {
  json j = small_energy_config(2048, 1.0);
  j["energy"]["xi_list"] = json::array({{1.0}, {2.0}});
  j["energy"]["n_list"] = {4, 8};
  j["energy"]["gamma_list"] = {0, 10};
  j["energy"]["lambda_list"] = {1};
  const auto cfgp = write_config("scan_small.json", j);
  const auto r = run_cli("energy scan --config \"" + cfgp.string() + "\"");
  CHECK(r.exit_code == 0);
  const json js = json::parse(r.out);
  CHECK(js.at("scan").at("feasible_count") == 4);
  CHECK(js.at("scan").at("monotone_violations") == 0);
  CHECK(js.at("scan").at("cells").size() == 4);
}

TEST_CASE("adjoint pairing drift stays at rounding level") {
  const auto r = run_cli("energy adjoint " + config_arg("adjoint_smoke.json"));
  CHECK(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("max_pairing_drift").get<double>() <= 1e-6);
}

TEST_CASE("--out writes the report, per-mode data and a metadata sidecar") {
  const fs::path dir = scratch_dir() / "outdir";
  fs::remove_all(dir);
  const auto cfgp = write_config("run_out.json", small_energy_config(2048, 1.0));
  const auto r = run_cli("energy run --config \"" + cfgp.string() + "\" --out \"" +
                         dir.string() + "\"");
  CHECK(r.exit_code == 0);

  std::ifstream rep(dir / "report.json", std::ios::binary);
  REQUIRE(rep.good());
  std::stringstream ss;
  ss << rep.rdbuf();
  CHECK(ss.str() == r.out);  // the file repeats stdout exactly

  std::ifstream csv(dir / "mode_0.csv");
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "t,reU1,imU1,reU2,imU2,reU3,imU3,E,cancel_resid,keiyaku_resid,err_est");
  std::string first_row;
  std::getline(csv, first_row);
  CHECK(first_row.substr(0, 6) == "0.001,");

  std::ifstream info(dir / "run_info.txt");
  REQUIRE(info.good());
  std::stringstream is;
  is << info.rdbuf();
  CHECK(is.str().find("version: 1.0.0") != std::string::npos);
  CHECK(is.str().find("exit_code: 0") != std::string::npos);
}

TEST_CASE("backward runs verify the adjoint-side estimate") {
  json j = small_energy_config(2048, 1.0);
  j["energy"]["direction"] = "backward";
  j["energy"]["n_weight"] = 8;
  const auto cfgp = write_config("run_backward.json", j);
  const auto r = run_cli("energy run --config \"" + cfgp.string() + "\"");
  CHECK(r.exit_code == 0);
  const json jr = json::parse(r.out);
  CHECK(jr.at("estimate").at("holds") == true);
  // backward runs verify no forward-only identity
  CHECK(jr.at("modes")[0].contains("energy_identity") == false);
}
