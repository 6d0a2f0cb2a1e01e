#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hardy/cli_io.hpp"
#include "hardy/error.hpp"

using namespace hardy;
using namespace hardy::cli;
using doctest::Approx;

namespace {

const std::filesystem::path kConfigs = HARDY_CONFIG_DIR;
const std::filesystem::path kScratch = HARDY_SCRATCH_DIR;

std::string config_error(const Json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigInvalid);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

Json base() { return Json::parse(R"({"N": 3, "mu": 0.1875, "potential": {"kind": "inverse_square"}})"); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

}  // namespace

TEST_CASE("config defaults and echo") {
  const auto c = parse_config(base());
  CHECK(c.grid.nodes == 4001);
  CHECK(c.tol.tol_cert == 1e-7);
  CHECK(c.radius_schedule().size() == 120);
  CHECK(c.params().mu == 0.1875);
  const auto echo = to_json(c);
  CHECK(echo["mu"].get<double>() == 0.1875);
  CHECK(echo["certificate"]["epsilon"] == "optimize");
  // the echo parses back to the same config
  CHECK(serialize(to_json(parse_config(echo))) == serialize(echo));

  auto j = base();
  j["mu"] = "mu0";
  const auto c0 = parse_config(j);
  CHECK(c0.params().critical());
  CHECK(to_json(c0)["mu"] == "mu0");
}

TEST_CASE("config errors name the field") {
  auto j = base();
  j.erase("mu");
  CHECK(config_error(j).find("mu") != std::string::npos);

  j = base();
  j["mu"] = 0.3;
  CHECK(config_error(j).find("mu:") != std::string::npos);

  j = base();
  j["grid"] = {{"r_min", 1.0}, {"r_max", 0.5}};
  CHECK(config_error(j).find("grid.r_max") != std::string::npos);

  j = base();
  j["tolerances"] = {{"tol_cert", -1.0}};
  CHECK(config_error(j).find("tolerances.tol_cert") != std::string::npos);

  j = base();
  j["potential"] = {{"kind", "vrho"}};
  CHECK(config_error(j).find("potential.rho") != std::string::npos);

  j = base();
  j["potential"] = {{"kind", "yukawa"}};
  CHECK(config_error(j).find("potential.kind") != std::string::npos);

  j = base();
  j["extra"] = 1;
  CHECK(config_error(j).find("extra") != std::string::npos);

  j = base();
  j["exponent"] = {{"windows", {{1.0, 0.5}}}};
  CHECK(config_error(j).find("exponent.windows[0]") != std::string::npos);

  j = base();
  j["N"] = 2;
  CHECK(config_error(j).find("N") != std::string::npos);
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "\"Infinity\"");
  Json j;
  j["b"] = 2.0;
  j["a"] = {1.0, 0.5};
  CHECK(serialize(j) == "{\n  \"b\": 2,\n  \"a\": [1, 0.5]\n}");
}

TEST_CASE("grid hash") {
  const auto a = grid_hash(LogGrid::from_radii(1e-6, 1e6, 4001));
  CHECK(a.size() == 16);
  CHECK(a == grid_hash(LogGrid::from_radii(1e-6, 1e6, 4001)));
  CHECK(a != grid_hash(LogGrid::from_radii(1e-6, 1e6, 4002)));
}

TEST_CASE("worker pool keeps order and honours the cap") {
  setenv("HARDY_FUNDSOL_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  std::vector<int> xs(50);
  for (int i = 0; i < 50; ++i) xs[i] = i;
  const auto ys = parallel_map(xs, [](int x) { return x * x; });
  for (int i = 0; i < 50; ++i) CHECK(ys[i] == i * i);
  CHECK_THROWS_AS(parallel_map(xs, [](int x) -> int {
                    if (x == 7) throw Error(ErrorKind::IoError, "boom");
                    return x;
                  }),
                  Error);
  setenv("HARDY_FUNDSOL_THREADS", "bogus", 1);
  CHECK(worker_count() >= 1);
  unsetenv("HARDY_FUNDSOL_THREADS");
}

TEST_CASE("solve on the model potential matches the closed forms") {
  const auto res = run_subcommand("solve", parse_config(base()));
  CHECK(res.exit_code == 0);
  const auto& r = res.report["results"];
  CHECK(r["verdict"] == "Converged");
  CHECK(r["k_estimate"].get<double>() == Approx(1.0).epsilon(1e-6));
  CHECK(r["exponents"]["origin"]["exponent"].get<double>() == Approx(-0.75).epsilon(1e-8));
  CHECK(r["exponents"]["infinity"]["exponent"].get<double>() == Approx(-0.75).epsilon(1e-6));
  CHECK(r["lower_bound_holds"] == true);
  REQUIRE(res.table);
  const auto csv = csv_table(*res.table);
  CHECK(csv.rfind("r,u,phi_mu,gamma_mu,ratio_u_phi\n", 0) == 0);
  CHECK(res.report["provenance"]["grid_hash"] == grid_hash(default_grid()));
}

TEST_CASE("nonexistence subcommand with beta override") {
  auto j = base();
  j["potential"] = {{"kind", "vrho"}, {"rho", 1.5}};
  j["certificate"] = {{"epsilon", 0.1}};
  const auto cfg = parse_config(j);
  RunOptions o;
  o.beta_override = 9.0;
  const auto res = run_subcommand("certify-nonexist", cfg, o);
  CHECK(res.exit_code == 0);
  CHECK(res.report["results"]["theta"].get<double>() == 0.5);
  CHECK(res.report["results"]["verdict"] == "Nonexistence");
  // without the override beta comes from V r^2 at infinity
  const auto weak = run_subcommand("certify-nonexist", cfg);
  CHECK(weak.report["results"]["beta"].get<double>() == 1.5);
}

TEST_CASE("iterate subcommand") {
  auto j = base();
  j["potential"] = {{"kind", "vrho"}, {"rho", 1.2}};
  const auto res = run_subcommand("iterate", parse_config(j));
  CHECK(res.exit_code == 0);
  CHECK(res.report["results"]["verdict"] == "FixedPoint");
  CHECK(res.report["results"]["monotone"] == true);
}

TEST_CASE("certify-exist reports the barrier when asked") {
  auto j = base();
  j["potential"] = {{"kind", "subcritical_perturbed"}, {"c5", 0.5}};
  j["certificate"] = {{"c5", 0.5}};
  const auto res = run_subcommand("certify-exist", parse_config(j));
  CHECK(res.exit_code == 0);
  CHECK(res.report["results"]["barrier"]["passes"] == true);
  CHECK(res.report["results"]["supersolution_certificate"]["valid"] == true);
}

TEST_CASE("command line") {
  const auto out = kScratch / "cli_unit";
  std::filesystem::remove_all(out);
  std::string text;
  CHECK(run({"certify-nonexist", "--config", (kConfigs / "certify_nonexist_beta9.json").string(), "--out",
             out.string(), "--beta", "9"},
            &text) == 0);
  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK(std::filesystem::exists(out / "timings.json"));
  CHECK(slurp(out / "report.json").find("\"Nonexistence\"") != std::string::npos);

  CHECK(run({"solve", "--config", (kConfigs / "solve_inverse_square.json").string(), "--out", out.string(), "--plots"}) ==
        0);
  CHECK(slurp(out / "plot.svg").find("<svg") == 0);
  CHECK(slurp(out / "data.csv").rfind("r,u,phi_mu,gamma_mu,ratio_u_phi", 0) == 0);

  CHECK(run({"solve", "--config", (kConfigs / "does_not_exist.json").string(), "--out", out.string()}, &text) == 1);
  CHECK(text.find("IoError") != std::string::npos);
  CHECK(run({"solve", "--config", (kConfigs / "missing_mu.json").string(), "--out", out.string()}, &text) == 1);
  CHECK(text.find("mu") != std::string::npos);
  CHECK(run({"frobnicate", "--config", "x"}) == 1);
  CHECK(run({"solve"}) == 1);
  CHECK(run({"--help"}) == 0);
}
