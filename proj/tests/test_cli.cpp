#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "overid/cli.hpp"
#include "overid/error.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = overid::cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path tmp_dir() {
  const char* env = std::getenv("OVERID_TEST_TMP");
  fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "overid_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("parameter sets") {
  CHECK(overid::cli::parse_params("default").a == 10.0);
  CHECK(overid::cli::parse_params("fig3a").var_ux == 0.05);
  CHECK(overid::cli::parse_params("fig3b").var_uw == 2.0);
  CHECK(overid::cli::parse_params("f2-case2").b == 3.955);
  const overid::ScmParams p = overid::cli::parse_params("a=1.5,var_um=0.25");
  CHECK(p.a == 1.5);
  CHECK(p.var_um == 0.25);
  CHECK(p.c == 5.0);
  for (const char* bad : {"a=", "zzz=1", "fig9", "var_um=-1"}) {
    try {
      overid::cli::parse_params(bad);
      FAIL("accepted " << bad);
    } catch (const overid::Error& e) {
      CHECK(e.code() == overid::ErrorCode::Config);
    }
  }
}

TEST_CASE("simulate then estimate") {
  const fs::path csv = tmp_dir() / "sim.csv";
  const Result sim = run({"simulate", "--n", "5000", "--seed", "3", "-o", csv.string()});
  REQUIRE(sim.status == 0);
  const Json rep = Json::parse(sim.out);
  CHECK(rep["command"] == "simulate");
  const Result est = run({"estimate", "--input", csv.string(), "--method", "combined"});
  REQUIRE(est.status == 0);
  const Json e = Json::parse(est.out);
  CHECK(e["results"]["estimates"][0]["estimate"].get<double>() == doctest::Approx(50).epsilon(0.02));

  const Result all = run({"estimate", "--input", csv.string(), "--method", "all", "--params", "default"});
  REQUIRE(all.status == 0);
  const Json a = Json::parse(all.out);
  CHECK(a["results"]["estimates"].size() == 3);
  CHECK(a["results"]["estimates"][2].contains("theory"));
}

TEST_CASE("simulate to stdout is a CSV") {
  const Result r = run({"simulate", "--n", "3", "--seed", "1"});
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("x,", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);
}

TEST_CASE("reruns are byte-identical") {
  const fs::path a = tmp_dir() / "a.csv", b = tmp_dir() / "b.csv";
  run({"simulate", "--n", "50", "--seed", "7", "-o", a.string()});
  run({"simulate", "--n", "50", "--seed", "7", "-o", b.string()});
  CHECK(slurp(a) == slurp(b));
  const std::vector<std::string> mc{"mc-validate", "--mode", "mse", "--reps", "20", "--n", "30",
                                    "--seed", "4", "--threads", "2"};
  CHECK(run(mc).out == run(mc).out);
}

TEST_CASE("optimal split from the command line") {
  const Result r = run({"cramer-rao", "--params", "f2-case1", "--grid", "0.01"});
  REQUIRE(r.status == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["results"]["k_star"].get<double>() == doctest::Approx(0.30).epsilon(0.04));
  const fs::path curve = tmp_dir() / "curve.csv";
  CHECK(run({"cramer-rao", "--grid", "0.1", "-o", curve.string()}).status == 0);
  CHECK(slurp(curve).rfind("k,ve\n", 0) == 0);
}

TEST_CASE("schema mismatch exits with 2") {
  const fs::path csv = tmp_dir() / "conf.csv";
  REQUIRE(run({"simulate", "--n", "40", "--schema", "confounder-only", "-o", csv.string()}).status == 0);
  const Result r = run({"estimate", "--input", csv.string(), "--method", "frontdoor"});
  CHECK(r.status == 2);
  const Json e = Json::parse(r.err);
  CHECK(e["error"]["code"] == "schema");
}

TEST_CASE("numeric failure exits with 3") {
  const fs::path csv = tmp_dir() / "tiny.csv";
  REQUIRE(run({"simulate", "--n", "10", "-o", csv.string()}).status == 0);
  CHECK(run({"mle-partial", "--input", csv.string()}).status == 3);
  CHECK(run({"compare", "--n", "3"}).status == 0);  // theory failures become warnings
}

TEST_CASE("configuration errors exit with 1") {
  CHECK(run({"simulate", "--no-such-flag"}).status == 1);
  CHECK(run({"frobnicate"}).status == 1);
  CHECK(run({"simulate", "--params", "a=oops"}).status == 1);
  CHECK(run({"mc-validate", "--mode", "mape", "--reps", "1", "--n", "20"}).status == 1);
}

TEST_CASE("dry run and config files") {
  const fs::path cfg = tmp_dir() / "run.ini";
  write(cfg, "n = 77\nseed = 12\n");
  const Result r = run({"simulate", "--config", cfg.string(), "--seed", "5", "--dry-run"});
  REQUIRE(r.status == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["dry_run"] == true);
  CHECK(j["command"] == "simulate");
  const std::string dumped = j["config"].dump();
  CHECK(dumped.find("77") != std::string::npos);
  CHECK(dumped.find("\"5\"") != std::string::npos);

  write(cfg, "bogus = 1\n");
  CHECK(run({"simulate", "--config", cfg.string(), "--dry-run"}).status == 1);
}

TEST_CASE("influence-function and bootstrap commands") {
  const fs::path csv = tmp_dir() / "bin.csv";
  REQUIRE(run({"simulate", "--n", "800", "--binary", "--params", "d=1", "-o", csv.string()}).status == 0);
  const Result r = run({"if-estimate", "--input", csv.string(), "--variant", "all"});
  REQUIRE(r.status == 0);
  CHECK(Json::parse(r.out)["results"]["estimates"].size() == 4);
  const Result b = run({"bootstrap", "--input", csv.string(), "--b", "20", "--truth", "50",
                        "--center"});
  REQUIRE(b.status == 0);
  CHECK(Json::parse(b.out)["results"]["b"] == 20);
  const fs::path rep = tmp_dir() / "rep.json";
  REQUIRE(run({"ihdp-gen", "--rows", "200", "--cols", "5", "--reps", "3", "--report", rep.string()}).status == 0);
  CHECK(Json::parse(slurp(rep))["command"] == "ihdp-gen");
}
