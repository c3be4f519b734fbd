#include "doctest.h"

#include "cli.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using em4lab::cli::Outcome;
using em4lab::cli::run;
using Json = nlohmann::json;

namespace {

Json json_of(const Outcome& o) { return Json::parse(o.output); }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("em4lab_test_" + name)).string();
}

}  // namespace

TEST_CASE("check-em on the balanced and unbalanced products") {
  const Outcome ok = run({"check-em", "manifolds/s2xs2_f0.toml", "--format", "json"});
  REQUIRE(ok.exit_code == 0);
  const Json j = json_of(ok);
  CHECK(j["schema_version"] == 1);
  CHECK(j["command"] == "check-em");
  CHECK(j["input"]["path"] == "manifolds/s2xs2_f0.toml");
  CHECK(j["input"]["sha256"].get<std::string>().size() == 64);
  for (const Json& c : j["checks"]) {
    CHECK(c["pass"] == true);
    CHECK(c["value"].get<double>() <= 1e-7);
  }

  const Outcome bad = run({"check-em", "manifolds/s2xs2_unbalanced.toml"});
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("FAIL  trace-free") != std::string::npos);
  CHECK(bad.output.find("note: trace-free residual") != std::string::npos);
}

TEST_CASE("input errors exit with 2") {
  CHECK(run({"check-em", "manifolds/missing.toml"}).exit_code == 2);
  CHECK(run({"check-em", "builtin:nope"}).exit_code == 2);
  CHECK(run({"check-em", "manifolds/s2xs2.toml", "--param", "q=1"}).exit_code == 2);
  CHECK(run({"check-em", "manifolds/s2xs2.toml", "--param", "a=sin("}).exit_code == 2);
  CHECK(run({"check-em", "manifolds/s2xs2.toml", "--fd-order", "3"}).exit_code == 2);
  CHECK(run({"lebrun", "manifolds/round-s4.toml"}).exit_code == 2);
  CHECK(run({"chern", "manifolds/round-s2.toml"}).exit_code == 2);
  CHECK(run({"optimize", "nope"}).exit_code == 2);
  CHECK(run({"frobnicate"}).exit_code == 2);
  CHECK(run({}).exit_code == 2);

  const std::string path = temp_path("lower.toml");
  {
    std::ifstream in("manifolds/cp2.toml");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    text.replace(text.find("g_1_3"), 5, "g_3_1");
    std::ofstream(path) << text;
  }
  const Outcome o = run({"check-em", path});
  CHECK(o.exit_code == 2);
  CHECK(o.error.find("g_3_1") != std::string::npos);
  CHECK(o.error.find("g_1_3") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("help exits with 0") {
  const Outcome o = run({"--help"});
  CHECK(o.exit_code == 0);
  CHECK(o.output.find("check-em") != std::string::npos);
}

TEST_CASE("builtins and parameter expressions") {
  const Outcome o = run({"check-em", "builtin:round-s2", "--param", "c=-2", "--format", "json"});
  REQUIRE(o.exit_code == 0);
  const Json j = json_of(o);
  CHECK(j["input"]["name"] == "builtin:round-s2");
  CHECK(j["config"]["params"]["c"] == -2.0);
  CHECK(j["results"]["branch"] == "F = -|F| dmu");

  const Outcome p = run({"optimize", "s2xs2-periods", "--param", "P1=4*pi", "--start", "1.3", "--grid", "3",
                         "--format", "json"});
  CHECK(p.exit_code == 0);
  CHECK(json_of(p)["config"]["settings"]["P1"].get<double>() == doctest::Approx(4 * M_PI));
}

TEST_CASE("reports go to --out and repeat byte for byte") {
  const std::string path = temp_path("report.json");
  const std::vector<std::string> args = {"curvature", "manifolds/cp2.toml", "--point", "0.3,0.1,-0.2,0.4",
                                         "--format", "json", "--out", path};
  const Outcome o = run(args);
  CHECK(o.exit_code == 0);
  CHECK(o.output.empty());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const Json j = Json::parse(ss.str());
  CHECK(j["results"]["scalar"]["mean"].get<double>() == doctest::Approx(24.0).epsilon(1e-8));
  CHECK(j["results"]["wplus_eigenvalues"][0].get<double>() == doctest::Approx(4.0).epsilon(1e-6));
  const std::string first = ss.str();
  run(args);
  std::ifstream again(path);
  std::stringstream ss2;
  ss2 << again.rdbuf();
  CHECK(ss2.str() == first);
  std::filesystem::remove(path);
}

TEST_CASE("descent failures are check failures") {
  const Outcome o = run({"optimize", "s2xs2-periods", "--param", "P1=80*pi", "--start", "1", "--grid", "3"});
  CHECK(o.exit_code == 1);
  CHECK(o.output.find("boundary_hit") != std::string::npos);
}

TEST_CASE("order 2 differences stall above the floor threshold") {
  const Outcome o = run({"curvature", "manifolds/round-s2.toml", "--convergence", "--fd-order", "2",
                         "--format", "json"});
  CHECK(o.exit_code == 1);
  const Json j = json_of(o);
  CHECK(j["results"]["observed_order"].get<double>() == doctest::Approx(2.0).epsilon(0.05));
  CHECK(j["results"]["floor"].get<double>() > 1e-9);
}
