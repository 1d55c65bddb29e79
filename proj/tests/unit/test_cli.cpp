#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mafla/experiments.hpp"

using namespace mafla;
namespace ex = mafla::experiments;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mafla_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MAFLA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string tiny_mixture(const std::string& out) {
  json j = json::parse(ex::recipe("mixture2d").json);
  j["n_particles"] = 16;
  j["n_steps"] = 30;
  j["burn_in"] = 10;
  j["thin"] = 10;
  j["seeds"] = {3};
  j["sbm"]["epochs"] = 2;
  j["sbm"]["batch_size"] = 16;
  j["metrics"]["n_reference"] = 300;
  j["metrics"]["n_proj"] = 8;
  j["output_dir"] = out;
  return j.dump(2);
}

}  // namespace

TEST_CASE("every recipe parses and the suite covers the studies") {
  CHECK(ex::recipes().size() >= 8);
  std::set<ex::Experiment> kinds;
  for (const auto& r : ex::recipes()) {
    INFO(r.name);
    const auto cfg = ex::parse_config(r.json, r.name);
    CHECK(cfg.experiment_id == r.name);
    kinds.insert(cfg.experiment);
  }
  CHECK(kinds.size() == 9);
  const auto dims = ex::parse_config(ex::recipe("dim_sweep").json).sweep.dims;
  CHECK(dims == std::vector<std::size_t>{8, 12, 16, 20, 24, 28, 32});
  CHECK_THROWS_AS(ex::recipe("no_such_recipe"), ex::ConfigError);
}

TEST_CASE("unknown keys are rejected with the line of the key") {
  const std::string text = "{\n  \"experiment\": \"mixture2d\",\n  \"n_particles\": 8,\n  \"n_partcles\": 9\n}\n";
  try {
    ex::parse_config(text, "cfg.json");
    FAIL("expected ConfigError");
  } catch (const ex::ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.rfind("cfg.json:4:", 0) == 0);
    CHECK(msg.find("n_partcles") != std::string::npos);
  }
  std::string nested = ex::recipe("mixture2d").json;
  const auto at = nested.find("\"lambda_entropy\"");
  nested.replace(at, 16, "\"lambda_entrpy\"");
  const auto line = 1 + std::count(nested.begin(), nested.begin() + static_cast<long>(at), '\n');
  try {
    ex::parse_config(nested, "n.json");
    FAIL("expected ConfigError");
  } catch (const ex::ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.rfind("n.json:" + std::to_string(line) + ":", 0) == 0);
    CHECK(msg.find("lambda_entrpy") != std::string::npos);
  }
}

TEST_CASE("invalid values raise ConfigError") {
  CHECK_THROWS_AS(ex::parse_config(R"({"experiment": "not_a_study"})"), ex::ConfigError);
  CHECK_THROWS_AS(ex::parse_config(R"({"experiment": "mixture2d", "n_particles": "many"})"), ex::ConfigError);
  CHECK_THROWS_AS(ex::parse_config(R"({"experiment": "mixture2d", "drift": {"alpha": 2.5}})"), ex::ConfigError);
  CHECK_THROWS_AS(ex::parse_config(R"({"experiment": "mixture2d", "samplers": ["nope"]})"), ex::ConfigError);
  CHECK_THROWS_AS(ex::parse_config("{ \"experiment\": "), ex::ConfigError);
}

TEST_CASE("canonical dump round-trips") {
  for (const auto& r : ex::recipes()) {
    INFO(r.name);
    const auto a = ex::parse_config(r.json, r.name);
    const std::string once = ex::config_to_json(a);
    const std::string twice = ex::config_to_json(ex::parse_config(once));
    CHECK(once == twice);
  }
}

TEST_CASE("a tiny run is byte-reproducible and writes schema sidecars") {
  const auto a = scratch("a"), b = scratch("b");
  for (const auto& dir : {a, b}) {
    const auto text = tiny_mixture(dir.string());
    ex::RunOptions opts;
    opts.config_text = text;
    const auto res = ex::run_experiment(ex::parse_config(text), opts);
    CHECK(!res.metrics.empty());
  }
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++csvs;
    INFO(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    const fs::path schema = e.path().string() + ".schema.json";
    REQUIRE(fs::exists(schema));
    const auto s = json::parse(slurp(schema));
    std::string header = slurp(e.path());
    header = header.substr(0, header.find('\n'));
    std::size_t commas = std::count(header.begin(), header.end(), ',');
    CHECK(s["columns"].size() == commas + 1);
  }
  CHECK(csvs >= 3);
  const auto manifest = json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["complete"] == true);
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest["files"].size() >= csvs);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  CHECK(run_cli("recipes") == 0);
  CHECK(run_cli("recipes dim_sweep") == 0);
  CHECK(run_cli("recipes bogus") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run " + (dir / "missing.json").string()) == 2);

  std::ofstream(dir / "bad.json") << "{\n  \"experiment\": \"mixture2d\",\n  \"colour\": 1\n}\n";
  CHECK(run_cli("run " + (dir / "bad.json").string()) == 2);

  std::ofstream(dir / "tiny.json") << tiny_mixture((dir / "out").string());
  CHECK(run_cli("run " + (dir / "tiny.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(fs::exists(dir / "out" / "manifest.json"));

  CHECK(run_cli("validate -o " + (dir / "val").string()) == 0);
  CHECK(fs::exists(dir / "val" / "validate.csv"));
  CHECK(std::system(("MAFLA_THREADS=zero " + std::string(MAFLA_CLI_PATH) + " recipes >/dev/null 2>&1").c_str()) !=
        0);
}
