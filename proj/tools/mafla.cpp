// mafla: experiment runner.
//
//   mafla run <config.json> [-v]
//   mafla recipes [name]
//   mafla validate [-o dir]
//
// MAFLA_THREADS sets the OpenMP thread count. Exit codes: 0 ok, 1 runtime
// error (or failed validation), 2 config error.

#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mafla/experiments.hpp"

namespace ex = mafla::experiments;

namespace {

void apply_thread_env() {
  const char* v = std::getenv("MAFLA_THREADS");
  if (!v || !*v) return;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ex::ConfigError("MAFLA_THREADS must be a positive integer, got '" + std::string(v) + "'");
  omp_set_num_threads(static_cast<int>(n));
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ex::ConfigError(path + ": cannot open");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int run_config(const std::string& path, const std::string& output_override, bool verbose) {
  const std::string text = read_file(path);
  auto cfg = ex::parse_config(text, path);
  if (!output_override.empty()) cfg.output_dir = output_override;
  ex::RunOptions opts;
  opts.config_text = text;
  opts.verbose = verbose;
  const auto res = ex::run_experiment(cfg, opts);
  std::cout << "wrote " << res.files.size() + 1 << " files to " << cfg.output_dir << "\n";
  if (!res.complete) std::cout << "grid truncated by max_cells; manifest marks the run incomplete\n";
  if (!res.checks.empty()) {
    for (const auto& c : res.checks) std::cout << (c.pass ? "ok   " : "FAIL ") << c.check << " " << c.value << "\n";
    return res.checks_pass() ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metropolis-adjusted fractional Langevin sampling experiments"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--output-dir", output_dir, "override output_dir");
  run->add_flag("-v,--verbose", verbose, "progress on stderr");

  std::string recipe_name;
  auto* rec = app.add_subcommand("recipes", "list built-in templates, or print one");
  rec->add_option("name", recipe_name, "template to print");

  std::string validate_dir = "out/validate";
  auto* val = app.add_subcommand("validate", "run the invariant checks");
  val->add_option("-o,--output-dir", validate_dir, "output directory");
  val->add_flag("-v,--verbose", verbose, "progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    apply_thread_env();
    if (*rec) {
      if (recipe_name.empty()) {
        for (const auto& r : ex::recipes()) std::cout << r.name << "\t" << r.description << "\n";
      } else {
        std::cout << ex::recipe(recipe_name).json << "\n";
      }
      return 0;
    }
    if (*val) {
      auto cfg = ex::parse_config(ex::recipe("validate").json, "validate");
      cfg.output_dir = validate_dir;
      ex::RunOptions opts;
      opts.verbose = verbose;
      const auto res = ex::run_experiment(cfg, opts);
      for (const auto& c : res.checks) std::cout << (c.pass ? "ok   " : "FAIL ") << c.check << " " << c.value << "\n";
      return res.checks_pass() ? 0 : 1;
    }
    return run_config(config_path, output_dir, verbose);
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
