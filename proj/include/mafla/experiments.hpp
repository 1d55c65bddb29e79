#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mafla/diffnet.hpp"
#include "mafla/evalkit.hpp"
#include "mafla/riesz.hpp"
#include "mafla/samplers.hpp"
#include "mafla/sbm.hpp"
#include "mafla/targets.hpp"

namespace mafla::experiments {

/// Schema violation in an experiment config. The message carries "source:line:".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment {
  mixture2d,
  alpha_grid,
  tau_sweep,
  dim_sweep,
  riesz_ablation,
  lambda_ablation,
  maxcut,
  vertex_cover,
  validate
};

Experiment experiment_from_string(const std::string& s);
std::string to_string(Experiment e);

struct SbmSettings {
  sbm::SBMConfig train;
  std::vector<std::size_t> hidden{64, 64};
  diffnet::Activation activation = diffnet::Activation::tanh;
  sbm::AcceptanceForm form = sbm::AcceptanceForm::antisymmetric;
  // Training data for targets without an exact sampler: snapshots of a pilot FULA run.
  std::size_t pilot_steps = 200;
};

struct InitSettings {
  std::string kind = "normal";  // normal | target
  double scale = 1.0;
  Vec center;  // empty: origin
};

struct GraphFamily {
  std::string family = "ba";  // ba | er | er_edges
  std::size_t n = 64;
  std::size_t m = 2;
  double p = 0.1;
  double edges_per_vertex = 2.5;
  std::size_t count = 5;
};

struct CoSettings {
  double temperature = 0.5;
  double penalty = 2.0;
  std::vector<GraphFamily> instances;
  // Brute-force check on small ER graphs (maxcut only); count 0 disables it.
  std::size_t small_count = 0;
  std::size_t small_n_min = 10;
  std::size_t small_n_max = 16;
  double small_p = 0.3;
};

struct SweepSettings {
  Vec tau;
  std::vector<std::size_t> dims;
  Vec alpha_tgt;
  Vec alpha_prop;
  std::vector<std::size_t> K;
  Vec h;
  Vec lambda_alpha;
  std::size_t max_cells = 0;  // 0: unlimited
};

struct ExperimentConfig {
  Experiment experiment = Experiment::mixture2d;
  std::string experiment_id;
  targets::TargetSpec target;
  std::vector<samplers::SamplerKind> samplers;
  double alpha_prop = 2.0;
  double tau = 0.1;
  bool use_riesz = false;
  riesz::RieszConfig riesz;
  SbmSettings sbm;
  std::size_t n_particles = 512;
  std::size_t n_steps = 2000;
  std::size_t burn_in = 400;
  std::size_t thin = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  evalkit::MetricsConfig metrics;
  std::size_t n_reference = 20000;
  InitSettings init;
  double frw_step_scale = 1.0;
  CoSettings co;
  SweepSettings sweep;
  samplers::ExecPolicy policy = samplers::ExecPolicy::parallel;
  std::string output_dir = "out";
  bool save_checkpoints = true;
};

/// Strict JSON parsing: unknown keys, wrong types and invalid values raise
/// ConfigError with the line of the offending key.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

struct Recipe {
  std::string name;
  std::string description;
  std::string json;
};

/// Built-in templates, one per study.
const std::vector<Recipe>& recipes();
const Recipe& recipe(const std::string& name);

struct MetricRow {
  std::string experiment_id;
  std::string sampler;
  double alpha_tgt = 0.0;
  double alpha_prop = 0.0;
  double tau = 0.0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double w1 = 0.0;
  double q95_err = 0.0;
  double q99_err = 0.0;
  double acceptance_rate = 0.0;
};

struct AblationRow {
  double alpha = 0.0;
  std::size_t K = 0;
  double h = 0.0;
  double lambda_alpha = 0.0;
  double w1 = 0.0;
  double q95 = 0.0;
  double q99 = 0.0;
  std::size_t n_steps = 0;
  std::uint64_t seed = 0;
};

struct CoRow {
  std::string family;
  std::size_t graph = 0;
  std::size_t n = 0;
  std::size_t n_edges = 0;
  std::string sampler;
  std::uint64_t seed = 0;
  double energy_mean = 0.0;
  double energy_std = 0.0;
  double objective_mean = 0.0;  // cut value or decoded cover size
  double objective_std = 0.0;
  double best = 0.0;
  double uncovered_ratio = 0.0;  // vertex cover only, before decoding
  double acceptance_rate = 0.0;
  std::size_t infeasible = 0;    // decoded covers with an uncovered edge
};

struct SmallGraphRow {
  std::size_t graph = 0;
  std::size_t n = 0;
  std::size_t n_edges = 0;
  long optimum = 0;
  long best_found = 0;
  bool attained = false;
};

struct WeightRow {
  std::uint64_t seed = 0;
  std::string sampler;
  std::size_t component = 0;
  double weight_true = 0.0;
  double weight_est = 0.0;
};

struct CheckRow {
  std::string check;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ExperimentResult {
  std::vector<MetricRow> metrics;
  std::vector<AblationRow> ablation;
  std::vector<CoRow> co;
  std::vector<SmallGraphRow> small_graphs;
  std::vector<WeightRow> weights;
  std::vector<CheckRow> checks;
  bool complete = true;
  std::vector<std::string> files;  // written artifacts, relative to output_dir

  bool checks_pass() const;
};

struct RunOptions {
  bool write_outputs = true;
  // Raw config text recorded verbatim in the manifest; empty uses the canonical dump.
  std::string config_text;
  bool verbose = false;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Canonical JSON of a config; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const ExperimentConfig& cfg);

/// FNV-1a, for config hashes in manifests.
std::uint64_t fnv1a(const std::string& s);

}  // namespace mafla::experiments
