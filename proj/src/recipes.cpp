#include <stdexcept>

#include "mafla/experiments.hpp"

namespace mafla::experiments {

namespace {

const char* kMixture2d = R"({
  "experiment": "mixture2d",
  "experiment_id": "mixture2d",
  "target": {
    "kind": "stable_location_mixture",
    "alpha": 1.95,
    "dim": 2,
    "components": [
      {"weight": 0.2, "center": [-3.0, 0.0], "scale": 1.0},
      {"weight": 0.8, "center": [3.0, 0.0], "scale": 1.0}
    ]
  },
  "samplers": ["fula", "mafla"],
  "drift": {"alpha": 1.95, "tau": 0.5},
  "sbm": {"epochs": 1000, "batch_size": 256, "batches_per_epoch": 4, "lr": 0.003, "lambda_alpha": 1.0,
          "lambda_entropy": 0.01, "hidden": [64, 64], "activation": "softplus"},
  "n_particles": 512,
  "n_steps": 2000,
  "burn_in": 400,
  "thin": 50,
  "seeds": [0, 1, 2, 3, 4],
  "metrics": {"n_proj": 256, "statistic": "norm_radial", "n_reference": 20000},
  "init": {"kind": "normal", "scale": 1.0}
})";

const char* kAlphaGrid = R"({
  "experiment": "alpha_grid",
  "experiment_id": "alpha_grid",
  "target": {
    "kind": "stable_location_mixture",
    "alpha": 1.5,
    "dim": 4,
    "components": [{"weight": 1.0, "center": [1.0, 2.0, 3.0, 4.0], "scale": 1.0}]
  },
  "samplers": ["fula", "mafla"],
  "drift": {"tau": 0.1},
  "sbm": {"epochs": 500, "lr": 0.003, "activation": "softplus"},
  "n_particles": 256,
  "n_steps": 1000,
  "burn_in": 200,
  "thin": 50,
  "seeds": [0, 1, 2],
  "metrics": {"n_reference": 10000},
  "init": {"kind": "normal", "scale": 1.0, "center": [1.0, 2.0, 3.0, 4.0]},
  "sweep": {"alpha_tgt": [1.5, 1.8, 2.0], "alpha_prop": [1.5, 1.8, 2.0]}
})";

const char* kTauSweep = R"({
  "experiment": "tau_sweep",
  "experiment_id": "tau_sweep",
  "target": {
    "kind": "stable_location_mixture",
    "alpha": 1.5,
    "dim": 4,
    "components": [
      {"weight": 0.5, "center": [-2.0, -2.0, -2.0, -2.0], "scale": 1.0},
      {"weight": 0.5, "center": [2.0, 2.0, 2.0, 2.0], "scale": 1.0}
    ]
  },
  "samplers": ["fula", "mafla"],
  "drift": {"alpha": 1.5},
  "sbm": {"epochs": 500, "lr": 0.003, "activation": "softplus"},
  "n_particles": 256,
  "n_steps": 1000,
  "burn_in": 200,
  "thin": 50,
  "seeds": [0, 1, 2],
  "metrics": {"n_reference": 10000},
  "init": {"kind": "target", "scale": 1.0},
  "sweep": {"tau": [0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0]}
})";

const char* kDimSweep = R"({
  "experiment": "dim_sweep",
  "experiment_id": "dim_sweep",
  "target": {
    "kind": "product_stable",
    "alpha": 1.9,
    "dim": 8,
    "components": [
      {"weight": 0.6, "center": [1.0], "scale": 1.0},
      {"weight": 0.4, "center": [-1.0], "scale": 1.0}
    ]
  },
  "samplers": ["fula", "mafla"],
  "drift": {"alpha": 1.9, "tau": 0.5},
  "sbm": {"epochs": 500, "lr": 0.003, "activation": "softplus"},
  "n_particles": 256,
  "n_steps": 1000,
  "burn_in": 200,
  "thin": 50,
  "seeds": [0, 1, 2],
  "metrics": {"n_reference": 10000},
  "init": {"kind": "normal", "scale": 1.0},
  "sweep": {"dims": [8, 12, 16, 20, 24, 28, 32]}
})";

const char* kMaxcut = R"({
  "experiment": "maxcut",
  "experiment_id": "maxcut",
  "samplers": ["ula", "fula", "mafla"],
  "drift": {"alpha": 1.5, "tau": 0.05},
  "sbm": {"epochs": 100, "pilot_steps": 200},
  "n_particles": 20,
  "n_steps": 1000,
  "burn_in": 200,
  "thin": 10,
  "seeds": [0],
  "init": {"kind": "normal", "scale": 1.0},
  "co": {
    "temperature": 0.5,
    "instances": [
      {"family": "ba", "n": 64, "m": 2, "count": 5},
      {"family": "er", "n": 64, "p": 0.1, "count": 5}
    ],
    "small": {"count": 20, "n_min": 10, "n_max": 16, "p": 0.3}
  }
})";

const char* kMaxcutLarge = R"({
  "experiment": "maxcut",
  "experiment_id": "maxcut_n256",
  "samplers": ["ula", "fula", "mafla"],
  "drift": {"alpha": 1.5, "tau": 0.05},
  "sbm": {"epochs": 100, "pilot_steps": 200},
  "n_particles": 20,
  "n_steps": 1000,
  "burn_in": 200,
  "thin": 10,
  "seeds": [0],
  "init": {"kind": "normal", "scale": 1.0},
  "co": {
    "temperature": 0.5,
    "instances": [
      {"family": "ba", "n": 256, "m": 2, "count": 3},
      {"family": "er", "n": 256, "p": 0.1, "count": 3}
    ]
  }
})";

const char* kVertexCover = R"({
  "experiment": "vertex_cover",
  "experiment_id": "vertex_cover",
  "samplers": ["ula", "fula", "mafla"],
  "drift": {"alpha": 1.5, "tau": 0.05},
  "sbm": {"epochs": 100, "pilot_steps": 200},
  "n_particles": 20,
  "n_steps": 1000,
  "burn_in": 200,
  "thin": 10,
  "seeds": [0],
  "init": {"kind": "normal", "scale": 1.0},
  "co": {
    "temperature": 0.5,
    "penalty": 2.0,
    "instances": [{"family": "er_edges", "n": 64, "edges_per_vertex": 2.5, "count": 5}]
  }
})";

const char* kRieszAblation = R"({
  "experiment": "riesz_ablation",
  "experiment_id": "riesz_ablation",
  "target": {
    "kind": "stable_location_mixture",
    "alpha": 1.2,
    "dim": 1,
    "components": [{"weight": 1.0, "center": [5.0], "scale": 1.0}]
  },
  "samplers": ["fula", "mafla"],
  "drift": {"alpha": 1.2, "tau": 0.1},
  "riesz": {"enabled": true, "K": 0, "h": 0.01, "normalize_k0": false},
  "sbm": {"epochs": 300, "lr": 0.003, "hidden": [32, 32], "activation": "softplus"},
  "n_particles": 256,
  "n_steps": 1000,
  "burn_in": 200,
  "thin": 50,
  "seeds": [0],
  "metrics": {"n_reference": 10000},
  "init": {"kind": "normal", "scale": 1.0, "center": [5.0]},
  "sweep": {"K": [0, 1, 3, 5], "h": [0.001, 0.003, 0.01, 0.03, 0.1], "max_cells": 20}
})";

const char* kLambdaAblation = R"({
  "experiment": "lambda_ablation",
  "experiment_id": "lambda_ablation",
  "target": {
    "kind": "stable_location_mixture",
    "alpha": 1.5,
    "dim": 1,
    "components": [{"weight": 1.0, "center": [5.0], "scale": 1.0}]
  },
  "samplers": ["fula", "mafla"],
  "drift": {"alpha": 1.5, "tau": 0.1},
  "riesz": {"enabled": true, "K": 1, "h": 0.01, "normalize_k0": false},
  "sbm": {"epochs": 300, "lr": 0.003, "hidden": [32, 32], "activation": "softplus"},
  "n_particles": 256,
  "n_steps": 1000,
  "burn_in": 200,
  "thin": 50,
  "seeds": [0],
  "metrics": {"n_reference": 10000},
  "init": {"kind": "normal", "scale": 1.0, "center": [5.0]},
  "sweep": {"K": [1], "lambda_alpha": [0.0, 0.5, 1.0, 1.5, 2.0]}
})";

const char* kValidate = R"({
  "experiment": "validate",
  "experiment_id": "validate",
  "seeds": [0]
})";

}  // namespace

const std::vector<Recipe>& recipes() {
  static const std::vector<Recipe> all{
      {"mixture2d", "2-D two-component stable mixture, weights 0.2/0.8, alpha 1.95", kMixture2d},
      {"alpha_grid", "4-D stable location family at (1,2,3,4), target vs proposal alpha", kAlphaGrid},
      {"tau_sweep", "4-D stable mixture at alpha 1.5, step size over three decades", kTauSweep},
      {"dim_sweep", "bimodal product-stable mixture with modes +-1, weights 0.6/0.4, alpha 1.9", kDimSweep},
      {"maxcut", "MaxCut relaxation on BA(m=2) and ER(p=0.1) graphs with 64 vertices", kMaxcut},
      {"maxcut_n256", "MaxCut relaxation on 256-vertex graphs", kMaxcutLarge},
      {"vertex_cover", "vertex cover relaxation on ER graphs with 2.5 edges per vertex", kVertexCover},
      {"riesz_ablation", "Riesz drift truncation K and step h at alpha 1.2", kRieszAblation},
      {"lambda_ablation", "weight of the alpha-power loss at h = 0.01", kLambdaAblation},
      {"validate", "invariant checks: ECF, gradients, oracle residuals, degeneracy", kValidate},
  };
  return all;
}

const Recipe& recipe(const std::string& name) {
  for (const auto& r : recipes()) {
    if (r.name == name) return r;
  }
  throw ConfigError("unknown recipe '" + name + "'");
}

}  // namespace mafla::experiments
