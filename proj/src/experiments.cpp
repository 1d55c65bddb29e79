#include "mafla/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mafla/combopt.hpp"
#include "mafla/io.hpp"
#include "mafla/stable_law.hpp"

namespace mafla::experiments {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using samplers::SamplerKind;

namespace {

// Stream purposes; every random quantity in a study derives from (seed, purpose, index).
enum Purpose : std::uint64_t {
  kReference = 101,
  kInit = 102,
  kTrain = 103,
  kGraph = 105,
  kPilot = 106,
  kSmallGraph = 107,
};

std::uint64_t stream(Purpose p, std::uint64_t index = 0) { return derive_stream_id(0, p, index); }

std::string fmt(double v) { return io::fmt(v); }

std::string tag_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct Output {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  ExperimentResult& result;
  std::vector<std::vector<std::string>> loss_rows;

  void log(const std::string& msg) const {
    if (opts.verbose) std::cerr << "[" << cfg.experiment_id << "] " << msg << std::endl;
  }

  std::string path(const std::string& rel) const { return (fs::path(cfg.output_dir) / rel).string(); }

  void write(const io::CsvTable& t, const std::string& rel) {
    if (!opts.write_outputs) return;
    t.write(path(rel));
    result.files.push_back(rel);
    result.files.push_back(rel + ".schema.json");
  }
};

Matrix make_init(const InitSettings& init, const Target& target, std::size_t n, std::size_t d, std::uint64_t seed,
                 std::uint64_t index) {
  RngStream rng(seed, stream(kInit, index));
  if (init.kind == "target") {
    Matrix m = target.sample(n, rng);
    for (double& v : m.data) v *= init.scale;
    return m;
  }
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = init.center.empty() ? 0.0 : (init.center.size() == 1 ? init.center[0] : init.center[j]);
      m(i, j) = c + init.scale * rng.normal();
    }
  }
  return m;
}

struct Trained {
  sbm::AcceptanceNet net;
  std::vector<sbm::TraceRow> trace;
};

Trained train_net(const ExperimentConfig& cfg, std::size_t d, const ScoreModel& score, const DriftField& field,
                  const DriftConfig& drift, const sbm::DataSampler& data, std::uint64_t seed, std::uint64_t index,
                  double lambda_alpha) {
  Trained t{sbm::AcceptanceNet(d, cfg.sbm.hidden, cfg.sbm.activation, cfg.sbm.form), {}};
  RngStream rng(seed, stream(kTrain, index));
  t.net.net().init(rng);
  sbm::SBMConfig sc = cfg.sbm.train;
  sc.lambda_alpha = lambda_alpha;
  t.trace = sbm::train_acceptance(t.net, data, score, field, drift, sc, rng);
  return t;
}

void record_training(Output& out, const std::string& tag, const Trained& t, std::uint64_t seed) {
  for (const auto& r : t.trace) {
    out.loss_rows.push_back({tag, std::to_string(r.epoch), fmt(r.eta), fmt(r.loss_l2), fmt(r.loss_alpha),
                             fmt(r.entropy), fmt(r.combined)});
  }
  if (out.opts.write_outputs && out.cfg.save_checkpoints) {
    const std::string rel = "checkpoints/" + tag + ".bin";
    fs::create_directories(out.path("checkpoints"));
    ojson meta;
    meta["epochs"] = out.cfg.sbm.train.epochs;
    meta["lr"] = out.cfg.sbm.train.lr;
    meta["form"] = sbm::to_string(t.net.form());
    diffnet::save_checkpoint(out.path(rel), t.net.net(), {seed, meta.dump()});
    out.result.files.push_back(rel);
  }
}

samplers::AcceptFn accept_fn(const sbm::AcceptanceNet& net) {
  return [&net](ConstSpan xp, ConstSpan x) { return net.accept(xp, x); };
}

samplers::RunResult run_sampler(SamplerKind kind, const Target& target, const DriftField& field,
                                const DriftConfig& drift, const samplers::AcceptFn& accept, const Matrix& init,
                                const ExperimentConfig& cfg, std::uint64_t seed, std::size_t n_steps,
                                std::size_t burn_in, std::size_t thin) {
  samplers::SamplerSpec sp;
  sp.kind = kind;
  sp.target = &target;
  sp.score = &target;
  sp.field = &field;
  sp.drift = drift;
  sp.accept = accept;
  sp.step_scale = cfg.frw_step_scale;
  auto st = samplers::init_state(init, seed, 0);
  samplers::RunConfig rc;
  rc.n_steps = n_steps;
  rc.burn_in = burn_in;
  rc.thin = thin;
  rc.policy = cfg.policy;
  return samplers::run(sp, st, rc);
}

double mean(ConstSpan v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev(ConstSpan v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------- continuous studies

struct Cell {
  targets::TargetSpec spec;
  double alpha_prop = 2.0;
  double tau = 0.1;
  bool use_riesz = false;
  riesz::RieszConfig rz;
  double lambda_alpha = 0.0;
  std::string tag;
  std::uint64_t index = 0;  // decorrelates training streams across cells
};

struct CellRun {
  std::vector<std::pair<SamplerKind, samplers::RunResult>> runs;
  std::vector<MetricRow> metrics;
};

CellRun run_cell(Output& out, const Cell& cell, std::uint64_t seed) {
  const auto& cfg = out.cfg;
  auto target = targets::make_target(cell.spec);
  const std::size_t d = cell.spec.dim;
  const auto drift = DriftConfig::make(cell.alpha_prop, cell.tau);
  std::unique_ptr<DriftField> field;
  if (cell.use_riesz) {
    riesz::RieszConfig rz = cell.rz;
    rz.order = cell.alpha_prop - 2.0;
    field = std::make_unique<riesz::RieszDrift>(*target, rz, cell.alpha_prop);
  } else {
    field = std::make_unique<ScaledScoreDrift>(*target, drift.c_alpha);
  }
  RngStream ref_rng(seed, stream(kReference));
  const Matrix reference = target->sample(cfg.n_reference, ref_rng);
  const Matrix init = make_init(cfg.init, *target, cfg.n_particles, d, seed, 0);

  CellRun cr;
  std::unique_ptr<Trained> trained;
  for (auto kind : cfg.samplers) {
    samplers::AcceptFn acc;
    if (kind == SamplerKind::mafla) {
      if (!trained) {
        const targets::MixtureTarget& t = *target;
        sbm::DataSampler data = [&t](std::size_t n, RngStream& rng) { return t.sample(n, rng); };
        out.log("training acceptance " + cell.tag + " seed " + std::to_string(seed));
        trained = std::make_unique<Trained>(
            train_net(cfg, d, *target, *field, drift, data, seed, cell.index, cell.lambda_alpha));
        record_training(out, cell.tag + "_seed" + std::to_string(seed), *trained, seed);
      }
      acc = accept_fn(trained->net);
    }
    auto res = run_sampler(kind, *target, *field, drift, acc, init, cfg, seed, cfg.n_steps, cfg.burn_in, cfg.thin);
    evalkit::MetricsConfig mc = cfg.metrics;
    mc.seed = seed;
    const auto rep = evalkit::report(res.pooled(), reference, mc);
    MetricRow row;
    row.experiment_id = cfg.experiment_id;
    row.sampler = samplers::to_string(kind);
    row.alpha_tgt = cell.spec.alpha_tgt;
    row.alpha_prop = cell.alpha_prop;
    row.tau = cell.tau;
    row.dim = d;
    row.seed = seed;
    row.w1 = rep.w1;
    row.q95_err = rep.q95_err;
    row.q99_err = rep.q99_err;
    row.acceptance_rate = mean(res.acceptance_rate);
    out.log(cell.tag + " seed " + std::to_string(seed) + " " + row.sampler + ": w1=" + fmt(row.w1) +
            " q99=" + fmt(row.q99_err) + " acc=" + fmt(row.acceptance_rate));
    cr.metrics.push_back(row);
    cr.runs.emplace_back(kind, std::move(res));
  }
  return cr;
}

io::CsvTable metrics_table() {
  using io::ColumnType;
  return io::CsvTable({{"experiment_id", ColumnType::text, "experiment identifier"},
                       {"sampler", ColumnType::text, "sampler name"},
                       {"alpha_tgt", ColumnType::real, "stability index of the target"},
                       {"alpha_prop", ColumnType::real, "stability index of the proposal noise"},
                       {"tau", ColumnType::real, "step size"},
                       {"dim", ColumnType::integer, "dimension"},
                       {"seed", ColumnType::integer, "seed"},
                       {"w1", ColumnType::real, "sliced Wasserstein-1 distance to exact samples"},
                       {"q95_err", ColumnType::real, "absolute 0.95-quantile error of the statistic"},
                       {"q99_err", ColumnType::real, "absolute 0.99-quantile error of the statistic"},
                       {"acceptance_rate", ColumnType::real, "mean per-particle acceptance rate"}});
}

void write_metrics(Output& out) {
  auto t = metrics_table();
  for (const auto& r : out.result.metrics) {
    t.add_row({r.experiment_id, r.sampler, fmt(r.alpha_tgt), fmt(r.alpha_prop), fmt(r.tau), std::to_string(r.dim),
               std::to_string(r.seed), fmt(r.w1), fmt(r.q95_err), fmt(r.q99_err), fmt(r.acceptance_rate)});
  }
  out.write(t, "metrics.csv");
}

void write_losses(Output& out) {
  if (out.loss_rows.empty()) return;
  using io::ColumnType;
  io::CsvTable t({{"run", ColumnType::text, "training run tag"},
                  {"epoch", ColumnType::integer, "epoch"},
                  {"eta", ColumnType::real, "curriculum interpolation weight"},
                  {"loss_l2", ColumnType::real, "mean squared residual norm"},
                  {"loss_alpha", ColumnType::real, "mean alpha-power residual"},
                  {"entropy", ColumnType::real, "acceptance entropy term"},
                  {"combined", ColumnType::real, "training objective"}});
  for (auto& r : out.loss_rows) t.add_row(r);
  out.write(t, "loss_trace.csv");
}

Cell base_cell(const ExperimentConfig& cfg) {
  Cell c;
  c.spec = cfg.target;
  c.alpha_prop = cfg.alpha_prop;
  c.tau = cfg.tau;
  c.use_riesz = cfg.use_riesz;
  c.rz = cfg.riesz;
  c.lambda_alpha = cfg.sbm.train.lambda_alpha;
  c.tag = cfg.experiment_id;
  return c;
}

void run_mixture2d(Output& out) {
  const auto& cfg = out.cfg;
  const Cell cell = base_cell(cfg);
  using io::ColumnType;
  io::CsvTable samples([&] {
    std::vector<io::Column> cols{{"sampler", ColumnType::text, "sampler name (exact: reference draws)"},
                                 {"seed", ColumnType::integer, "seed"},
                                 {"row", ColumnType::integer, "particle index"}};
    for (std::size_t j = 0; j < cfg.target.dim; ++j)
      cols.push_back({"x" + std::to_string(j), ColumnType::real, "coordinate " + std::to_string(j)});
    return cols;
  }());
  for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
    const auto seed = cfg.seeds[si];
    auto cr = run_cell(out, cell, seed);
    out.result.metrics.insert(out.result.metrics.end(), cr.metrics.begin(), cr.metrics.end());
    // Component weights by nearest centre.
    auto estimate = [&](const Matrix& m) {
      Vec w(cfg.target.components.size(), 0.0);
      for (std::size_t i = 0; i < m.rows; ++i) {
        if (!all_finite(m.row(i))) continue;
        std::size_t best = 0;
        double bd = INFINITY;
        for (std::size_t k = 0; k < w.size(); ++k) {
          double dd = 0.0;
          for (std::size_t j = 0; j < m.cols; ++j) {
            const double e = m(i, j) - cfg.target.components[k].center[j];
            dd += e * e;
          }
          if (dd < bd) {
            bd = dd;
            best = k;
          }
        }
        w[best] += 1.0;
      }
      const double tot = std::max(1.0, std::accumulate(w.begin(), w.end(), 0.0));
      for (double& v : w) v /= tot;
      return w;
    };
    for (const auto& [kind, res] : cr.runs) {
      const auto w = estimate(res.pooled());
      for (std::size_t k = 0; k < w.size(); ++k)
        out.result.weights.push_back({seed, samplers::to_string(kind), k, cfg.target.components[k].weight, w[k]});
      if (si == 0) {
        for (std::size_t i = 0; i < res.final_particles.rows; ++i) {
          std::vector<std::string> row{samplers::to_string(kind), std::to_string(seed), std::to_string(i)};
          for (std::size_t j = 0; j < res.final_particles.cols; ++j) row.push_back(fmt(res.final_particles(i, j)));
          samples.add_row(std::move(row));
        }
      }
    }
    if (si == 0) {
      auto target = targets::make_target(cfg.target);
      RngStream ref_rng(seed, stream(kReference));
      const Matrix exact = target->sample(cfg.n_particles, ref_rng);
      for (std::size_t i = 0; i < exact.rows; ++i) {
        std::vector<std::string> row{"exact", std::to_string(seed), std::to_string(i)};
        for (std::size_t j = 0; j < exact.cols; ++j) row.push_back(fmt(exact(i, j)));
        samples.add_row(std::move(row));
      }
    }
  }
  write_metrics(out);
  io::CsvTable wt({{"seed", ColumnType::integer, "seed"},
                   {"sampler", ColumnType::text, "sampler name"},
                   {"component", ColumnType::integer, "mixture component"},
                   {"weight_true", ColumnType::real, "target weight"},
                   {"weight_est", ColumnType::real, "fraction of samples nearest to the component centre"}});
  for (const auto& w : out.result.weights)
    wt.add_row({std::to_string(w.seed), w.sampler, std::to_string(w.component), fmt(w.weight_true), fmt(w.weight_est)});
  out.write(wt, "weights.csv");
  out.write(samples, "samples.csv");
}

void run_grid(Output& out, const std::vector<Cell>& cells) {
  for (auto seed : out.cfg.seeds) {
    for (const auto& c : cells) {
      auto cr = run_cell(out, c, seed);
      out.result.metrics.insert(out.result.metrics.end(), cr.metrics.begin(), cr.metrics.end());
    }
  }
  write_metrics(out);
}

void run_tau_sweep(Output& out) {
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < out.cfg.sweep.tau.size(); ++i) {
    Cell c = base_cell(out.cfg);
    c.tau = out.cfg.sweep.tau[i];
    c.tag = out.cfg.experiment_id + "_tau" + tag_num(c.tau);
    c.index = i;
    cells.push_back(c);
  }
  run_grid(out, cells);
}

targets::TargetSpec broadcast_target(targets::TargetSpec s, std::size_t d) {
  s.dim = d;
  for (auto& c : s.components) {
    if (c.center.size() == 1) c.center.assign(d, c.center[0]);
  }
  return s;
}

void run_dim_sweep(Output& out) {
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < out.cfg.sweep.dims.size(); ++i) {
    Cell c = base_cell(out.cfg);
    c.spec = broadcast_target(out.cfg.target, out.cfg.sweep.dims[i]);
    c.tag = out.cfg.experiment_id + "_d" + std::to_string(c.spec.dim);
    c.index = i;
    cells.push_back(c);
  }
  run_grid(out, cells);
}

void run_alpha_grid(Output& out) {
  std::vector<Cell> cells;
  std::uint64_t idx = 0;
  for (double at : out.cfg.sweep.alpha_tgt) {
    for (double ap : out.cfg.sweep.alpha_prop) {
      Cell c = base_cell(out.cfg);
      c.spec.alpha_tgt = at;
      c.alpha_prop = ap;
      c.tag = out.cfg.experiment_id + "_tgt" + tag_num(at) + "_prop" + tag_num(ap);
      c.index = idx++;
      cells.push_back(c);
    }
  }
  run_grid(out, cells);
}

void run_ablation(Output& out) {
  const auto& cfg = out.cfg;
  const Vec alphas = cfg.sweep.alpha_tgt.empty() ? Vec{cfg.target.alpha_tgt} : cfg.sweep.alpha_tgt;
  const Vec hs = cfg.experiment == Experiment::lambda_ablation || cfg.sweep.h.empty() ? Vec{cfg.riesz.h} : cfg.sweep.h;
  const Vec lambdas = cfg.sweep.lambda_alpha.empty() ? Vec{cfg.sbm.train.lambda_alpha} : cfg.sweep.lambda_alpha;
  std::vector<Cell> cells;
  std::uint64_t idx = 0;
  for (double a : alphas) {
    for (double lam : lambdas) {
      // Cells sharing (alpha, lambda) share training streams, so they differ only in the drift.
      ++idx;
      for (std::size_t K : cfg.sweep.K) {
        for (double h : hs) {
          Cell c = base_cell(cfg);
          c.spec.alpha_tgt = a;
          c.alpha_prop = a;
          c.use_riesz = true;
          c.rz.K = K;
          c.rz.h = h;
          c.lambda_alpha = lam;
          c.tag = cfg.experiment_id + "_a" + tag_num(a) + "_K" + std::to_string(K) + "_h" + tag_num(h) + "_l" +
                  tag_num(lam);
          c.index = idx;
          cells.push_back(c);
        }
      }
    }
  }
  if (cfg.sweep.max_cells > 0 && cells.size() > cfg.sweep.max_cells) {
    out.log("grid of " + std::to_string(cells.size()) + " cells exceeds the budget; running the first " +
            std::to_string(cfg.sweep.max_cells));
    cells.resize(cfg.sweep.max_cells);
    out.result.complete = false;
  }
  // FULA baselines (oracle drift), one per alpha.
  for (auto seed : cfg.seeds) {
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
      if (std::find(cfg.samplers.begin(), cfg.samplers.end(), SamplerKind::fula) == cfg.samplers.end()) break;
      Cell b = base_cell(cfg);
      b.spec.alpha_tgt = alphas[ai];
      b.alpha_prop = alphas[ai];
      b.use_riesz = false;
      b.tag = cfg.experiment_id + "_a" + tag_num(alphas[ai]) + "_baseline";
      ExperimentConfig only = cfg;
      only.samplers = {SamplerKind::fula};
      Output sub{only, out.opts, out.result, {}};
      auto cr = run_cell(sub, b, seed);
      out.result.metrics.insert(out.result.metrics.end(), cr.metrics.begin(), cr.metrics.end());
    }
    for (const auto& c : cells) {
      ExperimentConfig only = cfg;
      only.samplers = {SamplerKind::mafla};
      Output sub{only, out.opts, out.result, {}};
      auto cr = run_cell(sub, c, seed);
      out.loss_rows.insert(out.loss_rows.end(), sub.loss_rows.begin(), sub.loss_rows.end());
      for (auto& m : cr.metrics) {
        out.result.ablation.push_back({c.spec.alpha_tgt, c.rz.K, c.rz.h, c.lambda_alpha, m.w1, m.q95_err, m.q99_err,
                                       cfg.n_steps, seed});
        out.result.metrics.push_back(m);
      }
    }
  }
  write_metrics(out);
  using io::ColumnType;
  io::CsvTable t({{"alpha", ColumnType::real, "stability index of target and proposal"},
                  {"K", ColumnType::integer, "truncation order"},
                  {"h", ColumnType::real, "difference step"},
                  {"lambda_alpha", ColumnType::real, "weight of the alpha-power loss"},
                  {"w1", ColumnType::real, "sliced Wasserstein-1 distance"},
                  {"q95", ColumnType::real, "0.95-quantile error"},
                  {"q99", ColumnType::real, "0.99-quantile error"},
                  {"n_steps", ColumnType::integer, "chain length"},
                  {"seed", ColumnType::integer, "seed"}});
  for (const auto& r : out.result.ablation) {
    t.add_row({fmt(r.alpha), std::to_string(r.K), fmt(r.h), fmt(r.lambda_alpha), fmt(r.w1), fmt(r.q95), fmt(r.q99),
               std::to_string(r.n_steps), std::to_string(r.seed)});
  }
  out.write(t, "ablation.csv");
}

// ---------------------------------------------------------------- combinatorial studies

combopt::Graph make_graph(const GraphFamily& f, RngStream& rng) {
  if (f.family == "ba") return combopt::gen_ba(f.n, f.m, rng);
  if (f.family == "er") return combopt::gen_er(f.n, f.p, rng);
  const auto m = static_cast<std::size_t>(std::llround(f.edges_per_vertex * static_cast<double>(f.n)));
  return combopt::gen_er_edges(f.n, m, rng);
}

struct CoEval {
  Vec energy;
  Vec objective;
  Vec uncovered;
  double best = 0.0;
  std::size_t infeasible = 0;
};

CoEval evaluate_co(const ExperimentConfig& cfg, const Target& target, const combopt::Graph& g,
                   const samplers::RunResult& res) {
  const bool maxcut = cfg.experiment == Experiment::maxcut;
  CoEval e;
  const Matrix& fin = res.final_particles;
  auto objective = [&](ConstSpan u, double* unc, bool* feasible) {
    if (maxcut) return static_cast<double>(combopt::cut_value(combopt::sign_decode(u), g));
    const auto th = combopt::cover_metrics(combopt::threshold_vc(u), g);
    if (unc) *unc = th.uncovered_ratio;
    const auto dec = combopt::greedy_decode_vc(u, g);
    const auto cm = combopt::cover_metrics(dec, g);
    if (feasible) *feasible = cm.uncovered == 0;
    return static_cast<double>(cm.size);
  };
  e.best = maxcut ? -INFINITY : INFINITY;
  for (std::size_t i = 0; i < fin.rows; ++i) {
    const auto u = fin.row(i);
    if (!all_finite(u)) continue;
    e.energy.push_back(-target.log_density(u) * cfg.co.temperature);
    double unc = 0.0;
    bool feasible = true;
    e.objective.push_back(objective(u, &unc, &feasible));
    e.uncovered.push_back(unc);
    if (!feasible) ++e.infeasible;
  }
  auto consider = [&](const Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
      if (!all_finite(m.row(i))) continue;
      bool feasible = true;
      const double v = objective(m.row(i), nullptr, &feasible);
      if (!feasible) ++e.infeasible;
      e.best = maxcut ? std::max(e.best, v) : std::min(e.best, v);
    }
  };
  for (const auto& snap : res.trajectory) consider(snap);
  consider(fin);
  return e;
}

std::unique_ptr<Target> co_target(const ExperimentConfig& cfg, const combopt::Graph& g) {
  if (cfg.experiment == Experiment::maxcut) return std::make_unique<combopt::MaxCutTarget>(g, cfg.co.temperature);
  return std::make_unique<combopt::VCTarget>(g, cfg.co.penalty, cfg.co.temperature);
}

// Training data for relaxation targets: snapshots from the second half of a pilot FULA run.
Matrix pilot_pool(const ExperimentConfig& cfg, const Target& target, const DriftField& field, const DriftConfig& drift,
                  std::size_t n, std::uint64_t seed, std::uint64_t index) {
  const Matrix init = make_init(cfg.init, target, std::max<std::size_t>(cfg.n_particles, 64), n, seed, 1000 + index);
  samplers::SamplerSpec sp;
  sp.kind = SamplerKind::fula;
  sp.field = &field;
  sp.drift = drift;
  auto st = samplers::init_state(init, seed, stream(kPilot, index));
  samplers::RunConfig rc;
  rc.n_steps = cfg.sbm.pilot_steps;
  rc.burn_in = cfg.sbm.pilot_steps / 2;
  rc.thin = std::max<std::size_t>(1, cfg.sbm.pilot_steps / 20);
  rc.policy = cfg.policy;
  const auto res = samplers::run(sp, st, rc);
  return evalkit::finite_rows(res.pooled());
}

sbm::DataSampler pool_sampler(const Matrix& pool) {
  return [&pool](std::size_t n, RngStream& rng) {
    Matrix m(n, pool.cols);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = pool.row(rng.below(pool.rows));
      std::copy(r.begin(), r.end(), m.row(i).begin());
    }
    return m;
  };
}

void run_co(Output& out) {
  const auto& cfg = out.cfg;
  const bool maxcut = cfg.experiment == Experiment::maxcut;
  const auto drift = DriftConfig::make(cfg.alpha_prop, cfg.tau);
  for (auto seed : cfg.seeds) {
    for (std::size_t fi = 0; fi < cfg.co.instances.size(); ++fi) {
      const auto& fam = cfg.co.instances[fi];
      for (std::size_t gi = 0; gi < fam.count; ++gi) {
        const std::uint64_t idx = fi * 1000 + gi;
        RngStream grng(seed, stream(kGraph, idx));
        const auto g = make_graph(fam, grng);
        auto target = co_target(cfg, g);
        ScaledScoreDrift field(*target, drift.c_alpha, JacobianMode::analytic);
        const Matrix init = make_init(cfg.init, *target, cfg.n_particles, g.n, seed, idx);
        std::unique_ptr<Trained> trained;
        Matrix pool;
        for (auto kind : cfg.samplers) {
          samplers::AcceptFn acc;
          if (kind == SamplerKind::mafla) {
            if (!trained) {
              pool = pilot_pool(cfg, *target, field, drift, g.n, seed, idx);
              const std::string tag = cfg.experiment_id + "_" + fam.family + std::to_string(gi) + "_seed" + std::to_string(seed);
              out.log("training acceptance " + tag);
              trained = std::make_unique<Trained>(
                  train_net(cfg, g.n, *target, field, drift, pool_sampler(pool), seed, idx, cfg.sbm.train.lambda_alpha));
              record_training(out, tag, *trained, seed);
            }
            acc = accept_fn(trained->net);
          }
          const auto res = run_sampler(kind, *target, field, drift, acc, init, cfg, seed, cfg.n_steps, cfg.burn_in,
                                       std::max<std::size_t>(cfg.thin, 1));
          const auto ev = evaluate_co(cfg, *target, g, res);
          CoRow row;
          row.family = fam.family;
          row.graph = gi;
          row.n = g.n;
          row.n_edges = g.n_edges();
          row.sampler = samplers::to_string(kind);
          row.seed = seed;
          row.energy_mean = mean(ev.energy);
          row.energy_std = stddev(ev.energy);
          row.objective_mean = mean(ev.objective);
          row.objective_std = stddev(ev.objective);
          row.best = ev.best;
          row.uncovered_ratio = mean(ev.uncovered);
          row.acceptance_rate = mean(res.acceptance_rate);
          row.infeasible = ev.infeasible;
          out.log(fam.family + std::to_string(gi) + " " + row.sampler + ": obj=" + fmt(row.objective_mean) +
                  " best=" + fmt(row.best) + " E=" + fmt(row.energy_mean) + " acc=" + fmt(row.acceptance_rate));
          out.result.co.push_back(row);
        }
      }
    }
  }
  if (maxcut && cfg.co.small_count > 0 &&
      std::find(cfg.samplers.begin(), cfg.samplers.end(), SamplerKind::mafla) != cfg.samplers.end()) {
    const auto seed = cfg.seeds.front();
    const std::size_t span = cfg.co.small_n_max - cfg.co.small_n_min + 1;
    for (std::size_t k = 0; k < cfg.co.small_count; ++k) {
      RngStream grng(seed, stream(kSmallGraph, k));
      const std::size_t n = cfg.co.small_n_min + k % span;
      combopt::Graph g = combopt::gen_er(n, cfg.co.small_p, grng);
      while (g.n_edges() == 0) g = combopt::gen_er(n, cfg.co.small_p, grng);
      auto target = co_target(cfg, g);
      ScaledScoreDrift field(*target, drift.c_alpha, JacobianMode::analytic);
      const std::uint64_t idx = 900000 + k;
      const Matrix pool = pilot_pool(cfg, *target, field, drift, n, seed, idx);
      auto trained = train_net(cfg, n, *target, field, drift, pool_sampler(pool), seed, idx, cfg.sbm.train.lambda_alpha);
      const Matrix init = make_init(cfg.init, *target, cfg.n_particles, n, seed, idx);
      const auto res = run_sampler(SamplerKind::mafla, *target, field, drift, accept_fn(trained.net), init, cfg, seed,
                                   cfg.n_steps, cfg.burn_in, std::max<std::size_t>(cfg.thin, 1));
      const auto ev = evaluate_co(cfg, *target, g, res);
      SmallGraphRow row{k, n, g.n_edges(), combopt::brute_force_maxcut(g), static_cast<long>(ev.best), false};
      row.attained = row.best_found == row.optimum;
      out.log("small graph " + std::to_string(k) + ": optimum " + std::to_string(row.optimum) + " found " +
              std::to_string(row.best_found));
      out.result.small_graphs.push_back(row);
    }
  }
  using io::ColumnType;
  const char* obj = maxcut ? "cut" : "cover";
  io::CsvTable t({{"family", ColumnType::text, "graph family"},
                  {"graph", ColumnType::integer, "graph index"},
                  {"n", ColumnType::integer, "vertices"},
                  {"n_edges", ColumnType::integer, "edges"},
                  {"sampler", ColumnType::text, "sampler name"},
                  {"seed", ColumnType::integer, "seed"},
                  {"energy_mean", ColumnType::real, "mean relaxed energy over particles"},
                  {"energy_std", ColumnType::real, "standard deviation of the relaxed energy"},
                  {std::string(obj) + "_mean", ColumnType::real, "mean decoded objective over particles"},
                  {std::string(obj) + "_std", ColumnType::real, "standard deviation of the decoded objective"},
                  {"best", ColumnType::real, "best decoded objective over all recorded states"},
                  {"uncovered_ratio", ColumnType::real, "mean uncovered-edge ratio before decoding (cover only)"},
                  {"acceptance_rate", ColumnType::real, "mean per-particle acceptance rate"},
                  {"infeasible", ColumnType::integer, "decoded covers leaving an edge uncovered"}});
  for (const auto& r : out.result.co) {
    t.add_row({r.family, std::to_string(r.graph), std::to_string(r.n), std::to_string(r.n_edges), r.sampler,
               std::to_string(r.seed), fmt(r.energy_mean), fmt(r.energy_std), fmt(r.objective_mean),
               fmt(r.objective_std), fmt(r.best), fmt(r.uncovered_ratio), fmt(r.acceptance_rate),
               std::to_string(r.infeasible)});
  }
  out.write(t, maxcut ? "maxcut.csv" : "vertex_cover.csv");
  if (!out.result.small_graphs.empty()) {
    io::CsvTable s({{"graph", ColumnType::integer, "graph index"},
                    {"n", ColumnType::integer, "vertices"},
                    {"n_edges", ColumnType::integer, "edges"},
                    {"optimum", ColumnType::integer, "exhaustive maximum cut"},
                    {"best_found", ColumnType::integer, "best cut over all recorded MAFLA states"},
                    {"attained", ColumnType::integer, "1 if the optimum was found"}});
    for (const auto& r : out.result.small_graphs) {
      s.add_row({std::to_string(r.graph), std::to_string(r.n), std::to_string(r.n_edges), std::to_string(r.optimum),
                 std::to_string(r.best_found), r.attained ? "1" : "0"});
    }
    out.write(s, "maxcut_small.csv");
  }
}

// ---------------------------------------------------------------- validate

void check(Output& out, const std::string& name, double value, double tol, bool pass) {
  out.result.checks.push_back({name, value, tol, pass});
  out.log(name + ": " + fmt(value) + (pass ? " ok" : " FAILED"));
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

void run_validate(Output& out) {
  const std::uint64_t seed = out.cfg.seeds.front();
  Vec grid;
  for (double u = -3.0; u <= 3.0 + 1e-12; u += 0.25) grid.push_back(u);
  for (double a : {1.2, 1.5, 1.9, 2.0}) {
    RngStream rng(seed, derive_stream_id(1, 1, static_cast<std::uint64_t>(a * 100)));
    const auto s = stable::sample_sas_1d(a, 1.0, 200000, rng);
    const auto e = stable::ecf_check(s, grid, a);
    const double m = *std::max_element(e.begin(), e.end());
    check(out, "ecf_1d_alpha" + tag_num(a), m, 0.02, m < 0.02);
    const Matrix iso = stable::sample_sas_isotropic(a, 1.0, 3, 100000, rng);
    Vec proj(iso.rows);
    for (std::size_t i = 0; i < iso.rows; ++i) proj[i] = (iso(i, 0) + 2.0 * iso(i, 1) - 2.0 * iso(i, 2)) / 3.0;
    const auto ep = stable::ecf_check(proj, grid, a);
    const double mp = *std::max_element(ep.begin(), ep.end());
    check(out, "ecf_3d_projection_alpha" + tag_num(a), mp, 0.02, mp < 0.02);
  }

  // Target scores against finite differences of the log-density.
  {
    targets::TargetSpec s;
    s.kind = targets::Kind::stable_location_mixture;
    s.alpha_tgt = 1.5;
    s.dim = 2;
    s.components = {{0.3, {-2.0, 0.0}, 1.0}, {0.7, {2.0, 1.0}, 0.8}};
    auto t = targets::make_target(s);
    RngStream rng(seed, derive_stream_id(1, 2, 0));
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      Vec x{3 * rng.normal(), 3 * rng.normal()}, g(2);
      t->score(x, g);
      for (std::size_t j = 0; j < 2; ++j) {
        Vec up = x, dn = x;
        up[j] += 1e-5;
        dn[j] -= 1e-5;
        worst = std::max(worst, rel(g[j], (t->log_density(up) - t->log_density(dn)) / 2e-5));
      }
    }
    check(out, "target_score_fd", worst, 1e-3, worst < 1e-3);
  }

  // Relaxation scores.
  {
    RngStream rng(seed, derive_stream_id(1, 3, 0));
    const auto g = combopt::gen_er(16, 0.3, rng);
    combopt::MaxCutTarget mc(g, 0.5);
    combopt::VCTarget vc(g, 2.0, 0.5);
    double worst = 0.0;
    for (const Target* t : {static_cast<const Target*>(&mc), static_cast<const Target*>(&vc)}) {
      for (int k = 0; k < 100; ++k) {
        Vec u(16), s(16);
        for (double& v : u) v = rng.normal();
        t->score(u, s);
        for (std::size_t j = 0; j < 16; ++j) {
          Vec up = u, dn = u;
          up[j] += 1e-6;
          dn[j] -= 1e-6;
          worst = std::max(worst, rel(s[j], (t->log_density(up) - t->log_density(dn)) / 2e-6));
        }
      }
    }
    check(out, "relaxation_score_fd", worst, 1e-3, worst < 1e-3);
  }

  // Acceptance network input gradients and SBM parameter gradients.
  {
    RngStream rng(seed, derive_stream_id(1, 4, 0));
    targets::TargetSpec s;
    s.kind = targets::Kind::gaussian_mixture;
    s.dim = 2;
    s.components = {{0.5, {-1.0, 0.0}, 0.8}, {0.5, {1.5, 0.5}, 1.0}};
    auto t = targets::make_target(s);
    const auto cfg = DriftConfig::make(1.6, 0.1);
    ScaledScoreDrift field(*t, cfg.c_alpha);
    double worst_in = 0.0, worst_par = 0.0;
    for (int k = 0; k < 100; ++k) {
      sbm::AcceptanceNet net(2, {6, 6}, diffnet::Activation::tanh,
                             k % 2 ? sbm::AcceptanceForm::free : sbm::AcceptanceForm::antisymmetric);
      net.net().init(rng);
      const Vec x{rng.normal(), rng.normal()};
      const auto p = propose(x, field, cfg, rng);
      Vec gp(2), gx(2);
      net.logit_grad(p.x_prime, p.x, gp, gx);
      for (std::size_t j = 0; j < 2; ++j) {
        Vec up = p.x_prime, dn = p.x_prime;
        up[j] += 1e-6;
        dn[j] -= 1e-6;
        worst_in = std::max(worst_in, rel(gp[j], (net.logit(up, p.x) - net.logit(dn, p.x)) / 2e-6));
      }
      std::vector<sbm::PairTerms> batch{sbm::pair_terms(p.x, p.x_prime, *t, field, cfg)};
      sbm::SBMConfig sc;
      sc.lambda_alpha = 0.5;
      Vec grad(net.net().n_params(), 0.0);
      sbm::sbm_loss(net, batch, cfg.alpha, sc, grad);
      const std::size_t q = rng.below(grad.size());
      auto& w = net.net().params()[q];
      const double keep = w;
      w = keep + 1e-6;
      const double lu = sbm::sbm_loss(net, batch, cfg.alpha, sc).combined;
      w = keep - 1e-6;
      const double ld = sbm::sbm_loss(net, batch, cfg.alpha, sc).combined;
      w = keep;
      worst_par = std::max(worst_par, std::abs(grad[q] - (lu - ld) / 2e-6) /
                                          std::max(1e-3, std::max(std::abs(grad[q]), std::abs((lu - ld) / 2e-6))));
    }
    check(out, "acceptance_input_grad_fd", worst_in, 1e-3, worst_in < 1e-3);
    check(out, "sbm_param_grad_fd", worst_par, 1e-3, worst_par < 1e-3);
  }

  // Barker acceptance zeroes the residual for a Gaussian target at alpha = 2.
  {
    const double sc = 0.8, tau = 0.2;
    targets::TargetSpec s;
    s.kind = targets::Kind::gaussian_mixture;
    s.dim = 2;
    s.components = {{1.0, {0.5, -0.5}, sc}};
    auto t = targets::make_target(s);
    const auto cfg = DriftConfig::make(2.0, tau);
    ScaledScoreDrift field(*t, cfg.c_alpha, JacobianMode::analytic);
    const double jb = -1.0 / (2.0 * sc * sc);
    const targets::MixtureTarget& tt = *t;
    sbm::LogAcceptGradFn barker = [&tt, tau, jb](ConstSpan xp, ConstSpan x) {
      const std::size_t d = x.size();
      Vec sx(d), sxp(d);
      tt.score(x, sx);
      tt.score(xp, sxp);
      double lr = tt.log_density(xp) - tt.log_density(x);
      Vec r(d), rr(d);
      for (std::size_t j = 0; j < d; ++j) {
        r[j] = xp[j] - x[j] - tau * sx[j];
        rr[j] = x[j] - xp[j] - tau * sxp[j];
        lr += (r[j] * r[j] - rr[j] * rr[j]) / (4 * tau);
      }
      const double w = 1.0 - sigmoid(lr);
      sbm::LogAcceptGrad g{Vec(d), Vec(d)};
      for (std::size_t j = 0; j < d; ++j) {
        g.wrt_first[j] = w * (sxp[j] + (1 + tau * jb) * rr[j] / (2 * tau) + r[j] / (2 * tau));
        g.wrt_second[j] = w * (-sx[j] - rr[j] / (2 * tau) - (1 + tau * jb) * r[j] / (2 * tau));
      }
      return g;
    };
    RngStream rng(seed, derive_stream_id(1, 5, 0));
    Matrix res(256, 4);
    for (std::size_t i = 0; i < 256; ++i) {
      const Vec x{1.5 * rng.normal(), 1.5 * rng.normal()};
      const auto p = propose(x, field, cfg, rng);
      const auto r = sbm::residual(p, barker, *t, field, cfg);
      std::copy(r.begin(), r.end(), res.row(i).begin());
    }
    const double l2 = sbm::loss_l2(res);
    check(out, "barker_residual_l2", l2, 1e-10, l2 < 1e-10);
  }

  // Riesz identities.
  {
    double worst = 0.0;
    for (int i = 1; i <= 50; ++i) {
      const double g = -1.0 + i / 51.0;
      worst = std::max(worst, std::abs(riesz::riesz_coeffs(g, 0).at(0) - c_alpha(g + 2.0)) / c_alpha(g + 2.0));
    }
    check(out, "riesz_centre_coefficient", worst, 1e-12, worst < 1e-12);
  }

  // Degeneracy ladder.
  {
    targets::TargetSpec s;
    s.kind = targets::Kind::gaussian_mixture;
    s.dim = 2;
    s.components = {{0.4, {-1.0, 0.0}, 0.7}, {0.6, {1.0, 1.0}, 0.9}};
    auto t = targets::make_target(s);
    Matrix init(64, 2);
    RngStream rng(seed, derive_stream_id(1, 6, 0));
    for (double& v : init.data) v = rng.normal();
    const auto c2 = DriftConfig::make(2.0, 0.05);
    ScaledScoreDrift f2(*t, c2.c_alpha);
    auto a = samplers::init_state(init, seed);
    auto b = samplers::init_state(init, seed);
    for (int k = 0; k < 100; ++k) {
      samplers::step_ula(a, *t, c2.tau);
      samplers::step_fula(b, f2, c2);
    }
    check(out, "fula_alpha2_equals_ula", a.particles.data == b.particles.data ? 0.0 : 1.0, 0.0,
          a.particles.data == b.particles.data);
    const auto c = DriftConfig::make(1.5, 0.05);
    ScaledScoreDrift f(*t, c.c_alpha);
    auto x = samplers::init_state(init, seed);
    auto y = samplers::init_state(init, seed);
    const samplers::AcceptFn one = [](ConstSpan, ConstSpan) { return 1.0; };
    for (int k = 0; k < 100; ++k) {
      samplers::step_fula(x, f, c);
      samplers::step_mafla(y, f, c, one);
    }
    check(out, "mafla_unit_acceptance_equals_fula", x.particles.data == y.particles.data ? 0.0 : 1.0, 0.0,
          x.particles.data == y.particles.data);
  }

  using io::ColumnType;
  io::CsvTable t({{"check", ColumnType::text, "invariant"},
                  {"value", ColumnType::real, "measured worst-case value"},
                  {"tolerance", ColumnType::real, "pass threshold"},
                  {"pass", ColumnType::integer, "1 if the check passed"}});
  for (const auto& r : out.result.checks) t.add_row({r.check, fmt(r.value), fmt(r.tolerance), r.pass ? "1" : "0"});
  out.write(t, "validate.csv");
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

bool ExperimentResult::checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRow& c) { return c.pass; });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  ExperimentResult result;
  Output out{cfg, opts, result, {}};
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  if (opts.write_outputs) io::ensure_dir(cfg.output_dir);
  switch (cfg.experiment) {
    case Experiment::mixture2d:
      run_mixture2d(out);
      break;
    case Experiment::alpha_grid:
      run_alpha_grid(out);
      break;
    case Experiment::tau_sweep:
      run_tau_sweep(out);
      break;
    case Experiment::dim_sweep:
      run_dim_sweep(out);
      break;
    case Experiment::riesz_ablation:
    case Experiment::lambda_ablation:
      run_ablation(out);
      break;
    case Experiment::maxcut:
    case Experiment::vertex_cover:
      run_co(out);
      break;
    case Experiment::validate:
      run_validate(out);
      break;
  }
  write_losses(out);
  if (opts.write_outputs) {
    const std::string canonical = config_to_json(cfg);
    ojson m;
    m["experiment"] = to_string(cfg.experiment);
    m["experiment_id"] = cfg.experiment_id;
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical);
    m["config_hash"] = hash.str();
    m["config"] = ojson::parse(opts.config_text.empty() ? canonical : opts.config_text);
    m["seeds"] = cfg.seeds;
    m["complete"] = result.complete;
    if (!result.checks.empty()) m["checks_pass"] = result.checks_pass();
    m["versions"] = {{"mafla", "0.1.0"}, {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}, {"openmp", _OPENMP}};
    m["threads"] = omp_get_max_threads();
    m["files"] = result.files;
    m["started"] = started;
    m["finished"] = utc_now();
    m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream os(out.path("manifest.json"), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out.path("manifest.json"));
    os << m.dump(2) << '\n';
  }
  return result;
}

}  // namespace mafla::experiments
