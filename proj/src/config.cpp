#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mafla/experiments.hpp"

namespace mafla::experiments {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

const std::vector<std::pair<Experiment, const char*>> kExperimentNames = {
    {Experiment::mixture2d, "mixture2d"},
    {Experiment::alpha_grid, "alpha_grid"},
    {Experiment::tau_sweep, "tau_sweep"},
    {Experiment::dim_sweep, "dim_sweep"},
    {Experiment::riesz_ablation, "riesz_ablation"},
    {Experiment::lambda_ablation, "lambda_ablation"},
    {Experiment::maxcut, "maxcut"},
    {Experiment::vertex_cover, "vertex_cover"},
    {Experiment::validate, "validate"},
};

// Byte offsets of keys and array elements in the raw text, used only to anchor
// error messages to a line.
class SourceMap {
 public:
  explicit SourceMap(const std::string& text) : t_(text) {}

  std::size_t line(std::size_t off) const {
    off = std::min(off, t_.size());
    return 1 + static_cast<std::size_t>(std::count(t_.begin(), t_.begin() + static_cast<long>(off), '\n'));
  }

  struct Entry {
    std::size_t key = 0;
    std::size_t value = 0;
  };

  std::map<std::string, Entry> keys(std::size_t off) const {
    std::map<std::string, Entry> out;
    std::size_t i = ws(off);
    if (i >= t_.size() || t_[i] != '{') return out;
    i = ws(i + 1);
    while (i < t_.size() && t_[i] != '}') {
      const std::size_t k = i;
      const std::size_t end = skip_string(i);
      const std::string name = t_.substr(k + 1, end - k - 2);
      i = ws(end);
      i = ws(i + 1);  // ':'
      out.emplace(name, Entry{k, i});
      i = ws(skip_value(i));
      if (i < t_.size() && t_[i] == ',') i = ws(i + 1);
    }
    return out;
  }

  std::vector<std::size_t> elements(std::size_t off) const {
    std::vector<std::size_t> out;
    std::size_t i = ws(off);
    if (i >= t_.size() || t_[i] != '[') return out;
    i = ws(i + 1);
    while (i < t_.size() && t_[i] != ']') {
      out.push_back(i);
      i = ws(skip_value(i));
      if (i < t_.size() && t_[i] == ',') i = ws(i + 1);
    }
    return out;
  }

 private:
  std::size_t ws(std::size_t i) const {
    while (i < t_.size() && std::isspace(static_cast<unsigned char>(t_[i]))) ++i;
    return i;
  }
  std::size_t skip_string(std::size_t i) const {
    ++i;
    while (i < t_.size() && t_[i] != '"') i += t_[i] == '\\' ? 2 : 1;
    return i + 1;
  }
  std::size_t skip_value(std::size_t i) const {
    if (i >= t_.size()) return i;
    if (t_[i] == '"') return skip_string(i);
    if (t_[i] == '{' || t_[i] == '[') {
      int depth = 0;
      while (i < t_.size()) {
        const char c = t_[i];
        if (c == '"') {
          i = skip_string(i);
          continue;
        }
        if (c == '{' || c == '[') ++depth;
        if (c == '}' || c == ']') {
          if (--depth == 0) return i + 1;
        }
        ++i;
      }
      return i;
    }
    while (i < t_.size() && t_[i] != ',' && t_[i] != '}' && t_[i] != ']' &&
           !std::isspace(static_cast<unsigned char>(t_[i])))
      ++i;
    return i;
  }

  const std::string& t_;
};

struct Ctx {
  SourceMap map;
  std::string source;
};

[[noreturn]] void fail_at(const Ctx& c, std::size_t off, const std::string& path, const std::string& msg) {
  std::ostringstream os;
  os << c.source << ":" << c.map.line(off) << ": " << (path.empty() ? "<root>" : path) << ": " << msg;
  throw ConfigError(os.str());
}

class Obj {
 public:
  Obj(const Ctx& c, const json& j, std::size_t off, std::string path) : c_(c), j_(j), off_(off), path_(std::move(path)) {
    if (!j.is_object()) fail_at(c_, off_, path_, "expected an object");
    entries_ = c_.map.keys(off_);
  }

  void allow(std::initializer_list<const char*> names) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool ok = false;
      for (const char* n : names) ok = ok || it.key() == n;
      if (!ok) fail_at(c_, key_off(it.key()), child(it.key()), "unknown key '" + it.key() + "'");
    }
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  [[noreturn]] void fail(const std::string& k, const std::string& msg) const {
    fail_at(c_, has(k) ? key_off(k) : off_, has(k) ? child(k) : path_, msg);
  }

  double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }
  double num(const std::string& k) const {
    const auto& v = need(k);
    if (!v.is_number()) fail(k, "expected a number");
    return v.get<double>();
  }
  std::size_t uint(const std::string& k, std::size_t def) const { return has(k) ? uint(k) : def; }
  std::size_t uint(const std::string& k) const {
    const auto& v = need(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(k, "expected a non-negative integer");
    return v.get<std::size_t>();
  }
  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    if (!j_.at(k).is_boolean()) fail(k, "expected true or false");
    return j_.at(k).get<bool>();
  }
  std::string str(const std::string& k, const std::string& def) const { return has(k) ? str(k) : def; }
  std::string str(const std::string& k) const {
    const auto& v = need(k);
    if (!v.is_string()) fail(k, "expected a string");
    return v.get<std::string>();
  }
  Vec nums(const std::string& k) const {
    const auto& v = need(k);
    if (!v.is_array()) fail(k, "expected an array of numbers");
    Vec out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(k, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::size_t> uints(const std::string& k) const {
    const auto& v = need(k);
    if (!v.is_array()) fail(k, "expected an array of non-negative integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0))
        fail(k, "expected an array of non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }
  std::vector<std::string> strs(const std::string& k) const {
    const auto& v = need(k);
    if (!v.is_array()) fail(k, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail(k, "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }
  Obj obj(const std::string& k) const {
    need(k);
    return Obj(c_, j_.at(k), value_off(k), child(k));
  }
  std::vector<Obj> objs(const std::string& k) const {
    const auto& v = need(k);
    if (!v.is_array()) fail(k, "expected an array of objects");
    const auto offs = c_.map.elements(value_off(k));
    std::vector<Obj> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.emplace_back(c_, v[i], i < offs.size() ? offs[i] : value_off(k), child(k) + "[" + std::to_string(i) + "]");
    }
    return out;
  }
  const json& raw(const std::string& k) const { return need(k); }

  // Runs f and turns library parameter errors into anchored config errors.
  template <class F>
  auto guard(const std::string& k, F&& f) const {
    try {
      return f();
    } catch (const ParameterError& e) {
      fail(k, e.what());
    }
  }

 private:
  const json& need(const std::string& k) const {
    if (!has(k)) fail_at(c_, off_, path_, "missing required key '" + k + "'");
    return j_.at(k);
  }
  std::string child(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  std::size_t key_off(const std::string& k) const {
    auto it = entries_.find(k);
    return it == entries_.end() ? off_ : it->second.key;
  }
  std::size_t value_off(const std::string& k) const {
    auto it = entries_.find(k);
    return it == entries_.end() ? off_ : it->second.value;
  }

  const Ctx& c_;
  const json& j_;
  std::size_t off_;
  std::string path_;
  std::map<std::string, SourceMap::Entry> entries_;
};

targets::TargetSpec parse_target(const Obj& o) {
  o.allow({"kind", "alpha", "dim", "components"});
  targets::TargetSpec s;
  s.kind = o.guard("kind", [&] { return targets::kind_from_string(o.str("kind")); });
  s.alpha_tgt = o.num("alpha", 2.0);
  s.dim = o.uint("dim");
  for (const auto& c : o.objs("components")) {
    c.allow({"weight", "center", "scale"});
    targets::Component comp;
    comp.weight = c.num("weight");
    comp.center = c.nums("center");
    comp.scale = c.num("scale", 1.0);
    s.components.push_back(std::move(comp));
  }
  return s;
}

// Centers given with a single coordinate are broadcast to the target dimension.
targets::TargetSpec broadcast(targets::TargetSpec s, std::size_t d) {
  s.dim = d;
  for (auto& c : s.components) {
    if (c.center.size() == 1) c.center.assign(d, c.center[0]);
  }
  return s;
}

void validate_config(const ExperimentConfig& c, const Obj& root) {
  if (c.experiment == Experiment::validate) return;
  if (c.seeds.empty()) root.fail("seeds", "at least one seed is required");
  if (c.samplers.empty()) root.fail("samplers", "at least one sampler is required");
  if (c.n_particles == 0) root.fail("n_particles", "must be positive");
  if (c.burn_in > c.n_steps) root.fail("burn_in", "burn_in exceeds n_steps");
  root.guard("drift", [&] {
    DriftConfig::make(c.alpha_prop, c.tau);
    return 0;
  });
  root.guard("sbm", [&] {
    c.sbm.train.validate();
    return 0;
  });
  if (c.sbm.hidden.empty()) root.fail("sbm", "hidden must list at least one width");
  if (c.metrics.n_proj == 0) root.fail("metrics", "n_proj must be positive");
  if (c.n_reference == 0) root.fail("metrics", "n_reference must be positive");
  if (c.init.kind != "normal" && c.init.kind != "target") root.fail("init", "kind must be 'normal' or 'target'");
  if (!(c.init.scale > 0.0)) root.fail("init", "scale must be positive");

  const bool co = c.experiment == Experiment::maxcut || c.experiment == Experiment::vertex_cover;
  if (co) {
    if (c.co.instances.empty()) root.fail("co", "instances must not be empty");
    if (!(c.co.temperature > 0.0)) root.fail("co", "temperature must be positive");
    if (!(c.co.penalty > 0.0)) root.fail("co", "penalty must be positive");
    for (const auto& g : c.co.instances) {
      if (g.family != "ba" && g.family != "er" && g.family != "er_edges")
        root.fail("co", "family must be one of ba, er, er_edges");
      if (g.n < 2) root.fail("co", "graphs need at least 2 vertices");
    }
    if (c.co.small_count > 0 && (c.co.small_n_min < 2 || c.co.small_n_max > 20 || c.co.small_n_min > c.co.small_n_max))
      root.fail("co", "small graph sizes must satisfy 2 <= n_min <= n_max <= 20");
    return;
  }

  if (c.experiment == Experiment::dim_sweep) {
    if (c.sweep.dims.empty()) root.fail("sweep", "dims must not be empty");
    for (auto d : c.sweep.dims) {
      root.guard("target", [&] {
        broadcast(c.target, d).validate();
        return 0;
      });
    }
  } else {
    root.guard("target", [&] {
      c.target.validate();
      return 0;
    });
  }
  if (c.init.kind == "normal" && !c.init.center.empty() && c.experiment != Experiment::dim_sweep &&
      c.init.center.size() != c.target.dim && c.init.center.size() != 1)
    root.fail("init", "center length must be 1 or the target dimension");
  if (c.use_riesz) {
    root.guard("riesz", [&] {
      riesz::RieszConfig r = c.riesz;
      r.order = c.alpha_prop - 2.0;
      r.validate();
      return 0;
    });
  }
  auto need = [&](bool ok, const char* what) {
    if (!ok) root.fail("sweep", what);
  };
  switch (c.experiment) {
    case Experiment::tau_sweep:
      need(!c.sweep.tau.empty(), "tau must not be empty");
      for (double t : c.sweep.tau) need(t > 0.0, "tau values must be positive");
      break;
    case Experiment::alpha_grid:
      need(!c.sweep.alpha_tgt.empty() && !c.sweep.alpha_prop.empty(), "alpha_tgt and alpha_prop must not be empty");
      for (double a : c.sweep.alpha_prop) need(a > 1.0 && a <= 2.0, "alpha_prop values must lie in (1, 2]");
      for (double a : c.sweep.alpha_tgt) need(a > 0.0 && a <= 2.0, "alpha_tgt values must lie in (0, 2]");
      break;
    case Experiment::riesz_ablation:
    case Experiment::lambda_ablation:
      need(!c.sweep.K.empty(), "K must not be empty");
      if (c.experiment == Experiment::riesz_ablation) need(!c.sweep.h.empty(), "h must not be empty");
      if (c.experiment == Experiment::lambda_ablation) need(!c.sweep.lambda_alpha.empty(), "lambda_alpha must not be empty");
      for (double h : c.sweep.h) need(h > 0.0, "h values must be positive");
      for (double a : c.sweep.alpha_tgt) need(a > 1.0 && a <= 2.0, "alpha_tgt values must lie in (1, 2]");
      for (double l : c.sweep.lambda_alpha) need(l >= 0.0, "lambda_alpha values must be non-negative");
      break;
    default:
      break;
  }
}

ExperimentConfig parse_root(const Obj& o) {
  o.allow({"experiment", "experiment_id", "target", "samplers", "drift", "riesz", "sbm", "n_particles", "n_steps",
           "burn_in", "thin", "seeds", "metrics", "init", "frw_step_scale", "co", "sweep", "policy", "output_dir",
           "save_checkpoints"});
  ExperimentConfig c;
  const std::string name = o.str("experiment");
  c.experiment = o.guard("experiment", [&] { return experiment_from_string(name); });
  c.experiment_id = o.str("experiment_id", name);
  c.output_dir = o.str("output_dir", "out/" + c.experiment_id);
  c.save_checkpoints = o.boolean("save_checkpoints", true);
  if (c.experiment == Experiment::validate) {
    c.seeds = {0};
    if (o.has("seeds")) {
      c.seeds.clear();
      for (auto s : o.uints("seeds")) c.seeds.push_back(s);
    }
    return c;
  }
  const bool co = c.experiment == Experiment::maxcut || c.experiment == Experiment::vertex_cover;
  if (!co) {
    c.target = parse_target(o.obj("target"));
  } else if (o.has("target")) {
    o.fail("target", "combinatorial experiments build their targets from the co section");
  }
  for (const auto& s : o.strs("samplers")) {
    c.samplers.push_back(o.guard("samplers", [&] { return samplers::sampler_from_string(s); }));
  }
  if (o.has("drift")) {
    const auto d = o.obj("drift");
    d.allow({"alpha", "tau"});
    c.alpha_prop = d.num("alpha", co ? 1.5 : c.target.alpha_tgt);
    c.tau = d.num("tau", c.tau);
  } else {
    c.alpha_prop = co ? 1.5 : c.target.alpha_tgt;
  }
  if (o.has("riesz")) {
    const auto r = o.obj("riesz");
    r.allow({"enabled", "K", "h", "normalize_k0"});
    c.use_riesz = r.boolean("enabled", true);
    c.riesz.K = r.uint("K", 0);
    c.riesz.h = r.num("h", 1e-2);
    c.riesz.normalize_k0 = r.boolean("normalize_k0", true);
  }
  if (o.has("sbm")) {
    const auto s = o.obj("sbm");
    s.allow({"epochs", "batch_size", "batches_per_epoch", "lr", "clip", "lambda_alpha", "lambda_entropy",
             "eta_schedule", "hidden", "activation", "form", "pilot_steps"});
    auto& t = c.sbm.train;
    t.epochs = s.uint("epochs", t.epochs);
    t.batch_size = s.uint("batch_size", t.batch_size);
    t.batches_per_epoch = s.uint("batches_per_epoch", t.batches_per_epoch);
    t.lr = s.num("lr", t.lr);
    t.clip = s.num("clip", t.clip);
    t.lambda_alpha = s.num("lambda_alpha", t.lambda_alpha);
    t.lambda_entropy = s.num("lambda_entropy", t.lambda_entropy);
    if (s.has("eta_schedule")) {
      const auto& v = s.raw("eta_schedule");
      if (!v.is_array()) s.fail("eta_schedule", "expected an array of [epoch, eta] pairs");
      for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number())
          s.fail("eta_schedule", "expected an array of [epoch, eta] pairs");
        t.eta_schedule.emplace_back(e[0].get<std::size_t>(), e[1].get<double>());
      }
    }
    if (s.has("hidden")) c.sbm.hidden = s.uints("hidden");
    c.sbm.activation = s.guard("activation", [&] { return diffnet::activation_from_string(s.str("activation", "tanh")); });
    c.sbm.form = s.guard("form", [&] { return sbm::form_from_string(s.str("form", "antisymmetric")); });
    c.sbm.pilot_steps = s.uint("pilot_steps", c.sbm.pilot_steps);
  }
  c.n_particles = o.uint("n_particles", c.n_particles);
  c.n_steps = o.uint("n_steps", c.n_steps);
  c.burn_in = o.uint("burn_in", std::min(c.burn_in, c.n_steps));
  c.thin = o.uint("thin", c.thin);
  if (o.has("seeds")) {
    c.seeds.clear();
    for (auto s : o.uints("seeds")) c.seeds.push_back(s);
  }
  if (o.has("metrics")) {
    const auto m = o.obj("metrics");
    m.allow({"n_proj", "statistic", "n_reference", "max_samples"});
    c.metrics.n_proj = m.uint("n_proj", c.metrics.n_proj);
    c.metrics.statistic =
        m.guard("statistic", [&] { return evalkit::statistic_from_string(m.str("statistic", "norm_radial")); });
    c.n_reference = m.uint("n_reference", c.n_reference);
    c.metrics.max_samples = m.uint("max_samples", 0);
  }
  if (o.has("init")) {
    const auto i = o.obj("init");
    i.allow({"kind", "scale", "center"});
    c.init.kind = i.str("kind", "normal");
    c.init.scale = i.num("scale", 1.0);
    if (i.has("center")) c.init.center = i.nums("center");
  }
  c.frw_step_scale = o.num("frw_step_scale", 1.0);
  if (c.frw_step_scale <= 0.0) o.fail("frw_step_scale", "must be positive");
  if (o.has("co")) {
    const auto s = o.obj("co");
    s.allow({"temperature", "penalty", "instances", "small"});
    c.co.temperature = s.num("temperature", c.co.temperature);
    c.co.penalty = s.num("penalty", c.co.penalty);
    for (const auto& g : s.objs("instances")) {
      g.allow({"family", "n", "m", "p", "edges_per_vertex", "count"});
      GraphFamily f;
      f.family = g.str("family");
      f.n = g.uint("n", f.n);
      f.m = g.uint("m", f.m);
      f.p = g.num("p", f.p);
      f.edges_per_vertex = g.num("edges_per_vertex", f.edges_per_vertex);
      f.count = g.uint("count", f.count);
      c.co.instances.push_back(f);
    }
    if (s.has("small")) {
      const auto sm = s.obj("small");
      sm.allow({"count", "n_min", "n_max", "p"});
      c.co.small_count = sm.uint("count", 0);
      c.co.small_n_min = sm.uint("n_min", c.co.small_n_min);
      c.co.small_n_max = sm.uint("n_max", c.co.small_n_max);
      c.co.small_p = sm.num("p", c.co.small_p);
    }
  } else if (co) {
    o.fail("co", "missing required key 'co'");
  }
  if (o.has("sweep")) {
    const auto s = o.obj("sweep");
    s.allow({"tau", "dims", "alpha_tgt", "alpha_prop", "K", "h", "lambda_alpha", "max_cells"});
    if (s.has("tau")) c.sweep.tau = s.nums("tau");
    if (s.has("dims")) c.sweep.dims = s.uints("dims");
    if (s.has("alpha_tgt")) c.sweep.alpha_tgt = s.nums("alpha_tgt");
    if (s.has("alpha_prop")) c.sweep.alpha_prop = s.nums("alpha_prop");
    if (s.has("K")) c.sweep.K = s.uints("K");
    if (s.has("h")) c.sweep.h = s.nums("h");
    if (s.has("lambda_alpha")) c.sweep.lambda_alpha = s.nums("lambda_alpha");
    c.sweep.max_cells = s.uint("max_cells", 0);
  }
  c.policy = o.guard("policy", [&] { return samplers::policy_from_string(o.str("policy", "parallel")); });
  validate_config(c, o);
  return c;
}

}  // namespace

Experiment experiment_from_string(const std::string& s) {
  for (const auto& [e, n] : kExperimentNames) {
    if (s == n) return e;
  }
  throw ParameterError("unknown experiment '" + s + "'");
}

std::string to_string(Experiment e) {
  for (const auto& [x, n] : kExperimentNames) {
    if (x == e) return n;
  }
  return "unknown";
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    Ctx c{SourceMap(text), source};
    std::ostringstream os;
    os << source << ":" << c.map.line(e.byte == 0 ? 0 : e.byte - 1) << ": invalid JSON: " << e.what();
    throw ConfigError(os.str());
  }
  Ctx c{SourceMap(text), source};
  return parse_root(Obj(c, j, 0, ""));
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError(path + ":0: cannot open config file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_to_json(const ExperimentConfig& c) {
  ojson j;
  j["experiment"] = to_string(c.experiment);
  j["experiment_id"] = c.experiment_id;
  j["output_dir"] = c.output_dir;
  j["save_checkpoints"] = c.save_checkpoints;
  j["seeds"] = c.seeds;
  if (c.experiment == Experiment::validate) return j.dump(2);
  const bool co = c.experiment == Experiment::maxcut || c.experiment == Experiment::vertex_cover;
  if (!co) {
    ojson t;
    t["kind"] = targets::to_string(c.target.kind);
    t["alpha"] = c.target.alpha_tgt;
    t["dim"] = c.target.dim;
    t["components"] = ojson::array();
    for (const auto& comp : c.target.components)
      t["components"].push_back({{"weight", comp.weight}, {"center", comp.center}, {"scale", comp.scale}});
    j["target"] = t;
  }
  j["samplers"] = ojson::array();
  for (auto k : c.samplers) j["samplers"].push_back(samplers::to_string(k));
  j["drift"] = {{"alpha", c.alpha_prop}, {"tau", c.tau}};
  j["riesz"] = {{"enabled", c.use_riesz}, {"K", c.riesz.K}, {"h", c.riesz.h}, {"normalize_k0", c.riesz.normalize_k0}};
  const auto& t = c.sbm.train;
  ojson s;
  s["epochs"] = t.epochs;
  s["batch_size"] = t.batch_size;
  s["batches_per_epoch"] = t.batches_per_epoch;
  s["lr"] = t.lr;
  s["clip"] = t.clip;
  s["lambda_alpha"] = t.lambda_alpha;
  s["lambda_entropy"] = t.lambda_entropy;
  s["eta_schedule"] = ojson::array();
  for (const auto& [e, eta] : t.eta_schedule) s["eta_schedule"].push_back({e, eta});
  s["hidden"] = c.sbm.hidden;
  s["activation"] = diffnet::to_string(c.sbm.activation);
  s["form"] = sbm::to_string(c.sbm.form);
  s["pilot_steps"] = c.sbm.pilot_steps;
  j["sbm"] = s;
  j["n_particles"] = c.n_particles;
  j["n_steps"] = c.n_steps;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["metrics"] = {{"n_proj", c.metrics.n_proj},
                  {"statistic", evalkit::to_string(c.metrics.statistic)},
                  {"n_reference", c.n_reference},
                  {"max_samples", c.metrics.max_samples}};
  ojson init{{"kind", c.init.kind}, {"scale", c.init.scale}};
  if (!c.init.center.empty()) init["center"] = c.init.center;
  j["init"] = init;
  j["frw_step_scale"] = c.frw_step_scale;
  if (co) {
    ojson cs{{"temperature", c.co.temperature}, {"penalty", c.co.penalty}};
    cs["instances"] = ojson::array();
    for (const auto& g : c.co.instances) {
      cs["instances"].push_back({{"family", g.family},
                                 {"n", g.n},
                                 {"m", g.m},
                                 {"p", g.p},
                                 {"edges_per_vertex", g.edges_per_vertex},
                                 {"count", g.count}});
    }
    cs["small"] = {{"count", c.co.small_count}, {"n_min", c.co.small_n_min}, {"n_max", c.co.small_n_max}, {"p", c.co.small_p}};
    j["co"] = cs;
  }
  ojson sw;
  if (!c.sweep.tau.empty()) sw["tau"] = c.sweep.tau;
  if (!c.sweep.dims.empty()) sw["dims"] = c.sweep.dims;
  if (!c.sweep.alpha_tgt.empty()) sw["alpha_tgt"] = c.sweep.alpha_tgt;
  if (!c.sweep.alpha_prop.empty()) sw["alpha_prop"] = c.sweep.alpha_prop;
  if (!c.sweep.K.empty()) sw["K"] = c.sweep.K;
  if (!c.sweep.h.empty()) sw["h"] = c.sweep.h;
  if (!c.sweep.lambda_alpha.empty()) sw["lambda_alpha"] = c.sweep.lambda_alpha;
  sw["max_cells"] = c.sweep.max_cells;
  j["sweep"] = sw;
  j["policy"] = c.policy == samplers::ExecPolicy::parallel ? "parallel" : "serial";
  return j.dump(2);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace mafla::experiments
