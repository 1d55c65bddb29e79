#include "mafla/samplers.hpp"

#include <chrono>
#include <exception>
#include <numbers>

#include "mafla/stable_law.hpp"

namespace mafla::samplers {

namespace {

constexpr std::uint64_t kNoisePurpose = 1;
constexpr std::uint64_t kAcceptPurpose = 2;

// Runs kernel(i) for every particle; exceptions are rethrown after the loop.
template <class Kernel>
void for_particles(std::size_t n, ExecPolicy policy, Kernel&& kernel) {
  if (policy == ExecPolicy::serial) {
    for (std::size_t i = 0; i < n; ++i) kernel(i);
    return;
  }
  std::exception_ptr err;
  const long nn = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nn; ++i) {
    try {
      kernel(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(mafla_sampler_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

void ensure_cache(ChainState& s) {
  if (s.cache.rows != s.size() || s.cache.cols != s.dim()) s.cache = Matrix(s.size(), s.dim());
  if (s.cache_valid.size() != s.size()) s.cache_valid.assign(s.size(), 0);
  if (s.logp.size() != s.size()) s.logp.assign(s.size(), 0.0);
}

bool finite_or_freeze(ChainState& s, std::size_t i, ConstSpan xp) {
  if (all_finite(xp)) return true;
  s.frozen[i] = 1;
  return false;
}

}  // namespace

ExecPolicy policy_from_string(const std::string& s) {
  if (s == "serial") return ExecPolicy::serial;
  if (s == "parallel") return ExecPolicy::parallel;
  throw ParameterError("unknown execution policy '" + s + "'");
}

std::size_t ChainState::diverged() const {
  std::size_t c = 0;
  for (auto f : frozen) c += f;
  return c;
}

void ChainState::invalidate_cache() { std::fill(cache_valid.begin(), cache_valid.end(), 0); }

ChainState init_state(const Matrix& init, std::uint64_t seed, std::uint64_t stream_base) {
  ChainState s;
  s.particles = init;
  s.accept_count.assign(init.rows, 0);
  s.frozen.assign(init.rows, 0);
  s.noise.reserve(init.rows);
  s.accept.reserve(init.rows);
  for (std::size_t i = 0; i < init.rows; ++i) {
    s.noise.emplace_back(seed, derive_stream_id(stream_base, kNoisePurpose, i));
    s.accept.emplace_back(seed, derive_stream_id(stream_base, kAcceptPurpose, i));
    if (!all_finite(init.row(i))) s.frozen[i] = 1;
  }
  ensure_cache(s);
  return s;
}

void step_ula(ChainState& s, const ScoreModel& score, double tau, ExecPolicy policy) {
  if (!(tau > 0.0)) throw ParameterError("step_ula: tau must be positive");
  ensure_cache(s);
  const std::size_t d = s.dim();
  const double ns = std::sqrt(tau);
  for_particles(s.size(), policy, [&](std::size_t i) {
    if (s.frozen[i]) return;
    auto x = s.particles.row(i);
    auto g = s.cache.row(i);
    if (!s.cache_valid[i]) {
      score.score(x, g);
      s.cache_valid[i] = 1;
    }
    Vec xp(d);
    for (std::size_t j = 0; j < d; ++j) {
      xp[j] = x[j] + (tau * g[j] + ns * (std::numbers::sqrt2 * s.noise[i].normal()));
    }
    if (!finite_or_freeze(s, i, xp)) return;
    std::copy(xp.begin(), xp.end(), x.begin());
    score.score(x, g);
    ++s.accept_count[i];
  });
  ++s.step_index;
}

void step_fula(ChainState& s, const DriftField& field, const DriftConfig& cfg, ExecPolicy policy) {
  ensure_cache(s);
  const std::size_t d = s.dim();
  for_particles(s.size(), policy, [&](std::size_t i) {
    if (s.frozen[i]) return;
    auto x = s.particles.row(i);
    auto b = s.cache.row(i);
    if (!s.cache_valid[i]) {
      field.drift(x, b);
      s.cache_valid[i] = 1;
    }
    Vec xi(d);
    stable::draw_isotropic_unit(cfg.alpha, xi, s.noise[i]);
    Vec xp(d);
    for (std::size_t j = 0; j < d; ++j) xp[j] = x[j] + (cfg.tau * b[j] + cfg.noise_scale * xi[j]);
    if (!finite_or_freeze(s, i, xp)) return;
    Vec bp(d);
    field.drift(xp, bp);
    if (!finite_or_freeze(s, i, bp)) return;
    std::copy(xp.begin(), xp.end(), x.begin());
    std::copy(bp.begin(), bp.end(), b.begin());
    ++s.accept_count[i];
  });
  ++s.step_index;
}

std::size_t step_mafla(ChainState& s, const DriftField& field, const DriftConfig& cfg, const AcceptFn& accept,
                       ExecPolicy policy) {
  ensure_cache(s);
  const std::size_t d = s.dim();
  std::vector<std::uint8_t> took(s.size(), 0);
  for_particles(s.size(), policy, [&](std::size_t i) {
    if (s.frozen[i]) return;
    auto x = s.particles.row(i);
    auto b = s.cache.row(i);
    if (!s.cache_valid[i]) {
      field.drift(x, b);
      s.cache_valid[i] = 1;
    }
    Vec xi(d);
    stable::draw_isotropic_unit(cfg.alpha, xi, s.noise[i]);
    Vec xp(d);
    for (std::size_t j = 0; j < d; ++j) xp[j] = x[j] + (cfg.tau * b[j] + cfg.noise_scale * xi[j]);
    if (!finite_or_freeze(s, i, xp)) return;
    Vec bp(d);
    field.drift(xp, bp);
    if (!finite_or_freeze(s, i, bp)) return;
    const double u = s.accept[i].uniform();
    if (u < accept(xp, x)) {
      std::copy(xp.begin(), xp.end(), x.begin());
      std::copy(bp.begin(), bp.end(), b.begin());
      ++s.accept_count[i];
      took[i] = 1;
    }
  });
  ++s.step_index;
  std::size_t n = 0;
  for (auto t : took) n += t;
  return n;
}

void step_mala(ChainState& s, const Target& target, double tau, ExecPolicy policy) {
  if (!target.has_log_density()) throw CapabilityError("MALA: sampler unavailable for this target (no log-density)");
  if (!(tau > 0.0)) throw ParameterError("step_mala: tau must be positive");
  ensure_cache(s);
  const std::size_t d = s.dim();
  const double ns = std::sqrt(tau);
  for_particles(s.size(), policy, [&](std::size_t i) {
    if (s.frozen[i]) return;
    auto x = s.particles.row(i);
    auto g = s.cache.row(i);
    if (!s.cache_valid[i]) {
      target.score(x, g);
      s.logp[i] = target.log_density(x);
      s.cache_valid[i] = 1;
    }
    Vec xp(d);
    for (std::size_t j = 0; j < d; ++j) {
      xp[j] = x[j] + (tau * g[j] + ns * (std::numbers::sqrt2 * s.noise[i].normal()));
    }
    if (!finite_or_freeze(s, i, xp)) return;
    Vec gp(d);
    target.score(xp, gp);
    const double lpp = target.log_density(xp);
    double fwd = 0.0;
    double rev = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = xp[j] - x[j] - tau * g[j];
      const double b = x[j] - xp[j] - tau * gp[j];
      fwd += a * a;
      rev += b * b;
    }
    const double log_ratio = lpp - s.logp[i] + (fwd - rev) / (4.0 * tau);
    const double u = s.accept[i].uniform();
    if (std::log(u) < log_ratio) {
      std::copy(xp.begin(), xp.end(), x.begin());
      std::copy(gp.begin(), gp.end(), g.begin());
      s.logp[i] = lpp;
      ++s.accept_count[i];
    }
  });
  ++s.step_index;
}

void step_frw_mh(ChainState& s, const Target& target, double alpha, double step_scale, ExecPolicy policy) {
  if (!target.has_log_density()) {
    throw CapabilityError("FRW-MH: sampler unavailable for this target (no log-density)");
  }
  if (!(step_scale > 0.0)) throw ParameterError("step_frw_mh: step_scale must be positive");
  ensure_cache(s);
  const std::size_t d = s.dim();
  for_particles(s.size(), policy, [&](std::size_t i) {
    if (s.frozen[i]) return;
    auto x = s.particles.row(i);
    if (!s.cache_valid[i]) {
      s.logp[i] = target.log_density(x);
      s.cache_valid[i] = 1;
    }
    Vec xi(d);
    stable::draw_isotropic_unit(alpha, xi, s.noise[i]);
    Vec xp(d);
    for (std::size_t j = 0; j < d; ++j) xp[j] = x[j] + step_scale * xi[j];
    if (!finite_or_freeze(s, i, xp)) return;
    const double lpp = target.log_density(xp);
    const double u = s.accept[i].uniform();
    if (std::log(u) < lpp - s.logp[i]) {
      std::copy(xp.begin(), xp.end(), x.begin());
      s.logp[i] = lpp;
      ++s.accept_count[i];
    }
  });
  ++s.step_index;
}

Matrix RunResult::pooled() const {
  if (trajectory.empty()) return final_particles;
  const std::size_t n = trajectory.front().rows;
  const std::size_t d = trajectory.front().cols;
  Matrix out(n * trajectory.size(), d);
  std::size_t off = 0;
  for (const auto& m : trajectory) {
    std::copy(m.data.begin(), m.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += m.data.size();
  }
  return out;
}

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "ula") return SamplerKind::ula;
  if (s == "fula") return SamplerKind::fula;
  if (s == "mala") return SamplerKind::mala;
  if (s == "frw_mh") return SamplerKind::frw_mh;
  if (s == "mafla") return SamplerKind::mafla;
  throw ParameterError("unknown sampler '" + s + "'");
}

std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::ula:
      return "ula";
    case SamplerKind::fula:
      return "fula";
    case SamplerKind::mala:
      return "mala";
    case SamplerKind::frw_mh:
      return "frw_mh";
    case SamplerKind::mafla:
      return "mafla";
  }
  return "unknown";
}

RunResult run(const SamplerSpec& spec, ChainState& state, const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = state.size();
  RunResult res;
  std::vector<std::size_t> count0 = state.accept_count;
  const ScoreModel* score = spec.score != nullptr ? spec.score : spec.target;
  switch (spec.kind) {
    case SamplerKind::ula:
      if (score == nullptr) throw ParameterError("run: ULA needs a score");
      break;
    case SamplerKind::fula:
    case SamplerKind::mafla:
      if (spec.field == nullptr) throw ParameterError("run: FULA/MAFLA need a drift field");
      if (spec.kind == SamplerKind::mafla && !spec.accept) throw ParameterError("run: MAFLA needs an acceptance");
      break;
    case SamplerKind::mala:
    case SamplerKind::frw_mh:
      if (spec.target == nullptr) throw ParameterError("run: MALA/FRW-MH need a target");
      if (!spec.target->has_log_density()) {
        throw CapabilityError("run: sampler unavailable for this target (no log-density)");
      }
      break;
  }
  for (std::size_t t = 1; t <= cfg.n_steps; ++t) {
    const auto before = state.accept_count;
    switch (spec.kind) {
      case SamplerKind::ula:
        step_ula(state, *score, spec.drift.tau, cfg.policy);
        break;
      case SamplerKind::fula:
        step_fula(state, *spec.field, spec.drift, cfg.policy);
        break;
      case SamplerKind::mala:
        step_mala(state, *spec.target, spec.drift.tau, cfg.policy);
        break;
      case SamplerKind::frw_mh:
        step_frw_mh(state, *spec.target, spec.drift.alpha, spec.step_scale, cfg.policy);
        break;
      case SamplerKind::mafla:
        step_mafla(state, *spec.field, spec.drift, spec.accept, cfg.policy);
        break;
    }
    std::size_t acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += state.accept_count[i] - before[i];
    res.accept_trace.push_back(n > 0 ? static_cast<double>(acc) / static_cast<double>(n) : 0.0);
    if (cfg.thin > 0 && t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) {
      res.trajectory.push_back(state.particles);
      res.trajectory_steps.push_back(t);
    }
  }
  res.final_particles = state.particles;
  res.acceptance_rate.resize(n, 1.0);
  const bool adjusted = spec.kind == SamplerKind::mala || spec.kind == SamplerKind::frw_mh ||
                        spec.kind == SamplerKind::mafla;
  if (adjusted && cfg.n_steps > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      res.acceptance_rate[i] =
          static_cast<double>(state.accept_count[i] - count0[i]) / static_cast<double>(cfg.n_steps);
    }
  }
  res.diverged = state.diverged();
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

RunResult run_mafla_parallel(const Matrix& init, const DriftField& field, const DriftConfig& drift,
                             const AcceptFn& accept, const RunConfig& cfg, std::uint64_t seed,
                             std::uint64_t stream_base) {
  auto state = init_state(init, seed, stream_base);
  SamplerSpec spec;
  spec.kind = SamplerKind::mafla;
  spec.field = &field;
  spec.drift = drift;
  spec.accept = accept;
  return run(spec, state, cfg);
}

RunResult run_mafla_sequential(ConstSpan x0, const DriftField& field, const DriftConfig& drift,
                               const AcceptFn& accept, const RunConfig& cfg, std::uint64_t seed,
                               std::uint64_t stream_base) {
  Matrix init(1, x0.size());
  std::copy(x0.begin(), x0.end(), init.data.begin());
  RunConfig c = cfg;
  c.policy = ExecPolicy::serial;
  return run_mafla_parallel(init, field, drift, accept, c, seed, stream_base);
}

}  // namespace mafla::samplers
