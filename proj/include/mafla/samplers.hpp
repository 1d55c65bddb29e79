#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mafla/common.hpp"
#include "mafla/proposal.hpp"
#include "mafla/rng.hpp"
#include "mafla/targets.hpp"

namespace mafla::samplers {

/// serial is the reference loop; parallel runs the same per-particle kernel
/// under OpenMP. Both produce bit-identical states.
enum class ExecPolicy { serial, parallel };

ExecPolicy policy_from_string(const std::string& s);

/// Particle ensemble with one noise stream and one acceptance stream per particle.
struct ChainState {
  Matrix particles;
  std::size_t step_index = 0;
  std::vector<std::size_t> accept_count;
  std::vector<std::uint8_t> frozen;  // diverged particles stop moving
  std::vector<RngStream> noise;
  std::vector<RngStream> accept;
  // Per-particle cache of the drift (or score) and log-density at the current
  // state; filled lazily.
  Matrix cache;
  std::vector<double> logp;
  std::vector<std::uint8_t> cache_valid;

  std::size_t size() const { return particles.rows; }
  std::size_t dim() const { return particles.cols; }
  std::size_t diverged() const;
  /// Marks cached drift/log-density stale (after switching samplers).
  void invalidate_cache();
};

ChainState init_state(const Matrix& init, std::uint64_t seed, std::uint64_t stream_base = 0);

/// Acceptance probability a(x', x) in [0, 1].
using AcceptFn = std::function<double(ConstSpan x_prime, ConstSpan x)>;

void step_ula(ChainState& s, const ScoreModel& score, double tau, ExecPolicy policy = ExecPolicy::serial);
void step_fula(ChainState& s, const DriftField& field, const DriftConfig& cfg, ExecPolicy policy = ExecPolicy::serial);
void step_mala(ChainState& s, const Target& target, double tau, ExecPolicy policy = ExecPolicy::serial);
void step_frw_mh(ChainState& s, const Target& target, double alpha, double step_scale,
                 ExecPolicy policy = ExecPolicy::serial);
/// One MAFLA step: batched drift, Levy proposal,
/// learned acceptance, per-particle uniform. Returns the number accepted.
std::size_t step_mafla(ChainState& s, const DriftField& field, const DriftConfig& cfg, const AcceptFn& accept,
                       ExecPolicy policy = ExecPolicy::serial);

struct RunConfig {
  std::size_t n_steps = 2000;
  std::size_t burn_in = 400;
  // Record a snapshot every `thin` steps after burn-in; 0 keeps only the final state.
  std::size_t thin = 0;
  ExecPolicy policy = ExecPolicy::serial;
};

struct RunResult {
  std::vector<Matrix> trajectory;
  std::vector<std::size_t> trajectory_steps;
  Matrix final_particles;
  std::vector<double> acceptance_rate;  // per particle
  std::vector<double> accept_trace;     // per step, fraction of particles accepted
  std::size_t diverged = 0;
  double wall_time = 0.0;

  /// All post-burn-in snapshots stacked row-wise, or the final state if none.
  Matrix pooled() const;
};

enum class SamplerKind { ula, fula, mala, frw_mh, mafla };

SamplerKind sampler_from_string(const std::string& s);
std::string to_string(SamplerKind k);

/// Bundles what each sampler kind needs; unused members may be null.
struct SamplerSpec {
  SamplerKind kind = SamplerKind::fula;
  const Target* target = nullptr;       // MALA, FRW-MH (log-density); ULA score
  const ScoreModel* score = nullptr;    // ULA when no target is given
  const DriftField* field = nullptr;    // FULA, MAFLA
  DriftConfig drift;                    // FULA, MAFLA; tau also used by ULA/MALA
  AcceptFn accept;                      // MAFLA
  double step_scale = 1.0;              // FRW-MH
};

RunResult run(const SamplerSpec& spec, ChainState& state, const RunConfig& cfg);

/// Parallel-particle MAFLA from an initial ensemble.
RunResult run_mafla_parallel(const Matrix& init, const DriftField& field, const DriftConfig& drift,
                             const AcceptFn& accept, const RunConfig& cfg, std::uint64_t seed,
                             std::uint64_t stream_base = 0);
/// Single-chain MAFLA; identical per-step semantics with N = 1.
RunResult run_mafla_sequential(ConstSpan x0, const DriftField& field, const DriftConfig& drift,
                               const AcceptFn& accept, const RunConfig& cfg, std::uint64_t seed,
                               std::uint64_t stream_base = 0);

}  // namespace mafla::samplers
