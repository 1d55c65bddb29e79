// Serial reference loop vs OpenMP kernel for one sampler step.
//
//   bench_kernels [--benchmark_filter=...]
//
// Args: particles, dimension. Set OMP_NUM_THREADS to vary the parallel side.

#include <benchmark/benchmark.h>

#include "mafla/riesz.hpp"
#include "mafla/samplers.hpp"
#include "mafla/sbm.hpp"
#include "mafla/targets.hpp"

using namespace mafla;
using samplers::ExecPolicy;

namespace {

std::unique_ptr<targets::MixtureTarget> bench_target(std::size_t d) {
  targets::TargetSpec s;
  s.kind = d <= 4 ? targets::Kind::stable_location_mixture : targets::Kind::product_stable;
  s.alpha_tgt = 1.7;
  s.dim = d;
  s.components = {{0.4, Vec(d, -1.0), 1.0}, {0.6, Vec(d, 1.5), 1.0}};
  return targets::make_target(s);
}

samplers::ChainState bench_state(std::size_t n, std::size_t d) {
  RngStream rng(1, 0);
  Matrix init(n, d);
  for (double& v : init.data) v = rng.normal();
  return samplers::init_state(init, 2);
}

template <ExecPolicy P>
void BM_ula(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), d = static_cast<std::size_t>(st.range(1));
  auto t = bench_target(d);
  auto s = bench_state(n, d);
  for (auto _ : st) samplers::step_ula(s, *t, 0.01, P);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <ExecPolicy P>
void BM_fula(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), d = static_cast<std::size_t>(st.range(1));
  auto t = bench_target(d);
  const auto cfg = DriftConfig::make(1.7, 0.01);
  ScaledScoreDrift f(*t, cfg.c_alpha);
  auto s = bench_state(n, d);
  for (auto _ : st) samplers::step_fula(s, f, cfg, P);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <ExecPolicy P>
void BM_fula_riesz(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), d = static_cast<std::size_t>(st.range(1));
  auto t = bench_target(d);
  const auto cfg = DriftConfig::make(1.7, 0.01);
  riesz::RieszConfig rc;
  rc.order = cfg.alpha - 2.0;
  rc.K = 3;
  rc.h = 0.01;
  riesz::RieszDrift f(*t, rc, cfg.alpha);
  auto s = bench_state(n, d);
  for (auto _ : st) samplers::step_fula(s, f, cfg, P);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <ExecPolicy P>
void BM_mafla(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), d = static_cast<std::size_t>(st.range(1));
  auto t = bench_target(d);
  const auto cfg = DriftConfig::make(1.7, 0.01);
  ScaledScoreDrift f(*t, cfg.c_alpha);
  sbm::AcceptanceNet net(d, {64, 64}, diffnet::Activation::softplus, sbm::AcceptanceForm::antisymmetric);
  RngStream rng(3, 0);
  net.net().init(rng);
  const samplers::AcceptFn acc = [&net](ConstSpan xp, ConstSpan x) { return net.accept(xp, x); };
  auto s = bench_state(n, d);
  for (auto _ : st) samplers::step_mafla(s, f, cfg, acc, P);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {256, 2048})
    for (long d : {2, 16}) b->Args({n, d});
  b->Unit(benchmark::kMicrosecond);
}

// Each drift evaluation integrates the score along a path, so keep d small.
void riesz_sizes(benchmark::internal::Benchmark* b) {
  for (long n : {256, 2048}) b->Args({n, 2});
  b->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(BM_ula<ExecPolicy::serial>)->Apply(sizes);
BENCHMARK(BM_ula<ExecPolicy::parallel>)->Apply(sizes);
BENCHMARK(BM_fula<ExecPolicy::serial>)->Apply(sizes);
BENCHMARK(BM_fula<ExecPolicy::parallel>)->Apply(sizes);
BENCHMARK(BM_fula_riesz<ExecPolicy::serial>)->Apply(riesz_sizes);
BENCHMARK(BM_fula_riesz<ExecPolicy::parallel>)->Apply(riesz_sizes);
BENCHMARK(BM_mafla<ExecPolicy::serial>)->Apply(sizes);
BENCHMARK(BM_mafla<ExecPolicy::parallel>)->Apply(sizes);

BENCHMARK_MAIN();
