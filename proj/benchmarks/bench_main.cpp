// Microbenchmarks for the hot paths: lattice stepping in both arithmetics,
// end-to-end bit extraction, and the statistical battery.

#include <benchmark/benchmark.h>

#include <cml/extractor.hpp>
#include <cml/lattice.hpp>
#include <cml/stats.hpp>

namespace {

cml::lattice_config make_config(std::size_t n, cml::map_kind kind, cml::arithmetic_kind arith) {
  cml::lattice_config c;
  c.rows = c.cols = n;
  c.epsilon = 0.1;
  c.map.kind = kind;
  c.map.mu = kind == cml::map_kind::tent ? 2.0 : 4.0;
  c.map.segments = 64;
  c.arithmetic = arith;
  c.z = 64;
  return c;
}

void step_benchmark(benchmark::State& state, cml::map_kind kind, cml::arithmetic_kind arith) {
  const auto n = static_cast<std::size_t>(state.range(0));
  cml::lattice lat(make_config(n, kind, arith), 1);
  for (auto _ : state) {
    lat.step();
    benchmark::DoNotOptimize(lat.value_at(1, 1));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

void BM_step_float_logistic(benchmark::State& state) {
  step_benchmark(state, cml::map_kind::logistic, cml::arithmetic_kind::float64);
}
void BM_step_fixed_logistic(benchmark::State& state) {
  step_benchmark(state, cml::map_kind::logistic, cml::arithmetic_kind::fixed);
}
void BM_step_fixed_tent(benchmark::State& state) {
  step_benchmark(state, cml::map_kind::tent, cml::arithmetic_kind::fixed);
}
void BM_step_fixed_plm(benchmark::State& state) {
  step_benchmark(state, cml::map_kind::plm, cml::arithmetic_kind::fixed);
}

BENCHMARK(BM_step_float_logistic)->Arg(8)->Arg(32);
BENCHMARK(BM_step_fixed_logistic)->Arg(8)->Arg(32);
BENCHMARK(BM_step_fixed_tent)->Arg(8);
BENCHMARK(BM_step_fixed_plm)->Arg(8);

void BM_extract(benchmark::State& state) {
  cml::pair_config pc;
  pc.a = pc.b = make_config(8, cml::map_kind::logistic, cml::arithmetic_kind::fixed);
  pc.opts.z = static_cast<int>(state.range(0));
  cml::instance_pair pair(pc);
  (void)pair.extract(64);  // gate outside the timed region
  const std::uint64_t bits = 65536 * 8;
  for (auto _ : state) {
    cml::bit_stream bs = pair.extract(bits);
    benchmark::DoNotOptimize(bs.bytes().data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bits / 8));
}
BENCHMARK(BM_extract)->Arg(64)->Arg(16);

void BM_battery(benchmark::State& state) {
  cml::pair_config pc;
  pc.a = pc.b = make_config(8, cml::map_kind::logistic, cml::arithmetic_kind::fixed);
  pc.opts.z = 64;
  cml::instance_pair pair(pc);
  const cml::bit_stream bs = pair.extract(100000);
  for (auto _ : state) {
    auto reports = cml::battery(bs, 0.01);
    benchmark::DoNotOptimize(reports.data());
  }
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_battery);

}  // namespace

BENCHMARK_MAIN();
