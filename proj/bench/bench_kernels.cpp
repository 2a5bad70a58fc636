// Serial vs OpenMP timings for the three hot kernels. The serial paths are
// the reference implementations the tests compare against bit for bit.

#include <benchmark/benchmark.h>

#include "mrt/mollifier.hpp"
#include "mrt/momentsys.hpp"
#include "mrt/reconstruct.hpp"

using namespace mrt;
using num::Real;

namespace {

Execution mode_of(const benchmark::State& st) {
  return st.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void set_label(benchmark::State& st) { st.SetLabel(st.range(0) == 0 ? "serial" : "parallel"); }

void BM_Sinogram(benchmark::State& st) {
  auto d = density::make_density("poly-demo");
  auto angles = radon::default_angles(32);
  for (auto _ : st) {
    auto s = radon::make_sinogram(d, angles, 401, Real(0.2), mode_of(st));
    benchmark::DoNotOptimize(s.values.data());
  }
  set_label(st);
}

void BM_Mollify(benchmark::State& st) {
  auto s = radon::make_sinogram(density::make_density("xy"), radon::default_angles(32), 1001, Real(0.2));
  mollifier::MollifierSpec m(mollifier::Family::bump, Real(0.05), 8);
  for (auto _ : st) {
    auto out = mollifier::mollify_sinogram(s, m, mode_of(st));
    benchmark::DoNotOptimize(out.values.data());
  }
  set_label(st);
}

void BM_Moments(benchmark::State& st) {
  auto s = radon::make_sinogram(density::make_density("xy"), radon::default_angles(32), 1001, Real(0.2));
  for (auto _ : st) {
    auto ms = momentsys::sinogram_moments(s, 20, mode_of(st));
    benchmark::DoNotOptimize(ms.values.data());
  }
  set_label(st);
}

void BM_Reconstruct(benchmark::State& st) {
  auto t = density::moment_triangle(density::make_density("xy"), 40);
  for (auto _ : st) {
    auto g = reconstruct::reconstruct_grid(t, 20, 20, 51, 51, mode_of(st));
    benchmark::DoNotOptimize(g.values.data());
  }
  set_label(st);
}

}  // namespace

BENCHMARK(BM_Sinogram)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Mollify)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Moments)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Reconstruct)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
