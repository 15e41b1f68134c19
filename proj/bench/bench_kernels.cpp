// Copyright 2026 The branchlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial versus OpenMP timings for the three parallel kernels: truncated
// series products, kernel-row propagation and replica ensembles.

#include <benchmark/benchmark.h>

#include <vector>

#include "branchlab/kernels.hpp"
#include "branchlab/monte_carlo.hpp"
#include "branchlab/series.hpp"

namespace {

using branchlab::Backend;

const branchlab::OffspringLaw& CriticalLaw() {
  static const branchlab::OffspringLaw law({0.25, 0.5, 0.25});
  return law;
}

void BM_TruncatedProduct(benchmark::State& state, Backend backend) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto f = branchlab::iterate_gf(CriticalLaw(), 8, n - 1, Backend::kSerial);
  std::vector<double> out(n);
  for (auto _ : state) {
    branchlab::TruncatedProduct(f.coeffs(), f.coeffs(), out, backend);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(state.range(0));
}

void BM_IterateGf(benchmark::State& state, Backend backend) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto f = branchlab::iterate_gf(CriticalLaw(), 20, n, backend);
    benchmark::DoNotOptimize(f.coeffs().data());
  }
}

void BM_RowPropagation(benchmark::State& state, Backend backend) {
  const auto cols = static_cast<std::size_t>(state.range(0));
  std::vector<double> m(cols * cols, 1.0 / static_cast<double>(cols));
  std::vector<double> v(cols, 1.0 / static_cast<double>(cols)), out(cols);
  for (auto _ : state) {
    branchlab::RowVectorTimesMatrix(v, m, cols, out, backend);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_QEnsemble(benchmark::State& state, Backend backend) {
  branchlab::SimulationConfig config(CriticalLaw());
  config.kind = branchlab::ProcessKind::kQProcess;
  config.horizon = 100;
  config.replicas = static_cast<std::uint64_t>(state.range(0));
  config.seed = 42;
  config.checkpoints = {100};
  for (auto _ : state) {
    auto stats = branchlab::RunEnsemble(config, backend);
    benchmark::DoNotOptimize(stats.size());
  }
}

BENCHMARK_CAPTURE(BM_TruncatedProduct, serial, Backend::kSerial)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK_CAPTURE(BM_TruncatedProduct, openmp, Backend::kOpenMP)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK_CAPTURE(BM_IterateGf, serial, Backend::kSerial)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(BM_IterateGf, openmp, Backend::kOpenMP)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(BM_RowPropagation, serial, Backend::kSerial)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(BM_RowPropagation, openmp, Backend::kOpenMP)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(BM_QEnsemble, serial, Backend::kSerial)->Arg(1000);
BENCHMARK_CAPTURE(BM_QEnsemble, openmp, Backend::kOpenMP)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
