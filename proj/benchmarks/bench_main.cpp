// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "rlab/models.hpp"
#include "rlab/profiler.hpp"
#include "rlab/rng.hpp"
#include "rlab/tasks.hpp"
#include "rlab/tensor.hpp"

namespace {

using namespace rlab;

Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform() - 0.5;
  return Tensor::matrix(rows, cols, std::move(v));
}

void BM_MatmulBackward(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_matrix(d, d, 1), b = random_matrix(d, d, 2);
  for (auto _ : state) {
    Graph g;
    const Value y = sum(matmul(g.parameter(a), g.parameter(b)));
    g.backward(y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(2)->Range(8, 64)->Complexity(benchmark::oNCubed);

ModelConfig small_config(Arch arch) {
  ModelConfig c;
  c.arch = arch;
  c.vocab_size = 8;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_layers = 1;
  return c;
}

// Forward pass for one sequence of length range(1), per architecture.
void BM_Forward(benchmark::State& state) {
  const ModelConfig config = small_config(kAllArchs[static_cast<std::size_t>(state.range(0))]);
  const ModelParams params = init_params(config);
  const auto ids = profile_tokens(config, static_cast<std::size_t>(state.range(1)));
  state.SetLabel(std::string(arch_name(config.arch)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_logits(config, params, ids));
}
BENCHMARK(BM_Forward)->ArgsProduct({benchmark::CreateDenseRange(0, kAllArchs.size() - 1, 1), {16, 64}});

void BM_Generate(benchmark::State& state) {
  const TaskId task = kAllTasks[static_cast<std::size_t>(state.range(0))];
  state.SetLabel(std::string(task_name(task)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate(task, seed++));
}
BENCHMARK(BM_Generate)->DenseRange(0, kAllTasks.size() - 1, 1);

void BM_Profile(benchmark::State& state) {
  const ModelConfig config = small_config(Arch::kTransformer);
  const ModelParams params = init_params(config);
  const auto ids = profile_tokens(config, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(profile(config, params, ids));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Profile)->RangeMultiplier(2)->Range(8, 64)->Complexity();

}  // namespace

BENCHMARK_MAIN();
