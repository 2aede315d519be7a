// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "rlab/errors.hpp"
#include "rlab/profiler.hpp"

namespace rlab {
namespace {

ModelConfig cfg(Arch arch) {
  ModelConfig c;
  c.arch = arch;
  c.vocab_size = 8;
  c.d_model = 4;
  c.n_layers = 1;
  c.n_heads = 1;
  c.block_size = 4;
  c.memory_width = 2;
  return c;
}

DepthProfile at(const ModelConfig& c, std::size_t n) {
  return profile(c, init_params(c), profile_tokens(c, n));
}

std::vector<std::pair<std::size_t, double>> depth_series(const ModelConfig& c, std::vector<std::size_t> ns) {
  std::vector<std::pair<std::size_t, double>> out;
  const ModelParams p = init_params(c);
  for (auto n : ns) out.emplace_back(n, static_cast<double>(profile(c, p, profile_tokens(c, n)).depth));
  return out;
}

TEST(ProfileGraph, ChainAndDiamond) {
  Graph g;
  const Value x = g.input(Tensor::vector({1, 2}));
  const Value w = g.parameter(Tensor::vector({3, 4}));
  const Value a = mul(x, w);     // depth 1
  const Value b = exp(a);        // depth 2
  const Value c = tanh(a);       // depth 2
  const Value d = add(b, c);     // depth 3
  const Value s = sum(d);        // depth 4
  const DepthProfile p = profile_graph(g, s);
  EXPECT_EQ(p.total_ops, 5u);
  EXPECT_EQ(p.depth, 4u);
  const DepthProfile only_b = profile_graph(g, b);
  EXPECT_EQ(only_b.total_ops, 2u);
  EXPECT_EQ(only_b.depth, 2u);
  EXPECT_EQ(profile_graph(g, x).depth, 0u);
}

TEST(ProfileGraph, FlopsOfMatmul) {
  Graph g;
  const Value a = g.input(Tensor::zeros({3, 5}));
  const Value b = g.input(Tensor::zeros({5, 2}));
  EXPECT_EQ(profile_graph(g, matmul(a, b)).flops, 2.0 * 3 * 5 * 2);
}

TEST(Profile, DepthNeverExceedsOps) {
  for (Arch a : kAllArchs) {
    for (std::size_t n : {1u, 5u, 9u}) {
      const DepthProfile p = at(cfg(a), n);
      EXPECT_GE(p.depth, 1u);
      EXPECT_LE(p.depth, p.total_ops) << arch_name(a);
      EXPECT_EQ(p.n, n);
      EXPECT_EQ(p.arch, arch_name(a));
    }
  }
}

TEST(Profile, EmptyInputIsReadoutOnly) {
  const DepthProfile p = at(cfg(Arch::kRnn), 0);
  EXPECT_EQ(p.depth, 2u);
  EXPECT_EQ(p.total_ops, 2u);
}

TEST(Profile, MlpDepthIndependentOfLength) {
  const auto s = depth_series(cfg(Arch::kMlp), {4, 8, 16, 32, 64});
  for (const auto& [n, d] : s) EXPECT_EQ(d, s.front().second) << n;
}

TEST(Profile, RnnDepthIsAffineInLength) {
  const auto s = depth_series(cfg(Arch::kRnn), {2, 4, 8});
  const double a = (s[1].second - s[0].second) / 2.0;
  EXPECT_GT(a, 0.0);
  EXPECT_DOUBLE_EQ(s[2].second, s[1].second + 4 * a);
  // Frozen: the carried state passes matmul, add, add, tanh once per step.
  EXPECT_EQ(a, 4.0);
}

TEST(Profile, TransformerDepthExactlyConstant) {
  const auto s = depth_series(cfg(Arch::kTransformer), {4, 8, 16, 32});
  const ComplexityFit f = fit_complexity(s);
  EXPECT_EQ(f.class_label, ComplexityClass::kConstant);
  EXPECT_EQ(f.slope, 0.0);
  for (const auto& [n, d] : s) EXPECT_EQ(d, s[0].second);
}

TEST(Profile, RecurrentDepthStepsByAConstant) {
  for (Arch a : {Arch::kRnn, Arch::kLstm, Arch::kRecurrentTransformer, Arch::kFeedbackTransformer}) {
    const ModelConfig c = cfg(a);
    const ModelParams p = init_params(c);
    std::size_t prev = profile(c, p, profile_tokens(c, 1)).depth;
    std::optional<long> step;
    for (std::size_t n = 2; n <= 10; ++n) {
      const std::size_t d = profile(c, p, profile_tokens(c, n)).depth;
      const long diff = static_cast<long>(d) - static_cast<long>(prev);
      EXPECT_GT(diff, 0) << arch_name(a) << " n=" << n;
      if (n > 2) EXPECT_EQ(diff, *step) << arch_name(a) << " n=" << n;
      step = diff;
      prev = d;
    }
  }
}

TEST(Profile, BlockDepthChangesOnlyAtBlockBoundaries) {
  const ModelConfig c = cfg(Arch::kBlockRecurrentTransformer);
  const ModelParams p = init_params(c);
  std::size_t prev = profile(c, p, profile_tokens(c, 1)).depth;
  for (std::size_t n = 2; n <= 17; ++n) {
    const std::size_t d = profile(c, p, profile_tokens(c, n)).depth;
    const bool new_block = (n + 3) / 4 != (n + 2) / 4;
    if (new_block) EXPECT_GT(d, prev) << n;
    else EXPECT_EQ(d, prev) << n;
    prev = d;
  }
}

TEST(Profile, TransformerCostIsQuadraticInFlops) {
  const ModelConfig c = cfg(Arch::kTransformer);
  const ModelParams p = init_params(c);
  std::vector<std::pair<std::size_t, double>> ops, flops;
  for (std::size_t n = 2; n <= 12; ++n) {
    const DepthProfile d = profile(c, p, profile_tokens(c, n));
    ops.emplace_back(n, static_cast<double>(d.total_ops));
    flops.emplace_back(n, d.flops);
  }
  for (std::size_t i = 1; i < ops.size(); ++i) EXPECT_GT(ops[i].second, ops[i - 1].second);
  for (double s : second_differences(flops)) EXPECT_GT(s, 0.0);
}

// ---- fits --------------------------------------------------------------------------

TEST(Fit, NeedsFourDistinctLengths) {
  const std::vector<std::pair<std::size_t, double>> s = {{1, 1}, {2, 2}, {2, 2}, {3, 3}};
  EXPECT_THROW(fit_complexity(s), ValidationError);
}

TEST(Fit, ExactLineAndConstant) {
  const std::vector<std::pair<std::size_t, double>> line = {{4, 9}, {8, 17}, {16, 33}, {32, 65}};
  const ComplexityFit f = fit_complexity(line);
  EXPECT_EQ(f.class_label, ComplexityClass::kLinear);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  const std::vector<std::pair<std::size_t, double>> flat = {{4, 7}, {8, 7}, {16, 7}, {32, 7}};
  EXPECT_EQ(fit_complexity(flat).class_label, ComplexityClass::kConstant);
  EXPECT_EQ(fit_complexity(flat).big_o(), "O(1)");
}

TEST(Fit, PolynomialDegree) {
  std::vector<std::pair<std::size_t, double>> quad, cubic, line, flat;
  for (std::size_t n : {4, 8, 16, 32, 33}) {
    const double x = static_cast<double>(n);
    quad.emplace_back(n, 5 + 100 * x + 0.5 * x * x);
    cubic.emplace_back(n, 1 + x + 2 * x * x + 0.25 * x * x * x);
    line.emplace_back(n, 3 + 2 * x);
    flat.emplace_back(n, 7);
  }
  EXPECT_EQ(polynomial_degree(quad), 2u);
  EXPECT_EQ(polynomial_degree(cubic), 3u);
  EXPECT_EQ(polynomial_degree(line), 0u);
  EXPECT_EQ(polynomial_degree(flat), 0u);
  const std::vector<std::pair<std::size_t, double>> two = {{1, 1}, {2, 4}};
  EXPECT_EQ(polynomial_degree(two), 0u);
  std::vector<std::pair<std::size_t, double>> quartic;
  for (std::size_t n : {4, 8, 16, 32, 64}) quartic.emplace_back(n, std::pow(double(n), 4));
  EXPECT_EQ(polynomial_degree(quartic), 0u);
}

TEST(Fit, StaircaseIsLinearOverK) {
  std::vector<std::pair<std::size_t, double>> s;
  for (std::size_t n = 1; n <= 16; ++n) s.emplace_back(n, 10.0 * static_cast<double>((n + 3) / 4) + 5);
  const ComplexityFit plain = fit_complexity(s);
  EXPECT_EQ(plain.class_label, ComplexityClass::kLinear);
  EXPECT_LT(plain.r_squared, 0.999);
  const ComplexityFit f = fit_complexity(s, 4);
  EXPECT_EQ(f.class_label, ComplexityClass::kLinearOverK);
  EXPECT_NEAR(f.slope, 10.0, 1e-9);
  EXPECT_EQ(f.big_o(), "O(n/4)");
}

TEST(Fit, ModelRowsOfTheComplexityTable) {
  const std::vector<std::size_t> grid = {4, 8, 16, 32};
  const auto rnn = fit_complexity(depth_series(cfg(Arch::kRnn), grid));
  EXPECT_EQ(rnn.class_label, ComplexityClass::kLinear);
  EXPECT_GT(rnn.r_squared, 0.999);

  const ModelConfig block = cfg(Arch::kBlockRecurrentTransformer);
  // The first block has no carry, so the staircase is exact from block two on.
  const auto b = fit_complexity(depth_series(block, {5, 9, 13, 17, 21}), 4);
  EXPECT_EQ(b.class_label, ComplexityClass::kLinearOverK);
  const auto edges = depth_series(block, {8, 9});
  EXPECT_NEAR(b.slope, edges[1].second - edges[0].second, 1e-9);

  ModelConfig u = cfg(Arch::kUniversalTransformer);
  u.halting_alpha = 1.0;
  const auto uf = fit_complexity(depth_series(u, grid));
  EXPECT_EQ(uf.class_label, ComplexityClass::kLinear);
  EXPECT_GT(uf.r_squared, 0.999);
}

// ---- table -------------------------------------------------------------------------

TEST(Table, RowsCsvAndMarkdown) {
  const std::vector<ModelConfig> configs = {cfg(Arch::kTransformer), cfg(Arch::kRnn), cfg(Arch::kRwkv)};
  const std::vector<std::size_t> grid = {4, 8, 12, 16};
  const auto rows = profile_table(configs, grid);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].depth.class_label, ComplexityClass::kConstant);
  EXPECT_EQ(rows[0].time.class_label, ComplexityClass::kLinear);
  EXPECT_EQ(rows[0].state.class_label, ComplexityClass::kLinear);  // KV cache grows
  EXPECT_EQ(rows[1].depth.class_label, ComplexityClass::kLinear);
  EXPECT_EQ(rows[2].state.class_label, ComplexityClass::kConstant);  // fixed accumulators
  EXPECT_EQ(rows[0].time_degree, 0u);
  EXPECT_EQ(rows[0].flops_degree, 2u);  // linear ops, each growing with the prefix
  EXPECT_EQ(rows[1].flops_degree, 0u);
  const std::string csv = profile_csv(rows);
  EXPECT_EQ(csv.rfind("arch,n,total_ops,depth,flops,state_bytes\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
  const std::string md = profile_markdown(rows);
  EXPECT_NE(md.find("| transformer | O(1) |"), std::string::npos) << md;
  EXPECT_NE(md.find("| rnn | O(n) |"), std::string::npos) << md;
  EXPECT_NE(md.find("| 1.0000 | O(n) | 7 | 1.0000 | O(n²) |"), std::string::npos) << md;
  EXPECT_EQ(profile_csv(profile_table(configs, grid)), csv);
}

TEST(Table, RejectsShortGrid) {
  const std::vector<ModelConfig> configs = {cfg(Arch::kRnn)};
  const std::vector<std::size_t> grid = {8};
  EXPECT_THROW(profile_table(configs, grid), ValidationError);
}

}  // namespace
}  // namespace rlab
