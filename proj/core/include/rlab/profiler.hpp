// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Empirical depth/time complexity of concrete forward passes.
//
// Counting rule: every non-leaf node of the realized autodiff graph is one op
// (a 64x64 matmul counts the same as a scalar add) and adds one to the length
// of every path through it. Leaves are inputs and parameters.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rlab/depth_profile.hpp"
#include "rlab/models.hpp"
#include "rlab/tensor.hpp"

namespace rlab {

/// Profile of the subgraph that `output` depends on.
DepthProfile profile_graph(const Graph& g, Value output);

/// Scalar arithmetic estimate for one node (0 for leaves).
double node_flops(const Graph& g, const Node& node);

/// Profiles the full forward pass (embedding to logits) for one sequence.
/// n = 0 profiles the readout of the zero initial state.
DepthProfile profile(const ModelConfig& config, const ModelParams& params, std::span<const int> ids,
                     ForwardMode mode = ForwardMode::kDefault);

/// Deterministic non-reserved token ids for profiling at length n.
std::vector<int> profile_tokens(const ModelConfig& config, std::size_t n);

enum class ComplexityClass { kConstant, kLinear, kLinearOverK };
std::string_view complexity_name(ComplexityClass c) noexcept;  // constant | linear | linear_over_k

struct ComplexityFit {
  ComplexityClass class_label = ComplexityClass::kConstant;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  std::size_t k = 1;  // divisor of the linear_over_k refit

  /// "O(1)", "O(n)" or "O(n/k)".
  std::string big_o() const;
};

/// Least-squares fit of y against n. Needs >= 4 distinct n. A slope within
/// 1e-9 of zero is constant. With k > 1 the samples are refit against
/// ceil(n/k); that fit wins when its r^2 exceeds 0.999 and is at least the
/// r^2 against n.
ComplexityFit fit_complexity(std::span<const std::pair<std::size_t, double>> samples, std::size_t k = 1);

/// Second differences of y over consecutive samples (sorted by n).
std::vector<double> second_differences(std::span<const std::pair<std::size_t, double>> samples);

/// 2 or 3 when the divided differences of that order are positive and near
/// constant (largest at most 1.25 times the smallest), else 0. Order 2 needs
/// at least 4 distinct n; order 3 is accepted from a single value.
std::size_t polynomial_degree(std::span<const std::pair<std::size_t, double>> samples);

struct ProfileSample {
  DepthProfile profile;
  std::size_t final_state_bytes = 0;  // step archs only, after n tokens
};

struct ProfileRow {
  ModelConfig config;
  std::vector<ProfileSample> samples;
  ComplexityFit depth;
  ComplexityFit time;
  ComplexityFit flops;
  /// Super-linear growth (see polynomial_degree), 0 when none is found.
  /// Attention pays a constant number of ops per token but each op grows with
  /// the prefix, so FLOPs go quadratic while the op count stays linear.
  std::size_t time_degree = 0;
  std::size_t flops_degree = 0;
  bool has_state = false;
  ComplexityFit state;  // recurrent-state bytes against n
};

/// One row per config: profile at every n, then fit depth, ops, flops and
/// (for step archs) state size. Configs are profiled in parallel.
std::vector<ProfileRow> profile_table(std::span<const ModelConfig> configs, std::span<const std::size_t> n_grid);

/// CSV with header arch,n,total_ops,depth,flops,state_bytes.
std::string profile_csv(std::span<const ProfileRow> rows);
/// Markdown analogue of a depth/time complexity table.
std::string profile_markdown(std::span<const ProfileRow> rows);

}  // namespace rlab
