// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

namespace rlab {

/// Empirical complexity of one concrete computation.
///   total_ops: number of non-leaf graph nodes (one node = one op, any size)
///   depth:     longest chain of dependent ops ending at the output
///   flops:     scalar arithmetic estimate (secondary metric)
struct DepthProfile {
  std::size_t total_ops = 0;
  std::size_t depth = 0;
  std::size_t n = 0;
  std::string arch;
  double flops = 0.0;

  bool operator==(const DepthProfile&) const = default;
};

}  // namespace rlab
