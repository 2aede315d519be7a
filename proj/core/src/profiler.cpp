// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rlab/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "rlab/errors.hpp"
#include "rlab/tasks.hpp"

namespace rlab {

namespace {

bool is_leaf(const Node& n) { return n.kind == OpKind::kInput || n.kind == OpKind::kParameter; }

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx == 0.0 ? 0.0 : sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy == 0.0) {
    f.r_squared = 1.0;
  } else {
    double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (f.slope * x[i] + f.intercept);
      ss_res += e * e;
    }
    f.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return f;
}

std::size_t block_divisor(const ModelConfig& c) {
  return c.arch == Arch::kBlockRecurrentTransformer ? c.block_size : 1;
}

std::vector<std::pair<std::size_t, double>> series(const std::vector<ProfileSample>& s, double (*get)(const ProfileSample&)) {
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& x : s) out.emplace_back(x.profile.n, get(x));
  return out;
}

std::string growth(const ComplexityFit& fit, std::size_t degree) {
  if (degree == 2) return "O(n²)";
  if (degree == 3) return "O(n³)";
  return fit.big_o();
}

std::string fmt_num(double v) {
  if (std::abs(v) < 1e-9) return "0";
  return fmt::format("{:.4g}", v);
}

}  // namespace

double node_flops(const Graph& g, const Node& node) {
  const double size = static_cast<double>(node.data.size());
  auto parent_shape = [&](std::size_t i) -> const Shape& { return g.node(node.parents[i]).data.shape; };
  switch (node.kind) {
    case OpKind::kInput:
    case OpKind::kParameter:
    case OpKind::kConcat:
    case OpKind::kSlice:
    case OpKind::kTranspose:
    case OpKind::kReshape:
    case OpKind::kExpand:
    case OpKind::kGatherRows:
      return 0.0;
    case OpKind::kMatmul: {
      const Shape& a = parent_shape(0);
      const double inner = static_cast<double>(a.back());
      return 2.0 * inner * std::max(1.0, size);
    }
    case OpKind::kSum:
      return static_cast<double>(g.node(node.parents[0]).data.size());
    case OpKind::kSoftmax:
      return 4.0 * size;
    case OpKind::kLayerNorm:
      return 8.0 * size;
    case OpKind::kCrossEntropy:
      return 4.0 * static_cast<double>(g.node(node.parents[0]).data.size());
    default:
      return size;
  }
}

DepthProfile profile_graph(const Graph& g, Value output) {
  if (&output.graph() != &g) throw ValidationError("profile: output belongs to a different graph");
  const NodeId root = output.id();
  std::vector<char> reachable(root + 1, 0);
  reachable[root] = 1;
  for (NodeId id = root + 1; id-- > 0;) {
    if (!reachable[id]) continue;
    for (NodeId p : g.node(id).parents) reachable[p] = 1;
  }
  std::vector<std::size_t> depth(root + 1, 0);
  DepthProfile out;
  for (NodeId id = 0; id <= root; ++id) {
    if (!reachable[id]) continue;
    const Node& n = g.node(id);
    if (is_leaf(n)) continue;
    std::size_t d = 0;
    for (NodeId p : n.parents) d = std::max(d, depth[p]);
    depth[id] = d + 1;
    ++out.total_ops;
    out.flops += node_flops(g, n);
  }
  out.depth = depth[root];
  return out;
}

std::vector<int> profile_tokens(const ModelConfig& config, std::size_t n) {
  const int first = Vocab::kPlaceholder + 1;
  const int span = std::max(1, static_cast<int>(config.vocab_size) - first);
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = first + static_cast<int>((i * 7 + 3) % static_cast<std::size_t>(span));
  return ids;
}

DepthProfile profile(const ModelConfig& config, const ModelParams& params, std::span<const int> ids,
                     ForwardMode mode) {
  Graph g;
  const BoundParams p = bind(g, params);
  DepthProfile out;
  if (ids.empty()) {
    const Value h = g.input(Tensor::zeros({1, config.d_model}));
    const Value logits = add(matmul(h, p.at("readout.w")), p.at("readout.b"));
    out = profile_graph(g, logits);
  } else {
    out = profile_graph(g, model_forward(g, config, p, Batch::single(ids), mode).logits);
  }
  out.n = ids.size();
  out.arch = std::string(arch_name(config.arch));
  return out;
}

std::string_view complexity_name(ComplexityClass c) noexcept {
  switch (c) {
    case ComplexityClass::kConstant: return "constant";
    case ComplexityClass::kLinear: return "linear";
    case ComplexityClass::kLinearOverK: return "linear_over_k";
  }
  return "?";
}

std::string ComplexityFit::big_o() const {
  switch (class_label) {
    case ComplexityClass::kConstant: return "O(1)";
    case ComplexityClass::kLinear: return "O(n)";
    case ComplexityClass::kLinearOverK: return fmt::format("O(n/{})", k);
  }
  return "?";
}

ComplexityFit fit_complexity(std::span<const std::pair<std::size_t, double>> samples, std::size_t k) {
  std::set<std::size_t> distinct;
  for (const auto& s : samples) distinct.insert(s.first);
  if (distinct.size() < 4) {
    throw ValidationError(fmt::format("fit_complexity: need at least 4 distinct n, got {}", distinct.size()));
  }
  if (k == 0) throw ValidationError("fit_complexity: k must be positive");
  std::vector<double> x, xk, y;
  for (const auto& [n, v] : samples) {
    x.push_back(static_cast<double>(n));
    xk.push_back(static_cast<double>((n + k - 1) / k));
    y.push_back(v);
  }
  const LineFit lin = least_squares(x, y);
  ComplexityFit out;
  out.slope = lin.slope;
  out.intercept = lin.intercept;
  out.r_squared = lin.r_squared;
  if (std::abs(lin.slope) <= 1e-9) {
    out.class_label = ComplexityClass::kConstant;
    out.slope = 0.0;
    return out;
  }
  out.class_label = ComplexityClass::kLinear;
  if (k > 1) {
    const LineFit over = least_squares(xk, y);
    if (over.r_squared > 0.999 && over.r_squared >= lin.r_squared) {
      out.class_label = ComplexityClass::kLinearOverK;
      out.slope = over.slope;
      out.intercept = over.intercept;
      out.r_squared = over.r_squared;
      out.k = k;
    }
  }
  return out;
}

std::vector<double> second_differences(std::span<const std::pair<std::size_t, double>> samples) {
  std::vector<std::pair<std::size_t, double>> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  std::vector<double> out;
  for (std::size_t i = 2; i < s.size(); ++i) out.push_back(s[i].second - 2 * s[i - 1].second + s[i - 2].second);
  return out;
}

std::size_t polynomial_degree(std::span<const std::pair<std::size_t, double>> samples) {
  const std::map<std::size_t, double> s(samples.begin(), samples.end());
  std::vector<double> x, y;
  for (const auto& [n, v] : s) {
    x.push_back(static_cast<double>(n));
    y.push_back(v);
  }
  // Divided-difference table: order r of a + ... + c n^r is the constant c.
  std::vector<double> d = y;
  for (std::size_t r = 1; r <= 3 && d.size() > 1; ++r) {
    for (std::size_t i = 0; i + 1 < d.size(); ++i) d[i] = (d[i + 1] - d[i]) / (x[i + r] - x[i]);
    d.pop_back();
    if (r < 2) continue;
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    const bool enough = d.size() >= 2 || r == 3;
    if (enough && *lo > 0 && *hi <= 1.25 * *lo) return r;
  }
  return 0;
}

namespace {

ProfileRow profile_row(const ModelConfig& config, std::span<const std::size_t> n_grid) {
  ProfileRow row;
  row.config = config;
  row.has_state = has_step(config.arch);
  const ModelParams params = init_params(config);
  for (std::size_t n : n_grid) {
    ProfileSample s;
    const std::vector<int> ids = profile_tokens(config, n);
    s.profile = profile(config, params, ids);
    if (row.has_state) {
      Graph g;
      const BoundParams p = bind(g, params);
      GraphState st = initial_state(g, config, 1, n);
      for (int id : ids) model_step(g, config, p, st, std::span<const int>(&id, 1));
      s.final_state_bytes = state_bytes(snapshot(st));
    }
    row.samples.push_back(std::move(s));
  }
  const std::size_t k = block_divisor(config);
  row.depth = fit_complexity(series(row.samples, [](const ProfileSample& s) { return double(s.profile.depth); }), k);
  row.time = fit_complexity(series(row.samples, [](const ProfileSample& s) { return double(s.profile.total_ops); }), k);
  row.flops = fit_complexity(series(row.samples, [](const ProfileSample& s) { return s.profile.flops; }), k);
  // A (near) exact line or staircase wins; only imperfect fits are checked for higher order.
  if (row.time.r_squared < 0.9999) {
    row.time_degree =
        polynomial_degree(series(row.samples, [](const ProfileSample& s) { return double(s.profile.total_ops); }));
  }
  if (row.flops.r_squared < 0.9999) {
    row.flops_degree = polynomial_degree(series(row.samples, [](const ProfileSample& s) { return s.profile.flops; }));
  }
  if (row.has_state) {
    row.state = fit_complexity(series(row.samples, [](const ProfileSample& s) { return double(s.final_state_bytes); }));
  }
  return row;
}

}  // namespace

std::vector<ProfileRow> profile_table(std::span<const ModelConfig> configs, std::span<const std::size_t> n_grid) {
  std::set<std::size_t> distinct(n_grid.begin(), n_grid.end());
  if (distinct.size() < 4) throw ValidationError("profile: the n grid needs at least 4 distinct values");
  for (const auto& c : configs) c.validate();
  std::vector<std::future<ProfileRow>> jobs;
  for (const auto& c : configs) {
    jobs.push_back(std::async(std::launch::async, [&c, n_grid] { return profile_row(c, n_grid); }));
  }
  std::vector<ProfileRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

std::string profile_csv(std::span<const ProfileRow> rows) {
  std::string out = "arch,n,total_ops,depth,flops,state_bytes\n";
  for (const auto& r : rows) {
    for (const auto& s : r.samples) {
      out += fmt::format("{},{},{},{},{:.0f},{}\n", arch_name(r.config.arch), s.profile.n, s.profile.total_ops,
                         s.profile.depth, s.profile.flops, r.has_state ? std::to_string(s.final_state_bytes) : "");
    }
  }
  return out;
}

std::string profile_markdown(std::span<const ProfileRow> rows) {
  std::string out =
      "| Arch | Depth | depth slope | depth r² | Time (ops) | ops slope | ops r² | FLOPs | FLOPs r² (linear) | State |\n"
      "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += fmt::format("| {} | {} | {} | {:.4f} | {} | {} | {:.4f} | {} | {:.4f} | {} |\n",
                       arch_name(r.config.arch), r.depth.big_o(), fmt_num(r.depth.slope), r.depth.r_squared,
                       growth(r.time, r.time_degree), fmt_num(r.time.slope), r.time.r_squared,
                       growth(r.flops, r.flops_degree), r.flops.r_squared,
                       r.has_state ? r.state.big_o() : "—");
  }
  return out;
}

}  // namespace rlab
