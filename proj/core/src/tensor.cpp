// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rlab/errors.hpp"

namespace rlab {

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_size(shape)) {
    throw ShapeError(fmt::format("tensor: {} values for shape {}", data.size(),
                                 shape_to_string(shape)));
  }
}

Tensor Tensor::zeros(Shape s) { return filled(std::move(s), 0.0); }

Tensor Tensor::filled(Shape s, double value) {
  const std::size_t n = shape_size(s);
  return Tensor(std::move(s), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const { return rank() == 2 ? shape[0] : 1; }
std::size_t Tensor::cols() const { return rank() == 0 ? 1 : shape.back(); }

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDivide: return "divide";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kNonlinearity: return "nonlinearity";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kSum: return "sum";
    case OpKind::kScale: return "scale";
    case OpKind::kScalarMul: return "scalar_mul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kReshape: return "reshape";
    case OpKind::kExpand: return "expand";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kCrossEntropy: return "cross_entropy";
  }
  return "unknown";
}

const char* nonlinearity_name(Nonlinearity kind) noexcept {
  switch (kind) {
    case Nonlinearity::kSigmoid: return "sigmoid";
    case Nonlinearity::kTanh: return "tanh";
    case Nonlinearity::kRelu: return "relu";
    case Nonlinearity::kEluPlusOne: return "elu_plus_one";
  }
  return "unknown";
}

Nonlinearity parse_nonlinearity(const std::string& name) {
  if (name == "sigmoid") return Nonlinearity::kSigmoid;
  if (name == "tanh") return Nonlinearity::kTanh;
  if (name == "relu") return Nonlinearity::kRelu;
  if (name == "elu_plus_one" || name == "elu-plus-one") return Nonlinearity::kEluPlusOne;
  throw ValidationError("unknown nonlinearity: " + name);
}

double apply_nonlinearity(Nonlinearity kind, double x) noexcept {
  switch (kind) {
    case Nonlinearity::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Nonlinearity::kTanh: return std::tanh(x);
    case Nonlinearity::kRelu: return x > 0.0 ? x : 0.0;
    case Nonlinearity::kEluPlusOne: return x >= 0.0 ? x + 1.0 : std::exp(x);
  }
  return x;
}

namespace {

// Derivative expressed through input x and output y.
double nonlinearity_derivative(Nonlinearity kind, double x, double y) noexcept {
  switch (kind) {
    case Nonlinearity::kSigmoid: return y * (1.0 - y);
    case Nonlinearity::kTanh: return 1.0 - y * y;
    case Nonlinearity::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Nonlinearity::kEluPlusOne: return x >= 0.0 ? 1.0 : y;
  }
  return 1.0;
}

[[noreturn]] void shape_error(OpKind kind, const Shape& a, const Shape& b) {
  throw ShapeError(fmt::format("{}: incompatible shapes {} and {}", op_name(kind),
                               shape_to_string(a), shape_to_string(b)));
}

[[noreturn]] void shape_error(OpKind kind, const Shape& a, const std::string& why) {
  throw ShapeError(fmt::format("{}: operand shape {} {}", op_name(kind), shape_to_string(a), why));
}

bool leading_broadcast(const Shape& a, const Shape& b) {
  return b.size() + 1 == a.size() && std::equal(a.begin() + 1, a.end(), b.begin(), b.end());
}

struct MatmulDims {
  std::size_t m, k, n;
  Shape out;
};

MatmulDims matmul_dims(const Shape& a, const Shape& b) {
  if (a.size() == 2 && b.size() == 2 && a[1] == b[0]) return {a[0], a[1], b[1], {a[0], b[1]}};
  if (a.size() == 1 && b.size() == 2 && a[0] == b[0]) return {1, a[0], b[1], {b[1]}};
  if (a.size() == 2 && b.size() == 1 && a[1] == b[0]) return {a[0], a[1], 1, {a[0]}};
  shape_error(OpKind::kMatmul, a, b);
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// dA[m,k] += dC[m,n] * B[k,n]^T
void gemm_nt(const double* dc, const double* b, double* da, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* dci = dc + i * n;
    double* dai = da + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += dci[j] * bp[j];
      dai[p] += acc;
    }
  }
}

// dB[k,n] += A[m,k]^T * dC[m,n]
void gemm_tn(const double* a, const double* dc, double* db, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* dci = dc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* dbp = db + p * n;
      for (std::size_t j = 0; j < n; ++j) dbp[j] += av * dci[j];
    }
  }
}

// Splits a shape around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer, extent, inner;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

std::size_t last_extent(const Shape& s) { return s.empty() ? 1 : s.back(); }

// Strides for broadcasting `from` into `to` (same rank, dims equal or 1).
std::vector<std::size_t> expand_strides(const Shape& from, const Shape& to) {
  std::vector<std::size_t> strides(to.size(), 0);
  if (from.empty() || shape_size(from) == 1) return strides;
  std::size_t stride = 1;
  for (std::size_t i = from.size(); i-- > 0;) {
    strides[i] = from[i] == 1 ? 0 : stride;
    stride *= from[i];
  }
  return strides;
}

std::size_t expand_source_index(std::size_t flat, const Shape& to,
                                const std::vector<std::size_t>& strides) {
  std::size_t src = 0;
  for (std::size_t i = to.size(); i-- > 0;) {
    const std::size_t coord = flat % to[i];
    flat /= to[i];
    src += coord * strides[i];
  }
  return src;
}

void check_finite(const Tensor& t, NodeId id, OpKind kind) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw OverflowError(fmt::format("non-finite output at node {} ({})", id, op_name(kind)));
    }
  }
}

}  // namespace

const Node& Value::node() const { return graph_->node(id_); }
const Tensor& Value::data() const { return node().data; }
const Tensor& Value::grad() const { return node().grad; }
const Shape& Value::shape() const { return node().data.shape; }
OpKind Value::kind() const { return node().kind; }
std::size_t Value::size() const { return node().data.size(); }

Value Graph::push(OpKind kind, OpAttrs attrs, std::vector<NodeId> parents, Tensor data,
                  std::string name) {
  const auto id = static_cast<NodeId>(nodes_.size());
  check_finite(data, id, kind);
  Node node;
  node.id = id;
  node.kind = kind;
  node.attrs = std::move(attrs);
  node.parents = std::move(parents);
  node.grad = Tensor::zeros(data.shape);
  node.data = std::move(data);
  node.name = std::move(name);
  nodes_.push_back(std::move(node));
  return Value(this, id);
}

Value Graph::input(Tensor data) { return push(OpKind::kInput, {}, {}, std::move(data)); }

Value Graph::parameter(Tensor data, std::string name) {
  return push(OpKind::kParameter, {}, {}, std::move(data), std::move(name));
}

Value Graph::apply(OpKind kind, std::span<const Value> operands, const OpAttrs& attrs) {
  for (const Value& v : operands) {
    if (!v.valid() || &v.graph() != this) {
      throw ValidationError(fmt::format("{}: operand belongs to a different graph", op_name(kind)));
    }
  }
  auto arity = [&](std::size_t n) {
    if (operands.size() != n) {
      throw ShapeError(fmt::format("{}: expected {} operands, got {}", op_name(kind), n,
                                   operands.size()));
    }
  };
  std::vector<NodeId> parents;
  parents.reserve(operands.size());
  for (const Value& v : operands) parents.push_back(v.id());
  auto data_of = [&](std::size_t i) -> const Tensor& { return nodes_[operands[i].id()].data; };

  Tensor out;
  switch (kind) {
    case OpKind::kInput:
    case OpKind::kParameter:
      throw ValidationError("apply: use Graph::input/parameter for leaf nodes");

    case OpKind::kMatmul: {
      arity(2);
      const Tensor& a = data_of(0);
      const Tensor& b = data_of(1);
      const MatmulDims d = matmul_dims(a.shape, b.shape);
      out = Tensor::zeros(d.out);
      gemm_nn(a.data.data(), b.data.data(), out.data.data(), d.m, d.k, d.n);
      break;
    }

    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDivide: {
      arity(2);
      const Tensor& a = data_of(0);
      const Tensor& b = data_of(1);
      if (a.shape != b.shape && !leading_broadcast(a.shape, b.shape)) {
        shape_error(kind, a.shape, b.shape);
      }
      out = Tensor::zeros(a.shape);
      const std::size_t bn = b.size();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.data[i];
        const double y = b.data[i % bn];
        switch (kind) {
          case OpKind::kAdd: out.data[i] = x + y; break;
          case OpKind::kSub: out.data[i] = x - y; break;
          case OpKind::kMul: out.data[i] = x * y; break;
          default: out.data[i] = x / y; break;
        }
      }
      break;
    }

    case OpKind::kExp:
    case OpKind::kLog:
    case OpKind::kNonlinearity:
    case OpKind::kScale: {
      arity(1);
      out = data_of(0);
      for (double& v : out.data) {
        if (kind == OpKind::kExp) v = std::exp(v);
        else if (kind == OpKind::kLog) v = std::log(v);
        else if (kind == OpKind::kScale) v *= attrs.scalar;
        else v = apply_nonlinearity(attrs.nonlinearity, v);
      }
      break;
    }

    case OpKind::kSoftmax: {
      arity(1);
      const Tensor& a = data_of(0);
      if (a.rank() == 0) shape_error(kind, a.shape, "must have rank >= 1");
      out = a;
      const std::size_t w = last_extent(a.shape);
      for (std::size_t r = 0; r < a.size() / w; ++r) {
        double* row = out.data.data() + r * w;
        const double mx = *std::max_element(row, row + w);
        double total = 0.0;
        for (std::size_t j = 0; j < w; ++j) total += (row[j] = std::exp(row[j] - mx));
        for (std::size_t j = 0; j < w; ++j) row[j] /= total;
      }
      break;
    }

    case OpKind::kConcat: {
      if (operands.empty()) throw ShapeError("concat: no operands");
      const Shape& first = data_of(0).shape;
      if (attrs.axis >= first.size()) shape_error(kind, first, "has no axis " + std::to_string(attrs.axis));
      Shape out_shape = first;
      out_shape[attrs.axis] = 0;
      for (std::size_t i = 0; i < operands.size(); ++i) {
        const Shape& s = data_of(i).shape;
        if (s.size() != first.size()) shape_error(kind, first, s);
        for (std::size_t d = 0; d < s.size(); ++d) {
          if (d != attrs.axis && s[d] != first[d]) shape_error(kind, first, s);
        }
        out_shape[attrs.axis] += s[attrs.axis];
      }
      out = Tensor::zeros(out_shape);
      const AxisSplit os = split_axis(out_shape, attrs.axis);
      std::size_t offset = 0;
      for (std::size_t i = 0; i < operands.size(); ++i) {
        const Tensor& part = data_of(i);
        const std::size_t chunk = part.shape[attrs.axis] * os.inner;
        for (std::size_t o = 0; o < os.outer; ++o) {
          std::copy_n(part.data.begin() + o * chunk, chunk,
                      out.data.begin() + o * os.extent * os.inner + offset);
        }
        offset += chunk;
      }
      break;
    }

    case OpKind::kSlice: {
      arity(1);
      const Tensor& a = data_of(0);
      if (attrs.axis >= a.rank() || attrs.begin >= attrs.end || attrs.end > a.shape[attrs.axis]) {
        shape_error(kind, a.shape,
                    fmt::format("cannot slice axis {} range [{}, {})", attrs.axis, attrs.begin, attrs.end));
      }
      Shape out_shape = a.shape;
      out_shape[attrs.axis] = attrs.end - attrs.begin;
      out = Tensor::zeros(out_shape);
      const AxisSplit s = split_axis(a.shape, attrs.axis);
      const std::size_t chunk = out_shape[attrs.axis] * s.inner;
      for (std::size_t o = 0; o < s.outer; ++o) {
        std::copy_n(a.data.begin() + o * s.extent * s.inner + attrs.begin * s.inner, chunk,
                    out.data.begin() + o * chunk);
      }
      break;
    }

    case OpKind::kSum: {
      arity(1);
      const Tensor& a = data_of(0);
      out = Tensor::scalar(std::accumulate(a.data.begin(), a.data.end(), 0.0));
      break;
    }

    case OpKind::kScalarMul: {
      arity(2);
      const Tensor& a = data_of(0);
      const Tensor& s = data_of(1);
      if (s.size() != 1) shape_error(kind, a.shape, s.shape);
      out = a;
      for (double& v : out.data) v *= s.data[0];
      break;
    }

    case OpKind::kTranspose: {
      arity(1);
      const Tensor& a = data_of(0);
      if (a.rank() != 2) shape_error(kind, a.shape, "must have rank 2");
      const std::size_t r = a.shape[0], c = a.shape[1];
      out = Tensor::zeros({c, r});
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data[j * r + i] = a.data[i * c + j];
      break;
    }

    case OpKind::kReshape: {
      arity(1);
      const Tensor& a = data_of(0);
      if (shape_size(attrs.shape) != a.size()) shape_error(kind, a.shape, attrs.shape);
      out = Tensor(attrs.shape, a.data);
      break;
    }

    case OpKind::kExpand: {
      arity(1);
      const Tensor& a = data_of(0);
      const bool scalar_like = a.size() == 1;
      bool ok = scalar_like;
      if (!ok && a.rank() == attrs.shape.size()) {
        ok = true;
        for (std::size_t d = 0; d < a.rank(); ++d) {
          if (a.shape[d] != attrs.shape[d] && a.shape[d] != 1) ok = false;
        }
      }
      if (!ok) shape_error(kind, a.shape, attrs.shape);
      out = Tensor::zeros(attrs.shape);
      const auto strides = expand_strides(a.shape, attrs.shape);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out.data[i] = a.data[scalar_like ? 0 : expand_source_index(i, attrs.shape, strides)];
      }
      break;
    }

    case OpKind::kLayerNorm: {
      arity(1);
      const Tensor& a = data_of(0);
      if (a.rank() == 0) shape_error(kind, a.shape, "must have rank >= 1");
      out = a;
      const std::size_t w = last_extent(a.shape);
      for (std::size_t r = 0; r < a.size() / w; ++r) {
        double* row = out.data.data() + r * w;
        double mean = 0.0;
        for (std::size_t j = 0; j < w; ++j) mean += row[j];
        mean /= static_cast<double>(w);
        double var = 0.0;
        for (std::size_t j = 0; j < w; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(w);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
        for (std::size_t j = 0; j < w; ++j) row[j] = (row[j] - mean) * inv;
      }
      break;
    }

    case OpKind::kGatherRows: {
      arity(1);
      const Tensor& a = data_of(0);
      if (a.rank() != 1 && a.rank() != 2) shape_error(kind, a.shape, "must have rank 1 or 2");
      const std::size_t w = a.rank() == 2 ? a.shape[1] : 1;
      Shape out_shape = a.rank() == 2 ? Shape{attrs.indices.size(), w} : Shape{attrs.indices.size()};
      out = Tensor::zeros(out_shape);
      for (std::size_t i = 0; i < attrs.indices.size(); ++i) {
        if (attrs.indices[i] >= a.shape[0]) {
          shape_error(kind, a.shape, fmt::format("has no row {}", attrs.indices[i]));
        }
        std::copy_n(a.data.begin() + attrs.indices[i] * w, w, out.data.begin() + i * w);
      }
      break;
    }

    case OpKind::kCrossEntropy: {
      arity(1);
      const Tensor& a = data_of(0);
      const std::size_t w = last_extent(a.shape);
      const std::size_t rows = a.rank() == 2 ? a.shape[0] : 1;
      if (a.rank() < 1 || a.rank() > 2 || attrs.indices.size() != rows || rows == 0) {
        shape_error(kind, a.shape, fmt::format("does not match {} targets", attrs.indices.size()));
      }
      double loss = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a.data.data() + r * w;
        if (attrs.indices[r] >= w) shape_error(kind, a.shape, "target class out of range");
        const double mx = *std::max_element(row, row + w);
        double total = 0.0;
        for (std::size_t j = 0; j < w; ++j) total += std::exp(row[j] - mx);
        loss += mx + std::log(total) - row[attrs.indices[r]];
      }
      out = Tensor::scalar(loss / static_cast<double>(rows));
      break;
    }
  }
  return push(kind, attrs, std::move(parents), std::move(out));
}

void Graph::zero_grad() {
  for (Node& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
}

void Graph::backward(Value root) {
  if (&root.graph() != this) throw ValidationError("backward: root belongs to a different graph");
  if (root.data().rank() != 0) {
    throw ShapeError("backward: root must be a scalar, got shape " + shape_to_string(root.shape()));
  }
  std::vector<char> reachable(root.id() + 1, 0);
  reachable[root.id()] = 1;
  for (NodeId id = root.id() + 1; id-- > 0;) {
    if (!reachable[id]) continue;
    for (NodeId p : nodes_[id].parents) reachable[p] = 1;
  }
  // Earlier passes left gradients in interior nodes; propagate this pass from
  // a clean slate and add the previous totals back afterwards.
  std::vector<std::vector<double>> previous(root.id() + 1);
  for (NodeId id = 0; id <= root.id(); ++id) {
    if (!reachable[id]) continue;
    previous[id].swap(nodes_[id].grad.data);
    nodes_[id].grad.data.assign(previous[id].size(), 0.0);
  }
  nodes_[root.id()].grad.data[0] = 1.0;

  for (NodeId id = root.id() + 1; id-- > 0;) {
    if (!reachable[id]) continue;
    Node& node = nodes_[id];
    if (node.parents.empty()) continue;
    const Tensor& g = node.grad;
    const Tensor& y = node.data;
    auto pdata = [&](std::size_t i) -> const Tensor& { return nodes_[node.parents[i]].data; };
    auto pgrad = [&](std::size_t i) -> Tensor& { return nodes_[node.parents[i]].grad; };

    switch (node.kind) {
      case OpKind::kInput:
      case OpKind::kParameter:
        break;

      case OpKind::kMatmul: {
        const Tensor& a = pdata(0);
        const Tensor& b = pdata(1);
        const MatmulDims d = matmul_dims(a.shape, b.shape);
        gemm_nt(g.data.data(), b.data.data(), pgrad(0).data.data(), d.m, d.k, d.n);
        gemm_tn(a.data.data(), g.data.data(), pgrad(1).data.data(), d.m, d.k, d.n);
        break;
      }

      case OpKind::kAdd:
      case OpKind::kSub:
      case OpKind::kMul:
      case OpKind::kDivide: {
        const Tensor& a = pdata(0);
        const Tensor& b = pdata(1);
        Tensor& ga = pgrad(0);
        Tensor& gb = pgrad(1);
        const std::size_t bn = b.size();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double gi = g.data[i];
          const double bi = b.data[i % bn];
          switch (node.kind) {
            case OpKind::kAdd:
              ga.data[i] += gi;
              gb.data[i % bn] += gi;
              break;
            case OpKind::kSub:
              ga.data[i] += gi;
              gb.data[i % bn] -= gi;
              break;
            case OpKind::kMul:
              ga.data[i] += gi * bi;
              gb.data[i % bn] += gi * a.data[i];
              break;
            default:
              ga.data[i] += gi / bi;
              gb.data[i % bn] -= gi * a.data[i] / (bi * bi);
              break;
          }
        }
        break;
      }

      case OpKind::kExp: {
        Tensor& ga = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * y.data[i];
        break;
      }

      case OpKind::kLog: {
        const Tensor& a = pdata(0);
        Tensor& ga = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] / a.data[i];
        break;
      }

      case OpKind::kNonlinearity: {
        const Tensor& a = pdata(0);
        Tensor& ga = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga.data[i] += g.data[i] * nonlinearity_derivative(node.attrs.nonlinearity, a.data[i], y.data[i]);
        }
        break;
      }

      case OpKind::kScale: {
        Tensor& ga = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * node.attrs.scalar;
        break;
      }

      case OpKind::kSoftmax: {
        Tensor& ga = pgrad(0);
        const std::size_t w = last_extent(y.shape);
        for (std::size_t r = 0; r < y.size() / w; ++r) {
          const double* yr = y.data.data() + r * w;
          const double* gr = g.data.data() + r * w;
          double dot = 0.0;
          for (std::size_t j = 0; j < w; ++j) dot += yr[j] * gr[j];
          for (std::size_t j = 0; j < w; ++j) ga.data[r * w + j] += yr[j] * (gr[j] - dot);
        }
        break;
      }

      case OpKind::kConcat: {
        const AxisSplit os = split_axis(y.shape, node.attrs.axis);
        std::size_t offset = 0;
        for (std::size_t i = 0; i < node.parents.size(); ++i) {
          Tensor& gp = pgrad(i);
          const std::size_t chunk = gp.shape[node.attrs.axis] * os.inner;
          for (std::size_t o = 0; o < os.outer; ++o) {
            const double* src = g.data.data() + o * os.extent * os.inner + offset;
            double* dst = gp.data.data() + o * chunk;
            for (std::size_t j = 0; j < chunk; ++j) dst[j] += src[j];
          }
          offset += chunk;
        }
        break;
      }

      case OpKind::kSlice: {
        Tensor& ga = pgrad(0);
        const AxisSplit s = split_axis(ga.shape, node.attrs.axis);
        const std::size_t chunk = y.shape[node.attrs.axis] * s.inner;
        for (std::size_t o = 0; o < s.outer; ++o) {
          double* dst = ga.data.data() + o * s.extent * s.inner + node.attrs.begin * s.inner;
          const double* src = g.data.data() + o * chunk;
          for (std::size_t j = 0; j < chunk; ++j) dst[j] += src[j];
        }
        break;
      }

      case OpKind::kSum: {
        Tensor& ga = pgrad(0);
        for (double& v : ga.data) v += g.data[0];
        break;
      }

      case OpKind::kScalarMul: {
        const Tensor& a = pdata(0);
        const double s = pdata(1).data[0];
        Tensor& ga = pgrad(0);
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga.data[i] += g.data[i] * s;
          acc += g.data[i] * a.data[i];
        }
        pgrad(1).data[0] += acc;
        break;
      }

      case OpKind::kTranspose: {
        Tensor& ga = pgrad(0);
        const std::size_t r = ga.shape[0], c = ga.shape[1];
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) ga.data[i * c + j] += g.data[j * r + i];
        break;
      }

      case OpKind::kReshape: {
        Tensor& ga = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
        break;
      }

      case OpKind::kExpand: {
        Tensor& ga = pgrad(0);
        if (ga.size() == 1) {
          ga.data[0] += std::accumulate(g.data.begin(), g.data.end(), 0.0);
        } else {
          const auto strides = expand_strides(ga.shape, y.shape);
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data[expand_source_index(i, y.shape, strides)] += g.data[i];
          }
        }
        break;
      }

      case OpKind::kLayerNorm: {
        const Tensor& a = pdata(0);
        Tensor& ga = pgrad(0);
        const std::size_t w = last_extent(y.shape);
        const double inv_w = 1.0 / static_cast<double>(w);
        for (std::size_t r = 0; r < y.size() / w; ++r) {
          const double* xr = a.data.data() + r * w;
          const double* yr = y.data.data() + r * w;
          const double* gr = g.data.data() + r * w;
          double mean = 0.0;
          for (std::size_t j = 0; j < w; ++j) mean += xr[j];
          mean *= inv_w;
          double var = 0.0;
          for (std::size_t j = 0; j < w; ++j) var += (xr[j] - mean) * (xr[j] - mean);
          var *= inv_w;
          const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
          double g_mean = 0.0, gy_mean = 0.0;
          for (std::size_t j = 0; j < w; ++j) {
            g_mean += gr[j];
            gy_mean += gr[j] * yr[j];
          }
          g_mean *= inv_w;
          gy_mean *= inv_w;
          for (std::size_t j = 0; j < w; ++j) {
            ga.data[r * w + j] += inv * (gr[j] - g_mean - yr[j] * gy_mean);
          }
        }
        break;
      }

      case OpKind::kGatherRows: {
        Tensor& ga = pgrad(0);
        const std::size_t w = ga.rank() == 2 ? ga.shape[1] : 1;
        for (std::size_t i = 0; i < node.attrs.indices.size(); ++i) {
          double* dst = ga.data.data() + node.attrs.indices[i] * w;
          const double* src = g.data.data() + i * w;
          for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
        }
        break;
      }

      case OpKind::kCrossEntropy: {
        const Tensor& a = pdata(0);
        Tensor& ga = pgrad(0);
        const std::size_t w = last_extent(a.shape);
        const std::size_t rows = node.attrs.indices.size();
        const double coef = g.data[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* row = a.data.data() + r * w;
          const double mx = *std::max_element(row, row + w);
          double total = 0.0;
          for (std::size_t j = 0; j < w; ++j) total += std::exp(row[j] - mx);
          for (std::size_t j = 0; j < w; ++j) {
            const double p = std::exp(row[j] - mx) / total;
            ga.data[r * w + j] += coef * (p - (j == node.attrs.indices[r] ? 1.0 : 0.0));
          }
        }
        break;
      }
    }
  }
  for (NodeId id = 0; id <= root.id(); ++id) {
    if (!reachable[id]) continue;
    auto& grad = nodes_[id].grad.data;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += previous[id][i];
  }
}

Value matmul(Value a, Value b) { return a.graph().apply(OpKind::kMatmul, {a, b}); }
Value add(Value a, Value b) { return a.graph().apply(OpKind::kAdd, {a, b}); }
Value sub(Value a, Value b) { return a.graph().apply(OpKind::kSub, {a, b}); }
Value mul(Value a, Value b) { return a.graph().apply(OpKind::kMul, {a, b}); }
Value divide(Value a, Value b) { return a.graph().apply(OpKind::kDivide, {a, b}); }
Value exp(Value a) { return a.graph().apply(OpKind::kExp, {a}); }
Value log(Value a) { return a.graph().apply(OpKind::kLog, {a}); }

Value nonlinearity(Value a, Nonlinearity kind) {
  OpAttrs attrs;
  attrs.nonlinearity = kind;
  return a.graph().apply(OpKind::kNonlinearity, {a}, attrs);
}
Value sigmoid(Value a) { return nonlinearity(a, Nonlinearity::kSigmoid); }
Value tanh(Value a) { return nonlinearity(a, Nonlinearity::kTanh); }
Value relu(Value a) { return nonlinearity(a, Nonlinearity::kRelu); }
Value elu_plus_one(Value a) { return nonlinearity(a, Nonlinearity::kEluPlusOne); }

Value softmax(Value a) { return a.graph().apply(OpKind::kSoftmax, {a}); }

Value concat(std::span<const Value> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  OpAttrs attrs;
  attrs.axis = axis;
  return parts.front().graph().apply(OpKind::kConcat, parts, attrs);
}

Value slice(Value a, std::size_t axis, std::size_t begin, std::size_t end) {
  OpAttrs attrs;
  attrs.axis = axis;
  attrs.begin = begin;
  attrs.end = end;
  return a.graph().apply(OpKind::kSlice, {a}, attrs);
}

Value sum(Value a) { return a.graph().apply(OpKind::kSum, {a}); }

Value scale(Value a, double factor) {
  OpAttrs attrs;
  attrs.scalar = factor;
  return a.graph().apply(OpKind::kScale, {a}, attrs);
}

Value scalar_mul(Value a, Value s) { return a.graph().apply(OpKind::kScalarMul, {a, s}); }
Value transpose(Value a) { return a.graph().apply(OpKind::kTranspose, {a}); }

Value reshape(Value a, Shape shape) {
  OpAttrs attrs;
  attrs.shape = std::move(shape);
  return a.graph().apply(OpKind::kReshape, {a}, attrs);
}

Value expand(Value a, Shape shape) {
  OpAttrs attrs;
  attrs.shape = std::move(shape);
  return a.graph().apply(OpKind::kExpand, {a}, attrs);
}

Value layer_norm(Value a) { return a.graph().apply(OpKind::kLayerNorm, {a}); }

Value gather_rows(Value table, std::vector<std::size_t> rows) {
  OpAttrs attrs;
  attrs.indices = std::move(rows);
  return table.graph().apply(OpKind::kGatherRows, {table}, attrs);
}

Value cross_entropy(Value logits, std::vector<std::size_t> targets) {
  OpAttrs attrs;
  attrs.indices = std::move(targets);
  return logits.graph().apply(OpKind::kCrossEntropy, {logits}, attrs);
}

GradReport grad_check(const GraphFunction& f, std::span<const Tensor> points, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) {
    throw ValidationError(fmt::format("grad_check: eps must be in (0, 1e-2], got {}", eps));
  }
  auto evaluate = [&](const std::vector<Tensor>& at) {
    Graph g;
    std::vector<Value> leaves;
    leaves.reserve(at.size());
    for (const Tensor& t : at) leaves.push_back(g.parameter(t));
    const Value out = f(g, leaves);
    if (out.data().rank() != 0) {
      throw ValidationError("grad_check: f must return a scalar, got shape " +
                            shape_to_string(out.shape()));
    }
    return out.data().data[0];
  };

  std::vector<Tensor> probe(points.begin(), points.end());

  Graph g;
  std::vector<Value> leaves;
  for (const Tensor& t : probe) leaves.push_back(g.parameter(t));
  const Value root = f(g, leaves);
  if (root.data().rank() != 0) {
    throw ValidationError("grad_check: f must return a scalar, got shape " +
                          shape_to_string(root.shape()));
  }
  const double baseline = root.data().data[0];
  if (evaluate(probe) != baseline) {
    throw ValidationError("grad_check: f is not deterministic (baseline changed on re-evaluation)");
  }
  g.backward(root);

  GradReport report;
  bool first = true;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    const Tensor& analytic = leaves[p].grad();
    for (std::size_t i = 0; i < probe[p].size(); ++i) {
      const double saved = probe[p].data[i];
      probe[p].data[i] = saved + eps;
      const double plus = evaluate(probe);
      probe[p].data[i] = saved - eps;
      const double minus = evaluate(probe);
      probe[p].data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic.data[i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (first || err > report.max_rel_err) {
        first = false;
        report = {err, p, i, a, numeric};
      }
    }
  }
  return report;
}

}  // namespace rlab
