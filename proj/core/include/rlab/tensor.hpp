// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode automatic differentiation over dense float64 arrays.
//
// A Graph owns an append-only arena of nodes. Every op appends exactly one
// node whose parents all have smaller ids, so the arena order is already a
// topological order and the graph is acyclic by construction. Values are
// cheap handles (graph pointer + node id) into that arena.
//
// Broadcasting is deliberately narrow: elementwise binary ops accept either
// equal shapes or a right operand whose shape equals the left operand's shape
// minus its leading axis (e.g. [n,d] + [d]). Anything else needs an explicit
// reshape/expand node, which keeps per-node op counting unambiguous for the
// depth profiler.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rlab {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major float64 array. Rank 0 is a scalar with one element.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() : data(1, 0.0) {}
  Tensor(Shape s, std::vector<double> values);

  static Tensor zeros(Shape s);
  static Tensor filled(Shape s, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t size() const noexcept { return data.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool operator==(const Tensor&) const = default;
};

enum class OpKind : std::uint8_t {
  kInput,
  kParameter,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kDivide,
  kExp,
  kLog,
  kNonlinearity,
  kSoftmax,
  kConcat,
  kSlice,
  kSum,
  kScale,
  kScalarMul,
  kTranspose,
  kReshape,
  kExpand,
  kLayerNorm,
  kGatherRows,
  kCrossEntropy,
};

enum class Nonlinearity : std::uint8_t { kSigmoid, kTanh, kRelu, kEluPlusOne };

const char* op_name(OpKind kind) noexcept;
const char* nonlinearity_name(Nonlinearity kind) noexcept;
Nonlinearity parse_nonlinearity(const std::string& name);

/// Scalar nonlinearity evaluation, shared with test oracles.
double apply_nonlinearity(Nonlinearity kind, double x) noexcept;

/// Static attributes for ops that need them. Unused fields are ignored.
struct OpAttrs {
  Nonlinearity nonlinearity = Nonlinearity::kTanh;
  std::size_t axis = 0;          // concat / slice
  std::size_t begin = 0;         // slice
  std::size_t end = 0;           // slice
  double scalar = 1.0;           // scale
  Shape shape;                   // reshape / expand target
  std::vector<std::size_t> indices;  // gather_rows rows, cross_entropy targets
};

using NodeId = std::uint32_t;

struct Node {
  NodeId id = 0;
  OpKind kind = OpKind::kInput;
  OpAttrs attrs;
  std::vector<NodeId> parents;
  Tensor data;
  Tensor grad;
  std::string name;  // optional label, set for parameters
};

class Graph;

/// Handle to one node of a Graph. Copyable; does not own anything.
class Value {
 public:
  Value() = default;
  Value(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  bool valid() const noexcept { return graph_ != nullptr; }
  Graph& graph() const { return *graph_; }
  NodeId id() const noexcept { return id_; }

  const Node& node() const;
  const Tensor& data() const;
  const Tensor& grad() const;
  const Shape& shape() const;
  OpKind kind() const;
  std::size_t size() const;

 private:
  Graph* graph_ = nullptr;
  NodeId id_ = 0;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Value input(Tensor data);
  Value parameter(Tensor data, std::string name = {});

  /// Appends one node computing `kind` over `operands`. Throws ShapeError on
  /// non-conforming shapes and OverflowError if the result is not finite.
  Value apply(OpKind kind, std::span<const Value> operands, const OpAttrs& attrs = {});
  Value apply(OpKind kind, std::initializer_list<Value> operands, const OpAttrs& attrs = {}) {
    return apply(kind, std::span<const Value>(operands.begin(), operands.size()), attrs);
  }

  /// Accumulates d(root)/d(node) into every node reachable from `root`.
  /// Gradients accumulate across calls; use zero_grad() between passes.
  void backward(Value root);
  void zero_grad();

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  Node& mutable_node(NodeId id) { return nodes_.at(id); }

 private:
  Value push(OpKind kind, OpAttrs attrs, std::vector<NodeId> parents, Tensor data,
             std::string name = {});

  std::vector<Node> nodes_;
};

// Convenience wrappers, one per op kind.
Value matmul(Value a, Value b);
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value divide(Value a, Value b);
Value exp(Value a);
Value log(Value a);
Value nonlinearity(Value a, Nonlinearity kind);
Value sigmoid(Value a);
Value tanh(Value a);
Value relu(Value a);
Value elu_plus_one(Value a);
Value softmax(Value a);
Value concat(std::span<const Value> parts, std::size_t axis);
Value slice(Value a, std::size_t axis, std::size_t begin, std::size_t end);
Value sum(Value a);
Value scale(Value a, double factor);
Value scalar_mul(Value a, Value s);
Value transpose(Value a);
Value reshape(Value a, Shape shape);
Value expand(Value a, Shape shape);
Value layer_norm(Value a);
Value gather_rows(Value table, std::vector<std::size_t> rows);
Value cross_entropy(Value logits, std::vector<std::size_t> targets);

inline constexpr double kLayerNormEpsilon = 1e-5;

/// Result of a finite-difference gradient check.
struct GradReport {
  double max_rel_err = 0.0;
  std::size_t worst_input = 0;  // which point
  std::size_t worst_index = 0;  // flat coordinate within that point
  double analytic = 0.0;
  double numeric = 0.0;
};

/// f builds a scalar from the given leaves (one per point) inside the graph.
using GraphFunction = std::function<Value(Graph&, std::span<const Value>)>;

/// Compares reverse-mode gradients of f against central differences at
/// `points`. Relative error per coordinate is |a-n| / max(1, |a|, |n|).
/// Throws ValidationError for eps outside (0, 1e-2], a non-scalar f, or an f
/// whose baseline value differs between two evaluations.
GradReport grad_check(const GraphFunction& f, std::span<const Tensor> points, double eps = 1e-5);

}  // namespace rlab
