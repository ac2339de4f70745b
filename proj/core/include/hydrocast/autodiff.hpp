#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

// Tape-based reverse-mode differentiation over dense row-major float64
// tensors. One Graph records one forward pass; `backward` replays the tape
// in reverse creation order, which is a valid reverse topological order.
namespace hydrocast::ad {

class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  std::size_t size() const;
  // Matrix view: rank-1 is a row vector, rank-3 folds leading dims into rows.
  std::size_t rows() const;
  std::size_t cols() const;
  std::string str() const;

  bool operator==(const Shape& o) const;

 private:
  std::array<std::size_t, 3> dims_{0, 0, 0};
  std::size_t rank_ = 0;
};

struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v);
  static Tensor zeros(Shape s);
};

class Graph;

// Lightweight handle to a node on a Graph's tape.
class Var {
 public:
  Var() = default;

  const Shape& shape() const;
  std::span<const double> value() const;
  double scalar() const;
  Graph& graph() const { return *graph_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, std::uint32_t id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::uint32_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Non-differentiable input.
  Var constant(Shape shape, std::vector<double> values);
  Var constant(const Tensor& t) { return constant(t.shape, t.values); }
  // Differentiable leaf bound to a parameter tensor. `backward` writes the
  // leaf's gradient into `param.grad` (overwriting it).
  Var parameter(Tensor& param);
  // Differentiable leaf not bound to external storage.
  Var leaf(Shape shape, std::vector<double> values);

  // Reverse sweep from a scalar node. Throws ShapeError for non-scalar loss.
  void backward(Var loss);

  std::span<const double> grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var emit(Shape shape, std::vector<double> values, std::initializer_list<Var> parents,
           BackwardFn backward);
  const std::vector<double>& value_of(std::uint32_t id) const { return nodes_[id].value; }
  const Shape& shape_of(std::uint32_t id) const { return nodes_[id].shape; }
  // Gradient buffer of a node; allocated on first access.
  std::vector<double>& grad_of(std::uint32_t id);
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    BackwardFn backward;
    bool requires_grad = false;
    Tensor* bound = nullptr;
  };
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> parameters_;
};

// Forward ops. Binary elementwise ops require equal shapes.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
// a[r, c] + row[c]
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

Var sigmoid(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
// Clamp with zero gradient outside [lo, hi].
Var clamp(Var a, double lo, double hi);
// Pinball (check) loss u * (tau - 1[u < 0]); d/du = tau - 1[u<0], d/dtau = u.
Var pinball(Var u, Var tau);

// Column slice [c0, c1) and row slice [r0, r1) of a matrix view.
Var slice_cols(Var a, std::size_t c0, std::size_t c1);
Var slice_rows(Var a, std::size_t r0, std::size_t r1);
Var concat_cols(std::span<const Var> parts);
// Fused LSTM cell. `z` holds the gate pre-activations [B x 4H] in the order
// [input | forget | cell | output]; `cell` is the previous cell state [B x H]
// or a default-constructed Var for a zero state. Returns [B x 2H] = [c | h].
Var lstm_cell(Var z, Var cell);
Var concat_rows(std::span<const Var> parts);

Var sum(Var a);
Var mean(Var a);

}  // namespace hydrocast::ad
