#include "hydrocast/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "hydrocast/error.hpp"

namespace hydrocast::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

void require_same(const char* op, Var a, Var b) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

void require_same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) throw ShapeError("operands belong to different graphs");
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return Shape{rows, cols}; }

template <typename F, typename D>
Var unary(Var a, F f, D dfdx) {
  Graph& g = a.graph();
  const auto& x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::uint32_t ia = a.id();
  return g.emit(a.shape(), std::move(y), {a}, [ia, dfdx](Graph& gr, std::uint32_t self) {
    if (!gr.requires_grad(ia)) return;
    const auto& xv = gr.value_of(ia);
    const auto& yv = gr.value_of(self);
    const auto& gy = gr.grad_of(self);
    auto& gx = gr.grad_of(ia);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * dfdx(xv[i], yv[i]);
  });
}

// Logistic function over a buffer, vectorized through fixed-size aligned
// chunks so that every element takes the same code path wherever the buffer
// happens to be allocated. `pre` scales the input, `post_a + post_b * s`
// maps the result (tanh(x) = 2 sigma(2x) - 1).
void logistic_inplace(std::span<double> x, double pre = 1.0, double post_a = 0.0, double post_b = 1.0) {
  using Chunk = Eigen::Array<double, 8, 1>;
  Chunk v;
  for (std::size_t i = 0; i < x.size(); i += 8) {
    const std::size_t w = std::min<std::size_t>(8, x.size() - i);
    v.setZero();
    std::copy_n(x.data() + i, w, v.data());
    v = post_a + post_b / (1.0 + (-pre * v).exp());
    std::copy_n(v.data(), w, x.data() + i);
  }
}

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------- Shape

Shape::Shape(std::initializer_list<std::size_t> dims) {
  if (dims.size() == 0 || dims.size() > 3) throw ShapeError("tensor rank must be 1..3");
  rank_ = dims.size();
  std::copy(dims.begin(), dims.end(), dims_.begin());
}

std::size_t Shape::size() const {
  if (rank_ == 0) return 0;
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::size_t Shape::rows() const {
  switch (rank_) {
    case 1: return 1;
    case 2: return dims_[0];
    case 3: return dims_[0] * dims_[1];
    default: return 0;
  }
}

std::size_t Shape::cols() const { return rank_ == 0 ? 0 : dims_[rank_ - 1]; }

std::string Shape::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) s += "x";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

bool Shape::operator==(const Shape& o) const {
  if (rank_ != o.rank_) return false;
  for (std::size_t i = 0; i < rank_; ++i) {
    if (dims_[i] != o.dims_[i]) return false;
  }
  return true;
}

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(Shape s, std::vector<double> v) : shape(s), values(std::move(v)) {
  if (values.size() != shape.size()) {
    throw ShapeError("tensor " + shape.str() + " given " + std::to_string(values.size()) +
                     " values");
  }
}

Tensor Tensor::zeros(Shape s) { return Tensor(s, std::vector<double>(s.size(), 0.0)); }

// ---------------------------------------------------------------- Var

const Shape& Var::shape() const { return graph_->shape_of(id_); }
std::span<const double> Var::value() const { return graph_->value_of(id_); }
double Var::scalar() const {
  const auto v = value();
  if (v.size() != 1) throw ShapeError("scalar() on tensor of shape " + shape().str());
  return v[0];
}

// ---------------------------------------------------------------- Graph

Var Graph::constant(Shape shape, std::vector<double> values) {
  if (values.size() != shape.size()) {
    throw ShapeError("constant " + shape.str() + " given " + std::to_string(values.size()) +
                     " values");
  }
  nodes_.push_back(Node{shape, std::move(values), {}, {}, false, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::leaf(Shape shape, std::vector<double> values) {
  Var v = constant(shape, std::move(values));
  nodes_.back().requires_grad = true;
  parameters_.push_back(v.id());
  return v;
}

Var Graph::parameter(Tensor& param) {
  Var v = leaf(param.shape, param.values);
  nodes_.back().bound = &param;
  return v;
}

Var Graph::emit(Shape shape, std::vector<double> values, std::initializer_list<Var> parents,
                BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || nodes_[p.id()].requires_grad;
  nodes_.push_back(Node{shape, std::move(values), {}, needs ? std::move(backward) : BackwardFn{},
                        needs, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

std::vector<double>& Graph::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

std::span<const double> Graph::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.shape().size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + loss.shape().str());
  }
  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad.assign(n.value.size(), 0.0);
  }
  grad_of(loss.id())[0] = 1.0;
  for (std::uint32_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
  for (std::uint32_t id : parameters_) {
    Node& n = nodes_[id];
    if (n.bound != nullptr) n.bound->grad = n.grad;
  }
}

// ---------------------------------------------------------------- ops

Var matmul(Var a, Var b) {
  require_same_graph(a, b);
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.rank() != 2 || sb.rank() != 2 || sa.cols() != sb.rows()) {
    throw ShapeError("matmul: incompatible shapes " + sa.str() + " and " + sb.str());
  }
  const std::size_t m = sa.rows(), k = sa.cols(), n = sb.cols();
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.value().data(), m, k) * ConstMap(b.value().data(), k, n);
  const std::uint32_t ia = a.id(), ib = b.id();
  return a.graph().emit(matrix_shape(m, n), std::move(out), {a, b},
                        [ia, ib, m, k, n](Graph& g, std::uint32_t self) {
                          ConstMap gy(g.grad_of(self).data(), m, n);
                          if (g.requires_grad(ia)) {
                            MutMap(g.grad_of(ia).data(), m, k).noalias() +=
                                gy * ConstMap(g.value_of(ib).data(), k, n).transpose();
                          }
                          if (g.requires_grad(ib)) {
                            MutMap(g.grad_of(ib).data(), k, n).noalias() +=
                                ConstMap(g.value_of(ia).data(), m, k).transpose() * gy;
                          }
                        });
}

namespace {

// Binary elementwise op with partials df/da and df/db given (a, b, y).
template <typename F, typename DA, typename DB>
Var binary(const char* name, Var a, Var b, F f, DA da, DB db) {
  require_same_graph(a, b);
  require_same(name, a, b);
  const auto& x = a.value();
  const auto& z = b.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(x[i], z[i]);
  const std::uint32_t ia = a.id(), ib = b.id();
  return a.graph().emit(a.shape(), std::move(y), {a, b},
                        [ia, ib, da, db](Graph& g, std::uint32_t self) {
                          const auto& xv = g.value_of(ia);
                          const auto& zv = g.value_of(ib);
                          const auto& gy = g.grad_of(self);
                          if (g.requires_grad(ia)) {
                            auto& gx = g.grad_of(ia);
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * da(xv[i], zv[i]);
                          }
                          if (g.requires_grad(ib)) {
                            auto& gz = g.grad_of(ib);
                            for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += gy[i] * db(xv[i], zv[i]);
                          }
                        });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double z) { return x + z; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double z) { return x - z; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double z) { return x * z; }, [](double, double z) { return z; },
      [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double z) { return x / z; },
      [](double, double z) { return 1.0 / z; }, [](double x, double z) { return -x / (z * z); });
}

Var pinball(Var u, Var tau) {
  return binary(
      "pinball", u, tau, [](double x, double t) { return x * (t - (x < 0 ? 1.0 : 0.0)); },
      [](double x, double t) { return t - (x < 0 ? 1.0 : 0.0); }, [](double x, double) { return x; });
}

Var add_row(Var a, Var row) {
  require_same_graph(a, row);
  const std::size_t r = a.shape().rows(), c = a.shape().cols();
  if (row.shape().size() != c) {
    throw ShapeError("add_row: " + a.shape().str() + " and row " + row.shape().str());
  }
  std::vector<double> y(a.value().begin(), a.value().end());
  const auto& bv = row.value();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) y[i * c + j] += bv[j];
  }
  const std::uint32_t ia = a.id(), ib = row.id();
  return a.graph().emit(a.shape(), std::move(y), {a, row}, [ia, ib, r, c](Graph& g, std::uint32_t self) {
    const auto& gy = g.grad_of(self);
    if (g.requires_grad(ia)) {
      auto& gx = g.grad_of(ia);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
    }
    if (g.requires_grad(ib)) {
      auto& gb = g.grad_of(ib);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) gb[j] += gy[i * c + j];
      }
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var sigmoid(Var a) {
  return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var softplus(Var a) {
  return unary(a, stable_softplus, [](double x, double) { return stable_sigmoid(x); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var slice_cols(Var a, std::size_t c0, std::size_t c1) {
  const std::size_t r = a.shape().rows(), c = a.shape().cols();
  if (a.shape().rank() > 2 || c0 >= c1 || c1 > c) {
    throw ShapeError("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) + ") of " +
                     a.shape().str());
  }
  const std::size_t w = c1 - c0;
  std::vector<double> y(r * w);
  const auto& x = a.value();
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * c + c0), w,
                y.begin() + static_cast<std::ptrdiff_t>(i * w));
  }
  const std::uint32_t ia = a.id();
  const Shape out = a.shape().rank() == 1 ? Shape{w} : matrix_shape(r, w);
  return a.graph().emit(out, std::move(y), {a}, [ia, r, c, c0, w](Graph& g, std::uint32_t self) {
    const auto& gy = g.grad_of(self);
    auto& gx = g.grad_of(ia);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < w; ++j) gx[i * c + c0 + j] += gy[i * w + j];
    }
  });
}

Var lstm_cell(Var z, Var cell) {
  const std::size_t b = z.shape().rows(), h4 = z.shape().cols();
  if (z.shape().rank() != 2 || h4 % 4 != 0) throw ShapeError("lstm_cell: gate block " + z.shape().str());
  const std::size_t n = h4 / 4;
  const bool has_cell = cell.valid();
  if (has_cell) {
    require_same_graph(z, cell);
    if (!(cell.shape() == matrix_shape(b, n))) {
      throw ShapeError("lstm_cell: cell " + cell.shape().str() + " for gates " + z.shape().str());
    }
  }
  const auto& zv = z.value();
  std::vector<double> gates(zv.begin(), zv.end());  // activated [i | f | g | o]
  for (std::size_t r = 0; r < b; ++r) {
    const std::span<double> row(gates.data() + r * h4, h4);
    logistic_inplace(row.subspan(0, 2 * n));
    logistic_inplace(row.subspan(2 * n, n), 2.0, -1.0, 2.0);
    logistic_inplace(row.subspan(3 * n, n));
  }
  std::vector<double> y(b * 2 * n);  // [c | h]
  std::vector<double> tc(b * n);     // tanh(c)
  for (std::size_t r = 0; r < b; ++r) {
    const double* ar = gates.data() + r * h4;
    for (std::size_t j = 0; j < n; ++j) {
      const double prev = has_cell ? cell.value()[r * n + j] : 0.0;
      const double c = ar[n + j] * prev + ar[j] * ar[2 * n + j];
      y[r * 2 * n + j] = c;
      tc[r * n + j] = c;
    }
  }
  logistic_inplace(tc, 2.0, -1.0, 2.0);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t j = 0; j < n; ++j) y[r * 2 * n + n + j] = gates[r * h4 + 3 * n + j] * tc[r * n + j];
  }
  const std::uint32_t iz = z.id();
  const std::uint32_t ic = has_cell ? cell.id() : 0;
  auto back = [iz, ic, has_cell, b, n, gates = std::move(gates), tc = std::move(tc)](Graph& g,
                                                                                      std::uint32_t self) {
    const auto& gy = g.grad_of(self);
    const bool want_z = g.requires_grad(iz);
    const bool want_c = has_cell && g.requires_grad(ic);
    std::vector<double>* gz = want_z ? &g.grad_of(iz) : nullptr;
    std::vector<double>* gc = want_c ? &g.grad_of(ic) : nullptr;
    const std::vector<double>* cv = has_cell ? &g.value_of(ic) : nullptr;
    for (std::size_t r = 0; r < b; ++r) {
      const double* a = gates.data() + r * 4 * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double i = a[j], f = a[n + j], gg = a[2 * n + j], o = a[3 * n + j];
        const double th = tc[r * n + j];
        const double gh = gy[r * 2 * n + n + j];
        const double dc = gy[r * 2 * n + j] + gh * o * (1 - th * th);
        const double prev = cv ? (*cv)[r * n + j] : 0.0;
        if (gz) {
          double* d = gz->data() + r * 4 * n;
          d[j] += dc * gg * i * (1 - i);
          d[n + j] += dc * prev * f * (1 - f);
          d[2 * n + j] += dc * i * (1 - gg * gg);
          d[3 * n + j] += gh * th * o * (1 - o);
        }
        if (gc) (*gc)[r * n + j] += dc * f;
      }
    }
  };
  if (has_cell) return z.graph().emit(matrix_shape(b, 2 * n), std::move(y), {z, cell}, std::move(back));
  return z.graph().emit(matrix_shape(b, 2 * n), std::move(y), {z}, std::move(back));
}

Var slice_rows(Var a, std::size_t r0, std::size_t r1) {
  const std::size_t r = a.shape().rows(), c = a.shape().cols();
  if (a.shape().rank() != 2 || r0 >= r1 || r1 > r) {
    throw ShapeError("slice_rows [" + std::to_string(r0) + "," + std::to_string(r1) + ") of " +
                     a.shape().str());
  }
  const auto& x = a.value();
  std::vector<double> y(x.begin() + static_cast<std::ptrdiff_t>(r0 * c),
                        x.begin() + static_cast<std::ptrdiff_t>(r1 * c));
  const std::uint32_t ia = a.id();
  const std::size_t offset = r0 * c;
  return a.graph().emit(matrix_shape(r1 - r0, c), std::move(y), {a}, [ia, offset](Graph& g, std::uint32_t self) {
    const auto& gy = g.grad_of(self);
    auto& gx = g.grad_of(ia);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[offset + i] += gy[i];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  Graph& g = parts[0].graph();
  const std::size_t r = parts[0].shape().rows();
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  Var grad_parent = parts[0];
  for (const Var& p : parts) {
    if (&p.graph() != &g) throw ShapeError("operands belong to different graphs");
    if (p.shape().rank() != 2 || p.shape().rows() != r) {
      throw ShapeError("concat_cols: row mismatch " + parts[0].shape().str() + " vs " + p.shape().str());
    }
    ids.push_back(p.id());
    widths.push_back(p.shape().cols());
    total += p.shape().cols();
    if (g.requires_grad(p.id())) grad_parent = p;
  }
  std::vector<double> y(r * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& x = parts[k].value();
    for (std::size_t i = 0; i < r; ++i) {
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * widths[k]), widths[k],
                  y.begin() + static_cast<std::ptrdiff_t>(i * total + offset));
    }
    offset += widths[k];
  }
  // emit() derives requires_grad from the listed parent, so list one that
  // needs gradients when any part does.
  return g.emit(matrix_shape(r, total), std::move(y), {grad_parent},
                [ids, widths, r, total](Graph& gr, std::uint32_t self) {
                  const auto& gy = gr.grad_of(self);
                  std::size_t off = 0;
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (gr.requires_grad(ids[k])) {
                      auto& gx = gr.grad_of(ids[k]);
                      for (std::size_t i = 0; i < r; ++i) {
                        for (std::size_t j = 0; j < widths[k]; ++j) {
                          gx[i * widths[k] + j] += gy[i * total + off + j];
                        }
                      }
                    }
                    off += widths[k];
                  }
                });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  Graph& g = parts[0].graph();
  const std::size_t c = parts[0].shape().cols();
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> sizes;
  std::size_t rows = 0;
  Var grad_parent = parts[0];
  for (const Var& p : parts) {
    if (&p.graph() != &g) throw ShapeError("operands belong to different graphs");
    if (p.shape().cols() != c) {
      throw ShapeError("concat_rows: column mismatch " + parts[0].shape().str() + " vs " + p.shape().str());
    }
    ids.push_back(p.id());
    sizes.push_back(p.shape().size());
    rows += p.shape().rows();
    if (g.requires_grad(p.id())) grad_parent = p;
  }
  std::vector<double> y;
  y.reserve(rows * c);
  for (const Var& p : parts) y.insert(y.end(), p.value().begin(), p.value().end());
  return g.emit(matrix_shape(rows, c), std::move(y), {grad_parent}, [ids, sizes](Graph& gr, std::uint32_t self) {
    const auto& gy = gr.grad_of(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (gr.requires_grad(ids[k])) {
        auto& gx = gr.grad_of(ids[k]);
        for (std::size_t i = 0; i < sizes[k]; ++i) gx[i] += gy[off + i];
      }
      off += sizes[k];
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value()) s += x;
  const std::uint32_t ia = a.id();
  return a.graph().emit(Shape{1}, {s}, {a}, [ia](Graph& g, std::uint32_t self) {
    const double gy = g.grad_of(self)[0];
    for (double& gx : g.grad_of(ia)) gx += gy;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.shape().size());
  return scale(sum(a), 1.0 / n);
}

}  // namespace hydrocast::ad
