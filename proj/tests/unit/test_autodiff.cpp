#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "hydrocast/autodiff.hpp"
#include "hydrocast/error.hpp"

namespace ad = hydrocast::ad;
using ad::Shape;
using ad::Var;

namespace {

// Compares tape gradients of a scalar function of leaves against central
// differences.
void check_gradient(const std::vector<ad::Tensor>& inputs,
                    const std::function<Var(ad::Graph&, std::vector<Var>&)>& fn, double tol = 1e-6) {
  std::vector<ad::Tensor> params = inputs;
  {
    ad::Graph g;
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(g.parameter(p));
    g.backward(fn(g, vars));
  }
  const double h = 1e-6;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].values.size(); ++i) {
      auto eval = [&](double delta) {
        std::vector<ad::Tensor> shifted = inputs;
        shifted[k].values[i] += delta;
        ad::Graph g;
        std::vector<Var> vars;
        for (auto& p : shifted) vars.push_back(g.constant(p));
        return fn(g, vars).scalar();
      };
      const double fd = (eval(h) - eval(-h)) / (2 * h);
      CHECK(params[k].grad[i] == doctest::Approx(fd).epsilon(tol).scale(1.0));
    }
  }
}

ad::Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(s.size());
  for (auto& x : v) x = u(rng);
  return ad::Tensor(s, v);
}

}  // namespace

TEST_CASE("shapes fold into matrix views") {
  CHECK(Shape{5}.rows() == 1);
  CHECK(Shape{5}.cols() == 5);
  CHECK(Shape{2, 3, 4}.rows() == 6);
  CHECK(Shape{2, 3, 4}.cols() == 4);
  CHECK(Shape{2, 3}.size() == 6);
}

TEST_CASE("elementwise op gradients match finite differences") {
  std::mt19937_64 rng(3);
  const auto a = random_tensor(Shape{3, 4}, rng);
  const auto b = random_tensor(Shape{3, 4}, rng, 0.5, 2.0);
  check_gradient({a, b}, [](ad::Graph&, std::vector<Var>& v) { return ad::sum(ad::mul(v[0], v[1])); });
  check_gradient({a, b}, [](ad::Graph&, std::vector<Var>& v) { return ad::sum(ad::div(v[0], v[1])); });
  check_gradient({a, b}, [](ad::Graph&, std::vector<Var>& v) { return ad::mean(ad::sub(v[0], ad::square(v[1]))); });
  check_gradient({a}, [](ad::Graph&, std::vector<Var>& v) { return ad::sum(ad::sigmoid(ad::scale(v[0], 3.0))); });
  check_gradient({a}, [](ad::Graph&, std::vector<Var>& v) { return ad::sum(ad::tanh(ad::add_scalar(v[0], 0.2))); });
  check_gradient({a}, [](ad::Graph&, std::vector<Var>& v) { return ad::sum(ad::softplus(ad::scale(v[0], 4.0))); });
  check_gradient({a}, [](ad::Graph&, std::vector<Var>& v) { return ad::sum(ad::exp(v[0])); });
  check_gradient({b}, [](ad::Graph&, std::vector<Var>& v) { return ad::sum(ad::log(v[0])); });
}

TEST_CASE("matrix op gradients match finite differences") {
  std::mt19937_64 rng(5);
  const auto a = random_tensor(Shape{3, 4}, rng);
  const auto w = random_tensor(Shape{4, 2}, rng);
  const auto row = random_tensor(Shape{2}, rng);
  check_gradient({a, w, row}, [](ad::Graph&, std::vector<Var>& v) {
    return ad::sum(ad::square(ad::add_row(ad::matmul(v[0], v[1]), v[2])));
  });
  check_gradient({a}, [](ad::Graph&, std::vector<Var>& v) {
    Var left = ad::slice_cols(v[0], 0, 2), right = ad::slice_cols(v[0], 2, 4);
    Var top = ad::slice_rows(v[0], 0, 1), rest = ad::slice_rows(v[0], 1, 3);
    const std::vector<Var> cols{right, left}, rows{rest, top};
    return ad::add(ad::sum(ad::mul(ad::concat_cols(cols), v[0])), ad::sum(ad::square(ad::concat_rows(rows))));
  });
}

TEST_CASE("pinball gradient covers both sides of the kink") {
  std::mt19937_64 rng(7);
  const auto u = random_tensor(Shape{6, 1}, rng, -2.0, 2.0);
  const auto tau = random_tensor(Shape{6, 1}, rng, 0.1, 0.9);
  check_gradient({u, tau}, [](ad::Graph&, std::vector<Var>& v) { return ad::sum(ad::pinball(v[0], v[1])); });
}

TEST_CASE("clamp passes gradient only inside the interval") {
  ad::Tensor x(Shape{3}, {-2.0, 0.5, 3.0});
  ad::Graph g;
  Var v = g.parameter(x);
  g.backward(ad::sum(ad::clamp(v, 0.0, 1.0)));
  CHECK(x.grad == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("reused nodes accumulate gradient") {
  ad::Tensor x(Shape{1}, {1.5});
  ad::Graph g;
  Var v = g.parameter(x);
  g.backward(ad::sum(ad::mul(v, ad::mul(v, v))));  // x^3
  CHECK(x.grad[0] == doctest::Approx(3 * 1.5 * 1.5));
}

TEST_CASE("sigmoid and softplus stay finite for large inputs") {
  ad::Graph g;
  Var v = g.constant(Shape{2}, {-800.0, 800.0});
  const auto s = ad::sigmoid(v).value();
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(s[1] == doctest::Approx(1.0));
  const auto sp = ad::softplus(v).value();
  CHECK(sp[0] == doctest::Approx(0.0));
  CHECK(sp[1] == doctest::Approx(800.0));
}

TEST_CASE("backward rejects a non-scalar loss and mismatched shapes") {
  ad::Graph g;
  Var a = g.constant(Shape{2}, {1.0, 2.0});
  Var b = g.constant(Shape{3}, {1.0, 2.0, 3.0});
  CHECK_THROWS_AS(g.backward(a), hydrocast::ShapeError);
  CHECK_THROWS_AS(ad::add(a, b), hydrocast::ShapeError);
  CHECK_THROWS_AS(ad::matmul(a, b), hydrocast::ShapeError);
}
