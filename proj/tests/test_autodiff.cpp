#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "pamnet/autodiff.hpp"
#include "pamnet/common.hpp"

using namespace pamnet;
using namespace pamnet::ad;

namespace {

Tensor random_tensor(Rng& rng, int r, int c, double lo = -2.0, double hi = 2.0) {
  Tensor t(r, c);
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("linear matches hand example and identity") {
  // x=[[1,2]], W=[[3,4]], b=[5] -> [[16]].
  Tensor xv(1, 2);
  xv.at(0, 0) = 1;
  xv.at(0, 1) = 2;
  auto x = constant(xv);
  Tensor w(1, 2);
  w.at(0, 0) = 3;
  w.at(0, 1) = 4;
  Tensor b(1, 1);
  b.v[0] = 5;
  auto y = linear(x, constant(w), constant(b));
  CHECK(y->val.v[0] == 16.0);

  Tensor eye(2, 2);
  eye.at(0, 0) = 1;
  eye.at(1, 1) = 1;
  auto same = linear(x, constant(eye));
  CHECK(same->val.at(0, 0) == 1.0);
  CHECK(same->val.at(0, 1) == 2.0);
}

TEST_CASE("linear shape errors list both shapes") {
  Rng rng(4);
  auto x = constant(random_tensor(rng, 2, 3));
  auto w = constant(random_tensor(rng, 4, 5));
  CHECK_THROWS_WITH(linear(x, w), Catch::Matchers::ContainsSubstring("[2,3]") &&
                                      Catch::Matchers::ContainsSubstring("[4,5]"));
}

TEST_CASE("gradient checks for every differentiable op") {
  Rng rng(99);
  const double tol = 1e-5;

  SECTION("linear w.r.t. x, W, b") {
    auto x = parameter(random_tensor(rng, 3, 4), "x");
    auto w = parameter(random_tensor(rng, 2, 4), "w");
    auto b = parameter(random_tensor(rng, 1, 2), "b");
    auto eval = [&] {
      double s = 0;
      auto out = linear(x, w, b);
      for (double v : out->val.v) s += v;
      return s;
    };
    auto loss = sum_all(linear(x, w, b));
    backward(loss);
    CHECK(testutil::max_grad_error(*x, eval) < tol);
    CHECK(testutil::max_grad_error(*w, eval) < tol);
    CHECK(testutil::max_grad_error(*b, eval) < tol);
  }

  SECTION("elementwise add/sub/mul/scale") {
    auto a = parameter(random_tensor(rng, 3, 3), "a");
    auto b = parameter(random_tensor(rng, 3, 3), "b");
    auto eval = [&] {
      auto out = scale(mul(add(a, b), sub(a, b)), 0.7);
      double s = 0;
      for (double v : out->val.v) s += v;
      return s;
    };
    auto loss = sum_all(scale(mul(add(a, b), sub(a, b)), 0.7));
    backward(loss);
    CHECK(testutil::max_grad_error(*a, eval) < tol);
    CHECK(testutil::max_grad_error(*b, eval) < tol);
  }

  SECTION("swish gradient at 100 random points") {
    auto x = parameter(random_tensor(rng, 10, 10, -4.0, 4.0), "x");
    auto eval = [&] {
      auto out = swish(x);
      double s = 0;
      for (double v : out->val.v) s += v;
      return s;
    };
    auto loss = sum_all(swish(x));
    backward(loss);
    CHECK(testutil::max_grad_error(*x, eval, 1e-5) < 1e-7);
  }

  SECTION("sigmoid and leaky_relu") {
    auto x = parameter(random_tensor(rng, 4, 4), "x");
    auto eval = [&] {
      auto out = mul(sigmoid(x), leaky_relu(x, 0.2));
      double s = 0;
      for (double v : out->val.v) s += v;
      return s;
    };
    auto loss = sum_all(mul(sigmoid(x), leaky_relu(x, 0.2)));
    backward(loss);
    CHECK(testutil::max_grad_error(*x, eval) < tol);
  }

  SECTION("concat, gather, scatter") {
    auto a = parameter(random_tensor(rng, 4, 2), "a");
    auto b = parameter(random_tensor(rng, 4, 3), "b");
    const std::vector<int> gidx{0, 2, 2, 3, 1};
    const std::vector<int> sidx{1, 0, 1, 2, 0};
    auto graph = [&] { return scatter_add_rows(gather_rows(concat_cols({a, b}), gidx), sidx, 3); };
    auto eval = [&] {
      double s = 0;
      const auto out = graph();
      for (double v : out->val.v) s += v;
      return s;
    };
    auto loss = sum_all(graph());
    backward(loss);
    CHECK(testutil::max_grad_error(*a, eval) < tol);
    CHECK(testutil::max_grad_error(*b, eval) < tol);
  }

  SECTION("row_l2norm and scale_rows") {
    auto m = parameter(random_tensor(rng, 5, 3), "m");
    auto d = parameter(random_tensor(rng, 5, 3), "d");
    auto graph = [&] { return scale_rows(d, row_l2norm(m)); };
    auto eval = [&] {
      double s = 0;
      const auto out = graph();
      for (double v : out->val.v) s += v;
      return s;
    };
    auto loss = sum_all(graph());
    backward(loss);
    CHECK(testutil::max_grad_error(*m, eval) < tol);
    CHECK(testutil::max_grad_error(*d, eval) < tol);
  }

  SECTION("sum_rows / mean_rows / losses") {
    auto x = parameter(random_tensor(rng, 6, 2), "x");
    Tensor target = random_tensor(rng, 1, 2);
    auto graph = [&] { return smooth_l1_loss(mean_rows(x), target); };
    auto eval = [&] { return graph()->val.v[0]; };
    auto loss = graph();
    backward(loss);
    CHECK(testutil::max_grad_error(*x, eval) < tol);
  }
}

TEST_CASE("swish values") {
  auto x = constant(Tensor::scalar(0.0));
  CHECK(swish(x)->val.v[0] == 0.0);
  auto big = constant(Tensor::scalar(50.0));
  CHECK(swish(big)->val.v[0] / 50.0 == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("leaky_relu values") {
  Tensor t(1, 2);
  t.v = {0.0, -1.0};
  auto y = leaky_relu(constant(t), 0.2);
  CHECK(y->val.v[0] == 0.0);
  CHECK(y->val.v[1] == Catch::Approx(-0.2));
}

TEST_CASE("backward basics: sum and quadratic") {
  Rng rng(5);
  auto x = parameter(random_tensor(rng, 3, 2), "x");
  auto loss = sum_all(x);
  backward(loss);
  for (double g : x->grad.v) CHECK(g == 1.0);

  x->zero_grad();
  auto loss2 = sum_all(mul(x, x));
  backward(loss2);
  for (std::size_t i = 0; i < x->val.numel(); ++i)
    CHECK(x->grad.v[i] == Catch::Approx(2.0 * x->val.v[i]).epsilon(1e-14));
}

TEST_CASE("backward visits each node exactly once and guards reuse") {
  Rng rng(8);
  auto x = parameter(random_tensor(rng, 2, 2), "x");
  // Diamond: y = swish(x); z = y*y + y.
  auto y = swish(x);
  auto z = add(mul(y, y), y);
  auto loss = sum_all(z);
  // Nodes requiring grad: x, y, mul, add, sum = 5.
  CHECK(backward(loss) == 5);
  CHECK_THROWS_AS(backward(loss), NumericError);

  auto nonscalar = add(x, x);
  CHECK_THROWS_AS(backward(nonscalar), ShapeError);
}

TEST_CASE("gradient accumulates across separate graphs on shared leaves") {
  auto x = parameter(Tensor::scalar(2.0), "x");
  backward(sum_all(mul(x, x)));  // d/dx x^2 = 4
  backward(sum_all(scale(x, 3.0)));  // +3
  CHECK(x->grad.v[0] == Catch::Approx(7.0));
}

TEST_CASE("non-finite outputs are rejected") {
  Tensor t = Tensor::scalar(1e308);
  auto x = constant(t);
  CHECK_THROWS_AS(add(x, x), NumericError);
}

TEST_CASE("mae loss values and zero-duplicate cases") {
  Tensor target(2, 1);
  target.v = {1.0, -1.0};
  Tensor pv(2, 1);
  pv.v = {1.5, -2.0};
  auto pred = constant(pv);
  CHECK(mae_loss(pred, target)->val.v[0] == Catch::Approx(0.75));
  CHECK(smooth_l1_loss(pred, target)->val.v[0] == Catch::Approx(0.5 * (0.5 * 0.25 + 0.5)));
}
