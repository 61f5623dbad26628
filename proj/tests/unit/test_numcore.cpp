#include <doctest.h>

#include <cmath>
#include <random>

#include "tio/num/gradcheck.hpp"
#include "tio/num/ops.hpp"
#include "tio/util/error.hpp"

using namespace tio::num;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

/// Gradient check of a unary op applied to a random input, reduced by a random linear functional.
double check_unary(const std::function<Var(Var)>& op, Shape shape, std::uint64_t seed, double lo = -2.0,
                   double hi = 2.0) {
  std::mt19937_64 rng(seed);
  Parameter x("x", random_tensor(shape, rng, lo, hi));
  LossBuilder f = [&](Tape& t) {
    Var y = op(t.parameter(x));
    std::mt19937_64 wrng(seed + 1000);
    return sum(mul(y, t.constant(random_tensor(y.shape(), wrng))));
  };
  std::vector<Parameter*> params{&x};
  return finite_diff_check(f, params, 1e-6).max_rel_error;
}

}  // namespace

TEST_CASE("tensor invariants") {
  Tensor t(Shape{2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), tio::DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), tio::DimensionError);
  CHECK(Tensor::scalar(3.0).is_scalar());
}

TEST_CASE("matmul examples") {
  Tape t;
  auto eye = t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  auto m = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  CHECK(matmul(eye, m).value() == m.value());

  auto row = t.constant(Tensor::matrix(1, 2, {1, 2}));
  auto col = t.constant(Tensor::matrix(2, 1, {3, 4}));
  auto dot = matmul(row, col);
  CHECK(dot.shape() == Shape{1, 1});
  CHECK(dot.value()[0] == 11.0);

  std::mt19937_64 rng(3);
  auto z = matmul(t.constant(Tensor::zeros({2, 3})), t.constant(random_tensor({3, 4}, rng)));
  CHECK(z.value() == Tensor::zeros({2, 4}));

  auto v = matmul(m, t.constant(Tensor::vector({1, 1})));
  CHECK(v.shape() == Shape{2});
  CHECK(v.value()[1] == 7.0);
}

TEST_CASE("matmul shape mismatch reports both shapes") {
  Tape t;
  auto a = t.constant(Tensor::zeros({2, 3}));
  auto b = t.constant(Tensor::zeros({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected a dimension error");
  } catch (const tio::DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("sigmoid and tanh values") {
  Tape t;
  auto x = t.constant(Tensor::vector({0.0, 2.0, -2.0, 800.0, -800.0}));
  auto s = sigmoid(x).value();
  CHECK(s[0] == 0.5);
  CHECK(s[1] == doctest::Approx(0.8807970779778823).epsilon(1e-15));
  CHECK(s[2] == doctest::Approx(1.0 - s[1]).epsilon(1e-15));
  CHECK(s.all_finite());
  CHECK(tanh(t.constant(Tensor::scalar(0.0))).value()[0] == 0.0);
}

TEST_CASE("sigmoid and tanh stay in their open ranges") {
  std::mt19937_64 rng(11);
  Tape t;
  auto x = t.constant(random_tensor({1000}, rng, -30.0, 30.0));
  for (double v : sigmoid(x).value().data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  for (double v : tanh(x).value().data()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("concat, elementwise identity, shapes") {
  Tape t;
  auto a = t.constant(Tensor::vector({1, 2}));
  auto b = t.constant(Tensor::vector({3, 4, 5}));
  auto c = concat({a, b});
  CHECK(c.shape() == Shape{5});
  CHECK(c.value()[4] == 5.0);

  auto x = t.constant(Tensor::vector({1.5, -2.0, 3.0}));
  CHECK(mul(x, t.constant(Tensor::ones({3}))).value() == x.value());
  CHECK_THROWS_AS(add(x, t.constant(Tensor::ones({2}))), tio::DimensionError);

  auto m1 = t.constant(Tensor::matrix(2, 1, {1, 2}));
  auto m2 = t.constant(Tensor::matrix(2, 2, {3, 4, 5, 6}));
  auto m = concat({m1, m2}, 1);
  CHECK(m.value() == Tensor::matrix(2, 3, {1, 3, 4, 2, 5, 6}));
  CHECK_THROWS_AS(concat({m1, t.constant(Tensor::zeros({3, 1}))}, 1), tio::DimensionError);
}

TEST_CASE("scalar broadcast only") {
  Tape t;
  auto x = t.constant(Tensor::vector({1, 2, 3}));
  auto s = t.constant(Tensor::scalar(2.0));
  CHECK(mul(s, x).value() == Tensor::vector({2, 4, 6}));
  CHECK(add(x, s).value() == Tensor::vector({3, 4, 5}));
  CHECK_THROWS_AS(add(x, t.constant(Tensor::vector({1}))), tio::DimensionError);
}

TEST_CASE("avg_pool") {
  Tape t;
  auto x = t.constant(Tensor::vector({2, 4, 6, 8}));
  CHECK(avg_pool(x, 2).value() == Tensor::vector({3, 7}));
  CHECK(avg_pool(x, 1).value() == x.value());
  auto c = avg_pool(t.constant(Tensor(Shape{12}, 0.75)), 4).value();
  CHECK(c == Tensor(Shape{3}, 0.75));
  CHECK_THROWS_AS(avg_pool(x, 3), tio::InvalidPoolError);

  std::mt19937_64 rng(5);
  auto r = t.constant(random_tensor({24}, rng));
  double in_mean = 0.0, out_mean = 0.0;
  for (double v : r.value().data()) in_mean += v / 24.0;
  for (double v : avg_pool(r, 6).value().data()) out_mean += v / 4.0;
  CHECK(out_mean == doctest::Approx(in_mean).epsilon(1e-14));
}

TEST_CASE("dropout") {
  Tape t;
  std::mt19937_64 rng(9);
  auto x = t.constant(random_tensor({64}, rng));
  CHECK(dropout(x, 0.25, false, 1).value() == x.value());
  CHECK(dropout(x, 0.0, true, 1).value() == x.value());
  CHECK_THROWS_AS(dropout(x, 1.0, true, 1), tio::ParameterError);
  CHECK_THROWS_AS(dropout(x, -0.1, true, 1), tio::ParameterError);

  auto big = t.constant(Tensor::ones({100000}));
  auto d = dropout(big, 0.25, true, 42).value();
  std::size_t kept = 0;
  for (double v : d.data()) {
    if (v != 0.0) {
      ++kept;
      CHECK(v == doctest::Approx(1.0 / 0.75));
    }
  }
  CHECK(std::abs(static_cast<double>(kept) / 1e5 - 0.75) <= 0.01);
  CHECK(dropout(big, 0.25, true, 42).value() == d);
  CHECK_FALSE(dropout(big, 0.25, true, 43).value() == d);
}

TEST_CASE("backward examples") {
  {
    Tape t;
    Tensor xv = Tensor::vector({1, 2, 3});
    xv.set_requires_grad(true);
    auto x = t.leaf(xv);
    t.backward(sum(x));
    CHECK(t.grad(x) == Tensor::vector({1, 1, 1}));
  }
  {
    Tape t;
    Tensor xv = Tensor::vector({1, 2});
    xv.set_requires_grad(true);
    auto x = t.leaf(xv);
    t.backward(sum(mul(x, x)));
    CHECK(t.grad(x) == Tensor::vector({2, 4}));
  }
  {
    Tape t;
    Parameter p("p", Tensor::vector({5, 6}));
    auto pv = t.parameter(p);
    Tensor xv = Tensor::vector({1, 2});
    xv.set_requires_grad(true);
    auto x = t.leaf(xv);
    (void)pv;
    t.backward(sum(x));
    CHECK(t.grad(pv) == Tensor::zeros({2}));
    CHECK(p.grad == Tensor::zeros({2}));
  }
  {
    Tape t;
    auto x = t.constant(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(t.backward(x), tio::ContractError);
  }
}

TEST_CASE("a tensor consumed twice accumulates gradients") {
  Tape t;
  Parameter p("p", Tensor::vector({1.0, -3.0}));
  auto x = t.parameter(p);
  auto y = add(scale(x, 2.0), tanh(x));
  t.backward(sum(y));
  for (std::size_t i = 0; i < 2; ++i) {
    const double th = std::tanh(p.value[i]);
    CHECK(p.grad[i] == doctest::Approx(2.0 + 1.0 - th * th).epsilon(1e-14));
  }
}

TEST_CASE("tape order is topological") {
  Tape t;
  auto a = t.constant(Tensor::vector({1, 2}));
  auto b = sigmoid(a);
  auto c = concat({a, b});
  auto d = sum(c);
  for (std::uint32_t i = 0; i < t.size(); ++i) {
    for (auto p : t.node(i).parents) CHECK(p < i);
  }
  CHECK(d.id() == t.size() - 1);
}

TEST_CASE("finite_diff_check on quadratic form and constant") {
  std::mt19937_64 rng(21);
  Parameter x("x", random_tensor({6}, rng));
  Parameter a("A", random_tensor({6, 6}, rng));
  a.trainable = false;
  std::vector<Parameter*> params{&x};
  LossBuilder quad = [&](Tape& t) {
    auto xv = t.parameter(x);
    return sum(mul(xv, matmul(t.parameter(a), xv)));
  };
  CHECK(finite_diff_check(quad, params, 1e-5).max_rel_error <= 1e-6);

  LossBuilder constant = [&](Tape& t) {
    t.parameter(x);
    return t.constant(Tensor::scalar(4.0));
  };
  auto r = finite_diff_check(constant, params, 1e-5);
  CHECK(r.max_rel_error == 0.0);
  CHECK(x.grad == Tensor::zeros({6}));
}

TEST_CASE("finite_diff_check rejects non-finite losses") {
  Parameter x("x", Tensor::vector({1.0}));
  std::vector<Parameter*> params{&x};
  LossBuilder bad = [&](Tape& t) {
    auto v = t.parameter(x);
    return sum(scale(v, std::numeric_limits<double>::infinity()));
  };
  CHECK_THROWS_AS(finite_diff_check(bad, params, 1e-5), tio::NumericError);
}

TEST_CASE("every differentiable op matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CHECK(check_unary([](Var v) { return sigmoid(v); }, {7}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return tanh(v); }, {7}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return leaky_relu(v, 0.1); }, {7}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return huber(v, 1.0); }, {9}, seed, -3.0, 3.0) <= 1e-4);
    CHECK(check_unary([](Var v) { return half_square(v); }, {5}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return wrap_angle(v); }, {5}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return avg_pool(v, 3); }, {2, 6}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return scale(v, -1.7); }, {4}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return mul(v, v); }, {4}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return sub(v, scale(v, 0.3)); }, {4}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return slice(v, 2, 3); }, {6}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return reshape(v, {3, 2}); }, {6}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return dropout(v, 0.25, true, 77); }, {16}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return concat({v, sigmoid(v)}, 1); }, {2, 3}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return mul(v, v.tape().constant(Tensor::scalar(1.3))); }, {4}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return add(sum(v), v); }, {4}, seed) <= 1e-4);
    CHECK(check_unary([](Var v) { return mean(v); }, {4}, seed) <= 1e-4);
  }
}

TEST_CASE("matmul and conv2d gradients") {
  std::mt19937_64 rng(8);
  Parameter a("a", random_tensor({3, 4}, rng));
  Parameter b("b", random_tensor({4, 2}, rng));
  Parameter v("v", random_tensor({4}, rng));
  std::vector<Parameter*> mm{&a, &b, &v};
  LossBuilder f = [&](Tape& t) {
    auto av = t.parameter(a);
    auto prod = matmul(av, t.parameter(b));
    return add(sum(tanh(prod)), sum(sigmoid(matmul(av, t.parameter(v)))));
  };
  CHECK(finite_diff_check(f, mm, 1e-6).max_rel_error <= 1e-4);

  Parameter x("x", random_tensor({2, 5, 6}, rng));
  Parameter w("w", random_tensor({3, 2, 3, 3}, rng));
  Parameter bias("bias", random_tensor({3}, rng));
  std::vector<Parameter*> conv{&x, &w, &bias};
  LossBuilder g = [&](Tape& t) {
    auto y = conv2d(t.parameter(x), t.parameter(w), t.parameter(bias), 2, 1);
    return sum(tanh(y));
  };
  CHECK(finite_diff_check(g, conv, 1e-6).max_rel_error <= 1e-4);
}

TEST_CASE("conv2d identity kernel and output shape") {
  Tape t;
  std::mt19937_64 rng(4);
  auto x = t.constant(random_tensor({1, 4, 4}, rng));
  Tensor k(Shape{1, 1, 3, 3});
  k[4] = 1.0;
  auto y = conv2d(x, t.constant(k), t.constant(Tensor::zeros({1})), 1, 1);
  CHECK(y.value().reshaped({1, 4, 4}) == x.value());
  auto z = conv2d(x, t.constant(Tensor::zeros({5, 1, 3, 3})), t.constant(Tensor::zeros({5})), 2, 1);
  CHECK(z.shape() == Shape{5, 2, 2});
}

TEST_CASE("evaluation is deterministic") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tape t;
    auto x = t.constant(random_tensor({32}, rng));
    auto w = t.constant(random_tensor({16, 32}, rng));
    return dropout(tanh(matmul(w, x)), 0.25, true, 5).value();
  };
  CHECK(run() == run());
}

TEST_CASE("wrap_to_pi lands in (-pi, pi]") {
  CHECK(wrap_to_pi(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_to_pi(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_to_pi(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(wrap_to_pi(0.25 + 4 * std::numbers::pi) == doctest::Approx(0.25));
}

TEST_CASE("huber is bounded-gradient and matches hand values") {
  Tape t;
  Tensor xv = Tensor::vector({0.0, 2.0, 1.0, -10.0});
  xv.set_requires_grad(true);
  auto x = t.leaf(xv);
  auto h = huber(x, 1.0);
  CHECK(h.value()[0] == 0.0);
  CHECK(h.value()[1] == 1.5);
  CHECK(h.value()[2] == 0.5);
  CHECK(h.value()[3] == 9.5);
  t.backward(sum(h));
  const Tensor gx = t.grad(x);
  for (double g : gx.data()) CHECK(std::abs(g) <= 1.0);
}
