#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "mopt/mlp.hpp"
#include "mopt/rng.hpp"

using namespace mopt;
using namespace mopt::nn;

namespace {

// central finite differences of a scalar function of the flat parameters
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& at,
                double h = 1e-6) {
  Vec g(at.size());
  Vec x = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    x[i] = at[i] + h;
    const double fp = f(x);
    x[i] = at[i] - h;
    const double fm = f(x);
    x[i] = at[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double max_rel_err(const Vec& got, const Vec& want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double denom = std::max(1e-6, std::fabs(want[i]));
    worst = std::max(worst, std::fabs(got[i] - want[i]) / denom);
  }
  return worst;
}

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("forward matches a hand-computed linear network") {
  MlpParams p;
  p.sizes = {2, 1};
  p.activation = Activation::identity;
  Matrix w(2, 1);
  w(0, 0) = 3.0;
  w(1, 0) = -2.0;
  p.weights = {w};
  p.biases = {Vec{0.5}};
  Matrix x(2, 2);
  x(0, 0) = 1.0; x(0, 1) = 1.0;
  x(1, 0) = -1.0; x(1, 1) = 2.0;
  MlpCache cache;
  const Matrix& out = forward(p, x, cache);
  CHECK(out(0, 0) == doctest::Approx(3.0 - 2.0 + 0.5));
  CHECK(out(1, 0) == doctest::Approx(-3.0 - 4.0 + 0.5));

  // input gradient of a linear net is the weight vector everywhere
  Matrix dout(2, 1, 1.0);
  Matrix dx;
  backward(p, cache, dout, nullptr, &dx);
  CHECK(dx(0, 0) == doctest::Approx(3.0));
  CHECK(dx(0, 1) == doctest::Approx(-2.0));
  CHECK(dx(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("zero-weight network has zero energy and zero input gradient") {
  RngStream rng(1);
  MlpParams p = MlpParams::random_init({3, 8, 8, 1}, rng);
  for (auto& w : p.weights) w.fill(0.0);
  for (auto& b : p.biases) b.assign(b.size(), 0.0);
  Matrix x = random_matrix(5, 3, rng);
  MlpCache cache;
  const Matrix& out = forward(p, x, cache);
  // softplus(0) = log 2 propagates, but with zero weights the output layer
  // still produces exactly 0
  for (std::size_t i = 0; i < out.rows(); ++i) CHECK(out(i, 0) == 0.0);
  Matrix dout(5, 1, 1.0);
  Matrix dx;
  backward(p, cache, dout, nullptr, &dx);
  for (std::size_t i = 0; i < dx.size(); ++i) CHECK(dx.data()[i] == 0.0);
}

TEST_CASE("input gradients match finite differences") {
  RngStream rng(7);
  MlpParams p = MlpParams::random_init({4, 16, 16, 1}, rng);
  Matrix x = random_matrix(3, 4, rng);
  MlpCache cache;
  forward(p, x, cache);
  Matrix dout(3, 1, 1.0);
  Matrix dx;
  backward(p, cache, dout, nullptr, &dx);

  MlpCache scratch;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double h = 1e-6;
      Matrix xp = x, xm = x;
      xp(r, j) += h;
      xm(r, j) -= h;
      const double fp = forward(p, xp, scratch)(r, 0);
      const double fm = forward(p, xm, scratch)(r, 0);
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(dx(r, j) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("parameter gradients of a sum-of-outputs loss match finite differences") {
  RngStream rng(11);
  MlpParams p = MlpParams::random_init({3, 8, 8, 2}, rng);
  const Matrix x = random_matrix(4, 3, rng);

  const auto loss = [&](const Vec& flat) {
    MlpParams q = p;
    q.unpack(flat);
    MlpCache cache;
    const Matrix& out = forward(q, x, cache);
    double sum = 0.0;
    // weighted sum so each output column matters differently
    for (std::size_t i = 0; i < out.rows(); ++i)
      sum += out(i, 0) + 2.0 * out(i, 1);
    return sum;
  };

  MlpCache cache;
  forward(p, x, cache);
  MlpGrads grads(p);
  Matrix dout(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    dout(i, 0) = 1.0;
    dout(i, 1) = 2.0;
  }
  backward(p, cache, dout, &grads, nullptr);

  const Vec got = grads.pack();
  const Vec want = fd_gradient(loss, p.pack(), 1e-6);
  CHECK(max_rel_err(got, want) < 1e-5);
}

TEST_CASE("dual_forward computes directional input derivatives") {
  RngStream rng(13);
  MlpParams p = MlpParams::random_init({3, 8, 8, 1}, rng);
  const Matrix x = random_matrix(5, 3, rng);
  const Matrix v = random_matrix(5, 3, rng);

  MlpCache cache;
  forward(p, x, cache);
  MlpDualCache dual;
  const Matrix& ydot = dual_forward(p, cache, v, dual);

  const double h = 1e-7;
  Matrix xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp.data()[i] += h * v.data()[i];
    xm.data()[i] -= h * v.data()[i];
  }
  MlpCache scratch;
  const Matrix fp = forward(p, xp, scratch);
  const Matrix fm = forward(p, xm, scratch);
  for (std::size_t i = 0; i < 5; ++i) {
    const double fd = (fp(i, 0) - fm(i, 0)) / (2.0 * h);
    CHECK(ydot(i, 0) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("dual_backward differentiates v . grad_x E w.r.t. parameters") {
  RngStream rng(17);
  MlpParams p = MlpParams::random_init({3, 8, 8, 1}, rng);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix v = random_matrix(4, 3, rng);

  // S(theta) = sum_rows v_r . grad_x E(x_r; theta)
  const auto s_of = [&](const Vec& flat) {
    MlpParams q = p;
    q.unpack(flat);
    MlpCache cache;
    forward(q, x, cache);
    Matrix dout(4, 1, 1.0);
    Matrix dx;
    backward(q, cache, dout, nullptr, &dx);
    double s = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) s += dx.data()[i] * v.data()[i];
    return s;
  };

  MlpCache cache;
  forward(p, x, cache);
  MlpDualCache dual;
  dual_forward(p, cache, v, dual);
  MlpGrads grads(p);
  Matrix cdot(4, 1, 1.0);
  dual_backward(p, cache, dual, cdot, &grads);

  const Vec got = grads.pack();
  const Vec want = fd_gradient(s_of, p.pack(), 1e-5);
  CHECK(max_rel_err(got, want) < 1e-4);
}

TEST_CASE("adam shrinks a simple quadratic") {
  Adam adam;
  adam.lr = 0.05;
  Vec params{5.0, -3.0, 2.0};
  for (int i = 0; i < 400; ++i) {
    Vec grad(3);
    for (std::size_t j = 0; j < 3; ++j) grad[j] = 2.0 * params[j];
    adam.step(params, grad);
  }
  for (double v : params) CHECK(std::fabs(v) < 1e-2);
}

TEST_CASE("pack/unpack round-trips parameters") {
  RngStream rng(23);
  MlpParams p = MlpParams::random_init({5, 7, 3}, rng);
  const Vec flat = p.pack();
  MlpParams q = MlpParams::random_init({5, 7, 3}, rng);
  q.unpack(flat);
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    for (std::size_t i = 0; i < p.weights[l].size(); ++i)
      CHECK(q.weights[l].data()[i] == p.weights[l].data()[i]);
    CHECK(q.biases[l] == p.biases[l]);
  }
}
