#include <doctest.h>

#include <cmath>

#include "core/nn.hpp"

using namespace gi;
using namespace gi::nn;

namespace {

// Central finite-difference check of d(sum(net(x)))/dx against backward().
void check_input_gradient(Layer& layer, const Tensor& x, double tol = 2e-3) {
  Tensor y = layer.forward(x);
  Tensor dy(y.shape());
  dy.fill(1.0f);
  Tensor dx = layer.backward(dy);
  REQUIRE(dx.same_shape(x));

  const float h = 1e-3f;
  for (size_t i = 0; i < x.size(); i += std::max<size_t>(1, x.size() / 23)) {
    Tensor xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    double sp = 0.0, sm = 0.0;
    Tensor yp = layer.forward(xp);
    for (size_t j = 0; j < yp.size(); ++j) sp += yp[j];
    Tensor ym = layer.forward(xm);
    for (size_t j = 0; j < ym.size(); ++j) sm += ym[j];
    double fd = (sp - sm) / (2.0 * h);
    double denom = std::max(1.0, std::abs(fd));
    CHECK(std::abs(dx[i] - fd) / denom < tol);
  }
  layer.forward(x);  // restore caches
}

Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(rng.normal() * 0.5);
  return t;
}

}  // namespace

TEST_CASE("dense input gradient matches finite differences") {
  Rng rng(1);
  Dense d(6, 4, rng);
  check_input_gradient(d, random_tensor({3, 6}, 2));
}

TEST_CASE("conv input gradient matches finite differences") {
  Rng rng(1);
  SUBCASE("stride 1") {
    Conv2d c(2, 3, 3, 1, 1, rng);
    check_input_gradient(c, random_tensor({2, 2, 5, 5}, 3));
  }
  SUBCASE("stride 2") {
    Conv2d c(3, 4, 3, 2, 1, rng);
    check_input_gradient(c, random_tensor({1, 3, 6, 6}, 4));
  }
  SUBCASE("1x1 projection") {
    Conv2d c(3, 2, 1, 2, 0, rng);
    check_input_gradient(c, random_tensor({1, 3, 4, 4}, 5));
  }
}

TEST_CASE("conv weight gradient matches finite differences") {
  Rng rng(7);
  Conv2d c(2, 2, 3, 1, 1, rng);
  Tensor x = random_tensor({1, 2, 4, 4}, 8);
  std::vector<ParamRef> ps;
  c.collect_params("c", ps);
  zero_grads(ps);
  Tensor y = c.forward(x);
  Tensor dy(y.shape());
  dy.fill(1.0f);
  c.backward(dy);
  Tensor& w = *ps[0].value;
  Tensor& gw = *ps[0].grad;
  const float h = 1e-3f;
  for (size_t i = 0; i < w.size(); i += 5) {
    float orig = w[i];
    w[i] = orig + h;
    double sp = 0.0, sm = 0.0;
    Tensor yp = c.forward(x);
    for (size_t j = 0; j < yp.size(); ++j) sp += yp[j];
    w[i] = orig - h;
    Tensor ym = c.forward(x);
    for (size_t j = 0; j < ym.size(); ++j) sm += ym[j];
    w[i] = orig;
    double fd = (sp - sm) / (2.0 * h);
    CHECK(std::abs(gw[i] - fd) / std::max(1.0, std::abs(fd)) < 2e-3);
  }
}

TEST_CASE("upsample, activations, pooling gradients") {
  Upsample2x up;
  check_input_gradient(up, random_tensor({1, 2, 3, 3}, 9));
  LeakyReLU lrelu(0.2f);
  check_input_gradient(lrelu, random_tensor({2, 5}, 10));
  Tanh th;
  check_input_gradient(th, random_tensor({2, 5}, 11));
  GlobalAvgPool gap;
  check_input_gradient(gap, random_tensor({2, 3, 4, 4}, 12));
}

TEST_CASE("residual block gradient matches finite differences") {
  Rng rng(2);
  SUBCASE("identity skip") {
    ResidualBlock rb(3, 3, 1, rng);
    check_input_gradient(rb, random_tensor({1, 3, 4, 4}, 13));
  }
  SUBCASE("projected skip, stride 2") {
    ResidualBlock rb(2, 4, 2, rng);
    check_input_gradient(rb, random_tensor({1, 2, 6, 6}, 14));
  }
}

TEST_CASE("sequential chains gradients") {
  Rng rng(3);
  Sequential net;
  net.add(std::make_unique<Dense>(4, 8, rng));
  net.add(std::make_unique<LeakyReLU>(0.2f));
  net.add(std::make_unique<Dense>(8, 2, rng));
  net.add(std::make_unique<Tanh>());
  check_input_gradient(net, random_tensor({2, 4}, 15));
}

TEST_CASE("weights hash detects mutation") {
  Rng rng(4);
  Dense d(3, 3, rng);
  std::vector<ParamRef> ps;
  d.collect_params("d", ps);
  uint64_t before = weights_hash(ps);
  CHECK(weights_hash(ps) == before);
  d.weight()[0] += 1.0f;
  CHECK(weights_hash(ps) != before);
}

TEST_CASE("AdamOpt reduces a quadratic") {
  Rng rng(5);
  Dense d(1, 1, rng, true);  // y = w x + b, start at zero
  std::vector<ParamRef> ps;
  d.collect_params("d", ps);
  AdamOpt opt(ps, 0.05);
  // fit y = 2x + 1 on a few points
  double last = 1e9;
  for (int step = 0; step < 400; ++step) {
    opt.zero_grad();
    Tensor x({4, 1}, {-1.0f, 0.0f, 1.0f, 2.0f});
    Tensor y = d.forward(x);
    Tensor dy(y.shape());
    double loss = 0.0;
    for (int i = 0; i < 4; ++i) {
      float t = 2.0f * x[i] + 1.0f;
      loss += (y[i] - t) * (y[i] - t);
      dy[i] = 2.0f * (y[i] - t) / 4.0f;
    }
    d.backward(dy);
    opt.step();
    last = loss / 4.0;
  }
  CHECK(last < 1e-3);
}
