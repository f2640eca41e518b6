#include <doctest.h>

#include <cmath>

#include "bsf/core/error.hpp"
#include "bsf/net/loss.hpp"
#include "bsf/net/network.hpp"
#include "oracles.hpp"

using namespace bsf;
using namespace bsf::net;

namespace {

Tensor naive_conv(const Conv1d& c, const Tensor& x) {
  const std::size_t n = x.shape()[0], len = x.shape()[2];
  const std::size_t out_len = (len + c.stride - 1) / c.stride;
  const std::size_t span = (out_len - 1) * c.stride + c.kernel;
  const long pad = span > len ? static_cast<long>((span - len) / 2) : 0;
  Tensor y({n, c.out_channels, out_len});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < c.out_channels; ++o)
      for (std::size_t t = 0; t < out_len; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.in_channels; ++i)
          for (std::size_t k = 0; k < c.kernel; ++k) {
            const long pos = static_cast<long>(t * c.stride + k) - pad;
            if (pos < 0 || pos >= static_cast<long>(len)) continue;
            s += c.weight.data()[(o * c.in_channels + i) * c.kernel + k] * x.data()[(b * c.in_channels + i) * len + pos];
          }
        y.data()[(b * c.out_channels + o) * out_len + t] = s + c.bias[o];
      }
  return y;
}

// Fills every parameter (and gate p) with random values.
void randomize(Network& net, RngStream& rng) {
  for (auto& v : net.parameters()) {
    for (double& x : v.value) x = v.is_gate ? rng.uniform(0.05, 0.95) : rng.uniform(-0.8, 0.8);
  }
}

struct FdResult {
  double worst = 0.0;
  std::size_t checked = 0;
};

// Compares analytic parameter gradients of loss(net) with central differences.
FdResult check_gradients(Network& net, const std::function<double()>& loss, const std::function<void()>& compute,
                         bool include_gates) {
  compute();
  std::vector<std::vector<double>> analytic;
  for (auto& v : net.parameters()) analytic.emplace_back(v.grad.begin(), v.grad.end());
  FdResult res;
  auto params = net.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].is_gate && !include_gates) continue;
    for (std::size_t i = 0; i < params[k].value.size(); ++i) {
      const double fd = oracle::central_difference(loss, &params[k].value[i], 1e-5);
      res.worst = std::max(res.worst, oracle::relative_error(analytic[k][i], fd, 1e-4));
      ++res.checked;
    }
  }
  return res;
}

}  // namespace

TEST_CASE("identity dense layer") {
  Network net({3});
  net.dense(3, 3);
  std::get<Dense>(net.layers()[0]).weight = Tensor::identity(3);
  const Tensor x = Tensor::matrix({{1, -2, 3.5}, {0.25, 0, 9}});
  CHECK(net.forward(x).output() == x);
}

TEST_CASE("open gate network in train mode") {
  Network net({4});
  net.gate();
  RngStream rng(1);
  const Tensor x = Tensor::matrix({{1, 2, 3, 4}});
  const auto trace = net.forward(x, &rng);
  CHECK(trace.output() == x);
  CHECK(trace.masks[0].r == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("two-layer forward matches a hand-unrolled composition") {
  Network net({5});
  net.dense(5, 4).relu().dense(4, 3);
  net.init(3);
  RngStream rng(8);
  const Tensor x = oracle::random_tensor({6, 5}, rng);
  const auto& d1 = std::get<Dense>(net.layers()[0]);
  const auto& d2 = std::get<Dense>(net.layers()[2]);
  Tensor h = oracle::naive_matmul(x, d1.weight);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::max(0.0, h[i] + d1.bias[i % 4]);
  Tensor out = oracle::naive_matmul(h, d2.weight);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += d2.bias[i % 3];
  CHECK(max_abs_diff(net.forward(x).output(), out) <= 1e-12);
  CHECK(max_abs_diff(net.predict(x), out) <= 1e-12);
}

TEST_CASE("conv1d forward matches the direct sum") {
  RngStream rng(12);
  for (std::size_t stride : {1u, 2u, 3u})
    for (std::size_t kernel : {1u, 3u, 4u, 7u}) {
      Network net({2, 11});
      net.conv1d(2, 3, kernel, stride);
      randomize(net, rng);
      const Tensor x = oracle::random_tensor({4, 2, 11}, rng);
      const auto& conv = std::get<Conv1d>(net.layers()[0]);
      CHECK(net.output_shape() == Shape{3, (11 + stride - 1) / stride});
      CHECK(max_abs_diff(net.predict(x), naive_conv(conv, x)) <= 1e-12);
    }
}

TEST_CASE("same padding keeps positions aligned for odd kernels") {
  Network net({1, 9});
  net.conv1d(1, 1, 3);
  auto& c = std::get<Conv1d>(net.layers()[0]);
  c.weight = Tensor({1, 1, 3}, std::vector<double>{0, 1, 0});
  Tensor x({1, 1, 9});
  for (std::size_t i = 0; i < 9; ++i) x[i] = static_cast<double>(i);
  CHECK(net.predict(x) == x);
}

TEST_CASE("dense squared-loss gradient closed form") {
  Network net({3});
  net.dense(3, 1);
  net.init(0);
  const Tensor x = Tensor::matrix({{0.5, -1, 2}});
  const Tensor y = Tensor::matrix({{0.25}});
  const auto trace = net.forward(x);
  const auto loss = squared_error(trace.output(), y);
  net.zero_grad();
  net.backward(trace, loss.grad);
  const double resid = trace.output()[0] - y[0];
  const auto& d = std::get<Dense>(net.layers()[0]);
  for (std::size_t i = 0; i < 3; ++i) CHECK(d.grad_weight[i] == doctest::Approx(2 * resid * x[i]).epsilon(1e-14));
  CHECK(d.grad_bias[0] == doctest::Approx(2 * resid).epsilon(1e-14));
}

TEST_CASE("parameter gradients match central differences") {
  RngStream rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Network net({6});
    net.dense(6, 5).relu().dense(5, 4).relu().dense(4, 3);
    randomize(net, rng);
    const Tensor x = oracle::random_tensor({7, 6}, rng, -2, 2);
    const std::vector<int> labels{0, 1, 2, 0, 1, 2, 1};
    const auto loss = [&] { return softmax_cross_entropy(net.forward(x).output(), labels).loss; };
    const auto compute = [&] {
      const auto trace = net.forward(x);
      net.zero_grad();
      net.backward(trace, softmax_cross_entropy(trace.output(), labels).grad);
    };
    const auto res = check_gradients(net, loss, compute, false);
    CHECK(res.checked == 6 * 5 + 5 + 5 * 4 + 4 + 4 * 3 + 3);
    CHECK(res.worst <= 1e-6);
  }
}

TEST_CASE("conv gradients match central differences") {
  RngStream rng(44);
  for (std::size_t stride : {1u, 2u}) {
    Network net({2, 9});
    net.conv1d(2, 3, 4, stride).relu().conv1d(3, 2, 3).flatten().dense(2 * ((9 + stride - 1) / stride), 2);
    randomize(net, rng);
    const Tensor x = oracle::random_tensor({3, 2, 9}, rng, -2, 2);
    const std::vector<int> labels{0, 1, 1};
    const auto loss = [&] { return softmax_cross_entropy(net.forward(x).output(), labels).loss; };
    const auto compute = [&] {
      const auto trace = net.forward(x);
      net.zero_grad();
      net.backward(trace, softmax_cross_entropy(trace.output(), labels).grad);
    };
    CHECK(check_gradients(net, loss, compute, false).worst <= 1e-6);
  }
}

// With the mask fixed to p itself the forward pass is the mean-field surrogate
// f(x∘p); its derivative with respect to p is what the plain estimator
// computes, and the scaled estimator multiplies it by p.
TEST_CASE("gate gradients match the surrogate's central differences") {
  RngStream rng(53);
  for (const auto estimator : {filter::GradientEstimator::plain, filter::GradientEstimator::scaled}) {
    Network net({5});
    net.gate(0.25, 0.0).dense(5, 4).relu().gate(0.25, 0.0).dense(4, 2);
    randomize(net, rng);
    for (std::size_t gi : net.gate_indices()) net.gate_at(gi).estimator = estimator;
    const Tensor x = oracle::random_tensor({4, 5}, rng, -2, 2);
    const std::vector<int> labels{0, 1, 1, 0};
    const auto masks = [&] {
      std::vector<filter::BsfMask> m(net.size());
      for (std::size_t gi : net.gate_indices()) m[gi] = {net.gate_at(gi).p, 1, net.gate_at(gi).n_gates()};
      return m;
    };
    const auto loss = [&] {
      const auto m = masks();
      return softmax_cross_entropy(net.replay(x, m).output(), labels).loss;
    };
    const auto compute = [&] {
      const auto m = masks();
      const auto trace = net.replay(x, m);
      net.zero_grad();
      net.backward(trace, softmax_cross_entropy(trace.output(), labels).grad);
    };
    compute();
    std::vector<std::vector<double>> analytic;
    for (auto& v : net.parameters()) analytic.emplace_back(v.grad.begin(), v.grad.end());
    auto params = net.parameters();
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].value.size(); ++i) {
        const double p = params[k].value[i];
        double fd = oracle::central_difference(loss, &params[k].value[i], 1e-5);
        if (params[k].is_gate && estimator == filter::GradientEstimator::scaled) fd *= p;
        worst = std::max(worst, oracle::relative_error(analytic[k][i], fd, 1e-4));
      }
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("zero upstream leaves only the penalty subgradient") {
  Network net({3});
  net.gate(0.25, 0.2).dense(3, 2);
  net.init(1);
  net.gate_at(0).p = {0.5, 0.0, 1.0};
  RngStream rng(0);
  const auto trace = net.forward(Tensor({2, 3}, 1.0), &rng);
  net.zero_grad();
  net.backward(trace, Tensor({2, 2}));
  CHECK(std::get<Gate>(net.layers()[0]).grad_p == std::vector<double>{0.2, 0.0, 0.2});
  for (auto& v : net.parameters())
    if (!v.is_gate)
      for (double g : v.grad) CHECK(g == 0.0);
}

TEST_CASE("infer mode consumes no randomness") {
  Network net({4});
  net.gate().dense(4, 3).relu().dense(3, 2);
  net.init(5);
  net.gate_at(0).p = {0.9, 0.1, 0.6, 0.3};
  net.set_mode(Mode::infer);
  RngStream rng(0);
  const Tensor x({3, 4}, 0.7);
  const auto a = net.forward(x, &rng).output();
  CHECK(rng.counter() == 0);
  CHECK(net.forward(x).output() == a);
  CHECK(net.predict(x) == a);
}

TEST_CASE("shape and state errors") {
  Network net({4});
  net.dense(4, 3);
  CHECK_THROWS_AS(net.dense(4, 2), ShapeError);
  CHECK_THROWS_AS(net.conv1d(3, 2, 3), ShapeError);
  CHECK_THROWS_AS(net.gate(filter::GroupMap::identity(5)), ShapeError);
  CHECK_THROWS_AS(net.forward(Tensor({2, 5})), ShapeError);
  CHECK_THROWS_AS(net.forward(Tensor::vector({1, 2, 3, 4})), ShapeError);
  CHECK_THROWS_AS(Network({0}), ShapeError);
  CHECK_THROWS_AS(net.gate_at(0), StructureError);

  net.relu().gate();
  CHECK_THROWS_AS(net.forward(Tensor({2, 4})), StateError);
  RngStream rng(0);
  const auto trace = net.forward(Tensor({2, 4}), &rng);
  CHECK_THROWS_AS(net.backward(trace, Tensor({2, 4})), ShapeError);

  Network other({4});
  other.dense(4, 3);
  CHECK_THROWS_AS(other.backward(trace, Tensor({2, 3})), StateError);

  Trace stale = trace;
  stale.masks[2] = {};
  CHECK_THROWS_AS(net.backward(stale, Tensor({2, 3})), StateError);
}

TEST_CASE("initialization is keyed by weighted-layer ordinal") {
  Network plain({4});
  plain.dense(4, 8).relu().dense(8, 2);
  Network gated({4});
  gated.gate().dense(4, 8).relu().gate().dense(8, 2);
  plain.init(77);
  gated.init(77);
  CHECK(std::get<Dense>(plain.layers()[0]).weight == std::get<Dense>(gated.layers()[1]).weight);
  CHECK(std::get<Dense>(plain.layers()[2]).weight == std::get<Dense>(gated.layers()[4]).weight);
  Network again({4});
  again.dense(4, 8).relu().dense(8, 2);
  again.init(77);
  CHECK(again == plain);
  again.init(78);
  CHECK_FALSE(again == plain);
  const double limit = std::sqrt(6.0 / 4.0);
  for (double w : std::get<Dense>(plain.layers()[0]).weight.data()) CHECK(std::abs(w) <= limit);
}

TEST_CASE("penalties and weight counts") {
  Network net({10});
  net.gate().dense(10, 100).relu().gate().dense(100, 2);
  const std::vector<double> two{0.1, 0.01};
  net.set_penalties(two);
  CHECK(net.gate_at(0).lambda == 0.1);
  CHECK(net.gate_at(3).lambda == 0.01);
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(net.set_penalties(three), InputError);
  const std::vector<double> negative{-1};
  CHECK_THROWS_AS(net.set_penalties(negative), DomainError);
  CHECK(net.penalty() == doctest::Approx(0.1 * 10 + 0.01 * 100));
  CHECK(net.weight_count() == 10 * 100 + 100 + 100 * 2 + 2);
}

TEST_CASE("softmax cross-entropy") {
  const std::vector<int> one{0};
  CHECK(softmax_cross_entropy(Tensor({1, 2}), one).loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softmax_cross_entropy(Tensor::matrix({{50, 0}}), one).loss < 1e-8);
  const std::vector<int> bad{2};
  CHECK_THROWS_AS(softmax_cross_entropy(Tensor({1, 2}), bad), DomainError);
  const std::vector<int> negative{-1};
  CHECK_THROWS_AS(softmax_cross_entropy(Tensor({1, 2}), negative), DomainError);
  CHECK_THROWS_AS(softmax_cross_entropy(Tensor({2, 2}), one), ShapeError);
  CHECK(std::isfinite(softmax_cross_entropy(Tensor::matrix({{1000, -1000}}), one).loss));
}

TEST_CASE("softmax cross-entropy gradient matches central differences") {
  RngStream rng(6);
  Tensor logits = oracle::random_tensor({4, 3}, rng, -3, 3);
  const std::vector<int> labels{2, 0, 1, 1};
  const auto grad = softmax_cross_entropy(logits, labels).grad;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double fd = oracle::central_difference(
        [&] { return softmax_cross_entropy(logits, labels).loss; }, &logits[i], 1e-5);
    CHECK(std::abs(fd - grad[i]) <= 1e-8);
  }
}

TEST_CASE("accuracy and argmax") {
  CHECK(argmax_rows(Tensor::matrix({{0.1, 0.9}, {2, 2}, {3, -1}})) == std::vector<int>{1, 0, 0});
  const std::vector<int> a{0, 1, 1, 0}, b{0, 1, 0, 0};
  CHECK(accuracy(a, b) == 0.75);
}
