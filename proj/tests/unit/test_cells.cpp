#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fxbench/cells.hpp"
#include "support/oracles.hpp"

using namespace fxbench;
using fxbench::testing::compare_gradients;
using fxbench::testing::numeric_gradients;
using fxbench::testing::random_window;

namespace {

NetworkModel zero_model(Arch arch, std::size_t d, std::size_t h, std::size_t window = 1) {
  NetworkModel m = init_model(ModelSpec{arch, d, h, 1, window}, 1);
  for (Matrix& p : m.params) p.fill(0.0);
  return m;
}

}  // namespace

TEST_CASE("parameter counts follow the closed forms") {
  CHECK(init_model({Arch::mlp, 4, 6, 1, 1}, 0).parameter_count() == 37);
  CHECK(init_model({Arch::lstm, 4, 5, 1, 1}, 0).parameter_count() == 206);
  CHECK(init_model({Arch::gru, 4, 7, 1, 1}, 0).parameter_count() == 260);

  for (Arch arch : kAllArchs) {
    for (std::size_t h = 1; h <= 10; ++h) {
      const ModelSpec spec{arch, 4, h, 1, 1};
      std::size_t expected = 0;
      switch (arch) {
        case Arch::mlp: expected = 4 * h + h; break;
        case Arch::srnn: expected = 4 * h + h * h + h; break;
        case Arch::gru: expected = 3 * (h * (4 + h) + h); break;
        case Arch::lstm: expected = 4 * (h * (4 + h) + h); break;
      }
      expected += h + 1;
      CHECK(parameter_count(spec) == expected);
      CHECK(init_model(spec, 9).parameter_count() == expected);
    }
  }
}

TEST_CASE("structure string") {
  CHECK(ModelSpec{Arch::lstm, 4, 5, 1, 1}.structure() == "4-5-1");
}

TEST_CASE("spec validation") {
  CHECK_THROWS(ModelSpec{Arch::lstm, 4, 0, 1, 1}.validate());
  CHECK_THROWS(ModelSpec{Arch::mlp, 4, 3, 1, 2}.validate());
  CHECK_NOTHROW(ModelSpec{Arch::gru, 4, 3, 1, 3}.validate());
}

TEST_CASE("init_model is deterministic, Glorot bounded, zero-bias") {
  const ModelSpec spec{Arch::lstm, 4, 5, 1, 1};
  const NetworkModel a = init_model(spec, 123), b = init_model(spec, 123), c = init_model(spec, 124);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const auto& names = param_names(spec.arch);
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    const Matrix& p = a.params[i];
    if (names[i][0] == 'b') {
      for (double v : p.data()) CHECK(v == 0.0);
    } else {
      const double r = std::sqrt(6.0 / static_cast<double>(p.rows() + p.cols()));
      for (double v : p.data()) CHECK(std::abs(v) <= r);
    }
  }
}

TEST_CASE("LSTM zero-weight forward") {
  const NetworkModel m = zero_model(Arch::lstm, 4, 3);
  const std::vector<Vector> x{{0.3, 0.1, 0.9, 0.5}};
  const ForwardResult r = forward(m, x);
  const StepCache& s = r.cache.steps[0];
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(s.gate_i[k] == 0.5);
    CHECK(s.gate_f[k] == 0.5);
    CHECK(s.gate_o[k] == 0.5);
    CHECK(s.c[k] == 0.0);
    CHECK(s.h[k] == 0.0);
  }
  CHECK(r.yhat[0] == 0.0);

  InitialState init{Vector(3, 0.0), Vector(3, 1.0)};
  const ForwardResult seeded = forward(m, x, &init);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(seeded.cache.steps[0].c[k] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(seeded.cache.steps[0].h[k] == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
    CHECK(seeded.cache.steps[0].h[k] == doctest::Approx(0.23106).epsilon(1e-4));
  }
}

TEST_CASE("GRU and SRNN zero-weight forward") {
  const NetworkModel gru = zero_model(Arch::gru, 4, 2);
  InitialState init{Vector(2, 1.0), {}};
  const ForwardResult r = forward(gru, std::vector<Vector>{{1, 2, 3, 4}}, &init);
  CHECK(r.cache.steps[0].gate_z[0] == 0.5);
  CHECK(r.cache.steps[0].candidate[0] == 0.0);
  CHECK(r.cache.steps[0].h[0] == 0.5);
  CHECK(r.cache.steps[0].h[1] == 0.5);

  const NetworkModel srnn = zero_model(Arch::srnn, 4, 2);
  const ForwardResult s = forward(srnn, std::vector<Vector>{{1, 2, 3, 4}});
  CHECK(s.cache.steps[0].h == Vector{0.0, 0.0});
}

TEST_CASE("forward rejects window and dimension mismatches") {
  const NetworkModel m = init_model({Arch::gru, 4, 3, 1, 2}, 1);
  CHECK_THROWS_AS(forward(m, std::vector<Vector>{{1, 2, 3, 4}}), std::invalid_argument);
  CHECK_THROWS_AS(forward(m, std::vector<Vector>{{1, 2, 3}, {1, 2, 3}}), std::invalid_argument);
}

TEST_CASE("forward is pure and deterministic") {
  std::mt19937_64 rng(2);
  for (Arch arch : kAllArchs) {
    const std::size_t w = arch == Arch::mlp ? 1 : 3;
    const NetworkModel m = init_model({arch, 4, 5, 1, w}, 77);
    const auto x = random_window(w, 4, rng);
    const ForwardResult a = forward(m, x), b = forward(m, x);
    CHECK(a.yhat == b.yhat);
    CHECK(a.cache.steps.back().h == b.cache.steps.back().h);
  }
}

TEST_CASE("zero cotangent gives zero gradients") {
  std::mt19937_64 rng(4);
  for (Arch arch : kAllArchs) {
    const NetworkModel m = init_model({arch, 4, 3, 1, 1}, 5);
    const ForwardResult r = forward(m, random_window(1, 4, rng));
    for (const Matrix& g : backward(m, r.cache, Vector{0.0})) {
      for (double v : g.data()) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("MLP hand chain rule") {
  NetworkModel m = init_model({Arch::mlp, 1, 1, 1, 1}, 0);
  m.param("W_h")(0, 0) = 0.0;
  m.param("b_h")(0, 0) = 0.0;
  m.param("W_out")(0, 0) = 1.0;
  m.param("b_out")(0, 0) = 0.0;
  const ForwardResult r = forward(m, std::vector<Vector>{{1.0}});
  const Gradients g = backward(m, r.cache, Vector{1.0});
  CHECK(g[2](0, 0) == 0.5);  // dL/dW_out = sigma(0)
  CHECK(g[3](0, 0) == 1.0);
  CHECK(g[0](0, 0) == 0.25);  // W_out * sigma'(0) * x
}

TEST_CASE("backward rejects a cache from another model") {
  const NetworkModel a = init_model({Arch::lstm, 4, 3, 1, 1}, 1);
  const NetworkModel b = init_model({Arch::lstm, 4, 4, 1, 1}, 1);
  const ForwardResult r = forward(a, std::vector<Vector>{{1, 2, 3, 4}});
  CHECK_THROWS_AS(backward(b, r.cache, Vector{1.0}), std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Arch arch : kAllArchs) {
    for (std::size_t h : {2, 5, 10}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const std::size_t w = arch == Arch::mlp ? 1 : 2;
        const NetworkModel m = init_model({arch, 4, h, 1, w}, 1000 + seed);
        const auto x = random_window(w, 4, rng);
        const Vector cot{u(rng)};
        const Gradients an = backward(m, forward(m, x).cache, cot);
        const auto res = compare_gradients(m, an, numeric_gradients(m, x, cot));
        INFO(arch_name(arch), " h=", h, " seed=", seed, " ", res.first_failure);
        CHECK(res.failures == 0);
      }
    }
  }
}

TEST_CASE("GRU hidden state stays inside the convex-combination bound") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> big(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    NetworkModel m = init_model({Arch::gru, 4, 4, 1, 4}, static_cast<std::uint64_t>(trial));
    for (Matrix& p : m.params) {
      for (double& v : p.data()) v = big(rng);
    }
    InitialState init{Vector(4), {}};
    for (double& v : init.h) v = big(rng);
    std::vector<Vector> x(4, Vector(4));
    for (auto& xt : x) {
      for (double& v : xt) v = big(rng);
    }
    const ForwardResult r = forward(m, x, &init);
    for (const StepCache& s : r.cache.steps) {
      double prev_norm = 0.0, norm = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(s.h[k] >= std::min(s.h_prev[k], -1.0));
        CHECK(s.h[k] <= std::max(s.h_prev[k], 1.0));
        prev_norm = std::max(prev_norm, std::abs(s.h_prev[k]));
        norm = std::max(norm, std::abs(s.h[k]));
      }
      CHECK(norm <= std::max(prev_norm, 1.0));
    }
  }
}

TEST_CASE("named parameter access") {
  NetworkModel m = init_model({Arch::srnn, 4, 3, 1, 1}, 0);
  CHECK(m.param("W_h").rows() == 3);
  CHECK(m.param("W_h").cols() == 3);
  CHECK_THROWS_AS(m.param("W_i"), std::out_of_range);
  m.params.pop_back();
  CHECK_THROWS(m.check_shapes());
}
