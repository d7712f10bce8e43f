#pragma once

// Test-only reference computations. Nothing here calls backward(); the
// gradient oracle only evaluates forward passes on perturbed parameters.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fxbench/cells.hpp"
#include "fxbench/dataset.hpp"

namespace fxbench::testing {

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_rel = 0.0;
  std::string first_failure;
};

// Passes when |a - n| <= rel_tol * max(|a|, |n|), or, for |a| < 1e-6,
// when |a - n| <= abs_tol.
inline bool grad_entry_ok(double analytic, double numeric, double rel_tol = 1e-4,
                          double abs_tol = 1e-7) {
  const double diff = std::abs(analytic - numeric);
  if (std::abs(analytic) < 1e-6) return diff <= abs_tol;
  return diff <= rel_tol * std::max(std::abs(analytic), std::abs(numeric));
}

// Central differences of L(theta) = cotangent . forward(theta).
inline std::vector<Matrix> numeric_gradients(const NetworkModel& model,
                                             const std::vector<Vector>& window,
                                             const Vector& cotangent, double h = 1e-5) {
  NetworkModel probe = model;
  auto loss = [&](const NetworkModel& m) {
    const Vector y = predict(m, window);
    double l = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) l += cotangent[i] * y[i];
    return l;
  };
  std::vector<Matrix> out;
  for (std::size_t p = 0; p < probe.params.size(); ++p) {
    Matrix g(probe.params[p].rows(), probe.params[p].cols(), 0.0);
    auto values = probe.params[p].data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + h;
      const double up = loss(probe);
      values[k] = saved - h;
      const double down = loss(probe);
      values[k] = saved;
      g.data()[k] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline GradCheckResult compare_gradients(const NetworkModel& model,
                                         const std::vector<Matrix>& analytic,
                                         const std::vector<Matrix>& numeric) {
  GradCheckResult r;
  const auto& names = param_names(model.spec.arch);
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    for (std::size_t k = 0; k < analytic[p].size(); ++k) {
      const double a = analytic[p].data()[k];
      const double n = numeric[p].data()[k];
      ++r.checked;
      const double denom = std::max(std::abs(a), std::abs(n));
      if (denom > 0.0 && std::abs(a) >= 1e-6) r.worst_rel = std::max(r.worst_rel, std::abs(a - n) / denom);
      if (!grad_entry_ok(a, n)) {
        if (r.failures == 0) {
          r.first_failure = names[p] + "[" + std::to_string(k) + "]: analytic " +
                            std::to_string(a) + " numeric " + std::to_string(n);
        }
        ++r.failures;
      }
    }
  }
  return r;
}

inline std::vector<Vector> random_window(std::size_t window, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vector> w(window, Vector(dim));
  for (auto& x : w) {
    for (double& v : x) v = u(rng);
  }
  return w;
}

// Direct summation, no shared code with mae_loss.
inline double mae_direct(const std::vector<double>& a, const std::vector<double>& b) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::fabs(static_cast<long double>(a[i]) - b[i]);
  return static_cast<double>(sum / a.size());
}

inline Date day(int offset) {
  using namespace std::chrono;
  return Date{sys_days{year{2015} / January / 1} + days{offset}};
}

// Random walk: close_t = close_{t-1} * (1 + u), u uniform in +-rel_step.
inline std::vector<OhlcRecord> random_walk_series(std::size_t n, std::uint64_t seed,
                                                  double start = 100.0, double rel_step = 0.001) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-rel_step, rel_step);
  std::vector<OhlcRecord> out;
  double close = start;
  for (std::size_t i = 0; i < n; ++i) {
    const double open = close;
    close = open * (1.0 + u(rng));
    out.push_back({day(static_cast<int>(i)), open, std::max(open, close) * 1.0002,
                   std::min(open, close) * 0.9998, close});
  }
  return out;
}

// close_t = close_{t-1} + increment, exactly representable steps.
inline std::vector<OhlcRecord> constant_increment_series(std::size_t n, double start = 100.0,
                                                         double increment = 0.01) {
  std::vector<OhlcRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double open = start + increment * static_cast<double>(i);
    const double close = open + increment;
    out.push_back({day(static_cast<int>(i)), open, close, open, close});
  }
  return out;
}

}  // namespace fxbench::testing
