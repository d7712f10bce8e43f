#include "fxbench/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fxbench {

namespace {

void check_pair(std::span<const double> yhat, std::span<const double> y) {
  if (yhat.size() != y.size()) {
    throw std::invalid_argument("MAE length mismatch: " + std::to_string(yhat.size()) + " vs " +
                                std::to_string(y.size()));
  }
  if (yhat.empty()) throw std::invalid_argument("MAE of empty vectors");
}

void check_shapes(const std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                  const char* what) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(params.size()) +
                                " parameter arrays but " + std::to_string(grads.size()) +
                                " gradient arrays");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i])) {
      throw std::invalid_argument(std::string(what) + ": array " + std::to_string(i) +
                                  " has shape " + params[i].shape_string() + " but " +
                                  grads[i].shape_string() + " supplied");
    }
  }
}

}  // namespace

double mae_loss(std::span<const double> yhat, std::span<const double> y) {
  check_pair(yhat, y);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(yhat[i] - y[i]);
  return total / static_cast<double>(y.size());
}

Vector mae_grad(std::span<const double> yhat, std::span<const double> y) {
  check_pair(yhat, y);
  const double inv_n = 1.0 / static_cast<double>(y.size());
  Vector g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double diff = yhat[i] - y[i];
    g[i] = diff > 0.0 ? inv_n : (diff < 0.0 ? -inv_n : 0.0);
  }
  return g;
}

const char* optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "rmsprop";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

OptimizerConfig OptimizerConfig::sgd(double learning_rate) {
  OptimizerConfig c;
  c.kind = OptimizerKind::sgd;
  c.learning_rate = learning_rate;
  return c;
}

OptimizerConfig OptimizerConfig::rmsprop(double learning_rate, double rho, double eps) {
  return OptimizerConfig{OptimizerKind::rmsprop, learning_rate, rho, eps};
}

double OptimizerConfig::default_learning_rate(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? 0.01 : 0.001;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive, got " +
                                std::to_string(learning_rate));
  }
  if (kind == OptimizerKind::rmsprop) {
    if (!(rho > 0.0 && rho < 1.0)) {
      throw std::invalid_argument("rmsprop rho must lie in (0,1), got " + std::to_string(rho));
    }
    if (!(eps > 0.0)) {
      throw std::invalid_argument("rmsprop eps must be positive, got " + std::to_string(eps));
    }
  }
}

void sgd_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
              double learning_rate) {
  check_shapes(params, grads, "sgd step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= learning_rate * g[k];
  }
}

RmspropState::RmspropState(const std::vector<Matrix>& params) {
  accum.reserve(params.size());
  for (const auto& p : params) accum.emplace_back(p.rows(), p.cols(), 0.0);
}

void rmsprop_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                  RmspropState& state, const OptimizerConfig& config) {
  check_shapes(params, grads, "rmsprop step");
  check_shapes(params, state.accum, "rmsprop state");
  const double rho = config.rho;
  const double lr = config.learning_rate;
  const double eps = config.eps;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto s = state.accum[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      s[k] = rho * s[k] + (1.0 - rho) * g[k] * g[k];
      p[k] -= lr * g[k] / (std::sqrt(s[k]) + eps);
    }
  }
}

Optimizer::Optimizer(const OptimizerConfig& config, const std::vector<Matrix>& params)
    : config_(config) {
  config_.validate();
  if (config_.kind == OptimizerKind::rmsprop) state_.emplace(params);
}

void Optimizer::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
  if (state_) {
    rmsprop_step(params, grads, *state_, config_);
  } else {
    sgd_step(params, grads, config_.learning_rate);
  }
}

}  // namespace fxbench
