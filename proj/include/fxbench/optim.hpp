#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fxbench/numerics.hpp"

namespace fxbench {

// Mean absolute error. Throws on length mismatch or empty input.
double mae_loss(std::span<const double> yhat, std::span<const double> y);

// Subgradient of mae_loss w.r.t. yhat: sign(yhat_i - y_i) / n, sign(0) = 0.
Vector mae_grad(std::span<const double> yhat, std::span<const double> y);

enum class OptimizerKind { sgd, rmsprop };

const char* optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double learning_rate = 0.001;
  double rho = 0.9;
  double eps = 1e-8;

  static OptimizerConfig sgd(double learning_rate = 0.01);
  static OptimizerConfig rmsprop(double learning_rate = 0.001, double rho = 0.9,
                                 double eps = 1e-8);
  // Default learning rate for a kind: 0.01 for sgd, 0.001 for rmsprop.
  static double default_learning_rate(OptimizerKind kind);

  void validate() const;
};

// theta <- theta - lr * g
void sgd_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, double learning_rate);

struct RmspropState {
  RmspropState() = default;
  // Zero accumulators shaped like `params`.
  explicit RmspropState(const std::vector<Matrix>& params);

  std::vector<Matrix> accum;
};

// s <- rho s + (1 - rho) g^2 ; theta <- theta - lr g / (sqrt(s) + eps)
void rmsprop_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                  RmspropState& state, const OptimizerConfig& config);

// Owns per-model optimizer state and dispatches on config.kind.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, const std::vector<Matrix>& params);

  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);

  const OptimizerConfig& config() const { return config_; }
  const RmspropState* rmsprop_state() const { return state_ ? &*state_ : nullptr; }

 private:
  OptimizerConfig config_;
  std::optional<RmspropState> state_;
};

}  // namespace fxbench
