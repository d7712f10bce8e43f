#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fxbench/numerics.hpp"

namespace fxbench {

// Declaration order is the tie-break and report sort order.
enum class Arch { mlp = 0, srnn = 1, gru = 2, lstm = 3 };

inline constexpr Arch kAllArchs[] = {Arch::mlp, Arch::srnn, Arch::gru, Arch::lstm};

// "MLP", "SRNN", "GRU", "LSTM".
const char* arch_name(Arch arch);
// Case-insensitive.
Arch parse_arch(std::string_view name);
Activation hidden_activation(Arch arch);

struct ModelSpec {
  Arch arch = Arch::lstm;
  std::size_t input_dim = 4;
  std::size_t hidden = 1;
  std::size_t output_dim = 1;
  // Timesteps fed to recurrent cells per sample. MLP requires 1.
  std::size_t window = 1;

  // "input-hidden-output", e.g. "4-5-1".
  std::string structure() const;
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Parameter array names in storage order. Biases are stored as (n x 1)
// matrices so every parameter is a Matrix.
//   MLP:  W_h b_h W_out b_out
//   SRNN: W_x W_h b W_out b_out
//   GRU:  W_z b_z W_r b_r W_c b_c W_out b_out      (W_c drives the candidate state)
//   LSTM: W_i b_i W_f b_f W_o b_o W_c b_c W_out b_out
const std::vector<std::string>& param_names(Arch arch);
// Shapes matching param_names(spec.arch).
std::vector<std::pair<std::size_t, std::size_t>> param_shapes(const ModelSpec& spec);

using Gradients = std::vector<Matrix>;

struct NetworkModel {
  ModelSpec spec;
  std::vector<Matrix> params;
  std::uint64_t rng_seed = 0;
  std::size_t epochs_trained = 0;

  const Matrix& param(std::string_view name) const;
  Matrix& param(std::string_view name);
  std::size_t parameter_count() const;
  // Throws if any parameter array disagrees with the spec.
  void check_shapes() const;

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;
};

// Glorot-uniform weights in [-r, r], r = sqrt(6 / (fan_in + fan_out)); zero
// biases. Deterministic for a fixed (spec, seed).
NetworkModel init_model(const ModelSpec& spec, std::uint64_t seed);

// Closed-form parameter count for a spec, independent of any model instance.
std::size_t parameter_count(const ModelSpec& spec);

Gradients zero_gradients(const NetworkModel& model);

// Initial recurrent state. Production paths start from zeros; tests seed it.
struct InitialState {
  Vector h;
  Vector c;
};

struct StepCache {
  Vector input;   // x_t
  Vector concat;  // [x_t; h_{t-1}] for gated cells
  Vector h_prev;
  Vector c_prev;
  Vector gate_i, gate_f, gate_o, gate_z, gate_r;
  Vector candidate;  // c~ (LSTM) or h~ (GRU)
  Vector reset_concat;  // [x_t; r_t * h_{t-1}] (GRU)
  Vector c;
  Vector tanh_c;
  Vector h;
};

struct ForwardCache {
  ModelSpec spec;
  std::vector<StepCache> steps;
  Vector yhat;
};

struct ForwardResult {
  Vector yhat;
  ForwardCache cache;
};

ForwardResult forward(const NetworkModel& model, std::span<const Vector> window,
                      const InitialState* initial = nullptr);

// Forward without retaining the cache.
Vector predict(const NetworkModel& model, std::span<const Vector> window);

// Full backpropagation through every timestep of the cached window.
Gradients backward(const NetworkModel& model, const ForwardCache& cache,
                   std::span<const double> dl_dyhat);

// Same as backward but adds into an existing gradient set.
void backward_accumulate(const NetworkModel& model, const ForwardCache& cache,
                         std::span<const double> dl_dyhat, Gradients& grads);

}  // namespace fxbench
