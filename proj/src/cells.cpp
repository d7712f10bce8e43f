#include "fxbench/cells.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace fxbench {

namespace {

// Storage slots per architecture; see param_names().
namespace mlp_slot {
constexpr std::size_t W_h = 0, b_h = 1, W_out = 2, b_out = 3;
}
namespace srnn_slot {
constexpr std::size_t W_x = 0, W_h = 1, b = 2, W_out = 3, b_out = 4;
}
namespace gru_slot {
constexpr std::size_t W_z = 0, b_z = 1, W_r = 2, b_r = 3, W_c = 4, b_c = 5, W_out = 6, b_out = 7;
}
namespace lstm_slot {
constexpr std::size_t W_i = 0, b_i = 1, W_f = 2, b_f = 3, W_o = 4, b_o = 5, W_c = 6, b_c = 7,
                      W_out = 8, b_out = 9;
}

// out = b + W v
Vector affine(const Matrix& w, const Matrix& b, std::span<const double> v) {
  Vector out(b.data().begin(), b.data().end());
  matvec_add(w, v, out);
  return out;
}

Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void apply(Activation kind, Vector& v) {
  for (double& x : v) x = activate(kind, x);
}

void add_into(std::span<double> acc, std::span<const double> v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

// Uniform double in [0, 1) from the top 53 bits; stable across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_window(const ModelSpec& spec, std::span<const Vector> window) {
  if (window.size() != spec.window) {
    throw std::invalid_argument("window length " + std::to_string(window.size()) +
                                " does not match model window " + std::to_string(spec.window));
  }
  for (std::size_t t = 0; t < window.size(); ++t) {
    if (window[t].size() != spec.input_dim) {
      throw std::invalid_argument("input at timestep " + std::to_string(t) + " has length " +
                                  std::to_string(window[t].size()) + ", expected " +
                                  std::to_string(spec.input_dim));
    }
  }
}

Vector initial_vector(const Vector* seeded, std::size_t hidden, const char* what) {
  if (seeded == nullptr || seeded->empty()) return Vector(hidden, 0.0);
  if (seeded->size() != hidden) {
    throw std::invalid_argument(std::string("initial ") + what + " state has length " +
                                std::to_string(seeded->size()) + ", expected " +
                                std::to_string(hidden));
  }
  return *seeded;
}

}  // namespace

const char* arch_name(Arch arch) {
  switch (arch) {
    case Arch::mlp: return "MLP";
    case Arch::srnn: return "SRNN";
    case Arch::gru: return "GRU";
    case Arch::lstm: return "LSTM";
  }
  return "?";
}

Arch parse_arch(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "mlp") return Arch::mlp;
  if (lower == "srnn") return Arch::srnn;
  if (lower == "gru") return Arch::gru;
  if (lower == "lstm") return Arch::lstm;
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

Activation hidden_activation(Arch arch) {
  return arch == Arch::mlp ? Activation::sigmoid : Activation::tanh;
}

std::string ModelSpec::structure() const {
  return std::to_string(input_dim) + "-" + std::to_string(hidden) + "-" +
         std::to_string(output_dim);
}

void ModelSpec::validate() const {
  if (input_dim == 0 || hidden == 0 || output_dim == 0 || window == 0) {
    throw std::invalid_argument("model spec " + structure() + " window " +
                                std::to_string(window) + ": all dimensions must be positive");
  }
  if (arch == Arch::mlp && window != 1) {
    throw std::invalid_argument("MLP requires window 1, got " + std::to_string(window));
  }
}

const std::vector<std::string>& param_names(Arch arch) {
  static const std::vector<std::string> mlp{"W_h", "b_h", "W_out", "b_out"};
  static const std::vector<std::string> srnn{"W_x", "W_h", "b", "W_out", "b_out"};
  static const std::vector<std::string> gru{"W_z", "b_z", "W_r", "b_r",
                                            "W_c", "b_c", "W_out", "b_out"};
  static const std::vector<std::string> lstm{"W_i", "b_i", "W_f", "b_f",   "W_o",
                                             "b_o", "W_c", "b_c", "W_out", "b_out"};
  switch (arch) {
    case Arch::mlp: return mlp;
    case Arch::srnn: return srnn;
    case Arch::gru: return gru;
    case Arch::lstm: return lstm;
  }
  return mlp;
}

std::vector<std::pair<std::size_t, std::size_t>> param_shapes(const ModelSpec& spec) {
  const std::size_t d = spec.input_dim, h = spec.hidden, o = spec.output_dim;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  switch (spec.arch) {
    case Arch::mlp:
      shapes = {{h, d}, {h, 1}};
      break;
    case Arch::srnn:
      shapes = {{h, d}, {h, h}, {h, 1}};
      break;
    case Arch::gru:
      for (int g = 0; g < 3; ++g) {
        shapes.push_back({h, d + h});
        shapes.push_back({h, 1});
      }
      break;
    case Arch::lstm:
      for (int g = 0; g < 4; ++g) {
        shapes.push_back({h, d + h});
        shapes.push_back({h, 1});
      }
      break;
  }
  shapes.push_back({o, h});
  shapes.push_back({o, 1});
  return shapes;
}

std::size_t parameter_count(const ModelSpec& spec) {
  const std::size_t d = spec.input_dim, h = spec.hidden, o = spec.output_dim;
  std::size_t hidden_part = 0;
  switch (spec.arch) {
    case Arch::mlp: hidden_part = h * d + h; break;
    case Arch::srnn: hidden_part = h * d + h * h + h; break;
    case Arch::gru: hidden_part = 3 * (h * (d + h) + h); break;
    case Arch::lstm: hidden_part = 4 * (h * (d + h) + h); break;
  }
  return hidden_part + o * h + o;
}

const Matrix& NetworkModel::param(std::string_view name) const {
  const auto& names = param_names(spec.arch);
  for (std::size_t i = 0; i < names.size() && i < params.size(); ++i) {
    if (names[i] == name) return params[i];
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "' in " +
                          arch_name(spec.arch) + " model");
}

Matrix& NetworkModel::param(std::string_view name) {
  return const_cast<Matrix&>(std::as_const(*this).param(name));
}

std::size_t NetworkModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

void NetworkModel::check_shapes() const {
  spec.validate();
  const auto shapes = param_shapes(spec);
  const auto& names = param_names(spec.arch);
  if (params.size() != shapes.size()) {
    throw std::invalid_argument(std::string(arch_name(spec.arch)) + " model expects " +
                                std::to_string(shapes.size()) + " parameter arrays, found " +
                                std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params[i].rows() != shapes[i].first || params[i].cols() != shapes[i].second) {
      throw std::invalid_argument("parameter " + names[i] + " has shape " +
                                  params[i].shape_string() + ", expected " +
                                  std::to_string(shapes[i].first) + "x" +
                                  std::to_string(shapes[i].second));
    }
  }
}

NetworkModel init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  NetworkModel model;
  model.spec = spec;
  model.rng_seed = seed;
  std::mt19937_64 rng(seed);
  const auto& names = param_names(spec.arch);
  const auto shapes = param_shapes(spec);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto [rows, cols] = shapes[i];
    Matrix m(rows, cols, 0.0);
    if (names[i].front() == 'W') {
      const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (double& w : m.data()) w = (2.0 * unit_uniform(rng) - 1.0) * r;
    }
    model.params.push_back(std::move(m));
  }
  return model;
}

Gradients zero_gradients(const NetworkModel& model) {
  Gradients g;
  g.reserve(model.params.size());
  for (const auto& p : model.params) g.emplace_back(p.rows(), p.cols(), 0.0);
  return g;
}

ForwardResult forward(const NetworkModel& model, std::span<const Vector> window,
                      const InitialState* initial) {
  const ModelSpec& spec = model.spec;
  check_window(spec, window);
  const auto& P = model.params;
  const std::size_t h = spec.hidden;

  ForwardResult result;
  result.cache.spec = spec;
  result.cache.steps.reserve(window.size());

  Vector h_state = initial_vector(initial ? &initial->h : nullptr, h, "hidden");
  Vector c_state = initial_vector(initial ? &initial->c : nullptr, h, "cell");
  std::size_t out_slot = 0;

  switch (spec.arch) {
    case Arch::mlp: {
      StepCache step;
      step.input = window[0];
      step.h = affine(P[mlp_slot::W_h], P[mlp_slot::b_h], step.input);
      apply(Activation::sigmoid, step.h);
      h_state = step.h;
      result.cache.steps.push_back(std::move(step));
      out_slot = mlp_slot::W_out;
      break;
    }
    case Arch::srnn: {
      for (const Vector& x : window) {
        StepCache step;
        step.input = x;
        step.h_prev = h_state;
        step.h = affine(P[srnn_slot::W_x], P[srnn_slot::b], x);
        matvec_add(P[srnn_slot::W_h], step.h_prev, step.h);
        apply(Activation::tanh, step.h);
        h_state = step.h;
        result.cache.steps.push_back(std::move(step));
      }
      out_slot = srnn_slot::W_out;
      break;
    }
    case Arch::gru: {
      for (const Vector& x : window) {
        StepCache step;
        step.input = x;
        step.h_prev = h_state;
        step.concat = concat(x, h_state);
        step.gate_z = affine(P[gru_slot::W_z], P[gru_slot::b_z], step.concat);
        apply(Activation::sigmoid, step.gate_z);
        step.gate_r = affine(P[gru_slot::W_r], P[gru_slot::b_r], step.concat);
        apply(Activation::sigmoid, step.gate_r);
        Vector rh(h);
        for (std::size_t k = 0; k < h; ++k) rh[k] = step.gate_r[k] * h_state[k];
        step.reset_concat = concat(x, rh);
        step.candidate = affine(P[gru_slot::W_c], P[gru_slot::b_c], step.reset_concat);
        apply(Activation::tanh, step.candidate);
        step.h.resize(h);
        for (std::size_t k = 0; k < h; ++k) {
          const double z = step.gate_z[k];
          step.h[k] = (1.0 - z) * h_state[k] + z * step.candidate[k];
        }
        h_state = step.h;
        result.cache.steps.push_back(std::move(step));
      }
      out_slot = gru_slot::W_out;
      break;
    }
    case Arch::lstm: {
      for (const Vector& x : window) {
        StepCache step;
        step.input = x;
        step.h_prev = h_state;
        step.c_prev = c_state;
        step.concat = concat(x, h_state);
        step.gate_i = affine(P[lstm_slot::W_i], P[lstm_slot::b_i], step.concat);
        apply(Activation::sigmoid, step.gate_i);
        step.gate_f = affine(P[lstm_slot::W_f], P[lstm_slot::b_f], step.concat);
        apply(Activation::sigmoid, step.gate_f);
        step.gate_o = affine(P[lstm_slot::W_o], P[lstm_slot::b_o], step.concat);
        apply(Activation::sigmoid, step.gate_o);
        step.candidate = affine(P[lstm_slot::W_c], P[lstm_slot::b_c], step.concat);
        apply(Activation::tanh, step.candidate);
        step.c.resize(h);
        step.tanh_c.resize(h);
        step.h.resize(h);
        for (std::size_t k = 0; k < h; ++k) {
          step.c[k] = step.gate_f[k] * c_state[k] + step.gate_i[k] * step.candidate[k];
          step.tanh_c[k] = std::tanh(step.c[k]);
          step.h[k] = step.gate_o[k] * step.tanh_c[k];
        }
        h_state = step.h;
        c_state = step.c;
        result.cache.steps.push_back(std::move(step));
      }
      out_slot = lstm_slot::W_out;
      break;
    }
  }

  result.yhat = affine(P[out_slot], P[out_slot + 1], h_state);
  result.cache.yhat = result.yhat;
  return result;
}

Vector predict(const NetworkModel& model, std::span<const Vector> window) {
  return forward(model, window).yhat;
}

Gradients backward(const NetworkModel& model, const ForwardCache& cache,
                   std::span<const double> dl_dyhat) {
  Gradients grads = zero_gradients(model);
  backward_accumulate(model, cache, dl_dyhat, grads);
  return grads;
}

void backward_accumulate(const NetworkModel& model, const ForwardCache& cache,
                         std::span<const double> dl_dyhat, Gradients& G) {
  const ModelSpec& spec = model.spec;
  if (!(cache.spec == spec) || cache.steps.size() != spec.window) {
    throw std::invalid_argument("forward cache was produced by a different model (" +
                                std::string(arch_name(cache.spec.arch)) + " " +
                                cache.spec.structure() + " vs " + arch_name(spec.arch) + " " +
                                spec.structure() + ")");
  }
  if (dl_dyhat.size() != spec.output_dim) {
    throw std::invalid_argument("output cotangent has length " + std::to_string(dl_dyhat.size()) +
                                ", expected " + std::to_string(spec.output_dim));
  }
  if (G.size() != model.params.size()) {
    throw std::invalid_argument("gradient set does not match model parameter arrays");
  }
  const auto& P = model.params;
  const std::size_t d = spec.input_dim;
  const std::size_t h = spec.hidden;
  const std::size_t n_params = P.size();
  const std::size_t W_out = n_params - 2, b_out = n_params - 1;

  const Vector& h_last = cache.steps.back().h;
  add_outer(G[W_out], dl_dyhat, h_last);
  add_into(G[b_out].data(), dl_dyhat);
  Vector dh(h, 0.0);
  matvec_transposed_add(P[W_out], dl_dyhat, dh);

  switch (spec.arch) {
    case Arch::mlp: {
      using namespace mlp_slot;
      const StepCache& s = cache.steps[0];
      Vector da(h);
      for (std::size_t k = 0; k < h; ++k) da[k] = dh[k] * s.h[k] * (1.0 - s.h[k]);
      add_outer(G[W_h], da, s.input);
      add_into(G[b_h].data(), da);
      break;
    }
    case Arch::srnn: {
      using namespace srnn_slot;
      Vector da(h);
      for (std::size_t t = cache.steps.size(); t-- > 0;) {
        const StepCache& s = cache.steps[t];
        for (std::size_t k = 0; k < h; ++k) da[k] = dh[k] * (1.0 - s.h[k] * s.h[k]);
        add_outer(G[W_x], da, s.input);
        add_outer(G[W_h], da, s.h_prev);
        add_into(G[b].data(), da);
        std::fill(dh.begin(), dh.end(), 0.0);
        matvec_transposed_add(P[W_h], da, dh);
      }
      break;
    }
    case Arch::gru: {
      using namespace gru_slot;
      Vector daz(h), dar(h), dac(h), du(d + h), dv(d + h);
      for (std::size_t t = cache.steps.size(); t-- > 0;) {
        const StepCache& s = cache.steps[t];
        Vector dh_prev(h);
        for (std::size_t k = 0; k < h; ++k) {
          const double z = s.gate_z[k];
          const double n = s.candidate[k];
          dh_prev[k] = dh[k] * (1.0 - z);
          daz[k] = dh[k] * (n - s.h_prev[k]) * z * (1.0 - z);
          dac[k] = dh[k] * z * (1.0 - n * n);
        }
        add_outer(G[W_c], dac, s.reset_concat);
        add_into(G[b_c].data(), dac);
        std::fill(du.begin(), du.end(), 0.0);
        matvec_transposed_add(P[W_c], dac, du);
        for (std::size_t k = 0; k < h; ++k) {
          const double drh = du[d + k];
          const double r = s.gate_r[k];
          dar[k] = drh * s.h_prev[k] * r * (1.0 - r);
          dh_prev[k] += drh * r;
        }
        add_outer(G[W_z], daz, s.concat);
        add_into(G[b_z].data(), daz);
        add_outer(G[W_r], dar, s.concat);
        add_into(G[b_r].data(), dar);
        std::fill(dv.begin(), dv.end(), 0.0);
        matvec_transposed_add(P[W_z], daz, dv);
        matvec_transposed_add(P[W_r], dar, dv);
        for (std::size_t k = 0; k < h; ++k) dh[k] = dh_prev[k] + dv[d + k];
      }
      break;
    }
    case Arch::lstm: {
      using namespace lstm_slot;
      Vector dc(h, 0.0), dai(h), daf(h), dao(h), dac(h), dv(d + h);
      for (std::size_t t = cache.steps.size(); t-- > 0;) {
        const StepCache& s = cache.steps[t];
        for (std::size_t k = 0; k < h; ++k) {
          const double i = s.gate_i[k], f = s.gate_f[k], o = s.gate_o[k], g = s.candidate[k];
          const double tc = s.tanh_c[k];
          dc[k] += dh[k] * o * (1.0 - tc * tc);
          dao[k] = dh[k] * tc * o * (1.0 - o);
          dai[k] = dc[k] * g * i * (1.0 - i);
          daf[k] = dc[k] * s.c_prev[k] * f * (1.0 - f);
          dac[k] = dc[k] * i * (1.0 - g * g);
          dc[k] *= f;
        }
        add_outer(G[W_i], dai, s.concat);
        add_into(G[b_i].data(), dai);
        add_outer(G[W_f], daf, s.concat);
        add_into(G[b_f].data(), daf);
        add_outer(G[W_o], dao, s.concat);
        add_into(G[b_o].data(), dao);
        add_outer(G[W_c], dac, s.concat);
        add_into(G[b_c].data(), dac);
        std::fill(dv.begin(), dv.end(), 0.0);
        matvec_transposed_add(P[W_i], dai, dv);
        matvec_transposed_add(P[W_f], daf, dv);
        matvec_transposed_add(P[W_o], dao, dv);
        matvec_transposed_add(P[W_c], dac, dv);
        for (std::size_t k = 0; k < h; ++k) dh[k] = dv[d + k];
      }
      break;
    }
  }
}

}  // namespace fxbench
