#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fxbench/cells.hpp"
#include "fxbench/dataset.hpp"
#include "fxbench/optim.hpp"

namespace fxbench {

struct TrainConfig {
  std::size_t epochs = 1500;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
  std::uint64_t seed = 42;
  // Shuffle mini-batch order each epoch (seeded); off keeps chronological order.
  bool shuffle = false;

  void validate() const;
};

struct TrainHistory {
  // Mean normalized-scale MAE over the training set for each epoch, measured
  // on the pre-update predictions of each batch.
  std::vector<double> loss;
  // Normalized MAE on the validation set after the final epoch (NaN if no
  // validation samples were given).
  double final_validation_loss = 0.0;
};

// Raised when the loss turns non-finite; carries the 0-based epoch index.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t epoch, const std::string& message);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

// Mini-batch training under MAE loss. One optimizer step per batch, using the
// batch-mean gradient. Deterministic for fixed (model, data, config).
TrainHistory train(NetworkModel& model, const SupervisedDataset& train_set,
                   const SupervisedDataset& val_set, const TrainConfig& config);

struct Prediction {
  Date date;
  double actual = 0.0;
  double predicted = 0.0;
};

struct EvalResult {
  // Denormalized (currency units).
  double mae = 0.0;
  // Same error on the normalized target scale.
  double normalized_mae = 0.0;
  std::vector<Prediction> predictions;
  std::size_t n = 0;
};

EvalResult evaluate(const NetworkModel& model, const SupervisedDataset& dataset,
                    const NormParams& norm);

// MAE of predicting today's close as yesterday's close, in currency units.
double persistence_baseline(const SupervisedDataset& dataset, const NormParams& norm);

enum class Criterion { test_mae, val_mae };

const char* criterion_name(Criterion c);
// Accepts "test", "val", "test_mae", "val_mae".
Criterion parse_criterion(std::string_view name);

struct TrialResult {
  std::string pair;
  Arch arch = Arch::mlp;
  std::size_t input_dim = 4;
  std::size_t hidden = 1;
  std::size_t output_dim = 1;
  // Denormalized MAE per split; NaN when the trial failed.
  double train_mae = 0.0;
  double val_mae = 0.0;
  double test_mae = 0.0;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;

  std::string structure() const;
  bool failed() const;
  double value(Criterion c) const { return c == Criterion::test_mae ? test_mae : val_mae; }
};

struct SweepConfig {
  std::string pair = "USD/NPR";
  std::vector<Arch> archs{Arch::mlp, Arch::srnn, Arch::gru, Arch::lstm};
  std::vector<std::size_t> hidden{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t window = 1;
  // train.seed is the base seed that per-trial seeds are derived from.
  TrainConfig train;
  Criterion criterion = Criterion::test_mae;
  // Worker threads for independent trials. Results do not depend on this.
  std::size_t threads = 1;
  // Record measured per-trial wall time. Off by default so reports are reproducible byte for byte.
  bool record_wall_time = false;
};

struct SweepReport {
  std::vector<TrialResult> trials;
  std::vector<Arch> archs;
  std::vector<std::size_t> hidden;
  Criterion criterion = Criterion::test_mae;
  // max - min of the close target in the normalization fit; 0 if unknown.
  // Divides a denormalized MAE into the normalized scale.
  double target_range = 0.0;
};

// splitmix64-based mix of (base_seed, arch, hidden).
std::uint64_t trial_seed(std::uint64_t base_seed, Arch arch, std::size_t hidden);

// Sorts by (arch, hidden) in Arch declaration order.
void sort_trials(std::vector<TrialResult>& trials);

// `data` must be normalized (see prepare_splits).
SweepReport run_sweep(const SweepConfig& config, const SplitDataset& data);

struct Selection {
  // One entry per architecture present among successful trials, in Arch order.
  std::vector<TrialResult> per_arch;
  TrialResult overall;
};

// Argmin of the criterion; ties go to the smaller hidden size, then Arch order.
Selection select_best(const SweepReport& report, Criterion criterion);

// Parses "2..10", "5", or "2,4,6" into an ascending list of hidden sizes.
std::vector<std::size_t> parse_hidden_range(std::string_view text);
// Parses "mlp,srnn,lstm,gru".
std::vector<Arch> parse_arch_list(std::string_view text);

}  // namespace fxbench
