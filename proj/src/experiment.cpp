#include "fxbench/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace fxbench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

std::size_t parse_size(std::string_view s, std::string_view context) {
  s = trim(s);
  std::size_t v = 0;
  if (s.empty()) throw std::invalid_argument("empty number in '" + std::string(context) + "'");
  for (char c : s) {
    if (c < '0' || c > '9') {
      throw std::invalid_argument("invalid number '" + std::string(s) + "' in '" +
                                  std::string(context) + "'");
    }
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

void check_compatible(const NetworkModel& model, const SupervisedDataset& ds, const char* what) {
  if (!ds.normalized) throw std::invalid_argument(std::string(what) + " set is not normalized");
  for (const Sample& s : ds.samples) {
    if (s.inputs.size() != model.spec.window) {
      throw std::invalid_argument(std::string(what) + " samples carry window " +
                                  std::to_string(s.inputs.size()) + " but model expects " +
                                  std::to_string(model.spec.window));
    }
    if (s.features().size() != model.spec.input_dim) {
      throw std::invalid_argument(std::string(what) + " features have length " +
                                  std::to_string(s.features().size()) + " but model input is " +
                                  std::to_string(model.spec.input_dim));
    }
  }
}

double normalized_mae(const NetworkModel& model, const SupervisedDataset& ds) {
  if (ds.empty()) return kNaN;
  double total = 0.0;
  for (const Sample& s : ds.samples) total += std::abs(predict(model, s.inputs)[0] - s.target);
  return total / static_cast<double>(ds.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  optimizer.validate();
}

TrainingError::TrainingError(std::size_t epoch, const std::string& message)
    : std::runtime_error("epoch " + std::to_string(epoch) + ": " + message), epoch_(epoch) {}

TrainHistory train(NetworkModel& model, const SupervisedDataset& train_set,
                   const SupervisedDataset& val_set, const TrainConfig& config) {
  config.validate();
  model.check_shapes();
  if (model.spec.output_dim != 1) {
    throw std::invalid_argument("training supports a single output, model has " +
                                std::to_string(model.spec.output_dim));
  }
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  check_compatible(model, train_set, "training");
  if (!val_set.empty()) {
    check_compatible(model, val_set, "validation");
    if (!(val_set.norm == train_set.norm)) {
      throw std::invalid_argument("training and validation sets use different normalization");
    }
  }

  const std::size_t n = train_set.size();
  const std::size_t batch = std::min(config.batch_size, n);
  const std::size_t n_batches = (n + batch - 1) / batch;
  std::vector<std::size_t> order(n_batches);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(config.seed);

  Optimizer optimizer(config.optimizer, model.params);
  Gradients grads = zero_gradients(model);
  TrainHistory history;
  history.loss.reserve(config.epochs);
  double cotangent[1];

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t b : order) {
      const std::size_t begin = b * batch;
      const std::size_t end = std::min(begin + batch, n);
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (Matrix& g : grads) g.fill(0.0);
      for (std::size_t k = begin; k < end; ++k) {
        const Sample& s = train_set.samples[k];
        const ForwardResult fr = forward(model, s.inputs);
        const double diff = fr.yhat[0] - s.target;
        epoch_loss += std::abs(diff);
        cotangent[0] = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) * inv;
        backward_accumulate(model, fr.cache, cotangent, grads);
      }
      optimizer.step(model.params, grads);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError(epoch, "training loss became non-finite (" + std::to_string(epoch_loss) +
                                     ") for " + arch_name(model.spec.arch) + " " +
                                     model.spec.structure());
    }
    history.loss.push_back(epoch_loss);
    ++model.epochs_trained;
  }
  history.final_validation_loss = normalized_mae(model, val_set);
  return history;
}

EvalResult evaluate(const NetworkModel& model, const SupervisedDataset& dataset,
                    const NormParams& norm) {
  if (dataset.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
  check_compatible(model, dataset, "evaluation");
  const double lo = norm.min[kTarget], hi = norm.max[kTarget];
  EvalResult r;
  r.n = dataset.size();
  r.predictions.reserve(r.n);
  double total = 0.0, total_norm = 0.0;
  for (const Sample& s : dataset.samples) {
    const double yhat = predict(model, s.inputs)[0];
    Prediction p{s.date, denormalize(s.target, lo, hi), denormalize(yhat, lo, hi)};
    total += std::abs(p.actual - p.predicted);
    total_norm += std::abs(yhat - s.target);
    r.predictions.push_back(p);
  }
  r.mae = total / static_cast<double>(r.n);
  r.normalized_mae = total_norm / static_cast<double>(r.n);
  return r;
}

double persistence_baseline(const SupervisedDataset& dataset, const NormParams& norm) {
  if (dataset.empty()) throw std::invalid_argument("cannot compute baseline on an empty dataset");
  double total = 0.0;
  for (const Sample& s : dataset.samples) {
    double yesterday = s.features()[kClose];
    double today = s.target;
    if (dataset.normalized) {
      yesterday = denormalize(yesterday, norm.min[kClose], norm.max[kClose]);
      today = denormalize(today, norm.min[kTarget], norm.max[kTarget]);
    }
    total += std::abs(today - yesterday);
  }
  return total / static_cast<double>(dataset.size());
}

const char* criterion_name(Criterion c) {
  return c == Criterion::test_mae ? "test_mae" : "val_mae";
}

Criterion parse_criterion(std::string_view name) {
  if (name == "test" || name == "test_mae") return Criterion::test_mae;
  if (name == "val" || name == "val_mae") return Criterion::val_mae;
  throw std::invalid_argument("unknown selection criterion '" + std::string(name) + "'");
}

std::string TrialResult::structure() const {
  return std::to_string(input_dim) + "-" + std::to_string(hidden) + "-" +
         std::to_string(output_dim);
}

bool TrialResult::failed() const {
  return !std::isfinite(train_mae) || !std::isfinite(val_mae) || !std::isfinite(test_mae);
}

std::uint64_t trial_seed(std::uint64_t base_seed, Arch arch, std::size_t hidden) {
  const std::uint64_t key = (static_cast<std::uint64_t>(arch) << 32) ^ hidden;
  return splitmix64(base_seed ^ splitmix64(key));
}

void sort_trials(std::vector<TrialResult>& trials) {
  std::stable_sort(trials.begin(), trials.end(), [](const TrialResult& a, const TrialResult& b) {
    if (a.arch != b.arch) return a.arch < b.arch;
    return a.hidden < b.hidden;
  });
}

SweepReport run_sweep(const SweepConfig& config, const SplitDataset& data) {
  if (config.archs.empty()) throw std::invalid_argument("sweep needs at least one architecture");
  if (config.hidden.empty()) throw std::invalid_argument("sweep needs at least one hidden size");
  config.train.validate();
  if (!data.train.normalized) throw std::invalid_argument("sweep data must be normalized");
  const NormParams& norm = data.train.norm;
  const std::size_t input_dim =
      data.train.empty() ? kFeatureCount : data.train.samples.front().features().size();

  struct Job {
    Arch arch;
    std::size_t hidden;
  };
  std::vector<Job> jobs;
  for (Arch a : config.archs) {
    for (std::size_t h : config.hidden) jobs.push_back({a, h});
  }

  std::vector<TrialResult> results(jobs.size());
  auto run_one = [&](std::size_t idx) {
    const Job& job = jobs[idx];
    TrialResult t;
    t.pair = config.pair;
    t.arch = job.arch;
    t.input_dim = input_dim;
    t.hidden = job.hidden;
    t.output_dim = 1;
    t.seed = trial_seed(config.train.seed, job.arch, job.hidden);
    const auto start = std::chrono::steady_clock::now();
    try {
      ModelSpec spec{job.arch, input_dim, job.hidden, 1, config.window};
      NetworkModel model = init_model(spec, t.seed);
      TrainConfig tc = config.train;
      tc.seed = t.seed;
      train(model, data.train, data.validation, tc);
      t.train_mae = evaluate(model, data.train, norm).mae;
      t.val_mae = evaluate(model, data.validation, norm).mae;
      t.test_mae = evaluate(model, data.test, norm).mae;
      if (t.failed()) t.train_mae = t.val_mae = t.test_mae = kNaN;
    } catch (const TrainingError&) {
      t.train_mae = t.val_mae = t.test_mae = kNaN;
    }
    if (config.record_wall_time) {
      t.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    results[idx] = std::move(t);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, jobs.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  SweepReport report;
  report.trials = std::move(results);
  sort_trials(report.trials);
  report.archs = config.archs;
  std::sort(report.archs.begin(), report.archs.end());
  report.hidden = config.hidden;
  report.criterion = config.criterion;
  report.target_range = norm.range(kTarget);
  return report;
}

Selection select_best(const SweepReport& report, Criterion criterion) {
  auto better = [criterion](const TrialResult& a, const TrialResult& b) {
    const double va = a.value(criterion), vb = b.value(criterion);
    if (va != vb) return va < vb;
    if (a.hidden != b.hidden) return a.hidden < b.hidden;
    return a.arch < b.arch;
  };
  Selection sel;
  std::optional<TrialResult> overall;
  for (Arch arch : kAllArchs) {
    std::optional<TrialResult> best;
    for (const TrialResult& t : report.trials) {
      if (t.arch != arch || t.failed()) continue;
      if (!best || better(t, *best)) best = t;
    }
    if (!best) continue;
    if (!overall || better(*best, *overall)) overall = *best;
    sel.per_arch.push_back(*best);
  }
  if (!overall) throw std::invalid_argument("no successful trials to select from");
  sel.overall = *overall;
  return sel;
}

std::vector<std::size_t> parse_hidden_range(std::string_view text) {
  std::vector<std::size_t> out;
  const std::size_t dots = text.find("..");
  if (dots != std::string_view::npos) {
    const std::size_t lo = parse_size(text.substr(0, dots), text);
    const std::size_t hi = parse_size(text.substr(dots + 2), text);
    if (lo == 0 || hi < lo) {
      throw std::invalid_argument("invalid hidden range '" + std::string(text) + "'");
    }
    for (std::size_t h = lo; h <= hi; ++h) out.push_back(h);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t h = parse_size(text.substr(start, comma - start), text);
    if (h == 0) throw std::invalid_argument("hidden sizes must be positive");
    out.push_back(h);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Arch> parse_arch_list(std::string_view text) {
  std::vector<Arch> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const Arch a = parse_arch(trim(text.substr(start, comma - start)));
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace fxbench
