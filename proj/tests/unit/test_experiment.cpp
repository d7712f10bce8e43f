#include <stdexcept>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "fxbench/experiment.hpp"
#include "support/oracles.hpp"

using namespace fxbench;
using fxbench::testing::day;

namespace {

SplitDataset small_splits(std::size_t n = 120, std::size_t window = 1) {
  return prepare_splits(fxbench::testing::random_walk_series(n, 21), window, FitRegion::train);
}

TrialResult trial(Arch arch, std::size_t hidden, double test_mae, double val_mae = 0.0) {
  TrialResult t;
  t.pair = "USD/NPR";
  t.arch = arch;
  t.hidden = hidden;
  t.train_mae = 0.0;
  t.val_mae = val_mae;
  t.test_mae = test_mae;
  return t;
}

}  // namespace

TEST_CASE("train runs exactly the configured epochs") {
  const SplitDataset sp = small_splits();
  NetworkModel m = init_model({Arch::gru, 4, 3, 1, 1}, 5);
  TrainConfig cfg;
  cfg.epochs = 40;
  const TrainHistory h = train(m, sp.train, sp.validation, cfg);
  CHECK(h.loss.size() == 40);
  CHECK(m.epochs_trained == 40);
  for (double l : h.loss) CHECK(std::isfinite(l));
  CHECK(h.loss.back() < h.loss.front());
  CHECK(std::isfinite(h.final_validation_loss));
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.epochs = 1;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("training is deterministic, including shuffled order") {
  const SplitDataset sp = small_splits();
  for (bool shuffle : {false, true}) {
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.shuffle = shuffle;
    NetworkModel a = init_model({Arch::lstm, 4, 4, 1, 1}, 9), b = a;
    train(a, sp.train, sp.validation, cfg);
    train(b, sp.train, sp.validation, cfg);
    CHECK(a == b);
  }
}

TEST_CASE("train rejects mismatched data") {
  const SplitDataset sp = small_splits();
  NetworkModel m = init_model({Arch::gru, 4, 3, 1, 2}, 5);
  CHECK_THROWS_AS(train(m, sp.train, sp.validation, TrainConfig{}), std::invalid_argument);
  const SupervisedDataset raw = build_supervised(fxbench::testing::random_walk_series(20, 1));
  NetworkModel w1 = init_model({Arch::gru, 4, 3, 1, 1}, 5);
  CHECK_THROWS_AS(train(w1, raw, sp.validation, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("non-finite loss aborts with the epoch index") {
  const SplitDataset sp = small_splits();
  NetworkModel m = init_model({Arch::mlp, 4, 3, 1, 1}, 5);
  m.param("b_out")(0, 0) = std::numeric_limits<double>::infinity();
  TrainConfig cfg;
  cfg.epochs = 3;
  try {
    train(m, sp.train, sp.validation, cfg);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.epoch() == 0);
  }
}

TEST_CASE("sgd lowers the loss too") {
  const SplitDataset sp = small_splits();
  NetworkModel m = init_model({Arch::mlp, 4, 4, 1, 1}, 2);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.optimizer = OptimizerConfig::sgd();
  const TrainHistory h = train(m, sp.train, sp.validation, cfg);
  CHECK(h.loss.back() < h.loss.front());
}

TEST_CASE("evaluate denormalizes before scoring") {
  // Single hidden unit, zero input weights: yhat == b_out for every sample.
  NetworkModel m = init_model({Arch::mlp, 4, 1, 1, 1}, 0);
  for (Matrix& p : m.params) p.fill(0.0);
  m.param("b_out")(0, 0) = 0.5;
  NormParams norm;
  norm.min.fill(100.0);
  norm.max.fill(120.0);
  SupervisedDataset ds;
  ds.normalized = true;
  ds.norm = norm;
  ds.samples.push_back({{Vector{0.1, 0.1, 0.1, 0.1}}, 0.4, day(1)});
  ds.samples.push_back({{Vector{0.1, 0.1, 0.1, 0.1}}, 0.6, day(2)});
  const EvalResult r = evaluate(m, ds, norm);
  CHECK(r.n == 2);
  CHECK(r.mae == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.normalized_mae == doctest::Approx(0.1).epsilon(1e-12));
  double recomputed = 0.0;
  for (const auto& p : r.predictions) recomputed += std::abs(p.actual - p.predicted);
  CHECK(std::abs(recomputed / 2 - r.mae) <= 1e-12);

  m.param("b_out")(0, 0) = 0.4;
  ds.samples.pop_back();
  CHECK(evaluate(m, ds, norm).mae == 0.0);
  ds.samples.clear();
  CHECK_THROWS(evaluate(m, ds, norm));
}

TEST_CASE("persistence baseline") {
  auto series = [](std::vector<double> closes) {
    std::vector<OhlcRecord> recs;
    for (std::size_t i = 0; i < closes.size(); ++i) {
      recs.push_back({day(static_cast<int>(i)), closes[i], closes[i] + 1, closes[i] * 0.5, closes[i]});
    }
    return recs;
  };
  const NormParams unused{};
  CHECK(persistence_baseline(build_supervised(series({1, 2, 3})), unused) == 1.0);
  CHECK(persistence_baseline(build_supervised(series({4, 4, 4, 4})), unused) == 0.0);

  // Same answer whatever normalization was fitted.
  const auto recs = fxbench::testing::random_walk_series(200, 8);
  const SupervisedDataset raw = build_supervised(recs);
  const double base = persistence_baseline(raw, unused);
  for (FitRegion region : {FitRegion::train, FitRegion::all}) {
    const SplitDataset sp = prepare_splits(recs, 1, region);
    const SplitDataset raw_split = chrono_split(raw);
    CHECK(persistence_baseline(sp.test, sp.test.norm) ==
          doctest::Approx(persistence_baseline(raw_split.test, unused)).epsilon(1e-10));
  }
  CHECK(base > 0.0);
  CHECK_THROWS(persistence_baseline(SupervisedDataset{}, unused));
}

TEST_CASE("select_best picks the lowest per-model MAE") {
  SweepReport usd;
  usd.trials = {trial(Arch::mlp, 6, 0.0858), trial(Arch::srnn, 4, 0.019),
                trial(Arch::gru, 7, 0.084), trial(Arch::lstm, 5, 0.013)};
  const Selection a = select_best(usd, Criterion::test_mae);
  CHECK(a.overall.arch == Arch::lstm);
  CHECK(a.overall.test_mae == 0.013);
  CHECK(a.overall.structure() == "4-5-1");
  CHECK(a.per_arch.size() == 4);

  SweepReport gbp;
  gbp.trials = {trial(Arch::mlp, 5, 0.052), trial(Arch::srnn, 4, 0.214),
                trial(Arch::gru, 7, 0.0177), trial(Arch::lstm, 5, 0.0388)};
  const Selection b = select_best(gbp, Criterion::test_mae);
  CHECK(b.overall.arch == Arch::gru);
  CHECK(b.overall.structure() == "4-7-1");
}

TEST_CASE("select_best tie-breaks, criterion and failures") {
  SweepReport r;
  r.trials = {trial(Arch::lstm, 3, 0.5, 0.1), trial(Arch::gru, 3, 0.5, 0.2),
              trial(Arch::gru, 2, 0.5, 0.3), trial(Arch::mlp, 4, 0.7, 0.05)};
  CHECK(select_best(r, Criterion::test_mae).overall.hidden == 2);
  CHECK(select_best(r, Criterion::val_mae).overall.arch == Arch::mlp);

  SweepReport tie;
  tie.trials = {trial(Arch::lstm, 3, 0.5), trial(Arch::srnn, 3, 0.5)};
  CHECK(select_best(tie, Criterion::test_mae).overall.arch == Arch::srnn);

  SweepReport single;
  single.trials = {trial(Arch::gru, 9, 1.5)};
  CHECK(select_best(single, Criterion::test_mae).overall.hidden == 9);

  SweepReport failed;
  failed.trials = {trial(Arch::gru, 9, std::numeric_limits<double>::quiet_NaN())};
  CHECK_THROWS_AS(select_best(failed, Criterion::test_mae), std::invalid_argument);
  failed.trials.push_back(trial(Arch::mlp, 2, 3.0));
  CHECK(select_best(failed, Criterion::test_mae).overall.arch == Arch::mlp);
}

TEST_CASE("select_best agrees with a brute-force scan") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    SweepReport r;
    for (Arch a : kAllArchs) {
      for (std::size_t h = 2; h <= 10; ++h) {
        // Coarse values force ties.
        r.trials.push_back(trial(a, h, std::round(u(rng) * 20) / 20, u(rng)));
      }
    }
    const TrialResult best = select_best(r, Criterion::test_mae).overall;
    for (const TrialResult& other : r.trials) CHECK(best.test_mae <= other.test_mae);
  }
}

TEST_CASE("trial seeds are distinct and order independent") {
  std::set<std::uint64_t> seen;
  for (Arch a : kAllArchs) {
    for (std::size_t h = 1; h <= 10; ++h) seen.insert(trial_seed(42, a, h));
  }
  CHECK(seen.size() == 40);
  CHECK(trial_seed(42, Arch::gru, 5) == trial_seed(42, Arch::gru, 5));
  CHECK(trial_seed(42, Arch::gru, 5) != trial_seed(43, Arch::gru, 5));
}

TEST_CASE("run_sweep covers the grid in sorted order, independent of threads") {
  const SplitDataset sp = small_splits(80);
  SweepConfig cfg;
  cfg.archs = {Arch::lstm, Arch::mlp, Arch::gru, Arch::srnn};
  cfg.hidden = {2, 3};
  cfg.train.epochs = 5;
  const SweepReport one = run_sweep(cfg, sp);
  CHECK(one.trials.size() == 8);
  CHECK(one.trials.front().arch == Arch::mlp);
  CHECK(one.trials.back().arch == Arch::lstm);
  CHECK(one.trials.back().hidden == 3);
  for (const auto& t : one.trials) {
    CHECK_FALSE(t.failed());
    CHECK(t.wall_time_s == 0.0);
    CHECK(t.structure() == "4-" + std::to_string(t.hidden) + "-1");
  }
  cfg.threads = 3;
  const SweepReport many = run_sweep(cfg, sp);
  for (std::size_t i = 0; i < one.trials.size(); ++i) {
    CHECK(one.trials[i].test_mae == many.trials[i].test_mae);
    CHECK(one.trials[i].seed == many.trials[i].seed);
  }

  cfg.archs = {Arch::gru};
  cfg.hidden = {5};
  CHECK(run_sweep(cfg, sp).trials.size() == 1);
}

TEST_CASE("run_sweep records failed trials instead of aborting") {
  SplitDataset sp = small_splits(80);
  // An infinite target makes every loss non-finite.
  sp.train.samples[3].target = std::numeric_limits<double>::infinity();
  SweepConfig cfg;
  cfg.archs = {Arch::mlp};
  cfg.hidden = {2, 3};
  cfg.train.epochs = 2;
  const SweepReport r = run_sweep(cfg, sp);
  CHECK(r.trials.size() == 2);
  for (const auto& t : r.trials) CHECK(t.failed());
}

TEST_CASE("hidden range and arch list parsing") {
  CHECK(parse_hidden_range("2..10").size() == 9);
  CHECK(parse_hidden_range("5") == std::vector<std::size_t>{5});
  CHECK(parse_hidden_range("6,2,4,2") == std::vector<std::size_t>{2, 4, 6});
  CHECK_THROWS(parse_hidden_range("0..3"));
  CHECK_THROWS(parse_hidden_range("5..2"));
  CHECK_THROWS(parse_hidden_range("a"));
  CHECK(parse_arch_list("mlp,srnn,lstm,gru").size() == 4);
  CHECK(parse_arch_list("LSTM") == std::vector<Arch>{Arch::lstm});
  CHECK_THROWS(parse_arch_list("mlp,cnn"));
}
