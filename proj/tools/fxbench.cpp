// fxbench: exchange-rate forecasting benchmark CLI.
//
// Every command exits 0 on success. Failures print exactly one line,
// "error: <message>", to stderr and exit nonzero.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "fxbench/cells.hpp"
#include "fxbench/dataset.hpp"
#include "fxbench/experiment.hpp"
#include "fxbench/io.hpp"

namespace {

using namespace fxbench;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << bytes;
  if (!out.flush()) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<OhlcRecord> load_records(const std::string& path, bool strict) {
  std::vector<std::string> warnings;
  ParseOptions opts;
  opts.strict = strict;
  auto records = parse_ohlc_csv(read_file(path), opts, &warnings);
  for (const auto& w : warnings) spdlog::warn("{}: {}", path, w);
  spdlog::info("loaded {} records from {}", records.size(), path);
  return records;
}

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("fxbench");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FXBENCH_LOG")) {
    const std::string level = env;
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "warn") spdlog::set_level(spdlog::level::warn);
    else if (level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring unknown FXBENCH_LOG level '{}'", level);
  }
}

// Options shared by train and sweep.
struct TrainingOptions {
  std::size_t epochs = 1500;
  std::size_t batch = 32;
  std::string optimizer = "rmsprop";
  double lr = 0.0;
  std::uint64_t seed = 42;
  std::size_t window = 1;
  std::string fit_norm = "train";
  bool shuffle = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch", batch, "Mini-batch size")->capture_default_str();
    cmd->add_option("--optimizer", optimizer, "sgd | rmsprop")
        ->check(CLI::IsMember({"sgd", "rmsprop"}))
        ->capture_default_str();
    cmd->add_option("--lr", lr, "Learning rate (default 0.001 rmsprop, 0.01 sgd)");
    cmd->add_option("--seed", seed, "Base random seed")->capture_default_str();
    cmd->add_option("--window", window, "Lag days fed to recurrent cells")->capture_default_str();
    cmd->add_option("--fit-norm", fit_norm, "Region the min/max are fitted on: train | all")
        ->check(CLI::IsMember({"train", "all"}))
        ->capture_default_str();
    cmd->add_flag("--shuffle", shuffle, "Shuffle mini-batch order each epoch (seeded)");
  }

  TrainConfig config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch;
    c.optimizer.kind = parse_optimizer(optimizer);
    c.optimizer.learning_rate = lr > 0.0 ? lr : OptimizerConfig::default_learning_rate(c.optimizer.kind);
    c.seed = seed;
    c.shuffle = shuffle;
    return c;
  }
};

void print_eval_line(const char* label, const EvalResult& r) {
  std::cout << label << " MAE: " << format_double(r.mae) << " (currency), "
            << format_double(r.normalized_mae) << " (normalized), n=" << r.n << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Exchange-rate forecasting benchmark: MLP, SRNN, GRU and LSTM from scratch"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate and sort OHLC data");
  std::string ingest_in, ingest_out;
  bool ingest_strict = false;
  ingest->add_option("--input", ingest_in, "Raw OHLC CSV")->required();
  ingest->add_option("--output", ingest_out, "Clean dataset CSV")->required();
  ingest->add_flag("--strict", ingest_strict, "Reject inconsistent OHLC rows");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Train every (architecture, hidden size) pair");
  std::string sweep_data, sweep_pair = "USD/NPR", sweep_archs = "mlp,srnn,lstm,gru";
  std::string sweep_hidden = "2..10", sweep_select = "test", sweep_report;
  std::size_t sweep_threads = 1;
  bool sweep_wall_time = false;
  TrainingOptions sweep_opts;
  sweep->add_option("--data", sweep_data, "Dataset CSV")->required();
  sweep->add_option("--pair", sweep_pair, "Currency pair label")->capture_default_str();
  sweep->add_option("--archs", sweep_archs, "Comma-separated architectures")->capture_default_str();
  sweep->add_option("--hidden", sweep_hidden, "Hidden sizes: a..b or comma list")->capture_default_str();
  sweep_opts.add_to(sweep);
  sweep->add_option("--select", sweep_select, "Selection criterion: test | val")
      ->check(CLI::IsMember({"test", "val"}))
      ->capture_default_str();
  sweep->add_option("--report", sweep_report, "Report CSV output")->required();
  sweep->add_option("--threads", sweep_threads, "Trials run concurrently (0 = all cores)")
      ->capture_default_str();
  sweep->add_flag("--record-wall-time", sweep_wall_time,
                  "Store measured trial times (reports are then not reproducible byte for byte)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one model and save it");
  std::string train_data, train_arch = "lstm", train_out;
  std::size_t train_hidden = 5;
  TrainingOptions train_opts;
  train_cmd->add_option("--data", train_data, "Dataset CSV")->required();
  train_cmd->add_option("--arch", train_arch, "mlp | srnn | gru | lstm")->capture_default_str();
  train_cmd->add_option("--hidden", train_hidden, "Hidden units")->capture_default_str();
  train_opts.add_to(train_cmd);
  train_cmd->add_option("--model-out", train_out, "Model file output")->required();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Emit actual-vs-predicted series");
  std::string predict_model, predict_data, predict_out;
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd->add_option("--data", predict_data, "Dataset CSV")->required();
  predict_cmd->add_option("--series-out", predict_out, "Series CSV output")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Format a sweep report");
  std::string report_in, report_format = "table", report_select = "test";
  report_cmd->add_option("--in", report_in, "Report CSV")->required();
  report_cmd->add_option("--format", report_format, "table | csv")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();
  report_cmd->add_option("--select", report_select, "Selection criterion: test | val")
      ->check(CLI::IsMember({"test", "val"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (ingest->parsed()) {
    std::vector<std::string> warnings;
    ParseOptions opts;
    opts.sort = true;
    opts.strict = ingest_strict;
    const auto records = parse_ohlc_csv(read_file(ingest_in), opts, &warnings);
    for (const auto& w : warnings) spdlog::warn("{}: {}", ingest_in, w);
    write_file(ingest_out, write_ohlc_csv(records));
    std::cout << "ingested " << records.size() << " records, " << warnings.size()
              << " warnings\n";
    return 0;
  }

  if (sweep->parsed()) {
    const auto records = load_records(sweep_data, false);
    const SplitDataset data = prepare_splits(records, sweep_opts.window,
                                             parse_fit_region(sweep_opts.fit_norm));
    SweepConfig cfg;
    cfg.pair = sweep_pair;
    cfg.archs = parse_arch_list(sweep_archs);
    cfg.hidden = parse_hidden_range(sweep_hidden);
    cfg.window = sweep_opts.window;
    cfg.train = sweep_opts.config();
    cfg.criterion = parse_criterion(sweep_select);
    cfg.threads = sweep_threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                     : sweep_threads;
    cfg.record_wall_time = sweep_wall_time;
    spdlog::info("sweep {}: {} archs x {} hidden sizes, {} epochs, split {}/{}/{}", cfg.pair,
                 cfg.archs.size(), cfg.hidden.size(), cfg.train.epochs, data.train.size(),
                 data.validation.size(), data.test.size());
    const SweepReport report = run_sweep(cfg, data);
    write_file(sweep_report, emit_report_csv(report));
    std::cout << render_report_table(report, cfg.criterion);
    const NormParams& norm = data.train.norm;
    const double baseline = persistence_baseline(data.test, norm);
    std::cout << "Persistence baseline (test): " << format_double(baseline) << " (currency), "
              << format_double(baseline / norm.range(kTarget)) << " (normalized)\n";
    std::size_t failed = 0;
    for (const auto& t : report.trials) failed += t.failed() ? 1 : 0;
    if (failed > 0) spdlog::warn("{} of {} trials failed", failed, report.trials.size());
    return 0;
  }

  if (train_cmd->parsed()) {
    const auto records = load_records(train_data, false);
    const SplitDataset data = prepare_splits(records, train_opts.window,
                                             parse_fit_region(train_opts.fit_norm));
    const ModelSpec spec{parse_arch(train_arch), kFeatureCount, train_hidden, 1, train_opts.window};
    NetworkModel model = init_model(spec, train_opts.seed);
    const TrainHistory history = train(model, data.train, data.validation, train_opts.config());
    const NormParams& norm = data.train.norm;
    write_file(train_out, save_model(model, norm));
    std::cout << arch_name(spec.arch) << " " << spec.structure() << " trained for "
              << history.loss.size() << " epochs, final training loss "
              << format_double(history.loss.back()) << " (normalized)\n";
    print_eval_line("train", evaluate(model, data.train, norm));
    print_eval_line("validation", evaluate(model, data.validation, norm));
    print_eval_line("test", evaluate(model, data.test, norm));
    return 0;
  }

  if (predict_cmd->parsed()) {
    const LoadedModel loaded = load_model(read_file(predict_model));
    const auto records = load_records(predict_data, false);
    const SupervisedDataset ds =
        apply_norm(build_supervised(records, loaded.model.spec.window), loaded.norm);
    const EvalResult r = evaluate(loaded.model, ds, loaded.norm);
    write_file(predict_out, emit_series_csv(r));
    print_eval_line("prediction", r);
    std::cout << "Persistence baseline: " << format_double(persistence_baseline(ds, loaded.norm))
              << " (currency)\n";
    return 0;
  }

  if (report_cmd->parsed()) {
    const Criterion criterion = parse_criterion(report_select);
    const SweepReport report = parse_report_csv(read_file(report_in), criterion);
    if (report_format == "csv") {
      std::cout << emit_report_csv(report);
    } else {
      std::cout << render_report_table(report, criterion);
    }
    return 0;
  }
  return 0;
}

std::string one_line(std::string msg) {
  for (char& c : msg) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return msg;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return 1;
  }
}
