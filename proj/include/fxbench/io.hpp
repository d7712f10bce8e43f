#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fxbench/cells.hpp"
#include "fxbench/dataset.hpp"
#include "fxbench/experiment.hpp"

namespace fxbench {

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON model file. Doubles are written in shortest round-trip form,
// so load(save(m)) is bitwise exact and save(load(bytes)) == bytes.
std::string save_model(const NetworkModel& model, const NormParams& norm);

struct LoadedModel {
  NetworkModel model;
  NormParams norm;
};

// Throws std::runtime_error on version mismatch, truncation, or any array
// whose shape disagrees with the declared spec (the message names the array).
LoadedModel load_model(std::string_view bytes);

// `date,actual,predicted` in currency units, chronological.
std::string emit_series_csv(const EvalResult& eval);
std::vector<Prediction> parse_series_csv(std::string_view text);

inline constexpr std::string_view kReportHeader =
    "pair,arch,structure,hidden,train_mae,val_mae,test_mae,seed,wall_time_s";

std::string emit_report_csv(const SweepReport& report);
SweepReport parse_report_csv(std::string_view text, Criterion criterion = Criterion::test_mae);

// Human-readable table: every trial, with "*" marking each architecture's best
// and "**" the overall best, followed by a best-per-model summary in
// `Model,Best Structure,MAE` form.
std::string render_report_table(const SweepReport& report, Criterion criterion);

// Shortest decimal that round-trips to the same double; "nan" for NaN.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace fxbench
