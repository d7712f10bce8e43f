#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fxbench/numerics.hpp"

namespace fxbench {

using Date = std::chrono::year_month_day;

// Strict YYYY-MM-DD.
Date parse_date(std::string_view text);
std::string format_date(const Date& date);

// Malformed input data. `line` is 1-based (the header is line 1), 0 if not tied to a line.
class DataError : public std::runtime_error {
 public:
  DataError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct OhlcRecord {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;

  friend bool operator==(const OhlcRecord&, const OhlcRecord&) = default;
};

struct ParseOptions {
  // Sort rows by date instead of rejecting out-of-order input.
  bool sort = false;
  // Treat OHLC inconsistencies (low above open/close, high below) as errors.
  bool strict = false;
};

// Reads `date,open,high,low,close` CSV. Duplicate dates and non-positive
// prices are always errors. OHLC inconsistencies are appended to `warnings`
// unless options.strict is set.
std::vector<OhlcRecord> parse_ohlc_csv(std::istream& in, const ParseOptions& options = {},
                                       std::vector<std::string>* warnings = nullptr);
std::vector<OhlcRecord> parse_ohlc_csv(std::string_view text, const ParseOptions& options = {},
                                       std::vector<std::string>* warnings = nullptr);
std::string write_ohlc_csv(std::span<const OhlcRecord> records);

// Column index into feature vectors and NormParams.
enum Feature : std::size_t { kOpen = 0, kHigh = 1, kLow = 2, kClose = 3, kTarget = 4 };
inline constexpr std::size_t kFeatureCount = 4;

struct NormParams {
  std::array<double, 5> min{};
  std::array<double, 5> max{};

  double range(Feature f) const { return max[f] - min[f]; }
  friend bool operator==(const NormParams&, const NormParams&) = default;
};

double normalize(double value, double feature_min, double feature_max);
double denormalize(double norm_value, double feature_min, double feature_max);

struct Sample {
  // Lag feature vectors [open, high, low, close], oldest first; the last entry
  // is the day before `date`.
  std::vector<Vector> inputs;
  double target = 0.0;
  Date date;

  const Vector& features() const { return inputs.back(); }
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct SupervisedDataset {
  std::vector<Sample> samples;
  NormParams norm;
  bool normalized = false;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Sample k takes the OHLC of days k-window..k-1 and predicts close_k, giving
// records.size() - window samples.
SupervisedDataset build_supervised(std::span<const OhlcRecord> records, std::size_t window = 1);

// Per-feature min/max over every lag vector and target in `samples`.
NormParams fit_minmax(std::span<const Sample> samples);

// Applies `norm` without clipping. Input must be un-normalized.
SupervisedDataset apply_norm(const SupervisedDataset& raw, const NormParams& norm);

struct SplitFractions {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

struct SplitDataset {
  SupervisedDataset train;
  SupervisedDataset validation;
  SupervisedDataset test;
  SplitFractions fractions;
};

// Contiguous chronological slices: floor(f_train n), floor(f_val n), remainder.
SplitDataset chrono_split(const SupervisedDataset& dataset, const SplitFractions& fractions = {});

enum class FitRegion { train, all };

FitRegion parse_fit_region(std::string_view name);

// build_supervised -> chrono_split -> fit_minmax on the chosen region -> normalize every split.
SplitDataset prepare_splits(std::span<const OhlcRecord> records, std::size_t window,
                            FitRegion fit_region, const SplitFractions& fractions = {});

}  // namespace fxbench
