#include "fxbench/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace fxbench {

namespace {

constexpr std::string_view kHeader = "date,open,high,low,close";
constexpr const char* kFeatureNames[] = {"open", "high", "low", "close", "target"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_price(std::string_view field, std::size_t line, const char* column) {
  field = trim(field);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw DataError(line, std::string("invalid ") + column + " value '" + std::string(field) + "'");
  }
  if (!std::isfinite(value) || value <= 0.0) {
    throw DataError(line, std::string(column) + " must be a positive price, got " +
                              std::string(field));
  }
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

DataError::DataError(std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

Date parse_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  unsigned m = 0, d = 0;
  const bool shape_ok = text.size() == 10 && text[4] == '-' && text[7] == '-';
  const char* p = text.data();
  if (shape_ok) {
    auto r1 = std::from_chars(p, p + 4, y);
    auto r2 = std::from_chars(p + 5, p + 7, m);
    auto r3 = std::from_chars(p + 8, p + 10, d);
    if (r1.ec == std::errc() && r1.ptr == p + 4 && r2.ec == std::errc() && r2.ptr == p + 7 &&
        r3.ec == std::errc() && r3.ptr == p + 10) {
      const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
      if (date.ok()) return date;
    }
  }
  throw std::invalid_argument("invalid ISO-8601 date '" + std::string(text) + "'");
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::vector<OhlcRecord> parse_ohlc_csv(std::istream& in, const ParseOptions& options,
                                       std::vector<std::string>* warnings) {
  std::vector<OhlcRecord> records;
  std::vector<std::size_t> lines;
  std::string raw;
  std::size_t line = 0;
  bool saw_header = false;

  while (std::getline(in, raw)) {
    ++line;
    std::string_view row = trim(raw);
    if (line == 1 && row.starts_with("\xEF\xBB\xBF")) row.remove_prefix(3);
    if (!saw_header) {
      if (row != kHeader) {
        throw DataError(line, "expected header '" + std::string(kHeader) + "', got '" +
                                  std::string(row) + "'");
      }
      saw_header = true;
      continue;
    }
    if (row.empty()) continue;

    std::array<std::string_view, 5> fields;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = row.find(',', start);
      if (count == fields.size()) {
        throw DataError(line, "expected 5 fields, got more");
      }
      fields[count++] = row.substr(start, comma == std::string_view::npos ? comma : comma - start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count != fields.size()) {
      throw DataError(line, "expected 5 fields, got " + std::to_string(count));
    }

    OhlcRecord rec;
    try {
      rec.date = parse_date(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw DataError(line, e.what());
    }
    rec.open = parse_price(fields[1], line, "open");
    rec.high = parse_price(fields[2], line, "high");
    rec.low = parse_price(fields[3], line, "low");
    rec.close = parse_price(fields[4], line, "close");

    if (rec.low > std::min(rec.open, rec.close) || rec.high < std::max(rec.open, rec.close)) {
      const std::string msg = "inconsistent OHLC on " + format_date(rec.date) +
                              " (low must not exceed open/close, high must not be below them)";
      if (options.strict) throw DataError(line, msg);
      if (warnings) warnings->push_back("line " + std::to_string(line) + ": " + msg);
    }

    if (!options.sort && !records.empty() && !(records.back().date < rec.date)) {
      throw DataError(line, records.back().date == rec.date
                                ? "duplicate date " + format_date(rec.date)
                                : "date " + format_date(rec.date) + " is not after " +
                                      format_date(records.back().date));
    }
    records.push_back(rec);
    lines.push_back(line);
  }
  if (!saw_header) throw DataError(0, "missing header '" + std::string(kHeader) + "'");

  if (options.sort) {
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return records[a].date < records[b].date;
    });
    std::vector<OhlcRecord> sorted;
    sorted.reserve(records.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k > 0 && records[order[k]].date == records[order[k - 1]].date) {
        throw DataError(std::max(lines[order[k]], lines[order[k - 1]]),
                        "duplicate date " + format_date(records[order[k]].date));
      }
      sorted.push_back(records[order[k]]);
    }
    records = std::move(sorted);
  }
  return records;
}

std::vector<OhlcRecord> parse_ohlc_csv(std::string_view text, const ParseOptions& options,
                                       std::vector<std::string>* warnings) {
  std::istringstream in{std::string(text)};
  return parse_ohlc_csv(in, options, warnings);
}

std::string write_ohlc_csv(std::span<const OhlcRecord> records) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& r : records) {
    out += format_date(r.date);
    for (double v : {r.open, r.high, r.low, r.close}) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

double normalize(double value, double feature_min, double feature_max) {
  if (!(feature_max > feature_min)) {
    throw std::invalid_argument("normalization requires max > min, got min " +
                                std::to_string(feature_min) + " max " +
                                std::to_string(feature_max));
  }
  return (value - feature_min) / (feature_max - feature_min);
}

double denormalize(double norm_value, double feature_min, double feature_max) {
  if (!(feature_max > feature_min)) {
    throw std::invalid_argument("denormalization requires max > min, got min " +
                                std::to_string(feature_min) + " max " +
                                std::to_string(feature_max));
  }
  return norm_value * (feature_max - feature_min) + feature_min;
}

SupervisedDataset build_supervised(std::span<const OhlcRecord> records, std::size_t window) {
  if (window == 0) throw std::invalid_argument("window must be positive");
  if (records.size() < window + 1) {
    throw std::invalid_argument("need at least " + std::to_string(window + 1) +
                                " records for window " + std::to_string(window) + ", got " +
                                std::to_string(records.size()));
  }
  SupervisedDataset ds;
  ds.samples.reserve(records.size() - window);
  for (std::size_t k = window; k < records.size(); ++k) {
    Sample s;
    s.inputs.reserve(window);
    for (std::size_t lag = window; lag > 0; --lag) {
      const OhlcRecord& r = records[k - lag];
      s.inputs.push_back(Vector{r.open, r.high, r.low, r.close});
    }
    s.target = records[k].close;
    s.date = records[k].date;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

NormParams fit_minmax(std::span<const Sample> samples) {
  if (samples.empty()) throw std::invalid_argument("cannot fit normalization on zero samples");
  NormParams p;
  p.min.fill(std::numeric_limits<double>::infinity());
  p.max.fill(-std::numeric_limits<double>::infinity());
  for (const Sample& s : samples) {
    for (const Vector& x : s.inputs) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        p.min[f] = std::min(p.min[f], x[f]);
        p.max[f] = std::max(p.max[f], x[f]);
      }
    }
    p.min[kTarget] = std::min(p.min[kTarget], s.target);
    p.max[kTarget] = std::max(p.max[kTarget], s.target);
  }
  for (std::size_t f = 0; f < p.min.size(); ++f) {
    if (!(p.max[f] > p.min[f])) {
      throw std::invalid_argument(std::string("feature '") + kFeatureNames[f] +
                                  "' is constant over the fit region (" +
                                  format_number(p.min[f]) + "); cannot normalize");
    }
  }
  return p;
}

SupervisedDataset apply_norm(const SupervisedDataset& raw, const NormParams& norm) {
  if (raw.normalized) throw std::invalid_argument("dataset is already normalized");
  SupervisedDataset out = raw;
  for (Sample& s : out.samples) {
    for (Vector& x : s.inputs) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) x[f] = normalize(x[f], norm.min[f], norm.max[f]);
    }
    s.target = normalize(s.target, norm.min[kTarget], norm.max[kTarget]);
  }
  out.norm = norm;
  out.normalized = true;
  return out;
}

SplitDataset chrono_split(const SupervisedDataset& dataset, const SplitFractions& fractions) {
  const double f[] = {fractions.train, fractions.validation, fractions.test};
  for (double v : f) {
    if (!(v > 0.0)) throw std::invalid_argument("split fractions must be positive");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  const std::size_t n = dataset.size();
  if (n < 3) throw std::invalid_argument("need at least 3 samples to split, got " + std::to_string(n));
  // The small slack absorbs representation error such as 0.7 * 1500 = 1049.9999...
  const auto floor_part = [n](double frac) {
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_train = floor_part(f[0]);
  const std::size_t n_val = floor_part(f[1]);
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw std::invalid_argument("split of " + std::to_string(n) + " samples leaves an empty slice");
  }

  SplitDataset split;
  split.fractions = fractions;
  auto slice = [&](std::size_t begin, std::size_t end) {
    SupervisedDataset part;
    part.norm = dataset.norm;
    part.normalized = dataset.normalized;
    part.samples.assign(dataset.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                        dataset.samples.begin() + static_cast<std::ptrdiff_t>(end));
    return part;
  };
  split.train = slice(0, n_train);
  split.validation = slice(n_train, n_train + n_val);
  split.test = slice(n_train + n_val, n);
  return split;
}

FitRegion parse_fit_region(std::string_view name) {
  if (name == "train") return FitRegion::train;
  if (name == "all") return FitRegion::all;
  throw std::invalid_argument("unknown normalization fit region '" + std::string(name) + "'");
}

SplitDataset prepare_splits(std::span<const OhlcRecord> records, std::size_t window,
                            FitRegion fit_region, const SplitFractions& fractions) {
  const SupervisedDataset raw = build_supervised(records, window);
  SplitDataset split = chrono_split(raw, fractions);
  const NormParams norm = fit_minmax(fit_region == FitRegion::train
                                         ? std::span<const Sample>(split.train.samples)
                                         : std::span<const Sample>(raw.samples));
  split.train = apply_norm(split.train, norm);
  split.validation = apply_norm(split.validation, norm);
  split.test = apply_norm(split.test, norm);
  return split;
}

}  // namespace fxbench
