#include "fxbench/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fxbench {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kNormKeys[] = {"open", "high", "low", "close", "target"};

std::vector<std::string_view> split_fields(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = row.find(',', start);
    out.push_back(row.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

std::uint64_t parse_u64(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw DataError(line, "invalid integer '" + std::string(s) + "'");
  }
  return v;
}

[[noreturn]] void model_error(const std::string& msg) {
  throw std::runtime_error("model file: " + msg);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("invalid number '" + std::string(text) + "'");
  }
  return v;
}

std::string save_model(const NetworkModel& model, const NormParams& norm) {
  model.check_shapes();
  const ModelSpec& spec = model.spec;
  ordered_json j;
  j["format"] = "fxbench-model";
  j["format_version"] = kModelFormatVersion;
  j["spec"] = {{"arch", arch_name(spec.arch)},
               {"input_dim", spec.input_dim},
               {"hidden", spec.hidden},
               {"output_dim", spec.output_dim},
               {"window", spec.window}};
  j["activations"] = {{"hidden", activation_name(hidden_activation(spec.arch))},
                      {"gates", spec.arch == Arch::gru || spec.arch == Arch::lstm ? "sigmoid" : "none"},
                      {"output", "linear"}};
  ordered_json jn = ordered_json::object();
  for (std::size_t f = 0; f < norm.min.size(); ++f) jn[kNormKeys[f]] = {norm.min[f], norm.max[f]};
  j["norm"] = jn;
  j["rng_seed"] = model.rng_seed;
  j["epochs_trained"] = model.epochs_trained;
  ordered_json arrays = ordered_json::array();
  const auto& names = param_names(spec.arch);
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const Matrix& m = model.params[i];
    ordered_json values = ordered_json::array();
    for (double v : m.data()) values.push_back(v);
    arrays.push_back(
        {{"name", names[i]}, {"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}});
  }
  j["arrays"] = std::move(arrays);
  return j.dump(1) + "\n";
}

LoadedModel load_model(std::string_view bytes) {
  ordered_json j;
  try {
    j = ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    model_error(std::string("malformed or truncated (") + e.what() + ")");
  }
  try {
    if (!j.is_object() || j.value("format", "") != "fxbench-model") {
      model_error("not an fxbench model");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      model_error("unsupported format_version " + std::to_string(version) + " (expected " +
                  std::to_string(kModelFormatVersion) + ")");
    }
    LoadedModel out;
    ModelSpec& spec = out.model.spec;
    const auto& js = j.at("spec");
    spec.arch = parse_arch(js.at("arch").get<std::string>());
    spec.input_dim = js.at("input_dim").get<std::size_t>();
    spec.hidden = js.at("hidden").get<std::size_t>();
    spec.output_dim = js.at("output_dim").get<std::size_t>();
    spec.window = js.at("window").get<std::size_t>();
    spec.validate();

    const auto& jn = j.at("norm");
    for (std::size_t f = 0; f < out.norm.min.size(); ++f) {
      const auto& pair = jn.at(kNormKeys[f]);
      if (!pair.is_array() || pair.size() != 2) {
        model_error(std::string("norm entry '") + kNormKeys[f] + "' must be [min, max]");
      }
      out.norm.min[f] = pair[0].get<double>();
      out.norm.max[f] = pair[1].get<double>();
    }
    out.model.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    out.model.epochs_trained = j.at("epochs_trained").get<std::size_t>();

    const auto& names = param_names(spec.arch);
    const auto shapes = param_shapes(spec);
    const auto& arrays = j.at("arrays");
    if (!arrays.is_array() || arrays.size() != names.size()) {
      model_error(std::string(arch_name(spec.arch)) + " model needs " +
                  std::to_string(names.size()) + " arrays, file declares " +
                  std::to_string(arrays.is_array() ? arrays.size() : 0));
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& a = arrays[i];
      const std::string name = a.at("name").get<std::string>();
      if (name != names[i]) {
        model_error("array " + std::to_string(i) + " is '" + name + "', expected '" + names[i] + "'");
      }
      const auto rows = a.at("rows").get<std::size_t>();
      const auto cols = a.at("cols").get<std::size_t>();
      if (rows != shapes[i].first || cols != shapes[i].second) {
        model_error("array '" + name + "' declares shape " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", spec requires " + std::to_string(shapes[i].first) +
                    "x" + std::to_string(shapes[i].second));
      }
      const auto& vals = a.at("values");
      if (!vals.is_array() || vals.size() != rows * cols) {
        model_error("array '" + name + "' has " + std::to_string(vals.is_array() ? vals.size() : 0) +
                    " values, shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " needs " + std::to_string(rows * cols));
      }
      std::vector<double> data;
      data.reserve(vals.size());
      for (const auto& v : vals) data.push_back(v.get<double>());
      out.model.params.emplace_back(rows, cols, std::move(data));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    model_error(std::string("invalid field (") + e.what() + ")");
  } catch (const std::invalid_argument& e) {
    model_error(e.what());
  }
}

std::string emit_series_csv(const EvalResult& eval) {
  if (eval.predictions.empty()) throw std::invalid_argument("no predictions to emit");
  std::string out = "date,actual,predicted\n";
  for (const Prediction& p : eval.predictions) {
    out += format_date(p.date) + "," + format_double(p.actual) + "," + format_double(p.predicted) + "\n";
  }
  return out;
}

std::vector<Prediction> parse_series_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "date,actual,predicted") {
    throw DataError(1, "expected header 'date,actual,predicted'");
  }
  std::vector<Prediction> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_fields(lines[i]);
    if (f.size() != 3) throw DataError(i + 1, "expected 3 fields");
    try {
      out.push_back({parse_date(f[0]), parse_double(f[1]), parse_double(f[2])});
    } catch (const std::invalid_argument& e) {
      throw DataError(i + 1, e.what());
    }
  }
  return out;
}

std::string emit_report_csv(const SweepReport& report) {
  if (report.trials.empty()) throw std::invalid_argument("report has no trials");
  std::vector<TrialResult> trials = report.trials;
  sort_trials(trials);
  std::string out(kReportHeader);
  out += '\n';
  for (const TrialResult& t : trials) {
    if (t.pair.find_first_of(",\"\n\r") != std::string::npos) {
      throw std::invalid_argument("pair label '" + t.pair + "' contains a CSV delimiter");
    }
    out += t.pair + "," + arch_name(t.arch) + "," + t.structure() + "," +
           std::to_string(t.hidden) + "," + format_double(t.train_mae) + "," +
           format_double(t.val_mae) + "," + format_double(t.test_mae) + "," +
           std::to_string(t.seed) + "," + format_double(t.wall_time_s) + "\n";
  }
  return out;
}

SweepReport parse_report_csv(std::string_view text, Criterion criterion) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kReportHeader) {
    throw DataError(1, "expected header '" + std::string(kReportHeader) + "'");
  }
  SweepReport report;
  report.criterion = criterion;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t line = i + 1;
    const auto f = split_fields(lines[i]);
    if (f.size() != 9) throw DataError(line, "expected 9 fields, got " + std::to_string(f.size()));
    TrialResult t;
    try {
      t.pair = std::string(f[0]);
      t.arch = parse_arch(f[1]);
      const std::size_t d1 = f[2].find('-'), d2 = f[2].rfind('-');
      if (d1 == std::string_view::npos || d1 == d2) {
        throw std::invalid_argument("structure '" + std::string(f[2]) + "' is not in d-h-o form");
      }
      t.input_dim = parse_u64(f[2].substr(0, d1), line);
      const std::size_t h_in_structure = parse_u64(f[2].substr(d1 + 1, d2 - d1 - 1), line);
      t.output_dim = parse_u64(f[2].substr(d2 + 1), line);
      t.hidden = parse_u64(f[3], line);
      if (h_in_structure != t.hidden) {
        throw std::invalid_argument("structure " + std::string(f[2]) +
                                    " disagrees with hidden " + std::string(f[3]));
      }
      t.train_mae = parse_double(f[4]);
      t.val_mae = parse_double(f[5]);
      t.test_mae = parse_double(f[6]);
      t.seed = parse_u64(f[7], line);
      t.wall_time_s = parse_double(f[8]);
    } catch (const std::invalid_argument& e) {
      throw DataError(line, e.what());
    }
    report.trials.push_back(std::move(t));
  }
  sort_trials(report.trials);
  for (const TrialResult& t : report.trials) {
    if (std::find(report.archs.begin(), report.archs.end(), t.arch) == report.archs.end()) {
      report.archs.push_back(t.arch);
    }
    if (std::find(report.hidden.begin(), report.hidden.end(), t.hidden) == report.hidden.end()) {
      report.hidden.push_back(t.hidden);
    }
  }
  std::sort(report.hidden.begin(), report.hidden.end());
  return report;
}

std::string render_report_table(const SweepReport& report, Criterion criterion) {
  if (report.trials.empty()) throw std::invalid_argument("report has no trials");
  std::vector<TrialResult> trials = report.trials;
  sort_trials(trials);

  std::optional<Selection> sel;
  try {
    sel = select_best(report, criterion);
  } catch (const std::invalid_argument&) {
  }
  auto is_same = [](const TrialResult& a, const TrialResult& b) {
    return a.arch == b.arch && a.hidden == b.hidden && a.pair == b.pair;
  };
  const bool scaled = report.target_range > 0.0;
  auto norm_of = [&](double v) { return format_double(v / report.target_range); };

  std::ostringstream os;
  os << "Pair: " << trials.front().pair << "    selection: " << criterion_name(criterion)
     << "    MAE units: currency";
  if (scaled) os << " (norm = normalized target scale)";
  os << "\n";
  os << std::left << std::setw(3) << "" << std::setw(6) << "arch" << std::setw(10) << "structure"
     << std::setw(24) << "train_mae" << std::setw(24) << "val_mae" << std::setw(24) << "test_mae";
  if (scaled) os << std::setw(24) << "val_mae_norm" << std::setw(24) << "test_mae_norm";
  os << "\n";
  for (const TrialResult& t : trials) {
    std::string mark;
    if (sel && is_same(t, sel->overall)) {
      mark = "**";
    } else if (sel) {
      for (const auto& b : sel->per_arch) {
        if (is_same(t, b)) mark = "*";
      }
    }
    os << std::setw(3) << mark << std::setw(6) << arch_name(t.arch) << std::setw(10)
       << t.structure() << std::setw(24) << format_double(t.train_mae) << std::setw(24)
       << format_double(t.val_mae) << std::setw(24) << format_double(t.test_mae);
    if (scaled) os << std::setw(24) << norm_of(t.val_mae) << std::setw(24) << norm_of(t.test_mae);
    os << "\n";
  }
  os << "\nModel,Best Structure,MAE\n";
  if (!sel) {
    os << "(no successful trials)\n";
    return os.str();
  }
  for (const TrialResult& b : sel->per_arch) {
    os << arch_name(b.arch) << "," << b.structure() << "," << format_double(b.value(criterion));
    if (scaled) os << "  (norm " << norm_of(b.value(criterion)) << ")";
    os << "\n";
  }
  const TrialResult& o = sel->overall;
  os << "Overall best: " << arch_name(o.arch) << "," << o.structure() << ","
     << format_double(o.value(criterion)) << "\n";
  return os.str();
}

}  // namespace fxbench
