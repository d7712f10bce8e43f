#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fxbench/cells.hpp"
#include "fxbench/dataset.hpp"
#include "fxbench/experiment.hpp"
#include "fxbench/io.hpp"
#include "fxbench/optim.hpp"

namespace py = pybind11;
using namespace fxbench;

namespace {

std::vector<double> to_list(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exchange-rate forecasting networks (MLP, SRNN, GRU, LSTM) with exact BPTT.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  py::enum_<Arch>(m, "Arch")
      .value("MLP", Arch::mlp)
      .value("SRNN", Arch::srnn)
      .value("GRU", Arch::gru)
      .value("LSTM", Arch::lstm);
  m.def("parse_arch", &parse_arch);

  py::enum_<Activation>(m, "Activation")
      .value("sigmoid", Activation::sigmoid)
      .value("tanh", Activation::tanh);
  m.def("activation",
        [](Activation k, const std::vector<double>& v) { return activation(k, v); });
  m.def("activation_deriv",
        [](Activation k, const std::vector<double>& y) { return activation_deriv(k, y); });

  py::class_<Matrix>(m, "Matrix")
      .def(py::init<std::size_t, std::size_t, std::vector<double>>(), py::arg("rows"),
           py::arg("cols"), py::arg("data"))
      .def_property_readonly("rows", &Matrix::rows)
      .def_property_readonly("cols", &Matrix::cols)
      .def("tolist", &to_list)
      .def("__repr__", [](const Matrix& mat) { return "<Matrix " + mat.shape_string() + ">"; });
  m.def("matvec", [](const Matrix& w, const std::vector<double>& x) { return matvec(w, x); });

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](Arch arch, std::size_t input_dim, std::size_t hidden,
                       std::size_t output_dim, std::size_t window) {
             ModelSpec s{arch, input_dim, hidden, output_dim, window};
             s.validate();
             return s;
           }),
           py::arg("arch"), py::arg("input_dim") = 4, py::arg("hidden") = 1,
           py::arg("output_dim") = 1, py::arg("window") = 1)
      .def_readwrite("arch", &ModelSpec::arch)
      .def_readwrite("input_dim", &ModelSpec::input_dim)
      .def_readwrite("hidden", &ModelSpec::hidden)
      .def_readwrite("output_dim", &ModelSpec::output_dim)
      .def_readwrite("window", &ModelSpec::window)
      .def("structure", &ModelSpec::structure);

  py::class_<NetworkModel>(m, "NetworkModel")
      .def_readonly("spec", &NetworkModel::spec)
      .def_readonly("rng_seed", &NetworkModel::rng_seed)
      .def_readonly("epochs_trained", &NetworkModel::epochs_trained)
      .def("parameter_count", &NetworkModel::parameter_count)
      .def("param_names", [](const NetworkModel& nm) { return param_names(nm.spec.arch); })
      .def("param", [](const NetworkModel& nm, const std::string& name) { return nm.param(name); })
      .def("__eq__", [](const NetworkModel& a, const NetworkModel& b) { return a == b; });

  m.def("init_model", &init_model, py::arg("spec"), py::arg("seed"));
  m.def("parameter_count", py::overload_cast<const ModelSpec&>(&parameter_count));
  m.def("predict", [](const NetworkModel& nm, const std::vector<Vector>& window) {
    return predict(nm, window);
  });
  m.def(
      "gradients",
      [](const NetworkModel& nm, const std::vector<Vector>& window, const Vector& dl_dyhat) {
        const ForwardResult fr = forward(nm, window);
        const Gradients g = backward(nm, fr.cache, dl_dyhat);
        py::dict out;
        const auto& names = param_names(nm.spec.arch);
        for (std::size_t i = 0; i < g.size(); ++i) out[py::str(names[i])] = to_list(g[i]);
        return out;
      },
      py::arg("model"), py::arg("window"), py::arg("dl_dyhat"),
      "Analytic gradients of dl_dyhat . yhat w.r.t. every parameter array (row-major lists).");

  m.def("mae_loss", [](const Vector& a, const Vector& b) { return mae_loss(a, b); });
  m.def("mae_grad", [](const Vector& a, const Vector& b) { return mae_grad(a, b); });

  py::enum_<OptimizerKind>(m, "OptimizerKind")
      .value("sgd", OptimizerKind::sgd)
      .value("rmsprop", OptimizerKind::rmsprop);
  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("kind", &OptimizerConfig::kind)
      .def_readwrite("learning_rate", &OptimizerConfig::learning_rate)
      .def_readwrite("rho", &OptimizerConfig::rho)
      .def_readwrite("eps", &OptimizerConfig::eps);

  py::class_<OhlcRecord>(m, "OhlcRecord")
      .def_property_readonly("date", [](const OhlcRecord& r) { return format_date(r.date); })
      .def_readonly("open", &OhlcRecord::open)
      .def_readonly("high", &OhlcRecord::high)
      .def_readonly("low", &OhlcRecord::low)
      .def_readonly("close", &OhlcRecord::close);
  m.def(
      "parse_ohlc_csv",
      [](const std::string& text, bool sort, bool strict) {
        return parse_ohlc_csv(std::string_view(text), ParseOptions{sort, strict});
      },
      py::arg("text"), py::arg("sort") = false, py::arg("strict") = false);
  m.def("write_ohlc_csv", [](const std::vector<OhlcRecord>& r) { return write_ohlc_csv(r); });

  py::class_<NormParams>(m, "NormParams")
      .def_readonly("min", &NormParams::min)
      .def_readonly("max", &NormParams::max);
  m.def("normalize", &normalize);
  m.def("denormalize", &denormalize);

  py::class_<Sample>(m, "Sample")
      .def_readonly("inputs", &Sample::inputs)
      .def_readonly("target", &Sample::target)
      .def_property_readonly("date", [](const Sample& s) { return format_date(s.date); });
  py::class_<SupervisedDataset>(m, "SupervisedDataset")
      .def_readonly("samples", &SupervisedDataset::samples)
      .def_readonly("norm", &SupervisedDataset::norm)
      .def_readonly("normalized", &SupervisedDataset::normalized)
      .def("__len__", &SupervisedDataset::size);
  m.def("build_supervised",
        [](const std::vector<OhlcRecord>& r, std::size_t window) { return build_supervised(r, window); },
        py::arg("records"), py::arg("window") = 1);
  m.def("fit_minmax", [](const SupervisedDataset& ds) { return fit_minmax(ds.samples); });
  m.def("apply_norm", &apply_norm);

  py::class_<SplitFractions>(m, "SplitFractions")
      .def(py::init<double, double, double>(), py::arg("train") = 0.70,
           py::arg("validation") = 0.15, py::arg("test") = 0.15);
  py::class_<SplitDataset>(m, "SplitDataset")
      .def_readonly("train", &SplitDataset::train)
      .def_readonly("validation", &SplitDataset::validation)
      .def_readonly("test", &SplitDataset::test);
  m.def("chrono_split", &chrono_split, py::arg("dataset"), py::arg("fractions") = SplitFractions{});
  m.def(
      "prepare_splits",
      [](const std::vector<OhlcRecord>& r, std::size_t window, const std::string& fit_norm) {
        return prepare_splits(r, window, parse_fit_region(fit_norm));
      },
      py::arg("records"), py::arg("window") = 1, py::arg("fit_norm") = "train");

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("optimizer", &TrainConfig::optimizer)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("shuffle", &TrainConfig::shuffle);
  py::class_<TrainHistory>(m, "TrainHistory")
      .def_readonly("loss", &TrainHistory::loss)
      .def_readonly("final_validation_loss", &TrainHistory::final_validation_loss);
  m.def(
      "train",
      [](const NetworkModel& model, const SupervisedDataset& tr, const SupervisedDataset& val,
         const TrainConfig& cfg) {
        NetworkModel trained = model;
        TrainHistory h;
        {
          py::gil_scoped_release release;
          h = train(trained, tr, val, cfg);
        }
        return py::make_tuple(trained, h);
      },
      "Returns (trained_model, history); the input model is left untouched.");

  py::class_<Prediction>(m, "Prediction")
      .def_property_readonly("date", [](const Prediction& p) { return format_date(p.date); })
      .def_readonly("actual", &Prediction::actual)
      .def_readonly("predicted", &Prediction::predicted);
  py::class_<EvalResult>(m, "EvalResult")
      .def_readonly("mae", &EvalResult::mae)
      .def_readonly("normalized_mae", &EvalResult::normalized_mae)
      .def_readonly("predictions", &EvalResult::predictions)
      .def_readonly("n", &EvalResult::n);
  m.def("evaluate", &evaluate);
  m.def("persistence_baseline", &persistence_baseline);

  py::enum_<Criterion>(m, "Criterion")
      .value("test_mae", Criterion::test_mae)
      .value("val_mae", Criterion::val_mae);
  py::class_<TrialResult>(m, "TrialResult")
      .def(py::init<>())
      .def_readwrite("pair", &TrialResult::pair)
      .def_readwrite("arch", &TrialResult::arch)
      .def_readwrite("input_dim", &TrialResult::input_dim)
      .def_readwrite("hidden", &TrialResult::hidden)
      .def_readwrite("output_dim", &TrialResult::output_dim)
      .def_readwrite("train_mae", &TrialResult::train_mae)
      .def_readwrite("val_mae", &TrialResult::val_mae)
      .def_readwrite("test_mae", &TrialResult::test_mae)
      .def_readwrite("seed", &TrialResult::seed)
      .def_readwrite("wall_time_s", &TrialResult::wall_time_s)
      .def("structure", &TrialResult::structure)
      .def("failed", &TrialResult::failed);
  py::class_<SweepConfig>(m, "SweepConfig")
      .def(py::init<>())
      .def_readwrite("pair", &SweepConfig::pair)
      .def_readwrite("archs", &SweepConfig::archs)
      .def_readwrite("hidden", &SweepConfig::hidden)
      .def_readwrite("window", &SweepConfig::window)
      .def_readwrite("train", &SweepConfig::train)
      .def_readwrite("criterion", &SweepConfig::criterion)
      .def_readwrite("threads", &SweepConfig::threads);
  py::class_<SweepReport>(m, "SweepReport")
      .def(py::init<>())
      .def_readwrite("trials", &SweepReport::trials)
      .def_readonly("criterion", &SweepReport::criterion)
      .def_readonly("target_range", &SweepReport::target_range);
  py::class_<Selection>(m, "Selection")
      .def_readonly("per_arch", &Selection::per_arch)
      .def_readonly("overall", &Selection::overall);
  m.def(
      "run_sweep",
      [](const SweepConfig& cfg, const SplitDataset& data) {
        py::gil_scoped_release release;
        return run_sweep(cfg, data);
      });
  m.def("select_best", &select_best, py::arg("report"),
        py::arg("criterion") = Criterion::test_mae);

  m.def("save_model", [](const NetworkModel& nm, const NormParams& norm) {
    return py::bytes(save_model(nm, norm));
  });
  m.def("load_model", [](const py::bytes& data) {
    LoadedModel lm = load_model(std::string(data));
    return py::make_tuple(lm.model, lm.norm);
  });
  m.def("emit_series_csv", &emit_series_csv);
  m.def("emit_report_csv", &emit_report_csv);
  m.def("parse_report_csv",
        [](const std::string& t, Criterion c) { return parse_report_csv(t, c); },
        py::arg("text"), py::arg("criterion") = Criterion::test_mae);
  m.def("render_report_table", &render_report_table, py::arg("report"),
        py::arg("criterion") = Criterion::test_mae);
}
