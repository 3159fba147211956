#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <sstream>

#include "spikelane/bench.hpp"
#include "spikelane/checkpoint.hpp"
#include "spikelane/cli.hpp"
#include "spikelane/dataset.hpp"
#include "spikelane/errors.hpp"
#include "spikelane/evaluation.hpp"
#include "spikelane/snn.hpp"
#include "spikelane/synth.hpp"
#include "spikelane/training.hpp"

namespace py = pybind11;
using namespace spikelane;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.values().data(), a.data(), m.values().size() * sizeof(double));
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::memcpy(a.mutable_data(), m.values().data(), m.values().size() * sizeof(double));
  return a;
}

Array to_array(std::span<const double> v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::memcpy(a.mutable_data(), v.data(), v.size() * sizeof(double));
  return a;
}

}  // namespace

PYBIND11_MODULE(_spikelane, m) {
  m.doc() = "Compact spiking network for lane-change intention prediction";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<NumericError>(m, "NumericError", error.ptr());
  py::register_exception<UsageError>(m, "UsageError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<CorruptCheckpointError>(m, "CorruptCheckpointError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<DegenerateFeatureError>(m, "DegenerateFeatureError", error.ptr());
  py::register_exception<DegenerateLabelsError>(m, "DegenerateLabelsError", error.ptr());
  py::register_exception<SplitError>(m, "SplitError", error.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());

  py::enum_<Intention>(m, "Intention")
      .value("keep", Intention::keep)
      .value("left", Intention::left)
      .value("right", Intention::right);
  py::enum_<Direction>(m, "Direction").value("left", Direction::left).value("right", Direction::right);
  py::enum_<ResetMode>(m, "ResetMode")
      .value("to_zero", ResetMode::to_zero)
      .value("subtract", ResetMode::subtract);
  py::enum_<OptimizerKind>(m, "OptimizerKind").value("adam", OptimizerKind::adam).value("sgd", OptimizerKind::sgd);

  py::class_<LifConfig>(m, "LifConfig")
      .def(py::init<>())
      .def_readwrite("beta", &LifConfig::beta)
      .def_readwrite("v_threshold", &LifConfig::v_threshold)
      .def_readwrite("surrogate_slope", &LifConfig::surrogate_slope)
      .def_readwrite("reset_mode", &LifConfig::reset_mode);

  py::class_<ModelDims>(m, "ModelDims")
      .def(py::init<>())
      .def_readwrite("input_steps", &ModelDims::input_steps)
      .def_readwrite("input_dim", &ModelDims::input_dim)
      .def_readwrite("hidden_dim", &ModelDims::hidden_dim)
      .def_readwrite("classes", &ModelDims::classes);

  py::class_<Model>(m, "Model")
      .def(py::init<ModelDims, LifConfig>(), py::arg("dims") = ModelDims{}, py::arg("lif") = LifConfig{})
      .def_static("initialized", &Model::initialized, py::arg("seed"), py::arg("dims") = ModelDims{},
                  py::arg("lif") = LifConfig{})
      .def_property_readonly("dims", &Model::dims)
      .def_property("lif", &Model::lif, &Model::set_lif)
      .def_property_readonly("param_count", [](const Model& self) { return param_count(self); })
      .def_property(
          "feature_weights", [](const Model& self) { return to_array(self.feature_layer().weights); },
          [](Model& self, const Array& w) {
            self.feature_layer().weights = to_matrix(w);
            self.check_shapes();
          })
      .def_property(
          "classifier_weights", [](const Model& self) { return to_array(self.classifier().weights); },
          [](Model& self, const Array& w) {
            self.classifier().weights = to_matrix(w);
            self.check_shapes();
          })
      .def_property_readonly("feature_bias", [](const Model& self) { return to_array(self.feature_layer().bias); })
      .def_property_readonly("classifier_bias", [](const Model& self) { return to_array(self.classifier().bias); })
      .def("__eq__", [](const Model& a, const Model& b) { return a == b; });

  py::class_<ForwardCache>(m, "ForwardResult")
      .def_property_readonly("membrane", [](const ForwardCache& c) { return to_array(c.membrane); })
      .def_property_readonly("spikes", [](const ForwardCache& c) { return to_array(c.spikes); })
      .def_property_readonly("pooled", [](const ForwardCache& c) { return to_array(c.pooled); })
      .def_property_readonly("logits", [](const ForwardCache& c) { return to_array(c.logits); })
      .def_property_readonly("log_probs", [](const ForwardCache& c) { return to_array(c.log_probs); });

  m.def(
      "forward", [](const Model& model, const Array& x) { return forward(model, to_matrix(x)); },
      py::arg("model"), py::arg("x"), "Runs a [steps x features] window through the network.");
  m.def(
      "softmax_logprobs", [](const Array& z) {
        return to_array(softmax_logprobs(std::span<const double>(z.data(), static_cast<std::size_t>(z.size()))));
      },
      py::arg("logits"));

  m.def(
      "save_model", [](const Model& model) {
        const auto bytes = save_model(model);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("model"), "Serializes a model to checkpoint bytes.");
  m.def(
      "load_model", [](const py::bytes& data) {
        const std::string s = data;
        return load_model(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
      },
      py::arg("data"));
  m.def("save_model_file", py::overload_cast<const Model&, const std::filesystem::path&>(&save_model),
        py::arg("model"), py::arg("path"));
  m.def("load_model_file", py::overload_cast<const std::filesystem::path&>(&load_model), py::arg("path"));

  py::class_<LaneChangeEvent>(m, "LaneChangeEvent")
      .def_readonly("onset_frame", &LaneChangeEvent::onset_frame)
      .def_readonly("direction", &LaneChangeEvent::direction);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("vehicle_id", &Trajectory::vehicle_id)
      .def_readonly("sample_rate_hz", &Trajectory::sample_rate_hz)
      .def_readonly("events", &Trajectory::events)
      .def_property_readonly("n_frames", [](const Trajectory& t) { return t.frames.size(); })
      .def_property_readonly("features", [](const Trajectory& t) {
        Matrix f(t.frames.size(), kFeatureCount);
        for (std::size_t i = 0; i < t.frames.size(); ++i) {
          const auto row = t.frames[i].features();
          for (std::size_t k = 0; k < kFeatureCount; ++k) f(i, k) = row[k];
        }
        return to_array(f);
      });

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("duration_s", &SynthConfig::duration_s)
      .def_readwrite("lane_width_m", &SynthConfig::lane_width_m)
      .def_readwrite("maneuver_rise_s", &SynthConfig::maneuver_rise_s)
      .def_readwrite("keep_only_fraction", &SynthConfig::keep_only_fraction)
      .def_readwrite("wander_amplitude_m", &SynthConfig::wander_amplitude_m)
      .def_readwrite("maneuvers", &SynthConfig::maneuvers);

  m.def("synthesize_dataset", &synthesize_dataset, py::arg("seed"), py::arg("n"), py::arg("rate_hz") = 25.0,
        py::arg("config") = SynthConfig{});
  m.def("synthesize_trajectory", &synthesize_trajectory, py::arg("seed"), py::arg("vehicle_id") = 1,
        py::arg("rate_hz") = 25.0, py::arg("config") = SynthConfig{});
  m.def("parse_trajectories",
        py::overload_cast<const std::filesystem::path&, double>(&parse_trajectories), py::arg("path"),
        py::arg("rate_hz") = 25.0);
  m.def(
      "parse_trajectories_text", [](const std::string& text, double rate) {
        std::istringstream in(text);
        return parse_trajectories(in, rate);
      },
      py::arg("text"), py::arg("rate_hz") = 25.0);
  m.def(
      "write_trajectories", [](const std::filesystem::path& path, const std::vector<Trajectory>& t) {
        write_trajectories(path, t);
      },
      py::arg("path"), py::arg("trajectories"));

  py::class_<WindowConfig>(m, "WindowConfig")
      .def(py::init<>())
      .def_readwrite("window_rate_hz", &WindowConfig::window_rate_hz)
      .def_readwrite("stride", &WindowConfig::stride)
      .def_readwrite("steps", &WindowConfig::steps);

  py::class_<WindowSample>(m, "WindowSample")
      .def(py::init([](const Array& x, Intention label) { return WindowSample{to_matrix(x), label}; }),
           py::arg("features"), py::arg("label"))
      .def_property_readonly("features", [](const WindowSample& s) { return to_array(s.features); })
      .def_readonly("label", &WindowSample::label)
      .def_readonly("vehicle_id", &WindowSample::vehicle_id)
      .def_readonly("end_frame", &WindowSample::end_frame);

  m.def(
      "make_windows", [](const std::vector<Trajectory>& t, const WindowConfig& cfg) {
        return make_dataset_windows(t, cfg);
      },
      py::arg("trajectories"), py::arg("config") = WindowConfig{});

  py::class_<NormStats>(m, "NormStats")
      .def_property_readonly("mean", [](const NormStats& s) { return to_array(s.mean); })
      .def_property_readonly("stddev", [](const NormStats& s) { return to_array(s.stddev); });
  m.def(
      "fit_normalizer", [](const std::vector<WindowSample>& s) { return fit_normalizer(s); }, py::arg("train"));
  m.def(
      "apply_normalizer",
      [](const NormStats& n, const std::vector<WindowSample>& s) { return apply_normalizer(n, s); },
      py::arg("stats"), py::arg("samples"));

  py::class_<DatasetSplit>(m, "DatasetSplit")
      .def_readonly("train", &DatasetSplit::train)
      .def_readonly("test", &DatasetSplit::test);
  m.def(
      "split_by_vehicle",
      [](const std::vector<WindowSample>& s, double ratio, std::uint64_t seed) {
        return split_by_vehicle(s, ratio, seed);
      },
      py::arg("samples"), py::arg("ratio") = 0.8, py::arg("seed") = 0);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("patience_epochs", &TrainConfig::patience_epochs)
      .def_readwrite("min_loss_delta", &TrainConfig::min_loss_delta)
      .def_readwrite("optimizer", &TrainConfig::optimizer)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("threads", &TrainConfig::threads);

  py::class_<EpochLog>(m, "EpochLog")
      .def_readonly("epoch", &EpochLog::epoch)
      .def_readonly("mean_loss", &EpochLog::mean_loss)
      .def_readonly("wall_time_s", &EpochLog::wall_time_s)
      .def_readonly("train_accuracy", &EpochLog::train_accuracy);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("logs", &TrainResult::logs)
      .def_readonly("best_epoch", &TrainResult::best_epoch)
      .def_readonly("stopped_early", &TrainResult::stopped_early);

  m.def(
      "train",
      [](const Model& initial, const std::vector<WindowSample>& set, const TrainConfig& cfg) {
        py::gil_scoped_release release;
        return train(initial, set, cfg);
      },
      py::arg("initial"), py::arg("train_set"), py::arg("config") = TrainConfig{});

  py::class_<RocPoint>(m, "RocPoint")
      .def_readonly("threshold", &RocPoint::threshold)
      .def_readonly("fpr", &RocPoint::fpr)
      .def_readonly("tpr", &RocPoint::tpr);
  py::class_<RocCurve>(m, "RocCurve")
      .def_readonly("class_id", &RocCurve::class_id)
      .def_readonly("points", &RocCurve::points)
      .def_readonly("auc", &RocCurve::auc);
  m.def(
      "roc_curve",
      [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
        return roc_curve(scores, labels);
      },
      py::arg("scores"), py::arg("labels"));

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("accuracy", &EvalReport::accuracy)
      .def_readonly("macro_auc", &EvalReport::macro_auc)
      .def_readonly("n_samples", &EvalReport::n_samples)
      .def_readonly("warnings", &EvalReport::warnings)
      .def_property_readonly("confusion", [](const EvalReport& r) { return r.confusion.counts; })
      .def("text", [](const EvalReport& r) {
        std::ostringstream out;
        write_report_text(out, r);
        return out.str();
      });
  m.def(
      "evaluate", [](const Model& model, const std::vector<WindowSample>& set) { return evaluate(model, set); },
      py::arg("model"), py::arg("test_set"));

  py::class_<Detection>(m, "Detection")
      .def_readonly("step", &Detection::step)
      .def_readonly("frame", &Detection::frame)
      .def_readonly("direction", &Detection::direction)
      .def_readonly("is_false", &Detection::is_false);
  py::class_<TimelineReport>(m, "TimelineReport")
      .def_readonly("vehicle_id", &TimelineReport::vehicle_id)
      .def_readonly("detections", &TimelineReport::detections)
      .def_readonly("onsets", &TimelineReport::onsets)
      .def_property_readonly("n_steps", [](const TimelineReport& r) { return r.steps.size(); })
      .def_property_readonly("false_detections", &TimelineReport::false_detections);
  m.def(
      "timeline_predict",
      [](const Model& model, const Trajectory& traj, const NormStats& norm) {
        return timeline_predict(model, traj, norm, {});
      },
      py::arg("model"), py::arg("trajectory"), py::arg("normalizer"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a command-line invocation; returns (exit_code, stdout, stderr).");
}
