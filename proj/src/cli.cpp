#include "spikelane/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "spikelane/bench.hpp"
#include "spikelane/checkpoint.hpp"
#include "spikelane/dataset.hpp"
#include "spikelane/errors.hpp"
#include "spikelane/evaluation.hpp"
#include "spikelane/snn.hpp"
#include "spikelane/synth.hpp"
#include "spikelane/training.hpp"

namespace spikelane {

namespace {

namespace fs = std::filesystem;

// One --seed drives the whole pipeline through fixed offsets.
constexpr std::uint64_t kInitSeedOffset = 1;
constexpr std::uint64_t kShuffleSeedOffset = 2;

struct DataOptions {
  std::string data;
  double rate_hz = 25.0;
  double window_rate_hz = 4.0;
  std::size_t stride = 1;
  double split_ratio = 0.8;
  std::uint64_t seed = 7;

  WindowConfig window() const {
    WindowConfig w;
    w.window_rate_hz = window_rate_hz;
    w.stride = stride;
    return w;
  }
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--data", o.data, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--rate-hz", o.rate_hz, "Sample rate of the CSV frames")->capture_default_str();
  cmd->add_option("--window-rate-hz", o.window_rate_hz, "Target window sampling rate")
      ->capture_default_str();
  cmd->add_option("--stride", o.stride, "Window stride in downsampled steps")
      ->capture_default_str();
  cmd->add_option("--split-ratio", o.split_ratio, "Fraction of vehicles used for training")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for split, initialization and shuffling")
      ->capture_default_str();
}

struct TrainOptions {
  std::size_t batch_size = 128;
  double lr = 1e-3;
  std::size_t patience = 50;
  std::size_t max_epochs = 2000;
  double min_delta = 1e-6;
  std::string optimizer = "adam";
  std::string config;
};

void add_train_options(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--config", o.config, "key=value training config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--batch-size", o.batch_size)->capture_default_str();
  cmd->add_option("--lr", o.lr)->capture_default_str();
  cmd->add_option("--patience", o.patience)->capture_default_str();
  cmd->add_option("--max-epochs", o.max_epochs)->capture_default_str();
  cmd->add_option("--min-delta", o.min_delta)->capture_default_str();
  cmd->add_option("--optimizer", o.optimizer)
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
}

// Config file first, explicit flags override it.
TrainConfig build_train_config(const CLI::App* cmd, const TrainOptions& o, std::uint64_t seed) {
  TrainConfig cfg;
  if (!o.config.empty()) apply_config_file(fs::path(o.config), cfg);
  auto given = [&](const char* flag) { return cmd->count(flag) > 0 || o.config.empty(); };
  if (given("--batch-size")) cfg.batch_size = o.batch_size;
  if (given("--lr")) cfg.learning_rate = o.lr;
  if (given("--patience")) cfg.patience_epochs = o.patience;
  if (given("--max-epochs")) cfg.max_epochs = o.max_epochs;
  if (given("--min-delta")) cfg.min_loss_delta = o.min_delta;
  if (given("--optimizer")) {
    cfg.optimizer = o.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
  }
  cfg.seed = seed + kShuffleSeedOffset;
  cfg.threads = threads_from_env(cfg.threads);
  cfg.validate();
  return cfg;
}

struct PreparedData {
  std::vector<Trajectory> trajectories;
  DatasetSplit split;
};

PreparedData prepare(const DataOptions& o) {
  PreparedData p;
  p.trajectories = parse_trajectories(fs::path(o.data), o.rate_hz);
  const auto windows = make_dataset_windows(p.trajectories, o.window());
  if (windows.empty()) throw UsageError("no trajectory in " + o.data + " is long enough for a window");
  p.split = split_by_vehicle(windows, o.split_ratio, o.seed);
  return p;
}

struct TrainOutcome {
  TrainResult result;
  NormStats norm;
  PreparedData data;
};

TrainOutcome run_training(const DataOptions& d, const TrainConfig& cfg, const fs::path& out_dir,
                          std::ostream& out) {
  TrainOutcome t{{Model{}, {}, 0, false}, {}, prepare(d)};
  t.norm = fit_normalizer(t.data.split.train);
  const auto train_set = apply_normalizer(t.norm, t.data.split.train);
  out << "train windows: " << train_set.size() << " from "
      << t.data.split.train_vehicles.size() << " vehicles\n";
  const Model initial = Model::initialized(d.seed + kInitSeedOffset);
  t.result = train(initial, train_set, cfg);

  fs::create_directories(out_dir);
  save_model(t.result.model, out_dir / "model.spkl");
  write_normalizer(out_dir / "norm.csv", t.norm);
  write_training_log(out_dir / "train_log.csv", t.result.logs);

  double wall = 0.0;
  for (const auto& log : t.result.logs) wall += log.wall_time_s;
  const auto& best = t.result.logs[t.result.best_epoch - 1];
  out << "epochs: " << t.result.logs.size() << (t.result.stopped_early ? " (early stop)" : "")
      << "\nbest epoch: " << t.result.best_epoch << "\nfinal loss: " << best.mean_loss
      << "\ntrain accuracy: " << best.train_accuracy << "\nwall time s: " << wall << '\n';
  return t;
}

std::vector<WindowSample> test_windows(const PreparedData& data, const NormStats& norm, bool all) {
  if (all) {
    std::vector<WindowSample> everything = data.split.train;
    everything.insert(everything.end(), data.split.test.begin(), data.split.test.end());
    return apply_normalizer(norm, everything);
  }
  return apply_normalizer(norm, data.split.test);
}

fs::path norm_path_for(const std::string& explicit_path, const std::string& model_path) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(model_path).parent_path() / "norm.csv";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spiking lane-change intention classifier"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic trajectory CSV");
  std::uint64_t synth_seed = 7;
  std::size_t synth_n = 50;
  double synth_rate = 25.0;
  std::string synth_out;
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--n", synth_n, "Number of vehicles")->capture_default_str();
  synth->add_option("--rate-hz", synth_rate)->capture_default_str();
  synth->add_option("--out", synth_out, "Output CSV path")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes model.spkl, norm.csv, train_log.csv");
  DataOptions train_data;
  TrainOptions train_opts;
  std::string train_out;
  add_data_options(train_cmd, train_data);
  add_train_options(train_cmd, train_opts);
  train_cmd->add_option("--out", train_out, "Output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out vehicles");
  DataOptions eval_data;
  std::string eval_model, eval_norm, eval_out;
  bool eval_all = false;
  add_data_options(eval_cmd, eval_data);
  eval_cmd->add_option("--model", eval_model)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--norm", eval_norm, "Normalizer (default: norm.csv beside the model)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();
  eval_cmd->add_flag("--all", eval_all, "Evaluate every window instead of the test split");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Per-window timeline for one vehicle");
  DataOptions pred_data;
  std::string pred_model, pred_norm, pred_out;
  std::int64_t pred_vehicle = 0;
  add_data_options(predict_cmd, pred_data);
  predict_cmd->add_option("--model", pred_model)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--norm", pred_norm)->check(CLI::ExistingFile);
  predict_cmd->add_option("--vehicle", pred_vehicle)->required();
  predict_cmd->add_option("--out", pred_out, "Output directory")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Train with timing and report size/time/accuracy");
  DataOptions bench_data;
  TrainOptions bench_opts;
  std::string bench_out = "bench_out";
  add_data_options(bench_cmd, bench_data);
  add_train_options(bench_cmd, bench_opts);
  bench_cmd->add_option("--out", bench_out, "Output directory")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      if (synth_n == 0) {
        err << "synth: --n must be >= 1\n";
        return 2;
      }
      const auto trajectories = synthesize_dataset(synth_seed, synth_n, synth_rate);
      const fs::path path(synth_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      write_trajectories(path, trajectories);
      std::size_t events = 0;
      for (const auto& t : trajectories) events += t.events.size();
      out << "wrote " << trajectories.size() << " trajectories (" << events
          << " lane changes) to " << path.string() << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      const auto cfg = build_train_config(train_cmd, train_opts, train_data.seed);
      run_training(train_data, cfg, train_out, out);
      out << "wrote model.spkl, norm.csv, train_log.csv to " << train_out << '\n';
      return 0;
    }

    if (eval_cmd->parsed()) {
      const Model model = load_model(fs::path(eval_model));
      const NormStats norm = read_normalizer(norm_path_for(eval_norm, eval_model));
      const auto data = prepare(eval_data);
      const auto samples = test_windows(data, norm, eval_all);
      const auto report = evaluate(model, samples);
      write_eval_outputs(eval_out, report);
      out << "accuracy: " << report.accuracy << '\n'
          << "macro_auc: ";
      if (report.macro_auc) {
        out << *report.macro_auc << '\n';
      } else {
        out << "unavailable\n";
      }
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      return 0;
    }

    if (predict_cmd->parsed()) {
      const Model model = load_model(fs::path(pred_model));
      const NormStats norm = read_normalizer(norm_path_for(pred_norm, pred_model));
      const auto trajectories = parse_trajectories(fs::path(pred_data.data), pred_data.rate_hz);
      auto it = std::find_if(trajectories.begin(), trajectories.end(),
                             [&](const Trajectory& t) { return t.vehicle_id == pred_vehicle; });
      if (it == trajectories.end()) {
        err << "unknown vehicle " << pred_vehicle << "; available:";
        for (const auto& t : trajectories) err << ' ' << t.vehicle_id;
        err << '\n';
        return 1;
      }
      const auto report = timeline_predict(model, *it, norm, pred_data.window());
      fs::create_directories(pred_out);
      const auto path = fs::path(pred_out) / ("timeline_" + std::to_string(pred_vehicle) + ".csv");
      {
        std::ofstream csv(path, std::ios::trunc);
        if (!csv) throw IoError("cannot open " + path.string());
        write_timeline_csv(csv, report);
        if (!csv) throw IoError("failed writing " + path.string());
      }
      out << "windows: " << report.steps.size() << '\n';
      out << "ground-truth onsets:";
      if (report.onsets.empty()) out << " none";
      for (const auto& e : report.onsets) {
        out << ' ' << e.onset_frame << " (" << intention_name(to_intention(e.direction)) << ')';
      }
      out << '\n';
      if (report.detections.empty()) {
        out << "no detections\n";
      } else {
        for (const auto& d : report.detections) {
          out << "detection: step " << d.step << " frame " << d.frame << ' '
              << intention_name(to_intention(d.direction)) << (d.is_false ? " FALSE" : "") << '\n';
        }
      }
      out << "false detections: " << report.false_detections() << '\n';
      out << "wrote " << path.string() << '\n';
      return 0;
    }

    if (bench_cmd->parsed()) {
      const auto cfg = build_train_config(bench_cmd, bench_opts, bench_data.seed);
      auto t = run_training(bench_data, cfg, bench_out, out);
      const auto test_set = test_windows(t.data, t.norm, false);
      const auto report = evaluate(t.result.model, test_set);
      write_eval_outputs(bench_out, report);
      const auto bench = summarize_bench(t.result, report, cfg.optimizer);
      write_bench_text(out, bench);
      {
        std::ofstream txt(fs::path(bench_out) / "bench.txt", std::ios::trunc);
        write_bench_text(txt, bench);
        std::ofstream csv(fs::path(bench_out) / "bench.csv", std::ios::trunc);
        write_bench_csv(csv, bench);
        if (!txt || !csv) throw IoError("failed writing bench outputs to " + bench_out);
      }
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace spikelane
