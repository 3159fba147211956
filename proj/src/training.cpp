#include "spikelane/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <thread>

#include "spikelane/errors.hpp"
#include "spikelane/rng.hpp"
#include "text_util.hpp"

namespace spikelane {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience_epochs < 1) throw ConfigError("patience_epochs must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be > 0");
  }
  if (!(min_loss_delta >= 0.0) || !std::isfinite(min_loss_delta)) {
    throw ConfigError("min_loss_delta must be >= 0");
  }
}

void apply_config_file(std::istream& in, TrainConfig& cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    const auto key = text::trim(body.substr(0, eq));
    const auto value = text::trim(body.substr(eq + 1));
    auto count = [&] {
      auto v = text::parse_int(value);
      if (!v || *v < 0) throw ParseError("'" + std::string(key) + "' needs a count", line_no);
      return static_cast<std::size_t>(*v);
    };
    auto real = [&] {
      auto v = text::parse_real(value);
      if (!v) throw ParseError("'" + std::string(key) + "' needs a number", line_no);
      return *v;
    };
    if (key == "batch_size") {
      cfg.batch_size = count();
    } else if (key == "learning_rate") {
      cfg.learning_rate = real();
    } else if (key == "max_epochs") {
      cfg.max_epochs = count();
    } else if (key == "patience_epochs") {
      cfg.patience_epochs = count();
    } else if (key == "min_loss_delta") {
      cfg.min_loss_delta = real();
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(count());
    } else if (key == "threads") {
      cfg.threads = count();
    } else if (key == "optimizer") {
      if (value == "adam") {
        cfg.optimizer = OptimizerKind::adam;
      } else if (value == "sgd") {
        cfg.optimizer = OptimizerKind::sgd;
      } else {
        throw ParseError("optimizer must be adam or sgd", line_no);
      }
    } else {
      throw ParseError("unknown key '" + std::string(key) + "'", line_no);
    }
  }
}

void apply_config_file(const std::filesystem::path& path, TrainConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  apply_config_file(in, cfg);
}

OptimizerState make_optimizer_state(OptimizerKind kind,
                                    std::span<const std::span<double>> params) {
  OptimizerState state;
  state.kind = kind;
  if (kind == OptimizerKind::adam) {
    for (auto p : params) {
      state.moments.push_back({std::vector<double>(p.size(), 0.0),
                               std::vector<double>(p.size(), 0.0)});
    }
  }
  return state;
}

void optimizer_step(std::span<const std::span<double>> params,
                    std::span<const std::span<const double>> grads, OptimizerState& state,
                    double learning_rate) {
  if (params.size() != grads.size()) {
    throw UsageError("optimizer_step: " + std::to_string(params.size()) + " parameter blocks vs " +
                     std::to_string(grads.size()) + " gradient blocks");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size()) {
      throw UsageError("optimizer_step: block " + std::to_string(k) + " has " +
                       std::to_string(params[k].size()) + " parameters but " +
                       std::to_string(grads[k].size()) + " gradients");
    }
  }
  ++state.step;
  if (state.kind == OptimizerKind::sgd) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].size(); ++i) params[k][i] -= learning_rate * grads[k][i];
    }
    return;
  }

  if (state.moments.size() != params.size()) {
    throw UsageError("optimizer_step: adam state does not match the parameter blocks");
  }
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(kAdamBeta1, t);
  const double correction2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.moments[k];
    if (m.first.size() != params[k].size()) {
      throw UsageError("optimizer_step: adam moments do not match block " + std::to_string(k));
    }
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k][i];
      m.first[i] = kAdamBeta1 * m.first[i] + (1.0 - kAdamBeta1) * g;
      m.second[i] = kAdamBeta2 * m.second[i] + (1.0 - kAdamBeta2) * g * g;
      const double m_hat = m.first[i] / correction1;
      const double v_hat = m.second[i] / correction2;
      params[k][i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
  }
}

bool EarlyStopping::observe(double loss) {
  if (loss < best_ - min_delta_) {
    best_ = loss;
    epochs_since_best_ = 0;
    return true;
  }
  ++epochs_since_best_;
  return false;
}

namespace {

std::size_t resolve_threads(std::size_t requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

Gradients batch_gradients(const Model& model, std::span<const WindowSample> samples,
                          std::span<const std::size_t> batch, std::size_t threads,
                          std::vector<double>* losses, std::vector<bool>* correct) {
  if (batch.empty()) throw UsageError("batch_gradients on an empty batch");
  const std::size_t n = batch.size();
  std::vector<Gradients> per_sample(n);
  std::vector<double> sample_loss(n);
  std::vector<char> sample_correct(n);

  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& s = samples[batch[i]];
      const std::size_t label = class_index(s.label);
      const auto cache = forward(model, s.features);
      sample_loss[i] = -cache.log_probs[label];
      sample_correct[i] = predicted_class(cache.log_probs) == label;
      per_sample[i] = backward(model, cache, label);
    }
  };

  const std::size_t workers = std::min(resolve_threads(threads), n);
  if (workers <= 1) {
    work(0, n);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (n + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, w, lo, hi] {
          try {
            work(lo, hi);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Gradients total(model.dims());
  for (const auto& g : per_sample) total += g;
  total *= 1.0 / static_cast<double>(n);
  if (losses) losses->assign(sample_loss.begin(), sample_loss.end());
  if (correct) correct->assign(sample_correct.begin(), sample_correct.end());
  return total;
}

TrainResult train(const Model& initial, std::span<const WindowSample> train_set,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw UsageError("train on an empty training set");
  initial.check_shapes();
  const auto& dims = initial.dims();
  for (const auto& s : train_set) {
    if (s.features.rows() != dims.input_steps || s.features.cols() != dims.input_dim) {
      throw ShapeError("training window " + s.features.shape_string() + " vs model input " +
                       shape_string(dims.input_steps, dims.input_dim));
    }
    if (class_index(s.label) >= dims.classes) throw UsageError("training label out of range");
  }

  TrainResult result{initial, {}, 0, false};
  Model model = initial;
  const auto params = model.parameter_spans();
  OptimizerState opt = make_optimizer_state(cfg.optimizer, params);
  EarlyStopping stopper(cfg.patience_epochs, cfg.min_loss_delta);
  Rng rng(cfg.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> losses;
  std::vector<bool> correct;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    std::size_t batch_no = 0;  // 1-based in error reports
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      ++batch_no;
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + lo, hi - lo);
      Gradients grads = [&] {
        try {
          return batch_gradients(model, train_set, batch, cfg.threads, &losses, &correct);
        } catch (const NumericError& e) {
          throw DivergenceError(e.what(), epoch, batch_no);
        }
      }();
      for (std::size_t i = 0; i < losses.size(); ++i) {
        if (!std::isfinite(losses[i])) throw DivergenceError("non-finite loss", epoch, batch_no);
        loss_sum += losses[i];
        hits += correct[i] ? 1 : 0;
      }
      optimizer_step(params, std::as_const(grads).spans(), opt, cfg.learning_rate);
      for (auto p : std::as_const(model).parameter_spans()) {
        for (double v : p) {
          if (!std::isfinite(v)) throw DivergenceError("non-finite parameter", epoch, batch_no);
        }
      }
    }
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    const double n = static_cast<double>(train_set.size());
    result.logs.push_back({epoch, loss_sum / n, elapsed.count(), static_cast<double>(hits) / n});
    if (stopper.observe(result.logs.back().mean_loss)) {
      result.model = model;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

void write_training_log(std::ostream& out, std::span<const EpochLog> logs) {
  out << "epoch,mean_loss,wall_time_s,train_accuracy\n";
  for (const auto& log : logs) {
    out << log.epoch << ',' << text::format_real(log.mean_loss, 9) << ','
        << text::format_real(log.wall_time_s, 9) << ','
        << text::format_real(log.train_accuracy, 9) << '\n';
  }
}

void write_training_log(const std::filesystem::path& path, std::span<const EpochLog> logs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_training_log(out, logs);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<EpochLog> read_training_log(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) ||
      text::trim(line) != "epoch,mean_loss,wall_time_s,train_accuracy") {
    throw ParseError("training log header missing", line_no);
  }
  std::vector<EpochLog> logs;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto cells = text::split(line);
    if (cells.size() != 4) throw ParseError("expected 4 cells", line_no);
    auto epoch = text::parse_int(cells[0]);
    auto loss = text::parse_real(cells[1]);
    auto wall = text::parse_real(cells[2]);
    auto acc = text::parse_real(cells[3]);
    if (!epoch || !loss || !wall || !acc) throw ParseError("malformed log row", line_no);
    logs.push_back({static_cast<std::size_t>(*epoch), *loss, *wall, *acc});
  }
  return logs;
}

std::size_t threads_from_env(std::size_t fallback) {
  const char* raw = std::getenv("SPIKE_LANE_THREADS");
  if (raw == nullptr) return fallback;
  auto v = text::parse_int(raw);
  if (!v || *v < 0) throw ConfigError("SPIKE_LANE_THREADS must be a non-negative integer");
  return static_cast<std::size_t>(*v);
}

}  // namespace spikelane
