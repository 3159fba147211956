#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "spikelane/checkpoint.hpp"
#include "spikelane/cli.hpp"
#include "spikelane/dataset.hpp"

using namespace spikelane;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Small data set plus a short training run, shared by the eval tests.
const fs::path& trained_dir() {
  static const fs::path dir = [] {
    const auto d = oracle::scratch_dir("cli_trained");
    REQUIRE(cli({"synth", "--seed", "3", "--n", "8", "--out", (d / "data.csv").string()}).code == 0);
    REQUIRE(cli({"train", "--data", (d / "data.csv").string(), "--out", (d / "run").string(),
                 "--max-epochs", "4"})
                .code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_SUITE("cli synth") {
  TEST_CASE("writes a file that re-parses into n trajectories") {
    const auto d = oracle::scratch_dir("cli_synth");
    const auto path = (d / "a.csv").string();
    const auto r = cli({"synth", "--seed", "7", "--n", "50", "--out", path});
    CHECK(r.code == 0);
    CHECK(parse_trajectories(fs::path(path), 25.0).size() == 50);
    REQUIRE(cli({"synth", "--seed", "7", "--n", "50", "--out", (d / "b.csv").string()}).code == 0);
    CHECK(oracle::read_file(path) == oracle::read_file(d / "b.csv"));
  }

  TEST_CASE("n=0 is a usage error") {
    const auto d = oracle::scratch_dir("cli_synth0");
    const auto r = cli({"synth", "--n", "0", "--out", (d / "x.csv").string()});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(d / "x.csv"));
  }
}

TEST_SUITE("cli usage") {
  TEST_CASE("bad invocations exit 2") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"synth"}).code == 2);
    CHECK(cli({"synth", "--out", "x.csv", "--n", "many"}).code == 2);
    CHECK(cli({"train", "--data", "x.csv", "--out", "o", "--optimizer", "rmsprop"}).code == 2);
  }

  TEST_CASE("help exits 0") {
    const auto r = cli({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("synth") != std::string::npos);
  }
}

TEST_SUITE("cli train") {
  TEST_CASE("writes the three artifacts") {
    const auto d = trained_dir();
    CHECK(fs::exists(d / "run" / "model.spkl"));
    CHECK(fs::exists(d / "run" / "norm.csv"));
    std::ifstream log(d / "run" / "train_log.csv");
    CHECK(read_training_log(log).size() == 4);
  }

  TEST_CASE("one epoch gives one log row") {
    const auto d = oracle::scratch_dir("cli_train1");
    REQUIRE(cli({"synth", "--seed", "4", "--n", "4", "--out", (d / "data.csv").string()}).code == 0);
    const auto r = cli({"train", "--data", (d / "data.csv").string(), "--out", (d / "run").string(),
                        "--max-epochs", "1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("epochs: 1") != std::string::npos);
    std::ifstream log(d / "run" / "train_log.csv");
    CHECK(read_training_log(log).size() == 1);
  }

  TEST_CASE("config file with flag override") {
    const auto d = oracle::scratch_dir("cli_cfg");
    REQUIRE(cli({"synth", "--seed", "4", "--n", "4", "--out", (d / "data.csv").string()}).code == 0);
    {
      std::ofstream cfg(d / "train.cfg");
      cfg << "max_epochs=3\nbatch_size=64\n";
    }
    const auto r = cli({"train", "--data", (d / "data.csv").string(), "--out", (d / "run").string(),
                        "--config", (d / "train.cfg").string(), "--max-epochs", "2"});
    CHECK(r.code == 0);
    std::ifstream log(d / "run" / "train_log.csv");
    CHECK(read_training_log(log).size() == 2);
  }

  TEST_CASE("a missing data file is named") {
    const auto r = cli({"train", "--data", "/nonexistent/traj.csv", "--out", "x"});
    CHECK(r.code != 0);
    CHECK((r.err + r.out).find("/nonexistent/traj.csv") != std::string::npos);
  }

  TEST_CASE("a single vehicle cannot be split") {
    const auto d = oracle::scratch_dir("cli_one");
    REQUIRE(cli({"synth", "--n", "1", "--out", (d / "data.csv").string()}).code == 0);
    const auto r = cli({"train", "--data", (d / "data.csv").string(), "--out", (d / "run").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("2 vehicles") != std::string::npos);
  }
}

TEST_SUITE("cli eval") {
  TEST_CASE("prints accuracy and writes ROC curves") {
    const auto d = trained_dir();
    const auto r = cli({"eval", "--data", (d / "data.csv").string(), "--model",
                        (d / "run" / "model.spkl").string(), "--out", (d / "ev").string()});
    REQUIRE(r.code == 0);
    const auto pos = r.out.find("accuracy: ");
    REQUIRE(pos != std::string::npos);
    const double acc = std::stod(r.out.substr(pos + 10));
    CHECK((acc >= 0.0 && acc <= 1.0));
    for (int k = 0; k < 3; ++k) {
      const auto p = d / "ev" / ("roc_class" + std::to_string(k) + ".csv");
      if (!fs::exists(p)) continue;
      std::istringstream in(oracle::read_file(p));
      std::string header, first, line, last;
      std::getline(in, header);
      std::getline(in, first);
      while (std::getline(in, line)) last = line;
      CHECK(first == "inf,0,0");
      CHECK(last.substr(last.find(',')) == ",1,1");
    }
    const auto again = cli({"eval", "--data", (d / "data.csv").string(), "--model",
                            (d / "run" / "model.spkl").string(), "--out", (d / "ev2").string()});
    CHECK(again.out == r.out);
    CHECK(oracle::read_file(d / "ev" / "report.txt") == oracle::read_file(d / "ev2" / "report.txt"));
  }

  TEST_CASE("a corrupt checkpoint fails") {
    const auto d = trained_dir();
    const auto bad = oracle::scratch_dir("cli_corrupt");
    {
      std::ofstream f(bad / "model.spkl", std::ios::binary);
      f << "SPKLgarbage";
    }
    fs::copy_file(d / "run" / "norm.csv", bad / "norm.csv");
    const auto r = cli({"eval", "--data", (d / "data.csv").string(), "--model",
                        (bad / "model.spkl").string(), "--out", (bad / "ev").string()});
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
  }
}

TEST_SUITE("cli predict") {
  // Trained fixture model with a left-change vehicle (1) and a lane-keeping
  // vehicle (2).
  const fs::path& predict_dir() {
    static const fs::path dir = [] {
      const auto d = oracle::scratch_dir("cli_predict");
      const auto& fx = fixture::trained_model();
      save_model(fx.model, d / "model.spkl");
      write_normalizer(d / "norm.csv", fx.norm);
      auto left = fixture::scripted_trajectory(7, {Direction::left});
      auto keep = fixture::scripted_trajectory(2, {});
      keep.vehicle_id = 2;
      write_trajectories(d / "data.csv", std::vector<Trajectory>{left, keep});
      return d;
    }();
    return dir;
  }

  Run predict(std::int64_t vehicle) {
    const auto& d = predict_dir();
    return cli({"predict", "--data", (d / "data.csv").string(), "--model", (d / "model.spkl").string(),
                "--vehicle", std::to_string(vehicle), "--out", (d / "out").string()});
  }

  TEST_CASE("a left-change vehicle gets one detection before its onset") {
    const auto r = predict(1);
    REQUIRE(r.code == 0);
    const auto traj = fixture::scripted_trajectory(7, {Direction::left});
    const auto onset = traj.events.at(0).onset_frame;
    const auto pos = r.out.find("detection: step ");
    REQUIRE(pos != std::string::npos);
    CHECK(r.out.find("detection: step ", pos + 1) == std::string::npos);
    const auto fpos = r.out.find("frame ", pos);
    const long frame = std::stol(r.out.substr(fpos + 6));
    CHECK(frame < onset);
    CHECK(r.out.find("false detections: 0") != std::string::npos);

    std::istringstream csv(oracle::read_file(predict_dir() / "out" / "timeline_1.csv"));
    std::string line;
    std::size_t rows = 0;
    std::getline(csv, line);
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == make_windows(traj, label_frames(traj)).size());
  }

  TEST_CASE("a lane-keeping vehicle has no detections") {
    const auto r = predict(2);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("no detections") != std::string::npos);
  }

  TEST_CASE("an unknown vehicle lists the available ids") {
    const auto r = predict(99);
    CHECK(r.code == 1);
    CHECK(r.err.find("available: 1 2") != std::string::npos);
  }
}

TEST_SUITE("cli bench") {
  TEST_CASE("reports size, timing order and accuracy") {
    const auto d = trained_dir();
    const auto out = oracle::scratch_dir("cli_bench");
    const auto r = cli({"bench", "--data", (d / "data.csv").string(), "--out", out.string(),
                        "--max-epochs", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("parameters: 219\n") != std::string::npos);
    CHECK(fs::exists(out / "bench.txt"));
    std::istringstream csv(oracle::read_file(out / "bench.csv"));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    std::vector<std::string> cells;
    std::stringstream rs(row);
    for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() >= 11);
    CHECK(std::stoul(cells[0]) == 219);
    CHECK(std::stoul(cells[1]) < 10240);
    const double mean = std::stod(cells[3]), lo = std::stod(cells[4]), hi = std::stod(cells[5]);
    CHECK(lo <= mean);
    CHECK(mean <= hi);
    CHECK(std::stoul(cells[7]) == 3);
  }
}
