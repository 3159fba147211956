#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "spikelane/errors.hpp"
#include "spikelane/rng.hpp"
#include "spikelane/snn.hpp"

using namespace spikelane;

namespace {

LinearLayer random_layer(Rng& rng, std::size_t in, std::size_t out) {
  LinearLayer l(in, out);
  for (double& w : l.weights.values()) w = rng.uniform(-1.0, 1.0);
  for (double& b : l.bias) b = rng.uniform(-1.0, 1.0);
  return l;
}

Matrix column(std::initializer_list<double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values));
}

}  // namespace

TEST_SUITE("linear") {
  TEST_CASE("zero input gives the bias on every row") {
    Rng rng(1);
    const auto layer = random_layer(rng, 5, 24);
    const Matrix out = linear_forward(Matrix(12, 5), layer);
    for (std::size_t t = 0; t < 12; ++t) {
      for (std::size_t j = 0; j < 24; ++j) CHECK(out(t, j) == layer.bias[j]);
    }
  }

  TEST_CASE("identity weights pass a basis row through") {
    LinearLayer layer(5, 5);
    for (std::size_t i = 0; i < 5; ++i) layer.weights(i, i) = 1.0;
    Matrix x(1, 5);
    x(0, 0) = 1.0;
    const Matrix out = linear_forward(x, layer);
    CHECK(out == x);
  }

  TEST_CASE("matches a triple-loop product") {
    Rng rng(2);
    const auto layer = random_layer(rng, 3, 2);
    const Matrix x = oracle::random_matrix(rng, 2, 3, -2.0, 2.0);
    const Matrix got = linear_forward(x, layer);
    const Matrix want = oracle::naive_matmul(x, layer.weights, layer.bias);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(std::abs(got.values()[i] - want.values()[i]) <= 1e-12);
    }
  }

  TEST_CASE("dimension mismatch names both shapes") {
    LinearLayer layer(5, 24);
    try {
      linear_forward(Matrix(12, 4), layer);
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("12x4") != std::string::npos);
      CHECK(msg.find("5x24") != std::string::npos);
    }
  }
}

TEST_SUITE("lif") {
  TEST_CASE("three-step recurrence with beta 0.5") {
    LifConfig cfg;
    cfg.beta = 0.5;
    const auto out = lif_forward(column({0.6, 0.6, 0.6, 0.0}), cfg);
    CHECK(out.membrane(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(out.membrane(1, 0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(out.membrane(2, 0) == doctest::Approx(1.05).epsilon(1e-15));
    CHECK(out.spikes(0, 0) == 0.0);
    CHECK(out.spikes(1, 0) == 0.0);
    CHECK(out.spikes(2, 0) == 1.0);
    // reset to zero, so the next step sees only its own current
    CHECK(out.membrane(3, 0) == 0.0);
  }

  TEST_CASE("subtract reset keeps the overshoot") {
    LifConfig cfg;
    cfg.beta = 0.5;
    cfg.reset_mode = ResetMode::subtract;
    const auto out = lif_forward(column({1.5, 0.0}), cfg);
    CHECK(out.spikes(0, 0) == 1.0);
    CHECK(out.membrane(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
  }

  TEST_CASE("zero currents stay silent") {
    const auto out = lif_forward(Matrix(12, 24), LifConfig{});
    CHECK(out.membrane == Matrix(12, 24));
    CHECK(out.spikes == Matrix(12, 24));
  }

  TEST_CASE("threshold is inclusive") {
    const auto out = lif_forward(column({1.0}), LifConfig{});
    CHECK(out.spikes(0, 0) == 1.0);
  }

  TEST_CASE("non-finite current reports its position") {
    Matrix c(3, 2);
    c(2, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
      lif_forward(c, LifConfig{});
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("t=2") != std::string::npos);
      CHECK(msg.find("j=1") != std::string::npos);
    }
  }

  TEST_CASE("sub-threshold membrane is the geometric sum") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      const Matrix c = oracle::random_matrix(rng, 12, 24, -0.09, 0.09);
      const auto out = lif_forward(c, LifConfig{});
      const Matrix want = oracle::geometric_membrane(c, 0.9);
      CHECK(out.spikes == Matrix(12, 24));
      for (std::size_t i = 0; i < want.size(); ++i) {
        REQUIRE(std::abs(out.membrane.values()[i] - want.values()[i]) <= 1e-12);
      }
    }
  }

  TEST_CASE("supra-threshold traces equal the naive recurrence exactly") {
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
      LifConfig cfg;
      cfg.reset_mode = rep % 2 ? ResetMode::subtract : ResetMode::to_zero;
      const Matrix c = oracle::random_matrix(rng, 12, 24, -0.5, 1.5);
      const auto out = lif_forward(c, cfg);
      const auto want = oracle::naive_lif(c, cfg);
      REQUIRE(out.spikes == want.spikes);
      REQUIRE(out.membrane == want.membrane);
    }
  }

  TEST_CASE("invalid configs are rejected") {
    LifConfig cfg;
    cfg.beta = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.v_threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.surrogate_slope = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_SUITE("pooling") {
  TEST_CASE("temporal mean of constant and single-spike inputs") {
    CHECK(temporal_mean(Matrix(12, 24, 1.0)) == std::vector<double>(24, 1.0));
    CHECK(temporal_mean(Matrix(12, 24)) == std::vector<double>(24, 0.0));
    Matrix one(12, 24);
    one(5, 7) = 1.0;
    const auto m = temporal_mean(one);
    for (std::size_t j = 0; j < 24; ++j) CHECK(m[j] == (j == 7 ? 1.0 / 12.0 : 0.0));
  }
}

TEST_SUITE("softmax") {
  TEST_CASE("uniform logits") {
    const auto lp = softmax_logprobs(std::vector<double>{0, 0, 0});
    for (double v : lp) CHECK(v == doctest::Approx(-std::log(3.0)).epsilon(1e-15));
  }

  TEST_CASE("large logits do not overflow") {
    const auto lp = softmax_logprobs(std::vector<double>{1000, 0, 0});
    CHECK(std::exp(lp[0]) == doctest::Approx(1.0));
    CHECK(std::exp(lp[1]) < 1e-300);
    CHECK(std::isfinite(lp[1]));
  }

  TEST_CASE("matches an extended-precision evaluation") {
    const std::vector<double> z{1, 2, 3};
    const auto lp = softmax_logprobs(z);
    const auto p = oracle::softmax_ld(z);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(std::exp(lp[i]) - static_cast<double>(p[i])) <= 1e-12);
    }
  }

  TEST_CASE("normalization and shift invariance over random logits") {
    Rng rng(5);
    for (int rep = 0; rep < 500; ++rep) {
      std::vector<double> z(3);
      for (double& v : z) v = rng.uniform(-50.0, 50.0);
      const auto lp = softmax_logprobs(z);
      double sum = 0.0;
      for (double v : lp) sum += std::exp(v);
      REQUIRE(std::abs(sum - 1.0) <= 1e-9);
      const double c = rng.uniform(-100.0, 100.0);
      std::vector<double> shifted = z;
      for (double& v : shifted) v += c;
      const auto lp2 = softmax_logprobs(shifted);
      for (std::size_t i = 0; i < 3; ++i) REQUIRE(std::abs(std::exp(lp[i]) - std::exp(lp2[i])) <= 1e-12);
      REQUIRE(predicted_class(lp) == predicted_class(lp2));
    }
  }

  TEST_CASE("non-finite logits are rejected") {
    CHECK_THROWS_AS(softmax_logprobs(std::vector<double>{0, std::numeric_limits<double>::infinity(), 0}),
                    NumericError);
  }
}

TEST_SUITE("model") {
  TEST_CASE("forward of a zero model is uniform") {
    const auto cache = forward(Model{}, Matrix(12, 5));
    for (double v : cache.log_probs) CHECK(v == doctest::Approx(-std::log(3.0)).epsilon(1e-15));
  }

  TEST_CASE("forward caches are normalized, binary and deterministic") {
    Rng rng(6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Model m = Model::initialized(seed);
      const Matrix x = oracle::random_matrix(rng, 12, 5, -3.0, 3.0);
      const auto a = forward(m, x);
      const auto b = forward(m, x);
      CHECK(a == b);
      double sum = 0.0;
      for (double v : a.log_probs) sum += std::exp(v);
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      for (double s : a.spikes.values()) CHECK((s == 0.0 || s == 1.0));
      for (double p : a.pooled) CHECK((p >= 0.0 && p <= 1.0));
    }
  }

  TEST_CASE("forward rejects the wrong input shape") {
    CHECK_THROWS_AS(forward(Model{}, Matrix(11, 5)), ShapeError);
    CHECK_THROWS_AS(forward(Model{}, Matrix(12, 6)), ShapeError);
  }

  TEST_CASE("parameter counts") {
    CHECK(param_count(Model{}) == 219);
    CHECK(param_count(Model(ModelDims{12, 5, 1, 3})) == 12);
    CHECK_THROWS_AS(Model(ModelDims{12, 5, 0, 3}), ConfigError);
  }

  TEST_CASE("initialization stays within the fan-in bound") {
    const Model m = Model::initialized(11);
    const double b1 = 1.0 / std::sqrt(5.0);
    const double b2 = 1.0 / std::sqrt(24.0);
    for (double w : m.feature_layer().weights.values()) CHECK(std::abs(w) <= b1);
    for (double w : m.classifier().weights.values()) CHECK(std::abs(w) <= b2);
    CHECK(Model::initialized(11) == m);
    CHECK_FALSE(Model::initialized(12) == m);
  }

  TEST_CASE("predicted_class breaks ties low") {
    CHECK(predicted_class(std::vector<double>{0.2, 0.2, 0.1}) == 0);
    CHECK(predicted_class(std::vector<double>{0.1, 0.8, 0.1}) == 1);
    CHECK(predicted_class(std::vector<double>{0.1, 0.4, 0.4}) == 1);
  }
}

TEST_SUITE("loss") {
  TEST_CASE("uniform, certain and hand-computed batches") {
    const double l3 = std::log(1.0 / 3.0);
    std::vector<std::vector<double>> lp{{l3, l3, l3}};
    std::vector<std::size_t> y{2};
    CHECK(nll_loss(lp, y) == doctest::Approx(std::log(3.0)).epsilon(1e-15));

    lp = {{0.0, -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
    y = {0};
    CHECK(nll_loss(lp, y) == 0.0);

    lp = {{std::log(0.5), std::log(0.25), std::log(0.25)}, {std::log(0.5), std::log(0.25), std::log(0.25)}};
    y = {0, 1};
    CHECK(nll_loss(lp, y) == doctest::Approx((std::log(2.0) + std::log(4.0)) / 2).epsilon(1e-15));
  }

  TEST_CASE("empty or mismatched batches are usage errors") {
    CHECK_THROWS_AS(nll_loss({}, {}), UsageError);
    std::vector<std::vector<double>> lp{{0, 0, 0}};
    std::vector<std::size_t> y{0, 1};
    CHECK_THROWS_AS(nll_loss(lp, y), UsageError);
  }
}

TEST_SUITE("backward") {
  TEST_CASE("surrogate derivative shape") {
    const LifConfig cfg;
    CHECK(surrogate_derivative(1.0, cfg) == 25.0);
    CHECK(surrogate_derivative(1.2, cfg) == doctest::Approx(25.0 / 36.0));
    CHECK(surrogate_derivative(0.8, cfg) == surrogate_derivative(1.2, cfg));
  }

  TEST_CASE("gradients agree with finite differences") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      const auto c = oracle::random_grad_case(seed);
      const auto r = oracle::check_gradients(c.model, c.x, c.label);
      CAPTURE(seed);
      CHECK(r.worst_classifier <= 1e-5);
      CHECK(r.worst_feature <= 1e-4);
      CHECK(r.checked > 150);
    }
  }

  TEST_CASE("a saturated prediction has zero gradient") {
    Model m = Model::initialized(3);
    m.classifier().bias = {1000.0, 0.0, 0.0};
    Rng rng(8);
    const Matrix x = oracle::random_matrix(rng, 12, 5, -1.0, 1.0);
    const auto g = backward(m, forward(m, x), 0);
    for (auto s : g.spans()) {
      for (double v : s) CHECK(v == 0.0);
    }
  }

  TEST_CASE("mismatched cache or label is a usage error") {
    const Model m = Model::initialized(3);
    auto cache = forward(m, Matrix(12, 5));
    CHECK_THROWS_AS(backward(m, cache, 3), UsageError);
    cache.pooled.pop_back();
    CHECK_THROWS_AS(backward(m, cache, 0), UsageError);
  }

  TEST_CASE("gradient buffers accumulate and scale") {
    Gradients a(ModelDims{});
    Gradients b(ModelDims{});
    a.classifier.bias = {1, 2, 3};
    b.classifier.bias = {1, 1, 1};
    a += b;
    a *= 0.5;
    CHECK(a.classifier.bias == std::vector<double>{1.0, 1.5, 2.0});
    a.set_zero();
    CHECK(a.classifier.bias == std::vector<double>{0, 0, 0});
  }
}
