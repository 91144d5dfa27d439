#include <doctest.h>

#include <cmath>
#include <numeric>

#include "conjunctive/errors.hpp"
#include "conjunctive/optimizer.hpp"

using namespace conjunctive;

namespace {

Hyperparams zero_lambdas() {
  Hyperparams h;
  h.lambdas = {0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  return h;
}

}  // namespace

TEST_CASE("surrogate examples") {
  const std::vector<double> p{0.2, 0.8}, a{0.0, 1.0};
  CHECK(surrogate_p_route(p, a, 0.5) == doctest::Approx(0.4));
  // Slot weights are on the logit scale.
  const std::vector<double> q{1.0, 0.0, 0.0}, w{logit(0.6), logit(0.2), logit(0.9)};
  CHECK(surrogate_p_template(q, w) == doctest::Approx(0.6));
  CHECK(surrogate_asr(p, q, 0.5, a, w) == doctest::Approx(0.24));
  const std::vector<double> spread{0.2, 0.3, 0.5};
  CHECK(surrogate_p_template(spread, w) == doctest::Approx(0.12 + 0.06 + 0.45));
}

TEST_CASE("entropy") {
  CHECK(entropy(std::vector<double>{1.0, 0.0, 0.0}) == 0.0);
  CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  CHECK(entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(entropy(std::vector<double>{-0.1, 1.1}), ValidationError);
}

TEST_CASE("loss examples") {
  auto state = CounterpartState::initial(std::vector<double>{0.0, 1.0}, {0.0, 0.0, 0.0});
  const std::vector<double> p{0.3, 0.7};
  const std::vector<double> q{0.2, 0.3, 0.5};
  const double rho = 0.6;
  const double asr = surrogate_asr(p, q, rho, state.affinity, std::vector<double>{0.0, 0.0, 0.0});
  CHECK(loss(state, p, q, rho, zero_lambdas()) == doctest::Approx(-asr));

  Hyperparams h = zero_lambdas();
  h.lambdas.off_affinity = 1.0;
  state = CounterpartState::initial(std::vector<double>{1.0, 0.0}, {0.0, 0.0, 0.0});
  const std::vector<double> half{0.5, 0.5};
  CHECK(loss(state, half, q, 0.0, h) == doctest::Approx(0.5));

  h = zero_lambdas();
  h.lambdas.template_term = 0.1;
  h.lambdas.template_sign = -1.0;
  const double pt = 0.5;
  CHECK(loss(state, half, q, 0.0, h) == doctest::Approx(-0.1 * pt));
}

TEST_CASE("gradient directions") {
  auto state = CounterpartState::initial(std::vector<double>{0.0, 1.0, 0.0}, {1.0, 1.0, 1.0});
  const auto g = gradients(state, GumbelNoise::zero(3), Hyperparams{});
  // Raising rho pays off when the account segment carries some key mass.
  CHECK(g.bias_logit < 0.0);
  CHECK(g.key_logits[1] < 0.0);
  CHECK(g.key_logits[0] > 0.0);
  CHECK(std::abs(std::accumulate(g.key_logits.begin(), g.key_logits.end(), 0.0)) < 1e-12);

  // Symmetric affinity at uniform logits: no reason to move the key.
  auto flat = CounterpartState::initial(std::vector<double>{0.5, 0.5, 0.5}, {0.0, 0.0, 0.0});
  const auto gf = gradients(flat, GumbelNoise::zero(3), Hyperparams{});
  for (double v : gf.key_logits) CHECK(std::abs(v) < 1e-12);
  for (double v : gf.slot_logits) CHECK(std::abs(v) < 1e-12);
  CHECK(gf.loss == doctest::Approx(relaxed_loss(flat, GumbelNoise::zero(3), Hyperparams{})));
}

TEST_CASE("optimization recovers the planted configuration") {
  const std::vector<double> affinity{0.0, 1.0, 0.0};
  const auto full = optimize(affinity, Hyperparams{}, 3, OptimizationLevel::full);
  CHECK(full.config.key_index == 2);
  CHECK(full.loss_trace.size() == 500);
  CHECK(full.config.routing_bias > 0.5);

  OptimizeOptions frozen;
  frozen.slot_weights = {-3.0, -3.0, 3.0};
  frozen.train_slot_weights = false;
  const auto suffix = optimize(affinity, Hyperparams{}, 3, OptimizationLevel::full, frozen);
  CHECK(suffix.config.slot == TemplateSlot::suffix);
  CHECK(suffix.final_state.slot_weights == frozen.slot_weights);

  const auto routing = optimize(affinity, Hyperparams{}, 3, OptimizationLevel::routing);
  CHECK(routing.config.key_index == 1);
  for (double v : routing.final_state.key_logits) CHECK(v == 0.0);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Hyperparams h;
    h.steps = 50;
    const auto r = optimize(affinity, h, seed, OptimizationLevel::full);
    for (double v : r.loss_trace) CHECK(std::isfinite(v));
  }
}

TEST_CASE("optimizer is deterministic in its seed") {
  const std::vector<double> affinity{0.2, 0.9, 0.1};
  Hyperparams h;
  h.steps = 100;
  const auto a = optimize(affinity, h, 11, OptimizationLevel::full);
  const auto b = optimize(affinity, h, 11, OptimizationLevel::full);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.config == b.config);
}

TEST_CASE("temperature schedule") {
  Hyperparams h;
  CHECK(h.temperature_at(0) == doctest::Approx(1.0));
  CHECK(h.temperature_at(h.steps - 1) == doctest::Approx(0.1));
  for (int s = 1; s < h.steps; ++s) CHECK(h.temperature_at(s) < h.temperature_at(s - 1));
  h.temp_end = 2.0;
  CHECK_THROWS_AS(h.validate(), ValidationError);
  h = Hyperparams{};
  h.learning_rate = 0.0;
  CHECK_THROWS_AS(h.validate(), ValidationError);
}

TEST_CASE("Gumbel-Softmax samples") {
  Rng rng(5);
  const std::vector<double> equal{0.0, 0.0, 0.0, 0.0};
  std::vector<double> mean(4, 0.0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto y = gumbel_softmax(equal, 1.0, rng);
    for (std::size_t k = 0; k < 4; ++k) mean[k] += y[k] / n;
  }
  for (double m : mean) CHECK(std::abs(m - 0.25) < 0.01);

  const std::vector<double> logits{0.3, -1.2, 2.0};
  for (double t : {1e-4, 0.1, 1.0, 10.0}) {
    for (int i = 0; i < 100; ++i) {
      const auto y = gumbel_softmax(logits, t, rng);
      double sum = 0.0;
      for (double v : y) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  // Fixed noise with a clear gap collapses to one-hot at low temperature.
  const std::vector<double> noise{0.0, 0.1, -0.2};
  const auto y = relaxed_softmax(logits, noise, 1e-4);
  CHECK(y[2] == doctest::Approx(1.0));
  CHECK(y[0] < 1e-6);
  CHECK(y[1] < 1e-6);

  CHECK_THROWS_AS(gumbel_softmax(logits, 0.0, rng), NumericError);
  CHECK_THROWS_AS(gumbel_softmax(std::vector<double>{NAN, 0.0}, 1.0, rng), NumericError);
}

TEST_CASE("argmax ties and levels") {
  CHECK(argmax(std::vector<double>{1.0, 3.0, 3.0}) == 1);
  CHECK(argmax(std::vector<double>{0.0, 0.0}) == 0);
  CHECK(parse_level("routing_key") == OptimizationLevel::routing_key);
  CHECK(to_string(OptimizationLevel::full) == "full");
  CHECK_THROWS_AS(parse_level("everything"), ValidationError);
  CHECK_THROWS_AS(optimize(std::vector<double>{}, Hyperparams{}, 1, OptimizationLevel::full),
                  ValidationError);
  CHECK_THROWS_AS(optimize(std::vector<double>{0.5, 1.5}, Hyperparams{}, 1, OptimizationLevel::full),
                  ValidationError);
}
