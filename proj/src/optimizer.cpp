#include "conjunctive/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "conjunctive/errors.hpp"

namespace conjunctive {
namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::array<double, 3> effectiveness_of(const std::array<double, 3>& w) {
  return {logistic(w[0]), logistic(w[1]), logistic(w[2])};
}

// d/dz of sum_i c_i p_i - entropy_weight * H(p) for p = softmax(z).
std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> c,
                                     double entropy_weight) {
  const double mean_c = dot(p, c);
  double h = 0.0;
  for (double v : p) h -= xlogx(v);
  std::vector<double> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    out[k] = p[k] * (c[k] - mean_c) + entropy_weight * (xlogx(p[k]) + p[k] * h);
  }
  return out;
}

struct Forward {
  std::vector<double> p;
  std::vector<double> q;
  std::array<double, 3> eff{};
  double rho = 0.0;
  double key_affinity = 0.0;  // sum p_i a_i
  double p_route = 0.0;
  double p_template = 0.0;
  double loss = 0.0;
};

Forward forward(const CounterpartState& state, const GumbelNoise& noise, const Hyperparams& hyper) {
  Forward f;
  f.p = relaxed_softmax(state.key_logits, noise.key, state.temperature);
  f.q = relaxed_softmax(state.slot_logits, noise.slot, state.temperature);
  f.rho = logistic(state.bias_logit);
  f.eff = effectiveness_of(state.slot_weights);
  f.key_affinity = dot(f.p, state.affinity);
  f.p_route = f.key_affinity * f.rho;
  f.p_template = dot(f.q, f.eff);
  f.loss = loss(state, f.p, f.q, f.rho, hyper);
  return f;
}

}  // namespace

CounterpartState CounterpartState::initial(std::span<const double> affinity,
                                           const std::array<double, 3>& slot_weights) {
  CounterpartState s;
  s.key_logits.assign(affinity.size(), 0.0);
  s.affinity.assign(affinity.begin(), affinity.end());
  s.slot_weights = slot_weights;
  s.validate();
  return s;
}

void CounterpartState::validate() const {
  if (key_logits.empty()) {
    throw ValidationError("counterpart state needs at least one segment");
  }
  if (affinity.size() != key_logits.size()) {
    throw ValidationError("affinity vector length must match the segment count");
  }
  for (double a : affinity) {
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("affinity entries must lie in [0,1]");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("temperature must be positive");
  }
}

void Hyperparams::validate() const {
  const auto& l = lambdas;
  for (double v : {l.off_affinity, l.bias_cost, l.template_term, l.key_entropy, l.slot_entropy}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("optimizer lambdas must be finite and nonnegative");
    }
  }
  if (l.template_sign != 1.0 && l.template_sign != -1.0) {
    throw ValidationError("template_sign must be +1 or -1");
  }
  if (steps < 1) throw ValidationError("optimizer steps must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(temp_start > 0.0) || !(temp_end > 0.0)) {
    throw ValidationError("temperatures must be positive");
  }
  if (temp_end > temp_start) throw ValidationError("temp_end must not exceed temp_start");
}

double Hyperparams::temperature_at(int step) const {
  if (steps <= 1) return temp_start;
  const double frac = static_cast<double>(step) / static_cast<double>(steps - 1);
  return temp_start * std::pow(temp_end / temp_start, frac);
}

std::string_view to_string(OptimizationLevel level) {
  switch (level) {
    case OptimizationLevel::routing: return "routing";
    case OptimizationLevel::routing_key: return "routing_key";
    case OptimizationLevel::full: return "full";
  }
  return "?";
}

OptimizationLevel parse_level(std::string_view name) {
  if (name == "routing") return OptimizationLevel::routing;
  if (name == "routing_key" || name == "routing+key") return OptimizationLevel::routing_key;
  if (name == "full") return OptimizationLevel::full;
  throw ValidationError("unknown optimization level '" + std::string(name) + "'");
}

double sample_gumbel(Rng& rng) { return -std::log(-std::log(uniform_open01(rng))); }

GumbelNoise GumbelNoise::sample(int segment_count, Rng& rng) {
  GumbelNoise n;
  n.key.resize(static_cast<std::size_t>(segment_count));
  for (auto& g : n.key) g = sample_gumbel(rng);
  for (auto& g : n.slot) g = sample_gumbel(rng);
  return n;
}

GumbelNoise GumbelNoise::zero(int segment_count) {
  GumbelNoise n;
  n.key.assign(static_cast<std::size_t>(segment_count), 0.0);
  return n;
}

std::vector<double> relaxed_softmax(std::span<const double> logits, std::span<const double> noise,
                                    double temperature) {
  if (!(temperature > 0.0)) throw NumericError("temperature must be positive");
  if (logits.size() != noise.size()) throw NumericError("logit/noise length mismatch");
  std::vector<double> z(logits.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(logits[i])) throw NumericError("non-finite logit");
    z[i] = (logits[i] + noise[i]) / temperature;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (auto& v : z) {
    v = std::exp(v - zmax);
    total += v;
  }
  for (auto& v : z) v /= total;
  return z;
}

std::vector<double> gumbel_softmax(std::span<const double> logits, double temperature, Rng& rng) {
  std::vector<double> noise(logits.size());
  for (auto& g : noise) g = sample_gumbel(rng);
  return relaxed_softmax(logits, noise, temperature);
}

double entropy(std::span<const double> dist) {
  double h = 0.0;
  for (double v : dist) {
    if (v < 0.0) throw ValidationError("entropy of a vector with a negative entry");
    h -= xlogx(v);
  }
  return h;
}

double surrogate_p_route(std::span<const double> p, std::span<const double> affinity, double rho) {
  return dot(p, affinity) * rho;
}

double surrogate_p_template(std::span<const double> q, std::span<const double> slot_weights) {
  double s = 0.0;
  for (std::size_t t = 0; t < q.size(); ++t) s += q[t] * logistic(slot_weights[t]);
  return s;
}

double surrogate_asr(std::span<const double> p, std::span<const double> q, double rho,
                     std::span<const double> affinity, std::span<const double> slot_weights) {
  return surrogate_p_route(p, affinity, rho) * surrogate_p_template(q, slot_weights);
}

double loss(const CounterpartState& state, std::span<const double> p, std::span<const double> q,
            double rho, const Hyperparams& hyper) {
  const auto& l = hyper.lambdas;
  const double p_route = surrogate_p_route(p, state.affinity, rho);
  const double p_template = surrogate_p_template(q, state.slot_weights);
  double off = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) off += p[i] * (1.0 - state.affinity[i]);
  return -p_route * p_template + l.off_affinity * off + l.bias_cost * rho +
         l.template_sign * l.template_term * p_template - l.key_entropy * entropy(p) -
         l.slot_entropy * entropy(q);
}

double relaxed_loss(const CounterpartState& state, const GumbelNoise& noise,
                    const Hyperparams& hyper) {
  return forward(state, noise, hyper).loss;
}

Gradients gradients(const CounterpartState& state, const GumbelNoise& noise,
                    const Hyperparams& hyper) {
  const auto& l = hyper.lambdas;
  const auto f = forward(state, noise, hyper);
  Gradients g;
  g.loss = f.loss;

  std::vector<double> c(f.p.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = -f.rho * f.p_template * state.affinity[i] + l.off_affinity * (1.0 - state.affinity[i]);
  }
  g.key_logits = softmax_backward(f.p, c, l.key_entropy);
  for (auto& v : g.key_logits) v /= state.temperature;

  const double slot_coeff = l.template_sign * l.template_term - f.p_route;
  std::array<double, 3> d{};
  for (std::size_t t = 0; t < 3; ++t) d[t] = slot_coeff * f.eff[t];
  const auto slot_grad = softmax_backward(f.q, d, l.slot_entropy);
  for (std::size_t t = 0; t < 3; ++t) {
    g.slot_logits[t] = slot_grad[t] / state.temperature;
    g.slot_weights[t] = slot_coeff * f.q[t] * f.eff[t] * (1.0 - f.eff[t]);
  }

  const double d_rho = -f.key_affinity * f.p_template + l.bias_cost;
  g.bias_logit = d_rho * f.rho * (1.0 - f.rho);
  return g;
}

Gradients gradients(const CounterpartState& state, const Hyperparams& hyper, Rng& rng) {
  return gradients(state, GumbelNoise::sample(state.segment_count(), rng), hyper);
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

OptimizationResult optimize(std::span<const double> affinity, const Hyperparams& hyper,
                            std::uint64_t seed, OptimizationLevel level,
                            const OptimizeOptions& options) {
  hyper.validate();
  auto state = CounterpartState::initial(affinity, options.slot_weights);
  const bool train_key = level != OptimizationLevel::routing;
  const bool train_slot = level == OptimizationLevel::full;
  const bool train_weights = train_slot && options.train_slot_weights;

  Rng rng(seed);
  OptimizationResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(hyper.steps));
  const double lr = hyper.learning_rate;
  for (int step = 0; step < hyper.steps; ++step) {
    state.temperature = hyper.temperature_at(step);
    const auto noise = GumbelNoise::sample(state.segment_count(), rng);
    const auto g = gradients(state, noise, hyper);
    if (!std::isfinite(g.loss)) {
      throw OptimizationError("loss became non-finite at step " + std::to_string(step), step);
    }
    result.loss_trace.push_back(g.loss);

    state.bias_logit -= lr * g.bias_logit;
    if (train_key) {
      for (std::size_t i = 0; i < state.key_logits.size(); ++i) {
        state.key_logits[i] -= lr * g.key_logits[i];
      }
    }
    if (train_slot) {
      for (std::size_t t = 0; t < 3; ++t) state.slot_logits[t] -= lr * g.slot_logits[t];
    }
    if (train_weights) {
      for (std::size_t t = 0; t < 3; ++t) state.slot_weights[t] -= lr * g.slot_weights[t];
    }
  }

  result.config.key_index = static_cast<int>(argmax(state.key_logits)) + 1;
  result.config.slot = kAllSlots[argmax(state.slot_logits)];
  result.config.routing_bias = logistic(state.bias_logit);
  result.final_state = std::move(state);
  return result;
}

}  // namespace conjunctive
