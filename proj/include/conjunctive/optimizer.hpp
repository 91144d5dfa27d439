#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "conjunctive/core.hpp"

namespace conjunctive {

/// Relaxed attack configuration: logits for key placement and template slot,
/// a routing-bias logit (rho = logistic(bias_logit)) and per-slot
/// effectiveness weights (effectiveness = logistic(w)).
struct CounterpartState {
  std::vector<double> key_logits;
  std::array<double, 3> slot_logits{0.0, 0.0, 0.0};
  double bias_logit = 0.0;
  std::array<double, 3> slot_weights{0.0, 0.0, 0.0};
  double temperature = 1.0;
  /// Account affinity a_i in [0,1], one per segment.
  std::vector<double> affinity;

  static CounterpartState initial(std::span<const double> affinity,
                                  const std::array<double, 3>& slot_weights);
  void validate() const;
  int segment_count() const { return static_cast<int>(key_logits.size()); }
};

/// Loss weights. Field names follow the role of each term:
///   L = -P_route * P_template
///       + off_affinity   * sum_i p_i (1 - a_i)
///       + bias_cost      * rho
///       + template_sign * template_term * P_template
///       - key_entropy    * H(p)
///       - slot_entropy   * H(q)
/// template_sign is +1 by default; -1 turns the template term into a reward.
struct Lambdas {
  double off_affinity = 0.1;
  double bias_cost = 0.01;
  double template_term = 0.05;
  double key_entropy = 0.01;
  double slot_entropy = 0.01;
  double template_sign = 1.0;
};

struct Hyperparams {
  Lambdas lambdas;
  int steps = 500;
  double learning_rate = 0.05;
  double temp_start = 1.0;
  double temp_end = 0.1;

  void validate() const;
  /// Geometric schedule from temp_start (step 0) to temp_end (last step).
  double temperature_at(int step) const;
};

enum class OptimizationLevel { routing, routing_key, full };

std::string_view to_string(OptimizationLevel level);
OptimizationLevel parse_level(std::string_view name);

/// Gumbel(0,1) draws for one relaxed sample of p and q.
struct GumbelNoise {
  std::vector<double> key;
  std::array<double, 3> slot{0.0, 0.0, 0.0};

  static GumbelNoise sample(int segment_count, Rng& rng);
  static GumbelNoise zero(int segment_count);
};

double sample_gumbel(Rng& rng);

/// softmax((logits + noise) / temperature), max-shifted.
std::vector<double> relaxed_softmax(std::span<const double> logits, std::span<const double> noise,
                                    double temperature);

/// Draws fresh Gumbel noise and returns the relaxed sample. Throws
/// NumericError for non-finite logits or non-positive temperature.
std::vector<double> gumbel_softmax(std::span<const double> logits, double temperature, Rng& rng);

/// -sum v_i ln v_i with 0 ln 0 = 0. Negative entries raise ValidationError.
double entropy(std::span<const double> dist);

double surrogate_p_route(std::span<const double> p, std::span<const double> affinity, double rho);
double surrogate_p_template(std::span<const double> q, std::span<const double> slot_weights);
double surrogate_asr(std::span<const double> p, std::span<const double> q, double rho,
                     std::span<const double> affinity, std::span<const double> slot_weights);

/// Loss for explicit relaxed samples (p, q) and rho; affinity and slot
/// weights come from `state`.
double loss(const CounterpartState& state, std::span<const double> p, std::span<const double> q,
            double rho, const Hyperparams& hyper);

/// Loss of the relaxed sample obtained from `state` with fixed `noise`.
double relaxed_loss(const CounterpartState& state, const GumbelNoise& noise,
                    const Hyperparams& hyper);

struct Gradients {
  std::vector<double> key_logits;
  std::array<double, 3> slot_logits{0.0, 0.0, 0.0};
  double bias_logit = 0.0;
  std::array<double, 3> slot_weights{0.0, 0.0, 0.0};
  double loss = 0.0;
};

/// Exact pathwise derivatives of relaxed_loss with the noise held fixed.
Gradients gradients(const CounterpartState& state, const GumbelNoise& noise,
                    const Hyperparams& hyper);

/// Single-sample version: draws the noise from `rng` first.
Gradients gradients(const CounterpartState& state, const Hyperparams& hyper, Rng& rng);

struct OptimizeOptions {
  /// Initial effectiveness weights w (logit scale).
  std::array<double, 3> slot_weights{0.0, 0.0, 0.0};
  /// Train w at the full level. Ignored at the other levels (w stays fixed).
  bool train_slot_weights = true;
};

struct OptimizationResult {
  AttackConfig config;
  CounterpartState final_state;
  std::vector<double> loss_trace;
};

/// Gradient descent on the relaxed loss with geometric temperature annealing,
/// then argmax decoding of key and slot logits; rho is kept continuous.
///
/// Trainable logits by level: routing -> bias only; routing_key -> bias and
/// key logits; full -> bias, key and slot logits (plus w when enabled).
/// Throws OptimizationError naming the step if the loss turns non-finite.
OptimizationResult optimize(std::span<const double> affinity, const Hyperparams& hyper,
                            std::uint64_t seed, OptimizationLevel level,
                            const OptimizeOptions& options = {});

/// argmax with ties resolved to the lowest index.
std::size_t argmax(std::span<const double> v);

}  // namespace conjunctive
