#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conjunctive/agents.hpp"
#include "conjunctive/defenses.hpp"
#include "conjunctive/evaluation.hpp"
#include "conjunctive/optimizer.hpp"
#include "conjunctive/remote_backend.hpp"

namespace conjunctive {

enum class BackendKind { simulated, remote };

struct BackendConfig {
  BackendKind kind = BackendKind::simulated;
  SimulatedBackendParams simulated;
  RemoteEndpoint remote;
};

/// How the counterpart's slot-effectiveness weights start out.
///   zeros:        w = 0 (effectiveness 0.5 everywhere)
///   prior:        logit of optimizer.w_prior
///   ground_truth: logit of the simulated backend's slot_effectiveness
///   empirical:    logit of per-slot activation-given-routing from pilot runs
enum class WeightInit { zeros, prior, ground_truth, empirical };

struct OptimizerConfig {
  Hyperparams hyper;
  OptimizationLevel level = OptimizationLevel::full;
  std::vector<OptimizationLevel> levels{OptimizationLevel::routing, OptimizationLevel::routing_key,
                                        OptimizationLevel::full};
  WeightInit w_init = WeightInit::ground_truth;
  std::array<double, 3> w_prior{0.5, 0.5, 0.5};
  bool train_slot_weights = true;
  /// Per-segment affinity a_i; defaults to the account mask as 0/1.
  std::optional<std::vector<double>> affinity;
  bool follow_up_simulate = true;
  int pilot_episodes = 200;
  /// Independent optimization seeds per level in `evaluate`.
  int seeds = 1;
};

struct RunConfig {
  int episodes = 50;
  std::uint64_t seed = 0;
  std::vector<Regime> regimes{kAllRegimes.begin(), kAllRegimes.end()};
  int parallelism = 1;
};

struct FidelityConfig {
  std::vector<double> rhos{0.0, 0.4, 0.8};
};

struct ExperimentConfig {
  Scenario scenario;
  std::vector<TopologyKind> topologies{TopologyKind::star};
  AttackConfig attack;
  BackendConfig backend;
  RunConfig run;
  OptimizerConfig optimizer;
  std::vector<Policy> defenses;
  FidelityConfig fidelity;

  /// Account mask as 0/1 unless optimizer.affinity overrides it.
  std::vector<double> affinity_vector() const;
};

/// Parses and validates a config document. Errors are ConfigError messages
/// that name the offending field ("routing.alpha: ...").
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads `path` as JSON and parses it. IoError when unreadable; ConfigError
/// for malformed JSON or invalid fields.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace conjunctive
