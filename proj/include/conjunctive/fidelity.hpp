#pragma once

#include <optional>
#include <span>
#include <vector>

#include "conjunctive/agents.hpp"
#include "conjunctive/evaluation.hpp"

namespace conjunctive {

/// Empirical split of both-regime activation into routing and template
/// factors.
struct Decomposition {
  double p_route_emp = 0.0;
  /// Activation rate among routed episodes; absent when nothing was routed.
  std::optional<double> p_template_emp;
  double asr_emp = 0.0;
};

/// Throws EstimationError on an empty list or records outside the both regime.
Decomposition decompose(std::span<const EpisodeRecord> records);

struct FidelityPoint {
  TopologyKind topology = TopologyKind::star;
  double rho = 0.0;
  double p_route_emp = 0.0;
  double p_template_emp = 0.0;
  double asr_emp = 0.0;
  /// p_route_emp * p_template_emp.
  double asr_surrogate = 0.0;
  /// Exact reach probability times configured slot effectiveness.
  double asr_analytic = 0.0;
};

/// Product-moment correlation. Throws EstimationError for fewer than two
/// points, mismatched lengths or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Pearson correlation of average ranks (ties share their mean rank).
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Average ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> xs);

/// Both-regime ASR anchors measured at rho = 0 and rho = 0.8.
namespace calibration_anchors {
inline constexpr double kRhoBaseline = 0.0;
inline constexpr double kRhoBiased = 0.8;
inline constexpr double kBothBaseline = 0.28;
inline constexpr double kBothBiased = 0.74;
}  // namespace calibration_anchors

struct CalibrationBranch {
  double alpha = 0.0;
  double template_effectiveness = 0.0;
  /// Whether the branch's clipping assumption holds for its own solution.
  bool self_consistent = false;
};

struct Calibration {
  /// Clipping active at the biased anchor: alpha + 0.8 >= 1.
  CalibrationBranch clipped;
  /// Both anchors unclipped; reported for sensitivity runs.
  CalibrationBranch unclipped;

  double alpha() const { return clipped.alpha; }
  double suffix_effectiveness() const { return clipped.template_effectiveness; }
};

/// Solves ASR(rho) = clip(alpha + rho) * P_t through both anchors under the
/// single-dispatch (star) model.
Calibration calibrate_from_anchors();

/// Scenario and backend parameters reproducing the anchors on a star
/// topology with the trip query (key on the account segment, suffix slot).
struct CalibratedEnvironment {
  Scenario scenario;
  SimulatedBackendParams backend;
  AttackConfig attack;
};
CalibratedEnvironment calibrated_environment();

struct FidelityGridOptions {
  std::vector<TopologyKind> topologies{TopologyKind::star, TopologyKind::chain, TopologyKind::dag};
  std::vector<double> rhos{0.0, 0.4, 0.8};
  RunOptions run;
};

/// Runs the both regime at every (topology, rho) point. When a point routes
/// nothing, p_template_emp and asr_surrogate are reported as 0.
std::vector<FidelityPoint> run_fidelity_grid(const Scenario& scenario, const AttackConfig& attack,
                                             const SimulatedBackendParams& backend,
                                             const FidelityGridOptions& options);

struct FidelityRow {
  TopologyKind topology = TopologyKind::star;
  TopologyAggregate surrogate;
  TopologyAggregate empirical;
};

/// Min / mean / max over rho, per topology.
std::vector<FidelityRow> fidelity_table(std::span<const FidelityPoint> points);

TopologyAggregate aggregate_values(std::span<const double> values);

}  // namespace conjunctive
