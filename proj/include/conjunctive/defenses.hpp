#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>

#include "conjunctive/core.hpp"

namespace conjunctive {

enum class PolicyId { none, tool_allowlist, least_privilege };

std::string_view to_string(PolicyId id);
PolicyId parse_policy_id(std::string_view name);

/// System-level control applied to the compromised agent's activation.
///
/// tool_allowlist (D1) suppresses an activation with probability
/// `needs_tool_prob`, the chance that its path needs a tool outside the
/// allowlist. If the allowlist already contains `privileged_tool` nothing is
/// blocked. least_privilege (D2) suppresses with probability `strip_fraction`,
/// the chance that trimming the input to the minimal segment content
/// separates key and template.
///
/// With `conjunctive_only` set (the default) a policy acts only on
/// activations where key and template met at the compromised agent; noise
/// activations in the partial regimes pass through untouched.
struct Policy {
  PolicyId id = PolicyId::none;
  std::set<std::string> allowlist;
  std::string privileged_tool = "privileged_action";
  double needs_tool_prob = 0.0;
  double strip_fraction = 0.0;
  bool conjunctive_only = true;

  static Policy none();
  static Policy tool_allowlist(double needs_tool_prob, std::set<std::string> allowlist = {});
  static Policy least_privilege(double strip_fraction);

  void validate() const;
  /// Probability an activation survives this policy.
  double pass_probability() const;
};

/// Never turns a benign outcome into an activation. Draws from `rng` only
/// when an activation is at stake.
bool apply_policy(const Policy& policy, bool would_activate, Rng& rng);

/// Applies policies in order; survival probabilities multiply.
bool apply_policies(std::span<const Policy> policies, bool would_activate, Rng& rng);

/// Suppression probability that maps `baseline_asr` to `target_asr`:
/// 1 - target / baseline.
double suppression_for(double baseline_asr, double target_asr);

/// Reference attenuation anchors for the closed-source backbone at rho = 0.8.
namespace defense_anchors {
inline constexpr double kBaselineAsr = 0.73;
inline constexpr double kToolAllowlistAsr = 0.62;
inline constexpr double kLeastPrivilegeAsr = 0.58;
}  // namespace defense_anchors

Policy calibrated_tool_allowlist();
Policy calibrated_least_privilege();

}  // namespace conjunctive
