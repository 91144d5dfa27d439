#include "conjunctive/defenses.hpp"

#include "conjunctive/errors.hpp"

namespace conjunctive {

std::string_view to_string(PolicyId id) {
  switch (id) {
    case PolicyId::none: return "none";
    case PolicyId::tool_allowlist: return "tool_allowlist";
    case PolicyId::least_privilege: return "least_privilege";
  }
  return "?";
}

PolicyId parse_policy_id(std::string_view name) {
  if (name == "none") return PolicyId::none;
  if (name == "tool_allowlist" || name == "D1") return PolicyId::tool_allowlist;
  if (name == "least_privilege" || name == "D2") return PolicyId::least_privilege;
  throw ValidationError("unknown defense policy '" + std::string(name) + "'");
}

Policy Policy::none() { return Policy{}; }

Policy Policy::tool_allowlist(double needs_tool_prob, std::set<std::string> allowlist) {
  Policy p;
  p.id = PolicyId::tool_allowlist;
  p.needs_tool_prob = needs_tool_prob;
  p.allowlist = std::move(allowlist);
  p.validate();
  return p;
}

Policy Policy::least_privilege(double strip_fraction) {
  Policy p;
  p.id = PolicyId::least_privilege;
  p.strip_fraction = strip_fraction;
  p.validate();
  return p;
}

void Policy::validate() const {
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(needs_tool_prob)) {
    throw ValidationError("needs_tool_prob must lie in [0,1]");
  }
  if (!in_unit(strip_fraction)) {
    throw ValidationError("strip_fraction must lie in [0,1]");
  }
}

double Policy::pass_probability() const {
  switch (id) {
    case PolicyId::none: return 1.0;
    case PolicyId::tool_allowlist:
      return allowlist.contains(privileged_tool) ? 1.0 : 1.0 - needs_tool_prob;
    case PolicyId::least_privilege: return 1.0 - strip_fraction;
  }
  return 1.0;
}

bool apply_policy(const Policy& policy, bool would_activate, Rng& rng) {
  if (!would_activate) return false;
  const double pass = policy.pass_probability();
  if (pass >= 1.0) return true;
  return bernoulli(rng, pass);
}

bool apply_policies(std::span<const Policy> policies, bool would_activate, Rng& rng) {
  bool active = would_activate;
  for (const auto& p : policies) active = apply_policy(p, active, rng);
  return active;
}

double suppression_for(double baseline_asr, double target_asr) {
  if (!(baseline_asr > 0.0) || target_asr < 0.0 || target_asr > baseline_asr) {
    throw ValidationError("suppression needs 0 <= target <= baseline and baseline > 0");
  }
  return 1.0 - target_asr / baseline_asr;
}

Policy calibrated_tool_allowlist() {
  return Policy::tool_allowlist(
      suppression_for(defense_anchors::kBaselineAsr, defense_anchors::kToolAllowlistAsr));
}

Policy calibrated_least_privilege() {
  return Policy::least_privilege(
      suppression_for(defense_anchors::kBaselineAsr, defense_anchors::kLeastPrivilegeAsr));
}

}  // namespace conjunctive
