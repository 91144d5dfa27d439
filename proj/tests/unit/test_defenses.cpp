#include <doctest.h>

#include "conjunctive/defenses.hpp"
#include "conjunctive/errors.hpp"
#include "conjunctive/evaluation.hpp"

using namespace conjunctive;

TEST_CASE("policy application") {
  Rng rng(1);
  CHECK(apply_policy(Policy::none(), true, rng));
  CHECK_FALSE(apply_policy(Policy::none(), false, rng));
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(apply_policy(Policy::least_privilege(0.5), false, rng));
    CHECK_FALSE(apply_policy(Policy::tool_allowlist(0.5), false, rng));
  }
  CHECK_FALSE(apply_policy(Policy::least_privilege(1.0), true, rng));
  CHECK(apply_policy(Policy::least_privilege(0.0), true, rng));
  CHECK(apply_policy(Policy::tool_allowlist(1.0, {"privileged_action"}), true, rng));
}

TEST_CASE("suppression rates") {
  Rng rng(2);
  const int n = 100000;
  int d1 = 0, both = 0;
  const std::vector<Policy> pair{Policy::tool_allowlist(0.2), Policy::least_privilege(0.25)};
  for (int i = 0; i < n; ++i) {
    if (apply_policy(Policy::tool_allowlist(0.2), true, rng)) ++d1;
    if (apply_policies(pair, true, rng)) ++both;
  }
  CHECK(std::abs(static_cast<double>(d1) / n - 0.8) <= 0.01);
  CHECK(std::abs(static_cast<double>(both) / n - 0.8 * 0.75) <= 0.01);
}

TEST_CASE("calibrated policies") {
  CHECK(calibrated_tool_allowlist().needs_tool_prob == doctest::Approx(1.0 - 0.62 / 0.73));
  CHECK(calibrated_tool_allowlist().needs_tool_prob == doctest::Approx(0.1507).epsilon(1e-3));
  CHECK(calibrated_least_privilege().strip_fraction == doctest::Approx(1.0 - 0.58 / 0.73));
  CHECK(calibrated_least_privilege().strip_fraction == doctest::Approx(0.2055).epsilon(1e-3));
  CHECK_THROWS_AS(suppression_for(0.0, 0.0), ValidationError);
  CHECK_THROWS_AS(suppression_for(0.5, 0.6), ValidationError);
  CHECK_THROWS_AS(Policy::least_privilege(1.5), ValidationError);
  CHECK(parse_policy_id("D1") == PolicyId::tool_allowlist);
  CHECK(parse_policy_id("least_privilege") == PolicyId::least_privilege);
  CHECK_THROWS_AS(parse_policy_id("firewall"), ValidationError);
}

TEST_CASE("defenses are monotone per episode and leave partial regimes alone") {
  Scenario s = default_scenario();
  s.affinity = 0.5;
  SimulatedBackendParams params;
  params.key_noise = 0.2;
  params.template_noise = 0.2;
  const SimulatedBackend backend(params);
  const AttackConfig attack{2, TemplateSlot::suffix, 0.5};
  const std::vector<Policy> strong{Policy::least_privilege(0.5)};
  for (auto regime : kAllRegimes) {
    const auto base = run_regime(s, regime, attack, backend, {}, {300, 3, 2});
    const auto defended = run_regime(s, regime, attack, backend, strong, {300, 3, 2});
    int dropped = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK((!defended[i].activated || base[i].activated));
      CHECK(defended[i].routing_trace == base[i].routing_trace);
      if (base[i].activated && !defended[i].activated) ++dropped;
      if (regime != Regime::both) CHECK(defended[i].activated == base[i].activated);
    }
    if (regime == Regime::both) CHECK(dropped > 0);
  }

  // Switching conjunctive_only off lets the policy see noise activations too.
  Policy all = Policy::least_privilege(1.0);
  all.conjunctive_only = false;
  const auto k = run_regime(s, Regime::key_only, attack, backend, std::vector<Policy>{all}, {300, 3, 2});
  for (const auto& r : k) CHECK_FALSE(r.activated);
}
