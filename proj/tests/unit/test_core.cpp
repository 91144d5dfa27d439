#include <doctest.h>

#include <set>

#include "conjunctive/core.hpp"
#include "conjunctive/errors.hpp"
#include "conjunctive/segmentation.hpp"

using namespace conjunctive;

TEST_CASE("episode seeds are pure and distinct") {
  CHECK(derive_episode_seed(42, 0, Regime::clean) == derive_episode_seed(42, 0, Regime::clean));
  CHECK(derive_episode_seed(42, 0, Regime::clean) != derive_episode_seed(42, 1, Regime::clean));
  CHECK(derive_episode_seed(42, 0, Regime::clean) != derive_episode_seed(42, 0, Regime::both));

  std::set<std::uint64_t> seen;
  for (std::int64_t ep = 0; ep < 2500; ++ep) {
    for (auto r : kAllRegimes) seen.insert(derive_episode_seed(42, ep, r));
  }
  CHECK(seen.size() == 10000);
}

TEST_CASE("uniform draws stay in range") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    CHECK((u >= 0.0 && u < 1.0));
    const double v = uniform_open01(rng);
    CHECK((v > 0.0 && v < 1.0));
    CHECK(uniform_index(rng, 7) < 7);
  }
  CHECK_FALSE(bernoulli(rng, 0.0));
  CHECK(bernoulli(rng, 1.0));
}

TEST_CASE("logistic is stable and inverts logit") {
  CHECK(logistic(0.0) == doctest::Approx(0.5));
  CHECK(logistic(800.0) == doctest::Approx(1.0));
  CHECK(logistic(-800.0) == doctest::Approx(0.0));
  CHECK(logistic(logit(0.74)) == doctest::Approx(0.74));
}

TEST_CASE("enum names round-trip") {
  for (auto s : kAllSlots) CHECK(parse_slot(to_string(s)) == s);
  for (auto r : kAllRegimes) CHECK(parse_regime(to_string(r)) == r);
  for (auto k : {TopologyKind::star, TopologyKind::chain, TopologyKind::dag}) {
    CHECK(parse_topology_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_slot("middle"), ValidationError);
  CHECK_THROWS_AS(parse_regime("partial"), ValidationError);
  CHECK_THROWS_AS(parse_topology_kind("ring"), ValidationError);
}

TEST_CASE("regime components") {
  CHECK_FALSE(components_of(Regime::clean).key);
  CHECK_FALSE(components_of(Regime::clean).template_injected);
  CHECK(components_of(Regime::key_only).key);
  CHECK_FALSE(components_of(Regime::key_only).template_injected);
  CHECK_FALSE(components_of(Regime::template_only).key);
  CHECK(components_of(Regime::template_only).template_injected);
  CHECK(components_of(Regime::both).key);
  CHECK(components_of(Regime::both).template_injected);
}

TEST_CASE("attack config validation") {
  AttackConfig a{2, TemplateSlot::suffix, 0.8};
  CHECK_NOTHROW(a.validate(3));
  CHECK_THROWS_AS(AttackConfig({0, TemplateSlot::suffix, 0.5}).validate(3), ValidationError);
  CHECK_THROWS_AS(AttackConfig({4, TemplateSlot::suffix, 0.5}).validate(3), ValidationError);
  CHECK_THROWS_AS(AttackConfig({1, TemplateSlot::suffix, 1.5}).validate(3), ValidationError);
  CHECK_THROWS_AS(AttackConfig({1, TemplateSlot::suffix, -0.1}).validate(3), ValidationError);
}

TEST_CASE("routing params clamp and require benign agents") {
  const auto p = RoutingParams::make(1.4, -0.2, 3);
  CHECK(p.affinity == 1.0);
  CHECK(p.routing_bias == 0.0);
  CHECK_THROWS_AS(RoutingParams::make(0.5, 0.5, 0), ConfigError);
}

// ---------------------------------------------------------------------------

namespace {
QuerySpec trip() {
  return QuerySpec({"Find flights from NYC to LA next week.", "Check account rewards balance.",
                    "Suggest nearby hotels."},
                   {false, true, false});
}
}  // namespace

TEST_CASE("segment returns the stored decomposition") {
  const auto segs = segment(trip());
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].text == "Find flights from NYC to LA next week.");
  CHECK(segs[1].text == "Check account rewards balance.");
  CHECK(segs[2].text == "Suggest nearby hotels.");
  CHECK(segs[1].is_account);
  CHECK_FALSE(segs[0].is_account);
  for (int i = 0; i < 3; ++i) {
    CHECK(segs[static_cast<std::size_t>(i)].index == i + 1);
    CHECK_FALSE(segs[static_cast<std::size_t>(i)].has_key);
  }
  CHECK(segment(trip()) == segs);

  const QuerySpec single({"Only one part."}, {true});
  CHECK(segment(single).size() == 1);
}

TEST_CASE("query spec rejects malformed input") {
  CHECK_THROWS_AS(QuerySpec({}, {}), ValidationError);
  CHECK_THROWS_AS(QuerySpec({"a", "b"}, {true}), ValidationError);
}

TEST_CASE("key insertion") {
  const auto segs = segment(trip());
  const auto keyed = insert_key(segs, 2, "__KEY__");
  CHECK(keyed[1].text == "Check account rewards balance. __KEY__");
  CHECK(keyed[1].text.ends_with("__KEY__"));
  CHECK_FALSE(keyed[0].has_key);
  CHECK(keyed[1].has_key);
  CHECK_FALSE(keyed[2].has_key);
  CHECK(keyed[0].text == segs[0].text);
  CHECK(insert_key(segment(trip()), 2, "__KEY__") == keyed);

  const auto empty = insert_key(segs, 1, "");
  CHECK(empty[0].text == segs[0].text);
  CHECK(empty[0].has_key);

  CHECK_THROWS_AS(insert_key(segs, 0, "__KEY__"), IndexError);
  CHECK_THROWS_AS(insert_key(segs, 4, "__KEY__"), IndexError);
  CHECK_THROWS_AS(insert_key(keyed, 1, "__KEY__"), ValidationError);
}
