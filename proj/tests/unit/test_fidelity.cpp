#include <doctest.h>

#include "conjunctive/errors.hpp"
#include "conjunctive/fidelity.hpp"

using namespace conjunctive;

namespace {

EpisodeRecord both_record(bool routed, bool activated) {
  EpisodeRecord r;
  r.regime = Regime::both;
  r.key_index = 1;
  r.compromised_agent = "a";
  r.routing_trace = {RoutedSegment{1, {routed ? "a" : "b"}, routed ? "a" : "b"}};
  r.activated = activated;
  return r;
}

}  // namespace

TEST_CASE("decomposition") {
  std::vector<EpisodeRecord> records;
  for (int i = 0; i < 60; ++i) records.push_back(both_record(true, i < 45));
  for (int i = 0; i < 40; ++i) records.push_back(both_record(false, false));
  const auto d = decompose(records);
  CHECK(d.p_route_emp == doctest::Approx(0.6));
  CHECK(*d.p_template_emp == doctest::Approx(0.75));
  CHECK(d.asr_emp == doctest::Approx(0.45));

  const std::vector<EpisodeRecord> none(10, both_record(false, false));
  CHECK_FALSE(decompose(none).p_template_emp.has_value());
  CHECK_THROWS_AS(decompose(std::vector<EpisodeRecord>{}), EstimationError);
  auto wrong = none;
  wrong[0].regime = Regime::clean;
  CHECK_THROWS_AS(decompose(wrong), EstimationError);
}

TEST_CASE("correlations") {
  const std::vector<double> x{1, 2, 3}, y{1, 3, 2}, rev{3, 2, 1};
  CHECK(spearman(x, y) == doctest::Approx(0.5));
  CHECK(spearman(x, rev) == doctest::Approx(-1.0));
  CHECK(pearson(x, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0));
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), EstimationError);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), EstimationError);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{4, 4, 4}), EstimationError);
}

TEST_CASE("calibration branches") {
  const auto cal = calibrate_from_anchors();
  CHECK(cal.alpha() == doctest::Approx(0.28 / 0.74));
  CHECK(cal.suffix_effectiveness() == doctest::Approx(0.74));
  CHECK(cal.clipped.self_consistent);
  CHECK(cal.alpha() + 0.8 >= 1.0);
  // Unclipped: a P = 0.28, (a + 0.8) P = 0.74.
  CHECK(cal.unclipped.template_effectiveness == doctest::Approx(0.46 / 0.8));
  CHECK(cal.unclipped.alpha == doctest::Approx(0.28 / (0.46 / 0.8)));
  CHECK_FALSE(cal.unclipped.self_consistent);

  const auto env = calibrated_environment();
  CHECK(env.attack.slot == TemplateSlot::suffix);
  CHECK(env.attack.routing_bias == doctest::Approx(0.8));
  CHECK(env.scenario.topology.kind == TopologyKind::star);
}

TEST_CASE("fidelity grid and table") {
  const auto env = calibrated_environment();
  FidelityGridOptions options;
  options.run = {400, 2, 4};
  const auto points = run_fidelity_grid(env.scenario, env.attack, env.backend, options);
  REQUIRE(points.size() == 9);
  for (const auto& p : points) {
    CHECK(p.asr_surrogate == doctest::Approx(p.p_route_emp * p.p_template_emp));
    CHECK(p.asr_emp == doctest::Approx(p.asr_surrogate));
    CHECK(std::abs(p.asr_emp - p.asr_analytic) < 0.1);
  }
  const auto rows = fidelity_table(points);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(row.surrogate.min <= row.surrogate.mean);
    CHECK(row.surrogate.mean <= row.surrogate.max);
  }
  const auto agg = aggregate_values(std::vector<double>{0.2, 0.4, 0.9});
  CHECK(agg.min == 0.2);
  CHECK(agg.mean == doctest::Approx(0.5));
  CHECK(agg.max == 0.9);
}
