#include "conjunctive/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "conjunctive/errors.hpp"

namespace conjunctive {

Decomposition decompose(std::span<const EpisodeRecord> records) {
  if (records.empty()) {
    throw EstimationError("decomposition needs at least one episode");
  }
  std::size_t routed = 0;
  std::size_t routed_activated = 0;
  std::size_t activated = 0;
  for (const auto& r : records) {
    if (r.regime != Regime::both) {
      throw EstimationError("decomposition expects both-regime records");
    }
    const bool hit = r.key_routed_to_compromised();
    if (hit) ++routed;
    if (r.activated) {
      ++activated;
      if (hit) ++routed_activated;
    }
  }
  const auto n = static_cast<double>(records.size());
  Decomposition d;
  d.p_route_emp = static_cast<double>(routed) / n;
  d.asr_emp = static_cast<double>(activated) / n;
  if (routed > 0) {
    d.p_template_emp = static_cast<double>(routed_activated) / static_cast<double>(routed);
  }
  return d;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw EstimationError("correlation inputs differ in length");
  if (xs.size() < 2) throw EstimationError("correlation needs at least two points");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw EstimationError("correlation undefined for a zero-variance input");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw EstimationError("correlation inputs differ in length");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

Calibration calibrate_from_anchors() {
  using namespace calibration_anchors;
  Calibration c;
  // Clipped: alpha + rho_biased >= 1, so the biased anchor is P_t itself.
  c.clipped.template_effectiveness = kBothBiased;
  c.clipped.alpha = kBothBaseline / kBothBiased;
  c.clipped.self_consistent = c.clipped.alpha + kRhoBiased >= 1.0;
  // Unclipped: alpha * P = base, (alpha + rho) * P = biased.
  c.unclipped.template_effectiveness = (kBothBiased - kBothBaseline) / (kRhoBiased - kRhoBaseline);
  c.unclipped.alpha = kBothBaseline / c.unclipped.template_effectiveness;
  c.unclipped.self_consistent = c.unclipped.alpha + kRhoBiased <= 1.0;
  return c;
}

CalibratedEnvironment calibrated_environment() {
  const auto cal = calibrate_from_anchors();
  CalibratedEnvironment env;
  env.scenario = default_scenario();
  env.scenario.affinity = cal.alpha();
  env.scenario.topology = Topology::star();
  env.backend.slot_effectiveness[slot_position(TemplateSlot::suffix)] = cal.suffix_effectiveness();
  env.backend.key = env.scenario.key;
  env.backend.marker = env.scenario.marker;
  env.attack = AttackConfig{2, TemplateSlot::suffix, calibration_anchors::kRhoBiased};
  return env;
}

std::vector<FidelityPoint> run_fidelity_grid(const Scenario& scenario, const AttackConfig& attack,
                                             const SimulatedBackendParams& backend,
                                             const FidelityGridOptions& options) {
  const SimulatedBackend sim(backend);
  std::vector<FidelityPoint> points;
  for (auto kind : options.topologies) {
    const Scenario s = with_topology(scenario, kind);
    for (double rho : options.rhos) {
      AttackConfig cfg = attack;
      cfg.routing_bias = rho;
      const auto records = run_regime(s, Regime::both, cfg, sim, {}, options.run);
      const auto d = decompose(records);

      FidelityPoint pt;
      pt.topology = kind;
      pt.rho = rho;
      pt.p_route_emp = d.p_route_emp;
      pt.p_template_emp = d.p_template_emp.value_or(0.0);
      pt.asr_emp = d.asr_emp;
      pt.asr_surrogate = pt.p_route_emp * pt.p_template_emp;

      Rng pool_rng(0);
      auto pool = build_pool(s, pool_rng);
      const auto topo = resolve_topology(s, pool);
      auto segs = insert_key(segment(s.query), cfg.key_index, s.key);
      const auto params =
          RoutingParams::make(s.affinity, rho, static_cast<int>(pool.size()) - 1);
      pt.asr_analytic =
          compromised_reach_probability(segs[static_cast<std::size_t>(cfg.key_index - 1)], pool,
                                        params, topo) *
          backend.effectiveness(cfg.slot);
      points.push_back(pt);
    }
  }
  return points;
}

TopologyAggregate aggregate_values(std::span<const double> values) {
  if (values.empty()) throw EstimationError("aggregation needs at least one value");
  TopologyAggregate agg;
  agg.min = *std::min_element(values.begin(), values.end());
  agg.max = *std::max_element(values.begin(), values.end());
  agg.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return agg;
}

std::vector<FidelityRow> fidelity_table(std::span<const FidelityPoint> points) {
  std::map<TopologyKind, std::pair<std::vector<double>, std::vector<double>>> by_topology;
  for (const auto& p : points) {
    by_topology[p.topology].first.push_back(p.asr_surrogate);
    by_topology[p.topology].second.push_back(p.asr_emp);
  }
  std::vector<FidelityRow> rows;
  for (const auto& [kind, series] : by_topology) {
    rows.push_back({kind, aggregate_values(series.first), aggregate_values(series.second)});
  }
  return rows;
}

}  // namespace conjunctive
