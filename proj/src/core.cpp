#include "conjunctive/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "conjunctive/errors.hpp"

namespace conjunctive {

std::string_view to_string(TemplateSlot slot) {
  switch (slot) {
    case TemplateSlot::prefix: return "prefix";
    case TemplateSlot::wrap: return "wrap";
    case TemplateSlot::suffix: return "suffix";
  }
  return "?";
}

TemplateSlot parse_slot(std::string_view name) {
  for (auto slot : kAllSlots) {
    if (to_string(slot) == name) return slot;
  }
  throw ValidationError("unknown template slot '" + std::string(name) +
                        "' (expected prefix, wrap or suffix)");
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::clean: return "clean";
    case Regime::key_only: return "key_only";
    case Regime::template_only: return "template_only";
    case Regime::both: return "both";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  for (auto regime : kAllRegimes) {
    if (to_string(regime) == name) return regime;
  }
  throw ValidationError("unknown regime '" + std::string(name) + "'");
}

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::star: return "star";
    case TopologyKind::chain: return "chain";
    case TopologyKind::dag: return "dag";
  }
  return "?";
}

TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "star") return TopologyKind::star;
  if (name == "chain") return TopologyKind::chain;
  if (name == "dag") return TopologyKind::dag;
  throw ValidationError("unknown topology '" + std::string(name) + "'");
}

void AttackConfig::validate(int segment_count) const {
  if (!(routing_bias >= 0.0 && routing_bias <= 1.0)) {
    throw ValidationError("routing_bias must lie in [0,1], got " +
                          std::to_string(routing_bias));
  }
  if (key_index < 1 || key_index > segment_count) {
    throw IndexError("key_index " + std::to_string(key_index) +
                     " outside 1.." + std::to_string(segment_count));
  }
}

RoutingParams RoutingParams::make(double affinity, double routing_bias, int benign_count) {
  if (benign_count < 1) {
    throw ConfigError("benign agent count must be >= 1");
  }
  if (std::isnan(affinity) || std::isnan(routing_bias)) {
    throw ConfigError("routing parameters must not be NaN");
  }
  return RoutingParams{std::clamp(affinity, 0.0, 1.0), std::clamp(routing_bias, 0.0, 1.0),
                       benign_count};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_episode_seed(std::uint64_t run_seed, std::int64_t episode_index,
                                  Regime regime) {
  // Chained mixing keeps the map injective per stage (splitmix64 is a
  // bijection), so collisions need a full 64-bit coincidence.
  std::uint64_t h = splitmix64(run_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(episode_index));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(regime) + 1) * 0xd6e8feb86659fd93ULL);
  return h;
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

bool bernoulli(Rng& rng, double p) {
  return uniform01(rng) < p;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return std::min(idx, n - 1);
}

double logistic(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  return std::log(p) - std::log1p(-p);
}

}  // namespace conjunctive
