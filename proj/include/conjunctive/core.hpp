#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace conjunctive {

/// One piece of a decomposed user query. `index` is 1-based.
struct Segment {
  int index = 1;
  std::string text;
  bool is_account = false;
  bool has_key = false;

  bool operator==(const Segment&) const = default;
};

enum class TemplateSlot { prefix, wrap, suffix };

inline constexpr std::array<TemplateSlot, 3> kAllSlots = {
    TemplateSlot::prefix, TemplateSlot::wrap, TemplateSlot::suffix};

std::string_view to_string(TemplateSlot slot);
TemplateSlot parse_slot(std::string_view name);
inline constexpr std::size_t slot_position(TemplateSlot slot) {
  return static_cast<std::size_t>(slot);
}

/// A remote agent in the pool. `compromised` designates the routing target a*
/// (the agent that carries the injected template when one is present);
/// `template_slot` is set only when a template is actually injected.
struct AgentSpec {
  std::string id;
  std::string role;
  bool compromised = false;
  std::optional<TemplateSlot> template_slot;
  bool has_tools = false;

  bool operator==(const AgentSpec&) const = default;
};

enum class Regime { clean, key_only, template_only, both };

inline constexpr std::array<Regime, 4> kAllRegimes = {
    Regime::clean, Regime::key_only, Regime::template_only, Regime::both};

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);

struct RegimeComponents {
  bool key = false;
  bool template_injected = false;
};

constexpr RegimeComponents components_of(Regime regime) {
  switch (regime) {
    case Regime::clean: return {false, false};
    case Regime::key_only: return {true, false};
    case Regime::template_only: return {false, true};
    case Regime::both: return {true, true};
  }
  return {};
}

/// The discrete attack tuple (key segment, template slot, routing bias).
struct AttackConfig {
  int key_index = 1;
  TemplateSlot slot = TemplateSlot::suffix;
  double routing_bias = 0.0;

  bool operator==(const AttackConfig&) const = default;

  /// Throws ValidationError when bias is outside [0,1] or key_index is not in
  /// 1..segment_count.
  void validate(int segment_count) const;
};

struct RoutingParams {
  double affinity = 0.0;
  double routing_bias = 0.0;
  int benign_count = 1;

  /// Clamps both reals into [0,1]; benign_count must be >= 1.
  static RoutingParams make(double affinity, double routing_bias, int benign_count);
};

enum class TopologyKind { star, chain, dag };

std::string_view to_string(TopologyKind kind);
TopologyKind parse_topology_kind(std::string_view name);

std::uint64_t splitmix64(std::uint64_t x);

/// Pure per-episode seed: every (run_seed, episode_index, regime) tuple maps to
/// its own stream.
std::uint64_t derive_episode_seed(std::uint64_t run_seed, std::int64_t episode_index,
                                  Regime regime);

/// The engine used for every stochastic draw. mt19937_64 output is fixed by
/// the standard; the uniform conversions below are ours so results do not
/// depend on the standard library's distribution implementations.
using Rng = std::mt19937_64;

/// Uniform on [0,1).
double uniform01(Rng& rng);
/// Uniform on the open interval (0,1).
double uniform_open01(Rng& rng);
bool bernoulli(Rng& rng, double p);
/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

double logistic(double x);
double logit(double p);

}  // namespace conjunctive
