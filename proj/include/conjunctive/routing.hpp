#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "conjunctive/core.hpp"

namespace conjunctive {

/// Communication structure between the client and the remote agents.
///
/// star:  one categorical draw per segment.
/// chain: `chain_length` sequential draws; the first hop that lands on the
///        compromised agent handles the segment, otherwise the last hop does.
/// dag:   a source-to-sink walk where each branch draws among the current
///        node's successors; first compromised node on the path handles it,
///        otherwise the sink.
struct Topology {
  TopologyKind kind = TopologyKind::star;
  int chain_length = 3;
  std::string dag_source = "client";
  std::map<std::string, std::vector<std::string>> dag_edges;

  static Topology star();
  static Topology chain(int length);
  static Topology dag(std::string source, std::map<std::string, std::vector<std::string>> edges);

  /// Layered DAG over the pool. Benign agents are dealt round-robin (pool
  /// order) into `layers` layers; the source feeds layer 0, layer k feeds
  /// layer k+1, and the compromised agent is an extra successor of the source
  /// and of every non-final layer so each branch point can reach it.
  static Topology layered_dag(std::span<const AgentSpec> pool, int layers);

  /// Throws ValidationError for chain_length < 1, unknown DAG nodes, a source
  /// without successors, or a cycle.
  void validate(std::span<const AgentSpec> pool) const;
};

struct RoutedSegment {
  int segment = 1;
  std::vector<std::string> hops;
  std::string handler;

  bool operator==(const RoutedSegment&) const = default;
};

using RoutingTrace = std::vector<RoutedSegment>;

/// clip_[0,1](alpha * I_acc + rho * I_acc * I_k).
double compromised_probability(const Segment& segment, const RoutingParams& params);

/// Mass each benign agent receives: (1 - p_star) / benign_count.
double benign_probability(double p_star, int benign_count);

/// Per-agent single-draw distribution over `pool` (pool order).
std::vector<double> induced_distribution(const Segment& segment, std::span<const AgentSpec> pool,
                                         const RoutingParams& params);

RoutedSegment dispatch(const Segment& segment, std::span<const AgentSpec> pool,
                       const RoutingParams& params, const Topology& topology, Rng& rng);

/// Exact probability that `dispatch` hands the segment to the compromised
/// agent.
double compromised_reach_probability(const Segment& segment, std::span<const AgentSpec> pool,
                                     const RoutingParams& params, const Topology& topology);

}  // namespace conjunctive
