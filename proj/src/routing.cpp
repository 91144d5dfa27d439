#include "conjunctive/routing.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "conjunctive/errors.hpp"

namespace conjunctive {
namespace {

struct PoolView {
  const AgentSpec* compromised = nullptr;
  int benign = 0;
};

PoolView inspect_pool(std::span<const AgentSpec> pool) {
  if (pool.empty()) {
    throw ConfigError("agent pool is empty");
  }
  PoolView view;
  for (const auto& agent : pool) {
    if (agent.compromised) {
      if (view.compromised != nullptr) {
        throw ConfigError("agent pool has more than one compromised agent");
      }
      view.compromised = &agent;
    } else {
      ++view.benign;
    }
  }
  return view;
}

const AgentSpec* find_agent(std::span<const AgentSpec> pool, const std::string& id) {
  for (const auto& agent : pool) {
    if (agent.id == id) return &agent;
  }
  return nullptr;
}

// Inverse-CDF draw over `candidates` (caller order): the compromised candidate
// gets p_star, benign candidates share the rest uniformly. When the
// compromised agent is not a candidate the benign ones share everything.
const AgentSpec* draw_among(std::span<const AgentSpec* const> candidates, double p_star, Rng& rng) {
  int benign = 0;
  bool has_compromised = false;
  for (const auto* c : candidates) {
    if (c->compromised) {
      has_compromised = true;
    } else {
      ++benign;
    }
  }
  if (benign == 0) {
    return candidates.front();
  }
  const double star_mass = has_compromised ? p_star : 0.0;
  const double benign_mass = benign_probability(star_mass, benign);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  const AgentSpec* last_positive = nullptr;
  for (const auto* c : candidates) {
    const double w = c->compromised ? star_mass : benign_mass;
    if (w <= 0.0) continue;
    cumulative += w;
    last_positive = c;
    if (u < cumulative) return c;
  }
  return last_positive;
}

void check_benign_count(const PoolView& view, const RoutingParams& params) {
  if (view.benign != params.benign_count) {
    throw ConfigError("routing params expect " + std::to_string(params.benign_count) +
                      " benign agents but the pool has " + std::to_string(view.benign));
  }
}

std::vector<const AgentSpec*> successors_of(const Topology& topology,
                                            std::span<const AgentSpec> pool,
                                            const std::string& node) {
  std::vector<const AgentSpec*> out;
  auto it = topology.dag_edges.find(node);
  if (it == topology.dag_edges.end()) return out;
  for (const auto& id : it->second) {
    const auto* agent = find_agent(pool, id);
    if (agent == nullptr) {
      throw ValidationError("dag edge references unknown agent '" + id + "'");
    }
    out.push_back(agent);
  }
  return out;
}

}  // namespace

Topology Topology::star() { return Topology{}; }

Topology Topology::chain(int length) {
  Topology t;
  t.kind = TopologyKind::chain;
  t.chain_length = length;
  return t;
}

Topology Topology::dag(std::string source, std::map<std::string, std::vector<std::string>> edges) {
  Topology t;
  t.kind = TopologyKind::dag;
  t.dag_source = std::move(source);
  t.dag_edges = std::move(edges);
  return t;
}

Topology Topology::layered_dag(std::span<const AgentSpec> pool, int layers) {
  if (layers < 1) {
    throw ConfigError("layered dag needs at least one layer");
  }
  std::string compromised;
  std::vector<std::vector<std::string>> layer_ids(static_cast<std::size_t>(layers));
  std::size_t next = 0;
  for (const auto& agent : pool) {
    if (agent.compromised) {
      compromised = agent.id;
    } else {
      layer_ids[next % layer_ids.size()].push_back(agent.id);
      ++next;
    }
  }
  // Drop empty trailing layers when the pool is smaller than the layer count.
  while (!layer_ids.empty() && layer_ids.back().empty()) layer_ids.pop_back();

  std::map<std::string, std::vector<std::string>> edges;
  const std::string source = "client";
  auto with_compromised = [&](std::vector<std::string> ids) {
    if (!compromised.empty()) ids.push_back(compromised);
    return ids;
  };
  edges[source] = with_compromised(layer_ids.empty() ? std::vector<std::string>{}
                                                     : layer_ids.front());
  for (std::size_t k = 0; k + 1 < layer_ids.size(); ++k) {
    for (const auto& id : layer_ids[k]) {
      edges[id] = with_compromised(layer_ids[k + 1]);
    }
  }
  return dag(source, std::move(edges));
}

void Topology::validate(std::span<const AgentSpec> pool) const {
  inspect_pool(pool);
  switch (kind) {
    case TopologyKind::star:
      return;
    case TopologyKind::chain:
      if (chain_length < 1) {
        throw ValidationError("chain_length must be >= 1");
      }
      return;
    case TopologyKind::dag:
      break;
  }
  if (find_agent(pool, dag_source) != nullptr) {
    throw ValidationError("dag source '" + dag_source + "' must not be a pool agent");
  }
  auto src = dag_edges.find(dag_source);
  if (src == dag_edges.end() || src->second.empty()) {
    throw ValidationError("dag source '" + dag_source + "' has no successors");
  }
  for (const auto& [node, succ] : dag_edges) {
    if (node != dag_source && find_agent(pool, node) == nullptr) {
      throw ValidationError("dag node '" + node + "' is not in the agent pool");
    }
    for (const auto& id : succ) {
      if (find_agent(pool, id) == nullptr) {
        throw ValidationError("dag edge " + node + " -> " + id + " targets an unknown agent");
      }
    }
  }
  // Depth-first cycle check.
  std::map<std::string, int> state;  // 1 = on stack, 2 = done
  std::function<void(const std::string&)> visit = [&](const std::string& node) {
    state[node] = 1;
    auto it = dag_edges.find(node);
    if (it != dag_edges.end()) {
      for (const auto& next : it->second) {
        const int s = state[next];
        if (s == 1) {
          throw ValidationError("dag_edges contain a cycle through '" + next + "'");
        }
        if (s == 0) visit(next);
      }
    }
    state[node] = 2;
  };
  for (const auto& [node, succ] : dag_edges) {
    if (state[node] == 0) visit(node);
  }
}

double compromised_probability(const Segment& segment, const RoutingParams& params) {
  const double acc = segment.is_account ? 1.0 : 0.0;
  const double key = segment.has_key ? 1.0 : 0.0;
  return std::clamp(params.affinity * acc + params.routing_bias * acc * key, 0.0, 1.0);
}

double benign_probability(double p_star, int benign_count) {
  if (benign_count < 1) {
    throw ConfigError("benign agent set must be nonempty");
  }
  return (1.0 - p_star) / static_cast<double>(benign_count);
}

std::vector<double> induced_distribution(const Segment& segment, std::span<const AgentSpec> pool,
                                         const RoutingParams& params) {
  const auto view = inspect_pool(pool);
  check_benign_count(view, params);
  const double p_star = view.compromised ? compromised_probability(segment, params) : 0.0;
  const double each = benign_probability(p_star, view.benign);
  std::vector<double> out;
  out.reserve(pool.size());
  for (const auto& agent : pool) out.push_back(agent.compromised ? p_star : each);
  return out;
}

RoutedSegment dispatch(const Segment& segment, std::span<const AgentSpec> pool,
                       const RoutingParams& params, const Topology& topology, Rng& rng) {
  const auto view = inspect_pool(pool);
  const double p_star = compromised_probability(segment, params);
  RoutedSegment routed;
  routed.segment = segment.index;

  switch (topology.kind) {
    case TopologyKind::star:
    case TopologyKind::chain: {
      check_benign_count(view, params);
      std::vector<const AgentSpec*> all;
      all.reserve(pool.size());
      for (const auto& agent : pool) all.push_back(&agent);
      const int hops = topology.kind == TopologyKind::star ? 1 : topology.chain_length;
      if (hops < 1) throw ValidationError("chain_length must be >= 1");
      for (int h = 0; h < hops; ++h) {
        const auto* pick = draw_among(all, p_star, rng);
        routed.hops.push_back(pick->id);
        if (pick->compromised) break;
      }
      routed.handler = routed.hops.back();
      return routed;
    }
    case TopologyKind::dag: {
      std::string node = topology.dag_source;
      // Bounded by node count; validate() rejects cycles.
      for (std::size_t guard = 0; guard <= pool.size(); ++guard) {
        const auto succ = successors_of(topology, pool, node);
        if (succ.empty()) break;
        const auto* pick = draw_among(succ, p_star, rng);
        routed.hops.push_back(pick->id);
        if (pick->compromised) break;
        node = pick->id;
      }
      if (routed.hops.empty()) {
        throw ValidationError("dag source has no successors");
      }
      routed.handler = routed.hops.back();
      return routed;
    }
  }
  throw ValidationError("unknown topology");
}

double compromised_reach_probability(const Segment& segment, std::span<const AgentSpec> pool,
                                     const RoutingParams& params, const Topology& topology) {
  const auto view = inspect_pool(pool);
  if (view.compromised == nullptr) return 0.0;
  const double p_star = compromised_probability(segment, params);
  switch (topology.kind) {
    case TopologyKind::star:
      return view.benign == 0 ? 1.0 : p_star;
    case TopologyKind::chain: {
      const double miss = view.benign == 0 ? 0.0 : 1.0 - p_star;
      double all_miss = 1.0;
      for (int h = 0; h < topology.chain_length; ++h) all_miss *= miss;
      return 1.0 - all_miss;
    }
    case TopologyKind::dag: {
      std::map<std::string, double> memo;
      std::function<double(const std::string&)> reach = [&](const std::string& node) -> double {
        if (auto it = memo.find(node); it != memo.end()) return it->second;
        const auto succ = successors_of(topology, pool, node);
        double r = 0.0;
        if (!succ.empty()) {
          int benign = 0;
          bool has_c = false;
          for (const auto* s : succ) {
            if (s->compromised) {
              has_c = true;
            } else {
              ++benign;
            }
          }
          if (benign == 0) {
            r = succ.front()->compromised ? 1.0 : 0.0;
          } else {
            const double star_mass = has_c ? p_star : 0.0;
            const double each = (1.0 - star_mass) / benign;
            for (const auto* s : succ) {
              r += s->compromised ? star_mass : each * reach(s->id);
            }
          }
        }
        memo[node] = r;
        return r;
      };
      return reach(topology.dag_source);
    }
  }
  return 0.0;
}

}  // namespace conjunctive
