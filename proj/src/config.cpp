#include "conjunctive/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "conjunctive/errors.hpp"

namespace conjunctive {
namespace {

using nlohmann::json;

// Field accessor that knows its dotted path, so every failure names the field.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "must be an object");
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : node_.items()) {
      if (!allowed.contains(k)) fail(k, "unknown field");
    }
  }

  bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }
  const json& raw(const char* key) const { return node_.at(key); }
  Section sub(const char* key) const { return Section(node_.at(key), name(key)); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    return v.get<double>();
  }

  double unit(const char* key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v >= 0.0 && v <= 1.0)) fail(key, "must lie in [0,1]");
    return v;
  }

  std::int64_t integer(const char* key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0)) {
      fail(key, "must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(const char* key) const {
    const auto& v = node_.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) fail(key, "must be a string or a list of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail(key, "must contain only strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(const char* key) const {
    const auto& v = node_.at(key);
    if (!v.is_array()) fail(key, "must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  template <typename Fn>
  auto parse_with(const char* key, Fn&& fn) const {
    try {
      return fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError("config field '" + name(key) + "': " + why);
  }

  std::string name(const std::string& key) const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& node_;
  std::string path_;
};

std::array<double, 3> slot_map(const Section& s, const std::array<double, 3>& fallback) {
  s.allow_only({"prefix", "wrap", "suffix"});
  std::array<double, 3> out = fallback;
  for (auto slot : kAllSlots) {
    const std::string key(to_string(slot));
    out[slot_position(slot)] = s.unit(key.c_str(), fallback[slot_position(slot)]);
  }
  return out;
}

void parse_scenario(const Section& s, ExperimentConfig& cfg) {
  s.allow_only({"segments", "key", "marker", "template_body", "agents", "compromised_agent",
                "sample_roles", "roles"});
  Scenario& sc = cfg.scenario;
  if (!s.has("segments")) s.fail("segments", "is required");
  const auto& segs = s.raw("segments");
  if (!segs.is_array() || segs.empty()) s.fail("segments", "must be a nonempty list");
  std::vector<std::string> texts;
  std::vector<bool> mask;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Section seg(segs[i], s.name("segments") + "[" + std::to_string(i) + "]");
    seg.allow_only({"text", "account"});
    if (!seg.has("text")) seg.fail("text", "is required");
    texts.push_back(seg.string("text", ""));
    mask.push_back(seg.boolean("account", false));
  }
  sc.query = s.parse_with("segments", [&] { return QuerySpec(texts, mask); });
  sc.key = s.string("key", sc.key);
  sc.marker = s.string("marker", sc.marker);
  sc.template_body = s.string("template_body", sc.template_body);
  sc.agent_count = static_cast<int>(s.integer("agents", sc.agent_count));
  sc.compromised_position = static_cast<int>(s.integer("compromised_agent", 0));
  sc.sample_roles = s.boolean("sample_roles", sc.sample_roles);
  if (s.has("roles")) sc.roles = s.strings("roles");
}

void parse_routing(const Section& s, ExperimentConfig& cfg) {
  s.allow_only({"alpha", "rho", "topology", "chain_length", "dag"});
  Scenario& sc = cfg.scenario;
  sc.affinity = s.unit("alpha", 0.0);
  cfg.attack.routing_bias = s.unit("rho", 0.0);
  if (s.has("topology")) {
    cfg.topologies.clear();
    for (const auto& name : s.strings("topology")) {
      cfg.topologies.push_back(s.parse_with("topology", [&] { return parse_topology_kind(name); }));
    }
    if (cfg.topologies.empty()) s.fail("topology", "must name at least one topology");
  }
  sc.topology.kind = cfg.topologies.front();
  sc.topology.chain_length = static_cast<int>(s.integer("chain_length", 3));
  if (sc.topology.chain_length < 1) s.fail("chain_length", "must be >= 1");
  if (s.has("dag")) {
    const auto dag = s.sub("dag");
    dag.allow_only({"layers", "source", "edges"});
    sc.dag_layers = static_cast<int>(dag.integer("layers", sc.dag_layers));
    if (sc.dag_layers < 1) dag.fail("layers", "must be >= 1");
    if (dag.has("edges")) {
      sc.topology.dag_source = dag.string("source", "client");
      const auto& edges = dag.raw("edges");
      if (!edges.is_object()) dag.fail("edges", "must map node ids to successor lists");
      for (const auto& [node, succ] : edges.items()) {
        if (!succ.is_array()) dag.fail("edges", "successors of '" + node + "' must be a list");
        auto& out = sc.topology.dag_edges[node];
        for (const auto& id : succ) {
          if (!id.is_string()) dag.fail("edges", "successor ids must be strings");
          out.push_back(id.get<std::string>());
        }
      }
    }
  }
}

void parse_attack(const Section& s, ExperimentConfig& cfg) {
  s.allow_only({"key_index", "slot"});
  cfg.attack.key_index = static_cast<int>(s.integer("key_index", cfg.attack.key_index));
  const auto slot = s.string("slot", std::string(to_string(cfg.attack.slot)));
  cfg.attack.slot = s.parse_with("slot", [&] { return parse_slot(slot); });
}

void parse_backend(const Section& s, ExperimentConfig& cfg) {
  s.allow_only({"kind", "slot_effectiveness", "key_noise", "template_noise", "endpoint", "retries",
                "max_response_bytes", "timeout_ms"});
  auto& b = cfg.backend;
  const auto kind = s.string("kind", "simulated");
  if (kind == "simulated") {
    b.kind = BackendKind::simulated;
  } else if (kind == "remote") {
    b.kind = BackendKind::remote;
  } else {
    s.fail("kind", "must be 'simulated' or 'remote'");
  }
  if (s.has("slot_effectiveness")) {
    b.simulated.slot_effectiveness =
        slot_map(s.sub("slot_effectiveness"), b.simulated.slot_effectiveness);
  }
  b.simulated.key_noise = s.unit("key_noise", 0.0);
  b.simulated.template_noise = s.unit("template_noise", 0.0);
  if (b.kind == BackendKind::remote) {
    if (!s.has("endpoint")) s.fail("endpoint", "is required for the remote backend");
    b.remote.url = s.string("endpoint", "");
    b.remote.retries = static_cast<int>(s.integer("retries", b.remote.retries));
    if (b.remote.retries < 0) s.fail("retries", "must be >= 0");
    const auto cap = s.integer("max_response_bytes", static_cast<std::int64_t>(b.remote.max_response_bytes));
    if (cap < 1) s.fail("max_response_bytes", "must be positive");
    b.remote.max_response_bytes = static_cast<std::size_t>(cap);
    b.remote.timeout_ms = static_cast<int>(s.integer("timeout_ms", b.remote.timeout_ms));
    if (b.remote.timeout_ms < 1) s.fail("timeout_ms", "must be positive");
  }
}

void parse_run(const Section& s, ExperimentConfig& cfg) {
  s.allow_only({"episodes", "seed", "regimes", "parallelism"});
  auto& r = cfg.run;
  r.episodes = static_cast<int>(s.integer("episodes", r.episodes));
  if (r.episodes < 1) s.fail("episodes", "must be >= 1");
  r.seed = s.unsigned_integer("seed", r.seed);
  if (s.has("regimes")) {
    r.regimes.clear();
    for (const auto& name : s.strings("regimes")) {
      const auto regime = s.parse_with("regimes", [&] { return parse_regime(name); });
      if (std::find(r.regimes.begin(), r.regimes.end(), regime) != r.regimes.end()) {
        s.fail("regimes", "lists '" + name + "' twice");
      }
      r.regimes.push_back(regime);
    }
    if (r.regimes.empty()) s.fail("regimes", "must not be empty");
  }
  r.parallelism = static_cast<int>(s.integer("parallelism", r.parallelism));
  if (r.parallelism < 1) s.fail("parallelism", "must be >= 1");
}

void parse_optimizer(const Section& s, ExperimentConfig& cfg) {
  s.allow_only({"lambdas", "steps", "learning_rate", "temp_start", "temp_end", "level", "levels",
                "w_init", "w_prior", "train_slot_weights", "affinity", "follow_up_simulate",
                "pilot_episodes", "seeds"});
  auto& o = cfg.optimizer;
  auto& h = o.hyper;
  if (s.has("lambdas")) {
    const auto l = s.sub("lambdas");
    l.allow_only({"off_affinity", "bias_cost", "template_term", "key_entropy", "slot_entropy",
                  "template_sign"});
    h.lambdas.off_affinity = l.number("off_affinity", h.lambdas.off_affinity);
    h.lambdas.bias_cost = l.number("bias_cost", h.lambdas.bias_cost);
    h.lambdas.template_term = l.number("template_term", h.lambdas.template_term);
    h.lambdas.key_entropy = l.number("key_entropy", h.lambdas.key_entropy);
    h.lambdas.slot_entropy = l.number("slot_entropy", h.lambdas.slot_entropy);
    h.lambdas.template_sign = l.number("template_sign", h.lambdas.template_sign);
  }
  h.steps = static_cast<int>(s.integer("steps", h.steps));
  h.learning_rate = s.number("learning_rate", h.learning_rate);
  h.temp_start = s.number("temp_start", h.temp_start);
  h.temp_end = s.number("temp_end", h.temp_end);
  s.parse_with("lambdas", [&] {
    h.validate();
    return 0;
  });
  const auto level = s.string("level", std::string(to_string(o.level)));
  o.level = s.parse_with("level", [&] { return parse_level(level); });
  if (s.has("levels")) {
    o.levels.clear();
    for (const auto& name : s.strings("levels")) {
      o.levels.push_back(s.parse_with("levels", [&] { return parse_level(name); }));
    }
  }
  const auto w_init = s.string("w_init", "ground_truth");
  if (w_init == "zeros") {
    o.w_init = WeightInit::zeros;
  } else if (w_init == "prior") {
    o.w_init = WeightInit::prior;
  } else if (w_init == "ground_truth") {
    o.w_init = WeightInit::ground_truth;
  } else if (w_init == "empirical") {
    o.w_init = WeightInit::empirical;
  } else {
    s.fail("w_init", "must be zeros, prior, ground_truth or empirical");
  }
  if (s.has("w_prior")) o.w_prior = slot_map(s.sub("w_prior"), o.w_prior);
  o.train_slot_weights = s.boolean("train_slot_weights", o.train_slot_weights);
  if (s.has("affinity")) {
    auto a = s.numbers("affinity");
    for (double v : a) {
      if (!(v >= 0.0 && v <= 1.0)) s.fail("affinity", "entries must lie in [0,1]");
    }
    o.affinity = std::move(a);
  }
  o.follow_up_simulate = s.boolean("follow_up_simulate", o.follow_up_simulate);
  o.pilot_episodes = static_cast<int>(s.integer("pilot_episodes", o.pilot_episodes));
  if (o.pilot_episodes < 1) s.fail("pilot_episodes", "must be >= 1");
  o.seeds = static_cast<int>(s.integer("seeds", o.seeds));
  if (o.seeds < 1) s.fail("seeds", "must be >= 1");
}

void parse_defense(const Section& s, ExperimentConfig& cfg) {
  s.allow_only({"policies"});
  if (!s.has("policies")) return;
  const auto& list = s.raw("policies");
  if (!list.is_array()) s.fail("policies", "must be a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Section p(list[i], s.name("policies") + "[" + std::to_string(i) + "]");
    p.allow_only({"id", "allowlist", "privileged_tool", "needs_tool_prob", "strip_fraction",
                  "conjunctive_only"});
    Policy policy;
    const auto id = p.string("id", "none");
    policy.id = p.parse_with("id", [&] { return parse_policy_id(id); });
    if (p.has("allowlist")) {
      for (const auto& t : p.strings("allowlist")) policy.allowlist.insert(t);
    }
    policy.privileged_tool = p.string("privileged_tool", policy.privileged_tool);
    policy.needs_tool_prob = p.unit("needs_tool_prob", 0.0);
    policy.strip_fraction = p.unit("strip_fraction", 0.0);
    policy.conjunctive_only = p.boolean("conjunctive_only", policy.conjunctive_only);
    cfg.defenses.push_back(std::move(policy));
  }
}

void parse_fidelity(const Section& s, ExperimentConfig& cfg) {
  s.allow_only({"rhos"});
  if (s.has("rhos")) {
    cfg.fidelity.rhos = s.numbers("rhos");
    for (double r : cfg.fidelity.rhos) {
      if (!(r >= 0.0 && r <= 1.0)) s.fail("rhos", "entries must lie in [0,1]");
    }
    if (cfg.fidelity.rhos.empty()) s.fail("rhos", "must not be empty");
  }
}

}  // namespace

std::vector<double> ExperimentConfig::affinity_vector() const {
  if (optimizer.affinity) return *optimizer.affinity;
  std::vector<double> a;
  for (const auto& s : scenario.query.segments()) a.push_back(s.is_account ? 1.0 : 0.0);
  return a;
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
  const Section root(doc, "");
  root.allow_only({"scenario", "routing", "attack", "backend", "run", "optimizer", "defense",
                   "fidelity"});
  ExperimentConfig cfg;
  if (!root.has("scenario")) root.fail("scenario", "section is required");
  parse_scenario(root.sub("scenario"), cfg);
  if (root.has("routing")) parse_routing(root.sub("routing"), cfg);
  if (root.has("attack")) parse_attack(root.sub("attack"), cfg);
  if (root.has("backend")) parse_backend(root.sub("backend"), cfg);
  if (root.has("run")) parse_run(root.sub("run"), cfg);
  if (root.has("optimizer")) parse_optimizer(root.sub("optimizer"), cfg);
  if (root.has("defense")) parse_defense(root.sub("defense"), cfg);
  if (root.has("fidelity")) parse_fidelity(root.sub("fidelity"), cfg);

  cfg.backend.simulated.key = cfg.scenario.key;
  cfg.backend.simulated.marker = cfg.scenario.marker;

  root.parse_with("scenario", [&] {
    cfg.scenario.validate();
    return 0;
  });
  root.parse_with("attack", [&] {
    cfg.attack.validate(cfg.scenario.query.size());
    return 0;
  });
  if (cfg.optimizer.affinity &&
      static_cast<int>(cfg.optimizer.affinity->size()) != cfg.scenario.query.size()) {
    root.fail("optimizer.affinity", "length must equal the number of segments");
  }
  if (!cfg.scenario.topology.dag_edges.empty()) {
    Rng rng(0);
    const auto pool = build_pool(cfg.scenario, rng);
    root.parse_with("routing.dag", [&] {
      cfg.scenario.topology.validate(pool);
      return 0;
    });
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace conjunctive
