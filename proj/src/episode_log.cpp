#include "conjunctive/episode_log.hpp"

#include <fstream>

#include "conjunctive/errors.hpp"

namespace conjunctive {
namespace {

using nlohmann::json;

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw SchemaError(std::string("missing field '") + name + "'", name);
  }
  return j.at(name);
}

template <typename T>
T typed(const json& j, const char* name) {
  const auto& v = field(j, name);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("field '") + name + "' has the wrong type", name);
  }
}

}  // namespace

json to_json(const EpisodeRecord& record) {
  json trace = json::array();
  for (const auto& r : record.routing_trace) {
    trace.push_back({{"segment", r.segment}, {"hops", r.hops}, {"handler", r.handler}});
  }
  json j;
  j["episode_id"] = record.episode_id;
  j["regime"] = to_string(record.regime);
  j["seed"] = record.seed;
  j["topology_kind"] = to_string(record.topology_kind);
  j["routing_trace"] = std::move(trace);
  j["compromised_output"] =
      record.compromised_output ? json(*record.compromised_output) : json(nullptr);
  j["activated"] = record.activated;
  j["defense_flags"] = record.defense_flags;
  j["key_index"] = record.key_index ? json(*record.key_index) : json(nullptr);
  j["compromised_agent"] = record.compromised_agent;
  return j;
}

EpisodeRecord record_from_json(const json& j) {
  EpisodeRecord r;
  r.episode_id = typed<std::int64_t>(j, "episode_id");
  try {
    r.regime = parse_regime(typed<std::string>(j, "regime"));
  } catch (const ValidationError& e) {
    throw SchemaError(e.what(), "regime");
  }
  r.seed = typed<std::uint64_t>(j, "seed");
  try {
    r.topology_kind = parse_topology_kind(typed<std::string>(j, "topology_kind"));
  } catch (const ValidationError& e) {
    throw SchemaError(e.what(), "topology_kind");
  }
  const auto& trace = field(j, "routing_trace");
  if (!trace.is_array()) throw SchemaError("field 'routing_trace' must be an array", "routing_trace");
  for (const auto& entry : trace) {
    RoutedSegment routed;
    routed.segment = typed<int>(entry, "segment");
    routed.hops = typed<std::vector<std::string>>(entry, "hops");
    routed.handler = typed<std::string>(entry, "handler");
    r.routing_trace.push_back(std::move(routed));
  }
  const auto& out = field(j, "compromised_output");
  if (!out.is_null()) {
    if (!out.is_string()) {
      throw SchemaError("field 'compromised_output' must be a string or null",
                        "compromised_output");
    }
    r.compromised_output = out.get<std::string>();
  }
  r.activated = typed<bool>(j, "activated");
  r.defense_flags = typed<std::vector<std::string>>(j, "defense_flags");
  const auto& key = field(j, "key_index");
  if (!key.is_null()) r.key_index = typed<int>(j, "key_index");
  r.compromised_agent = typed<std::string>(j, "compromised_agent");
  return r;
}

void write_episode_log(std::span<const EpisodeRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  for (const auto& r : records) {
    out << to_json(r).dump() << '\n';
  }
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

std::vector<EpisodeRecord> read_episode_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::vector<EpisodeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": malformed record: " + e.what(),
                       line_no);
    }
    try {
      records.push_back(record_from_json(j));
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                        e.field());
    }
  }
  return records;
}

json to_json(const AttackConfig& config) {
  return {{"key_index", config.key_index},
          {"slot", to_string(config.slot)},
          {"routing_bias", config.routing_bias}};
}

AttackConfig attack_config_from_json(const json& j) {
  AttackConfig c;
  c.key_index = typed<int>(j, "key_index");
  try {
    c.slot = parse_slot(typed<std::string>(j, "slot"));
  } catch (const ValidationError& e) {
    throw SchemaError(e.what(), "slot");
  }
  c.routing_bias = typed<double>(j, "routing_bias");
  return c;
}

}  // namespace conjunctive
