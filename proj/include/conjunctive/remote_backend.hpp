#pragma once

#include <cstddef>
#include <string>

#include "conjunctive/agents.hpp"

namespace conjunctive {

struct RemoteEndpoint {
  std::string url;  // http://host[:port][/path]
  int retries = 2;
  std::size_t max_response_bytes = 64 * 1024;
  int timeout_ms = 10000;
  /// Sent as a bearer token when nonempty. Never read from config files.
  std::string bearer_token;
};

/// POSTs {"prompt", "agent_id", "correlation_id"} as JSON and returns the
/// "text" field of the JSON reply.
///
/// Transport failures are retried `retries` times before a TransportError;
/// a non-2xx status raises ProtocolError straight away; bodies larger than
/// max_response_bytes raise TruncationError.
std::string remote_respond(const std::string& prompt, const AgentSpec& agent,
                           const RemoteEndpoint& endpoint, const std::string& correlation_id);

class RemoteBackend final : public AgentBackend {
 public:
  explicit RemoteBackend(RemoteEndpoint endpoint);
  /// The correlation id is drawn from `rng`, so replays of a seeded episode
  /// send the same ids.
  std::string respond(const std::string& prompt, const AgentSpec& agent, Rng& rng) const override;

 private:
  RemoteEndpoint endpoint_;
};

}  // namespace conjunctive
