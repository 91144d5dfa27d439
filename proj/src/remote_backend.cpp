#include "conjunctive/remote_backend.hpp"

#include <cstdio>

#include <httplib.h>
#include <json.hpp>

#include "conjunctive/errors.hpp"

namespace conjunctive {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host:port
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
    throw ConfigError("remote endpoint must be an http:// URL, got '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  if (path_start == std::string::npos) {
    parsed.origin = url;
    parsed.path = "/";
  } else {
    parsed.origin = url.substr(0, path_start);
    parsed.path = url.substr(path_start);
  }
  if (parsed.origin.size() <= scheme_end + 3) {
    throw ConfigError("remote endpoint has no host: '" + url + "'");
  }
  return parsed;
}

}  // namespace

std::string remote_respond(const std::string& prompt, const AgentSpec& agent,
                           const RemoteEndpoint& endpoint, const std::string& correlation_id) {
  const auto parsed = parse_url(endpoint.url);
  httplib::Client client(parsed.origin);
  const auto timeout_s = endpoint.timeout_ms / 1000;
  const auto timeout_us = (endpoint.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(timeout_s, timeout_us);
  client.set_read_timeout(timeout_s, timeout_us);
  client.set_write_timeout(timeout_s, timeout_us);
  if (!endpoint.bearer_token.empty()) client.set_bearer_token_auth(endpoint.bearer_token);

  const nlohmann::json request = {
      {"prompt", prompt}, {"agent_id", agent.id}, {"correlation_id", correlation_id}};
  const std::string body = request.dump();

  const int attempts_allowed = 1 + std::max(0, endpoint.retries);
  for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
    auto res = client.Post(parsed.path, body, "application/json");
    if (!res) {
      if (attempt == attempts_allowed) {
        throw TransportError("request to " + endpoint.url + " failed after " +
                                 std::to_string(attempt) + " attempt(s): " +
                                 httplib::to_string(res.error()),
                             attempt);
      }
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProtocolError(endpoint.url + " answered HTTP " + std::to_string(res->status),
                          res->status);
    }
    if (res->body.size() > endpoint.max_response_bytes) {
      throw TruncationError("response from " + endpoint.url + " is " +
                            std::to_string(res->body.size()) + " bytes, cap is " +
                            std::to_string(endpoint.max_response_bytes));
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(endpoint.url + " returned malformed JSON: " + e.what(), res->status);
    }
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
      throw ProtocolError(endpoint.url + " reply lacks a string \"text\" field", res->status);
    }
    return reply["text"].get<std::string>();
  }
  throw TransportError("no attempt made to " + endpoint.url, 0);
}

RemoteBackend::RemoteBackend(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  parse_url(endpoint_.url);
}

std::string RemoteBackend::respond(const std::string& prompt, const AgentSpec& agent,
                                   Rng& rng) const {
  char id[17];
  std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(rng()));
  return remote_respond(prompt, agent, endpoint_, id);
}

}  // namespace conjunctive
