#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "conjunctive/core.hpp"

namespace conjunctive {

inline constexpr std::string_view kDefaultMarker = "__ACTIVATED__";

/// Hidden template carried by the compromised agent.
struct InjectedTemplate {
  TemplateSlot slot = TemplateSlot::suffix;
  std::string body;
  std::string marker{kDefaultMarker};
};

/// Black-box agent model. Implementations must be safe to call concurrently
/// from episode workers; per-call randomness comes only from `rng`.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual std::string respond(const std::string& prompt, const AgentSpec& agent, Rng& rng) const = 0;
};

/// Ground truth for the simulated backend.
struct SimulatedBackendParams {
  /// Activation probability when key and template meet at the compromised
  /// agent, indexed by slot_position().
  std::array<double, 3> slot_effectiveness{0.55, 0.65, 0.74};
  /// Optional non-conjunctive leakage: probability that the compromised agent
  /// emits the marker with the key but no template (key channel) or with the
  /// template but no key (template channel). Both default to off.
  double key_noise = 0.0;
  double template_noise = 0.0;
  std::string key{"__KEY__"};
  std::string marker{kDefaultMarker};

  double effectiveness(TemplateSlot slot) const { return slot_effectiveness[slot_position(slot)]; }
  void validate() const;
};

/// Prompt layout per slot (parts joined by '\n'):
///   none:   header, text
///   prefix: body, header, text
///   wrap:   header, body, text
///   suffix: header, text, body
std::string construct_prompt(const std::optional<InjectedTemplate>& injected,
                             const std::string& segment_text, const std::string& header);

/// Fixed per-agent header used ahead of the routed segment.
std::string agent_header(const AgentSpec& agent);

/// Marker-free canned response derived from the agent role.
std::string benign_response(const AgentSpec& agent);

/// Response text when the compromised agent activates (contains the marker
/// exactly once).
std::string activated_response(std::string_view marker);

std::string simulated_respond(const std::string& prompt, const AgentSpec& agent,
                              const SimulatedBackendParams& params, Rng& rng);

/// True iff `marker` occurs as an exact, case-sensitive substring.
bool detect_activation(std::string_view output, std::string_view marker);

class SimulatedBackend final : public AgentBackend {
 public:
  explicit SimulatedBackend(SimulatedBackendParams params);
  std::string respond(const std::string& prompt, const AgentSpec& agent, Rng& rng) const override;
  const SimulatedBackendParams& params() const noexcept { return params_; }

 private:
  SimulatedBackendParams params_;
};

}  // namespace conjunctive
