#include "conjunctive/agents.hpp"

#include "conjunctive/errors.hpp"

namespace conjunctive {

void SimulatedBackendParams::validate() const {
  for (auto slot : kAllSlots) {
    const double e = effectiveness(slot);
    if (!(e >= 0.0 && e <= 1.0)) {
      throw ValidationError("slot_effectiveness." + std::string(to_string(slot)) +
                            " must lie in [0,1]");
    }
  }
  if (!(key_noise >= 0.0 && key_noise <= 1.0) ||
      !(template_noise >= 0.0 && template_noise <= 1.0)) {
    throw ValidationError("noise channel probabilities must lie in [0,1]");
  }
  if (marker.empty()) {
    throw ValidationError("activation marker must be nonempty");
  }
}

std::string construct_prompt(const std::optional<InjectedTemplate>& injected,
                             const std::string& segment_text, const std::string& header) {
  constexpr char sep = '\n';
  if (!injected) {
    return header + sep + segment_text;
  }
  const std::string& body = injected->body;
  switch (injected->slot) {
    case TemplateSlot::prefix: return body + sep + header + sep + segment_text;
    case TemplateSlot::wrap: return header + sep + body + sep + segment_text;
    case TemplateSlot::suffix: return header + sep + segment_text + sep + body;
  }
  return header + sep + segment_text;
}

std::string agent_header(const AgentSpec& agent) {
  return "[agent " + agent.id + "] Role: " + agent.role;
}

std::string benign_response(const AgentSpec& agent) {
  return agent.role + ": request processed. Standard summary returned.";
}

std::string activated_response(std::string_view marker) {
  std::string out = "Account summary retrieved.\n";
  out += marker;
  out += "\n[Simulated privileged behavior triggered.]";
  return out;
}

std::string simulated_respond(const std::string& prompt, const AgentSpec& agent,
                              const SimulatedBackendParams& params, Rng& rng) {
  if (agent.compromised) {
    const bool has_template = agent.template_slot.has_value();
    const bool has_key = !params.key.empty() && prompt.find(params.key) != std::string::npos;
    double p = 0.0;
    if (has_template && has_key) {
      p = params.effectiveness(*agent.template_slot);
    } else if (has_key) {
      p = params.key_noise;
    } else if (has_template) {
      p = params.template_noise;
    }
    if (p > 0.0 && bernoulli(rng, p)) {
      return activated_response(params.marker);
    }
  }
  return benign_response(agent);
}

bool detect_activation(std::string_view output, std::string_view marker) {
  if (marker.empty()) {
    throw ValidationError("activation marker must be nonempty");
  }
  return output.find(marker) != std::string_view::npos;
}

SimulatedBackend::SimulatedBackend(SimulatedBackendParams params) : params_(std::move(params)) {
  params_.validate();
}

std::string SimulatedBackend::respond(const std::string& prompt, const AgentSpec& agent,
                                      Rng& rng) const {
  return simulated_respond(prompt, agent, params_, rng);
}

}  // namespace conjunctive
