#pragma once

// Delegates the edge or cloud role to a chat-completion endpoint.
//
// Wire format: POST {base_url}/chat/completions with
//   {"model": ..., "messages": [{"role": "system"|"user", "content": ...}],
//    "temperature": 0}
// and the first choice's message content parsed with codec::parse_decision.
// The bearer token comes from the EC_DRIVE_API_KEY environment variable.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecdrive/policies.hpp"

namespace ecdrive::remote {

inline constexpr const char* kApiKeyEnv = "EC_DRIVE_API_KEY";

enum class Role { kEdge, kCloud };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view name);

struct EndpointConfig {
  std::string base_url;  // e.g. "https://api.example.com/v1"
  std::string model;
  int timeout_ms = 10000;

  bool operator==(const EndpointConfig&) const = default;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

/// System and user messages for one decision. The user message embeds the
/// scene description verbatim.
std::vector<ChatMessage> build_prompt(const sim::Scene& scene, Role role);

/// Transport failure, timeout, non-2xx status or malformed reply body.
class RemoteUnavailable : public std::runtime_error {
 public:
  RemoteUnavailable(const std::string& what, bool timed_out)
      : std::runtime_error(what), timed_out_(timed_out) {}
  bool timed_out() const { return timed_out_; }

 private:
  bool timed_out_;
};

/// One blocking chat-completion round trip. Throws RemoteUnavailable on
/// transport problems and codec::NoDecisionFound when the reply carries no
/// decision phrase. The rationale is the reply split into lines; confidence
/// is 1.0.
policy::Decision remote_decide(const sim::Scene& scene,
                               const EndpointConfig& endpoint, Role role);

}  // namespace ecdrive::remote
