#include "ecdrive/remote.hpp"

#include <chrono>
#include <cstdlib>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "ecdrive/codec.hpp"

namespace ecdrive::remote {

using nlohmann::json;

std::string_view to_string(Role role) {
  return role == Role::kEdge ? "Edge" : "Cloud";
}

std::optional<Role> role_from_string(std::string_view name) {
  if (name == "Edge") return Role::kEdge;
  if (name == "Cloud") return Role::kCloud;
  return std::nullopt;
}

namespace {

constexpr const char* kEdgeSystem =
    "You are the on-board motion planner of an autonomous vehicle. Think "
    "step by step and keep the reasoning short. Check in this order: can the "
    "vehicle speed up safely; if not, is holding the current speed safe; if "
    "not, is a lane change to the left or to the right possible and safe; "
    "otherwise slow down.";

constexpr const char* kCloudSystem =
    "You are a remote driving assistant supporting an autonomous vehicle in "
    "a situation its on-board planner may not handle. Work in three stages: "
    "perception (list every relevant object, including static obstacles), "
    "prediction (where each object will be over the next three seconds), and "
    "planning (pick the safest efficient action).";

constexpr const char* kAnswerContract =
    "Finish with one line of the form 'Decision: <choice>' where <choice> is "
    "exactly one of: accelerate, decelerate, keep current speed, change lane "
    "to the left, change lane to the right.";

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw RemoteUnavailable("remote: base_url must include a scheme: " + url,
                            false);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

}  // namespace

std::vector<ChatMessage> build_prompt(const sim::Scene& scene, Role role) {
  const std::string system = role == Role::kEdge ? kEdgeSystem : kCloudSystem;
  std::string user = "Driving scene:\n" + codec::describe(scene).text;
  if (!scene.obstacles.empty() && role == Role::kCloud) {
    user += "\nStatic obstacles:";
    for (const auto& o : scene.obstacles) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "\n- lane %d, lane position %.2f m, length %.1f m", o.lane,
                    o.position + 0.0, o.extent + 0.0);
      user += buf;
    }
  }
  user += "\n";
  user += kAnswerContract;
  return {{"system", system}, {"user", user}};
}

policy::Decision remote_decide(const sim::Scene& scene,
                               const EndpointConfig& endpoint, Role role) {
  const ParsedUrl url = parse_base_url(endpoint.base_url);

  json body;
  body["model"] = endpoint.model;
  body["messages"] = json::array();
  for (const auto& m : build_prompt(scene, role)) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  body["temperature"] = 0;

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (const char* key = std::getenv(kApiKeyEnv); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(url.path + "/chat/completions", headers, body.dump(),
                         "application/json");
  const double elapsed_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();
  if (!res) {
    const auto err = res.error();
    const bool timed_out =
        err == httplib::Error::ConnectionTimeout ||
        ((err == httplib::Error::Read || err == httplib::Error::Write) &&
         elapsed_ms >= 0.9 * endpoint.timeout_ms);
    throw RemoteUnavailable("remote: " + httplib::to_string(err), timed_out);
  }
  if (res->status < 200 || res->status >= 300) {
    throw RemoteUnavailable(
        "remote: HTTP status " + std::to_string(res->status), false);
  }

  std::string content;
  try {
    const json reply = json::parse(res->body);
    content = reply.at("choices").at(0).at("message").at("content")
                  .get<std::string>();
  } catch (const json::exception& e) {
    throw RemoteUnavailable(std::string("remote: malformed reply: ") + e.what(),
                            false);
  }

  policy::Decision decision;
  decision.action = codec::parse_decision(content);
  decision.source = policy::Source::kRemote;
  decision.confidence = 1.0;
  std::istringstream lines(content);
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty()) decision.rationale.push_back(line);
  }
  if (decision.rationale.empty()) decision.rationale.push_back(content);
  return decision;
}

}  // namespace ecdrive::remote
