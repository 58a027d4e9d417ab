#pragma once

// The single declarative run/bench/augment configuration document
// (docs/config.md). String values may reference environment variables as
// ${NAME}; secrets never need to live in the file.

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "websight/browser_env.hpp"
#include "websight/model_gateway.hpp"
#include "websight/orchestrator.hpp"

namespace websight {

inline constexpr std::string_view kRoleNames[] = {"planner", "reasoner", "grounder", "verifier",
                                                  "judge"};

enum class RoleKind { kHttp, kScripted, kOracle, kDisabled };

struct RoleConfig {
  RoleKind kind = RoleKind::kDisabled;
  std::string endpoint;
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  int max_retries = 2;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::vector<std::string> replies;  // scripted only
};

struct Config {
  std::map<std::string, RoleConfig> roles;
  Extent viewport = kDefaultViewport;
  int deadline_seconds = 600;
  Limits limits;
  std::size_t memory_capacity = kDefaultMemoryCapacity;
  Extent model_extent = kDefaultModelExtent;
  int bench_concurrency = 4;
  std::string output_dir = "websight-out";
  // Exactly one environment kind.
  std::optional<std::string> page_graph_path;  // simulated
  ChromeSessionConfig chrome;                  // used when page_graph_path is empty
  // Interpolated document with api keys masked; embedded in trajectories.
  nlohmann::json snapshot = nlohmann::json::object();
};

// Replaces every ${NAME} with the environment variable's value.
// Throws Error(kConfigError) for unset variables.
std::string interpolate_env(std::string_view text);

// Every name in kRoleNames must be present, if only as {"kind":"disabled"}.
// `base_dir` anchors relative file paths. Throws Error(kConfigError).
Config parse_config(const nlohmann::json& document, const std::string& base_dir = ".");
Config load_config(const std::string& path);

// nullopt for disabled roles. Throws Error(kConfigError) for oracle roles,
// which only the click benchmark can construct.
std::optional<ModelRole> make_role(const RoleConfig& config);

// Throws Error(kConfigError) naming the first of planner, reasoner, grounder,
// verifier that is missing or disabled.
RoleBackends make_role_backends(const Config& config);

SessionConfig make_session_config(const Config& config);

}  // namespace websight
