#include "websight/config.hpp"

#include <cstdlib>
#include <filesystem>

#include "websight/error.hpp"

namespace websight {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfigError, message);
}

json interpolate_all(const json& value) {
  if (value.is_string()) return interpolate_env(value.get<std::string>());
  if (value.is_array()) {
    json out = json::array();
    for (const auto& item : value) out.push_back(interpolate_all(item));
    return out;
  }
  if (value.is_object()) {
    json out = json::object();
    for (const auto& [key, item] : value.items()) out[key] = interpolate_all(item);
    return out;
  }
  return value;
}

json mask_secrets(json value) {
  if (value.is_object()) {
    for (auto& [key, item] : value.items()) {
      if (key == "api_key" && item.is_string() && !item.get<std::string>().empty()) {
        item = "***";
      } else {
        item = mask_secrets(item);
      }
    }
  } else if (value.is_array()) {
    for (auto& item : value) item = mask_secrets(item);
  }
  return value;
}

Extent parse_extent(const json& value, const std::string& where) {
  if (!value.is_object()) config_error(where + " must be {width, height}");
  const Extent e{value.value("width", 0), value.value("height", 0)};
  if (e.width <= 0 || e.height <= 0) config_error(where + " must be positive");
  return e;
}

RoleConfig parse_role(const std::string& name, const json& value) {
  if (!value.is_object()) config_error("roles." + name + " must be an object");
  RoleConfig role;
  const std::string kind = value.value("kind", "http");
  if (kind == "http") {
    role.kind = RoleKind::kHttp;
  } else if (kind == "scripted") {
    role.kind = RoleKind::kScripted;
  } else if (kind == "oracle") {
    role.kind = RoleKind::kOracle;
  } else if (kind == "disabled") {
    role.kind = RoleKind::kDisabled;
  } else {
    config_error("roles." + name + ".kind must be http, scripted, oracle or disabled");
  }
  role.endpoint = value.value("endpoint", "");
  role.model = value.value("model", "");
  role.api_key = value.value("api_key", "");
  role.timeout = std::chrono::milliseconds(value.value("timeout_ms", 120000));
  role.max_retries = value.value("max_retries", 2);
  role.temperature = value.value("temperature", 0.0);
  role.max_output_tokens = value.value("max_output_tokens", 1024);
  if (value.contains("replies")) role.replies = value["replies"].get<std::vector<std::string>>();
  if (role.kind == RoleKind::kHttp && role.endpoint.empty()) {
    config_error("roles." + name + ".endpoint is required for http roles");
  }
  if (role.kind == RoleKind::kScripted && role.replies.empty()) {
    config_error("roles." + name + ".replies must be nonempty for scripted roles");
  }
  if (role.temperature < 0 || role.max_output_tokens <= 0 || role.max_retries < 0) {
    config_error("roles." + name + " has out-of-range sampling or retry settings");
  }
  return role;
}

}  // namespace

std::string interpolate_env(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 2, "${") == 0) {
      const std::size_t close = text.find('}', i + 2);
      if (close == std::string_view::npos) config_error("unterminated ${ in \"" + std::string(text) + "\"");
      const std::string name(text.substr(i + 2, close - i - 2));
      const char* value = std::getenv(name.c_str());
      if (!value) config_error("environment variable " + name + " is not set");
      out += value;
      i = close + 1;
    } else {
      out += text[i++];
    }
  }
  return out;
}

Config parse_config(const json& raw, const std::string& base_dir) {
  if (!raw.is_object()) config_error("config must be a JSON object");
  if (raw.value("schema_version", 1) != 1) config_error("unsupported config schema_version");
  const json document = interpolate_all(raw);

  Config config;
  const json roles = document.value("roles", json::object());
  if (!roles.is_object()) config_error("roles must be an object");
  for (const auto& [name, value] : roles.items()) {
    if (std::find(std::begin(kRoleNames), std::end(kRoleNames), name) == std::end(kRoleNames)) {
      config_error("unknown role " + name);
    }
    config.roles[name] = parse_role(name, value);
  }
  for (std::string_view name : kRoleNames) {
    if (!config.roles.count(std::string(name))) {
      config_error("roles." + std::string(name) + " is missing; configure it or set kind \"disabled\"");
    }
  }
  if (document.contains("viewport")) config.viewport = parse_extent(document["viewport"], "viewport");
  if (document.contains("model_extent")) {
    config.model_extent = parse_extent(document["model_extent"], "model_extent");
  }
  const json limits = document.value("limits", json::object());
  config.deadline_seconds = limits.value("deadline_seconds", config.deadline_seconds);
  config.limits.max_steps = limits.value("max_steps", config.limits.max_steps);
  config.limits.loop_window = limits.value("loop_window", config.limits.loop_window);
  config.limits.loop_threshold = limits.value("loop_threshold", config.limits.loop_threshold);
  if (config.deadline_seconds < 0 || config.limits.max_steps <= 0 ||
      config.limits.loop_threshold < 2 || config.limits.loop_window < config.limits.loop_threshold) {
    config_error("limits need deadline_seconds >= 0, max_steps > 0 and loop_window >= loop_threshold >= 2");
  }
  const int capacity = document.value("memory_capacity", static_cast<int>(config.memory_capacity));
  if (capacity <= 0) config_error("memory_capacity must be positive");
  config.memory_capacity = static_cast<std::size_t>(capacity);
  config.bench_concurrency = document.value("bench_concurrency", config.bench_concurrency);
  if (config.bench_concurrency <= 0) config_error("bench_concurrency must be positive");
  config.output_dir = document.value("output_dir", config.output_dir);

  const json env = document.value("environment", json{{"kind", "chrome"}});
  const std::string kind = env.value("kind", "chrome");
  auto resolve = [&](const std::string& path) {
    return fs::path(path).is_absolute() ? path : (fs::path(base_dir) / path).string();
  };
  if (kind == "simulated") {
    if (!env.contains("page_graph")) config_error("environment.page_graph is required for simulated runs");
    config.page_graph_path = resolve(env["page_graph"].get<std::string>());
  } else if (kind == "chrome") {
    config.chrome.executable = env.value("executable", "");
    config.chrome.extra_args = env.value("extra_args", std::vector<std::string>{});
    config.chrome.devtools_endpoint = env.value("devtools_endpoint", "");
    config.chrome.launch_timeout = std::chrono::seconds(env.value("launch_timeout_seconds", 30));
  } else {
    config_error("environment.kind must be simulated or chrome");
  }
  config.snapshot = mask_secrets(document);
  return config;
}

Config load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    config_error(e.what());
  }
  const json document = json::parse(text, nullptr, false);
  if (document.is_discarded()) config_error(path + " is not valid JSON");
  return parse_config(document, fs::path(path).parent_path().string().empty()
                                    ? "."
                                    : fs::path(path).parent_path().string());
}

std::optional<ModelRole> make_role(const RoleConfig& config) {
  ModelRole role;
  role.model = config.model;
  role.temperature = config.temperature;
  role.max_output_tokens = config.max_output_tokens;
  switch (config.kind) {
    case RoleKind::kDisabled:
      return std::nullopt;
    case RoleKind::kOracle:
      config_error("oracle roles exist only for the click benchmark");
    case RoleKind::kScripted:
      role.backend = scripted_backend(config.replies);
      return role;
    case RoleKind::kHttp: {
      HttpBackendConfig http;
      http.endpoint = config.endpoint;
      http.api_key = config.api_key;
      http.timeout = config.timeout;
      http.max_retries = config.max_retries;
      role.backend = std::make_shared<HttpBackend>(http);
      return role;
    }
  }
  return std::nullopt;
}

RoleBackends make_role_backends(const Config& config) {
  auto required = [&](const char* name) {
    auto it = config.roles.find(name);
    if (it == config.roles.end()) config_error(std::string("no backend configured for the ") + name);
    std::optional<ModelRole> role = make_role(it->second);
    if (!role) config_error(std::string("the ") + name + " role is disabled but required");
    return *role;
  };
  RoleBackends roles;
  roles.planner = required("planner");
  roles.reasoner = required("reasoner");
  roles.grounder = required("grounder");
  roles.verifier = required("verifier");
  if (auto it = config.roles.find("judge"); it != config.roles.end()) {
    roles.judge = make_role(it->second);
  }
  return roles;
}

SessionConfig make_session_config(const Config& config) {
  SessionConfig session;
  session.settings.viewport = config.viewport;
  if (config.page_graph_path) {
    session.simulated = SimulatedSessionConfig{load_page_graph(*config.page_graph_path)};
  } else {
    session.chrome = config.chrome;
  }
  return session;
}

}  // namespace websight
