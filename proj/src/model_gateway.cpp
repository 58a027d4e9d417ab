#include "websight/model_gateway.hpp"

#include <thread>

#include <httplib.h>

#include "websight/error.hpp"
#include "websight/raster.hpp"

namespace websight {

using nlohmann::json;

void validate_request(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw Error(ErrorCode::kInvalidRequest, "request has no messages");
  }
  for (const auto& message : request.messages) {
    if (message.role != ChatRole::kUser && !message.images.empty()) {
      throw Error(ErrorCode::kInvalidRequest,
                  "images may only be attached to user messages");
    }
  }
  if (request.temperature < 0.0) {
    throw Error(ErrorCode::kInvalidRequest, "temperature must be >= 0");
  }
  if (request.max_output_tokens <= 0) {
    throw Error(ErrorCode::kInvalidRequest, "max_output_tokens must be positive");
  }
}

ChatResponse complete(Backend& backend, const ChatRequest& request) {
  validate_request(request);
  ChatResponse response = backend.send(request);
  if (response.text.empty()) {
    throw Error(ErrorCode::kEmptyResponse, "backend returned no text");
  }
  return response;
}

json to_wire_json(const ChatRequest& request) {
  json messages = json::array();
  if (request.system_prompt) {
    messages.push_back({{"role", "system"}, {"content", *request.system_prompt}});
  }
  for (const auto& message : request.messages) {
    const char* role = message.role == ChatRole::kUser ? "user" : "assistant";
    if (message.images.empty()) {
      messages.push_back({{"role", role}, {"content", message.text}});
      continue;
    }
    json parts = json::array();
    parts.push_back({{"type", "text"}, {"text", message.text}});
    for (const auto& image : message.images) {
      parts.push_back(
          {{"type", "image_url"},
           {"image_url",
            {{"url", "data:" + image.mime_type + ";base64," + base64_encode(image.bytes)}}}});
    }
    messages.push_back({{"role", role}, {"content", parts}});
  }
  json body = {{"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_output_tokens}};
  if (!request.model_name.empty()) body["model"] = request.model_name;
  return body;
}

namespace {

std::string extract_text(const json& reply) {
  const json& content = reply.at("choices").at(0).at("message").at("content");
  if (content.is_string()) return content.get<std::string>();
  std::string text;
  if (content.is_array()) {
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
  }
  return text;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "endpoint needs a scheme: " + config_.endpoint);
  }
  const auto path_begin = config_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = config_.endpoint.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "" : config_.endpoint.substr(path_begin);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

ChatResponse HttpBackend::send(const ChatRequest& request) {
  const std::string body = to_wire_json(request).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(backoff.count() * config_.backoff_multiplier));
    }
    httplib::Client client(scheme_host_port_);
    const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(
        config_.timeout - timeout_s);
    client.set_connection_timeout(timeout_s.count(), timeout_us.count());
    client.set_read_timeout(timeout_s.count(), timeout_us.count());
    client.set_write_timeout(timeout_s.count(), timeout_us.count());

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(path_, headers, body, "application/json");
    const auto finished = std::chrono::steady_clock::now();

    if (!result) {
      last_error = "transport failure: " + httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status >= 500 || status == 408) {
      last_error = "HTTP " + std::to_string(status);
      continue;
    }
    if (status >= 400) {
      throw Error(ErrorCode::kBackendRefused,
                  "HTTP " + std::to_string(status) + ": " + result->body);
    }
    ChatResponse response;
    response.latency_ms =
        std::chrono::duration<double, std::milli>(finished - started).count();
    try {
      const json reply = json::parse(result->body);
      response.text = extract_text(reply);
      if (reply.contains("usage") && reply["usage"].is_object()) {
        response.token_usage = TokenUsage{reply["usage"].value("prompt_tokens", 0),
                                          reply["usage"].value("completion_tokens", 0)};
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kTransportError,
                  std::string("unparseable completion body: ") + e.what());
    }
    return response;
  }
  throw Error(ErrorCode::kTransportError,
              last_error + " after " + std::to_string(config_.max_retries) + " retries");
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> script, ScriptedOptions options)
    : script_(std::move(script)), options_(options) {
  if (script_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "scripted backend needs at least one reply");
  }
}

ChatResponse ScriptedBackend::send(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (next_ >= script_.size()) {
    throw Error(ErrorCode::kScriptExhausted,
                "script of " + std::to_string(script_.size()) + " replies exhausted");
  }
  if (options_.clock) options_.clock->advance(options_.simulated_latency);
  ChatResponse response;
  response.text = script_[next_++];
  response.latency_ms =
      std::chrono::duration<double, std::milli>(options_.simulated_latency).count();
  return response;
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::shared_ptr<ScriptedBackend> scripted_backend(std::vector<std::string> script,
                                                  ScriptedOptions options) {
  return std::make_shared<ScriptedBackend>(std::move(script), options);
}

FunctionBackend::FunctionBackend(Responder responder, ScriptedOptions options)
    : responder_(std::move(responder)), options_(options) {}

ChatResponse FunctionBackend::send(const ChatRequest& request) {
  if (options_.clock) options_.clock->advance(options_.simulated_latency);
  ChatResponse response;
  response.text = responder_(request);
  response.latency_ms =
      std::chrono::duration<double, std::milli>(options_.simulated_latency).count();
  return response;
}

}  // namespace websight
