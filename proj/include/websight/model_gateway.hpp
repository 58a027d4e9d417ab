#pragma once

// Client boundary to remote text / vision-language models. Every agent role
// talks through a Backend; the HTTP implementation speaks the OpenAI-style
// chat-completions wire format.

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "websight/clock.hpp"

namespace websight {

enum class ChatRole { kUser, kAssistant };

struct EncodedImage {
  std::string mime_type = "image/png";
  std::string bytes;
};

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string text;
  std::vector<EncodedImage> images;  // user messages only
};

struct ChatRequest {
  std::optional<std::string> system_prompt;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::string model_name;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  // Transport round trip only; local parsing is never included.
  double latency_ms = 0.0;
  std::optional<TokenUsage> token_usage;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

// Throws Error(kInvalidRequest) when messages are empty, images ride on a
// non-user message, or numeric fields are out of range.
void validate_request(const ChatRequest& request);

// Validates, sends, and rejects empty replies with Error(kEmptyResponse).
ChatResponse complete(Backend& backend, const ChatRequest& request);

// A backend plus the per-role model settings used to build requests.
struct ModelRole {
  std::shared_ptr<Backend> backend;
  std::string model;
  double temperature = 0.0;
  int max_output_tokens = 1024;

  ChatRequest request() const {
    ChatRequest r;
    r.model_name = model;
    r.temperature = temperature;
    r.max_output_tokens = max_output_tokens;
    return r;
  }
};

nlohmann::json to_wire_json(const ChatRequest& request);

struct HttpBackendConfig {
  // Base URL up to and excluding `/chat/completions`,
  // e.g. "https://api.openai.com/v1" or "http://127.0.0.1:8000/v1".
  std::string endpoint;
  std::string api_key;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
};

// Retries transport failures and 5xx/408 replies with exponential backoff;
// 4xx replies surface immediately as Error(kBackendRefused).
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ChatResponse send(const ChatRequest& request) override;

 private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

struct ScriptedOptions {
  // When set, every call advances this clock by `simulated_latency`.
  ManualClock* clock = nullptr;
  Clock::Duration simulated_latency{0};
};

// Returns its canned replies in order and records every request it saw.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> script,
                           ScriptedOptions options = {});

  ChatResponse send(const ChatRequest& request) override;

  std::vector<ChatRequest> requests() const;
  std::size_t calls() const;

 private:
  std::vector<std::string> script_;
  ScriptedOptions options_;
  mutable std::mutex mutex_;
  std::size_t next_ = 0;
  std::vector<ChatRequest> requests_;
};

std::shared_ptr<ScriptedBackend> scripted_backend(std::vector<std::string> script,
                                                  ScriptedOptions options = {});

// Computes each reply from the request; used for oracle backends whose answer
// depends on the prompt rather than on call order.
class FunctionBackend final : public Backend {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;
  explicit FunctionBackend(Responder responder, ScriptedOptions options = {});
  ChatResponse send(const ChatRequest& request) override;

 private:
  Responder responder_;
  ScriptedOptions options_;
};

}  // namespace websight
