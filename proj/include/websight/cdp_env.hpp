#pragma once

// Chrome DevTools Protocol driver: a real headless browser behind the
// Environment interface.

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "websight/browser_env.hpp"

namespace websight {

// One websocket to a DevTools target. Reads and writes run on a private io
// thread; call() blocks the caller until the matching response arrives.
class CdpConnection {
 public:
  // `ws_url` like ws://127.0.0.1:9222/devtools/page/<id>.
  static std::unique_ptr<CdpConnection> open(const std::string& ws_url);

  ~CdpConnection();
  CdpConnection(const CdpConnection&) = delete;
  CdpConnection& operator=(const CdpConnection&) = delete;

  // Throws Error(kTransportError) on protocol errors, timeouts or a dropped
  // socket; Error(kSessionClosed) after close().
  nlohmann::json call(const std::string& method, nlohmann::json params = nlohmann::json::object(),
                      std::chrono::milliseconds timeout = std::chrono::seconds(30));

  // Next protocol event, waiting at most `timeout`.
  std::optional<nlohmann::json> next_event(std::chrono::milliseconds timeout);

  void close();

 private:
  struct Impl;
  explicit CdpConnection(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// First Chrome/Chromium binary found via $WEBSIGHT_CHROME, PATH, or known
// install locations; empty when none exists.
std::string find_chrome_executable();

class CdpEnvironment final : public Environment {
 public:
  // Launches a browser (or attaches to config.devtools_endpoint) and opens a
  // fresh page sized to settings.viewport. Throws Error(kLaunchFailure).
  static std::unique_ptr<CdpEnvironment> launch(const ChromeSessionConfig& config,
                                                EnvSettings settings = {},
                                                Clock& clock = system_clock());

  ~CdpEnvironment() override;

  Screenshot screenshot() override;
  ExecutionOutcome execute(const ActionCommand& action) override;
  ExecutionOutcome navigate(std::string_view url) override;
  ExecutionOutcome back() override;
  Extent viewport() const override { return settings_.viewport; }
  void close() override;
  bool closed() const override { return closed_; }

  std::string current_url();

 private:
  struct Browser;
  CdpEnvironment(std::unique_ptr<Browser> browser, std::unique_ptr<CdpConnection> page,
                 EnvSettings settings, Clock& clock);

  void ensure_open() const;
  void process_event(const nlohmann::json& event);
  // Returns once no request is in flight and no frame is loading for
  // settings_.settle_quiet, or after settings_.settle_cap.
  void settle();
  void mouse(const std::string& type, Point p, const std::string& button, int click_count,
             double delta_x = 0, double delta_y = 0);
  void key_chord(const std::vector<std::string>& keys);
  void press_enter();

  std::unique_ptr<Browser> browser_;
  std::unique_ptr<CdpConnection> page_;
  EnvSettings settings_;
  Clock& clock_;
  std::set<std::string> inflight_requests_;
  std::set<std::string> loading_frames_;
  bool closed_ = false;
};

}  // namespace websight
