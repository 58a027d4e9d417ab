#include "websight/cdp_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/process.hpp>
#include <httplib.h>

#include "websight/error.hpp"

namespace websight {

namespace bp = boost::process;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kDefaultChromeArgs = {
    "--headless=new",
    "--no-sandbox",
    "--no-zygote",
    "--no-first-run",
    "--no-default-browser-check",
    "--disable-extensions",
    "--disable-background-networking",
    "--disable-sync",
    "--hide-scrollbars",
    "--mute-audio",
    "--use-angle=swiftshader",
    "--enable-unsafe-swiftshader",
    "--font-render-hinting=none",
};

int pick_free_port() {
  boost::asio::io_context ioc;
  boost::asio::ip::tcp::acceptor acceptor(
      ioc, boost::asio::ip::tcp::endpoint(boost::asio::ip::make_address("127.0.0.1"), 0));
  return acceptor.local_endpoint().port();
}

struct KeyInfo {
  std::string key;
  std::string code;
  int key_code = 0;
  std::string text;
  int modifier = 0;  // CDP modifier bit when the key is itself a modifier
};

KeyInfo key_info(const std::string& name) {
  static const std::map<std::string, KeyInfo> kNamed = {
      {"ctrl", {"Control", "ControlLeft", 17, "", 2}},
      {"control", {"Control", "ControlLeft", 17, "", 2}},
      {"shift", {"Shift", "ShiftLeft", 16, "", 8}},
      {"alt", {"Alt", "AltLeft", 18, "", 1}},
      {"meta", {"Meta", "MetaLeft", 91, "", 4}},
      {"cmd", {"Meta", "MetaLeft", 91, "", 4}},
      {"command", {"Meta", "MetaLeft", 91, "", 4}},
      {"win", {"Meta", "MetaLeft", 91, "", 4}},
      {"enter", {"Enter", "Enter", 13, "\r", 0}},
      {"return", {"Enter", "Enter", 13, "\r", 0}},
      {"tab", {"Tab", "Tab", 9, "", 0}},
      {"esc", {"Escape", "Escape", 27, "", 0}},
      {"escape", {"Escape", "Escape", 27, "", 0}},
      {"backspace", {"Backspace", "Backspace", 8, "", 0}},
      {"delete", {"Delete", "Delete", 46, "", 0}},
      {"space", {" ", "Space", 32, " ", 0}},
      {"up", {"ArrowUp", "ArrowUp", 38, "", 0}},
      {"down", {"ArrowDown", "ArrowDown", 40, "", 0}},
      {"left", {"ArrowLeft", "ArrowLeft", 37, "", 0}},
      {"right", {"ArrowRight", "ArrowRight", 39, "", 0}},
      {"arrowup", {"ArrowUp", "ArrowUp", 38, "", 0}},
      {"arrowdown", {"ArrowDown", "ArrowDown", 40, "", 0}},
      {"arrowleft", {"ArrowLeft", "ArrowLeft", 37, "", 0}},
      {"arrowright", {"ArrowRight", "ArrowRight", 39, "", 0}},
      {"home", {"Home", "Home", 36, "", 0}},
      {"end", {"End", "End", 35, "", 0}},
      {"pageup", {"PageUp", "PageUp", 33, "", 0}},
      {"pagedown", {"PageDown", "PageDown", 34, "", 0}},
  };
  if (auto it = kNamed.find(name); it != kNamed.end()) return it->second;
  if (name.size() >= 2 && name[0] == 'f' && std::all_of(name.begin() + 1, name.end(), ::isdigit)) {
    const int n = std::stoi(name.substr(1));
    if (n >= 1 && n <= 12) return {"F" + std::to_string(n), "F" + std::to_string(n), 111 + n, "", 0};
  }
  if (name.size() == 1) {
    const char c = name[0];
    if (c >= 'a' && c <= 'z') {
      const char upper = static_cast<char>(c - 'a' + 'A');
      return {name, std::string("Key") + upper, upper, name, 0};
    }
    if (c >= '0' && c <= '9') return {name, std::string("Digit") + c, c, name, 0};
    return {name, "", static_cast<unsigned char>(c), name, 0};
  }
  return {name, name, 0, "", 0};
}

}  // namespace

std::string find_chrome_executable() {
  if (const char* env = std::getenv("WEBSIGHT_CHROME"); env && *env && fs::exists(env)) {
    return env;
  }
  for (const char* name : {"chromium", "chromium-browser", "google-chrome", "google-chrome-stable",
                           "chrome", "headless_shell", "chrome-headless-shell"}) {
    const auto path = bp::search_path(name);
    if (!path.empty()) return path.string();
  }
  for (const char* path : {"/tmp/chromium", "/usr/bin/chromium", "/opt/google/chrome/chrome"}) {
    if (fs::exists(path)) return path;
  }
  return {};
}

struct CdpEnvironment::Browser {
  std::optional<bp::child> process;
  fs::path user_data_dir;
  std::string http_endpoint;  // http://host:port
  std::string target_id;

  ~Browser() {
    if (!target_id.empty()) {
      httplib::Client client(http_endpoint);
      client.set_connection_timeout(2);
      client.Get("/json/close/" + target_id);
    }
    if (process && process->running()) {
      std::error_code ec;
      process->terminate(ec);
      process->wait(ec);
    }
    if (!user_data_dir.empty()) {
      std::error_code ec;
      fs::remove_all(user_data_dir, ec);
    }
  }
};

CdpEnvironment::CdpEnvironment(std::unique_ptr<Browser> browser,
                               std::unique_ptr<CdpConnection> page, EnvSettings settings,
                               Clock& clock)
    : browser_(std::move(browser)), page_(std::move(page)), settings_(settings), clock_(clock) {}

CdpEnvironment::~CdpEnvironment() { close(); }

std::unique_ptr<CdpEnvironment> CdpEnvironment::launch(const ChromeSessionConfig& config,
                                                       EnvSettings settings, Clock& clock) {
  auto browser = std::make_unique<Browser>();
  if (!config.devtools_endpoint.empty()) {
    browser->http_endpoint = config.devtools_endpoint;
  } else {
    const std::string executable =
        config.executable.empty() ? find_chrome_executable() : config.executable;
    if (executable.empty() || !fs::exists(executable)) {
      throw Error(ErrorCode::kLaunchFailure,
                  "no Chrome/Chromium executable found; set WEBSIGHT_CHROME");
    }
    const int port = pick_free_port();
    browser->user_data_dir = fs::temp_directory_path() /
                             ("websight-chrome-" + std::to_string(port) + "-" +
                              std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(browser->user_data_dir);
    std::vector<std::string> args = kDefaultChromeArgs;
    args.insert(args.end(), config.extra_args.begin(), config.extra_args.end());
    args.push_back("--remote-debugging-address=127.0.0.1");
    args.push_back("--remote-debugging-port=" + std::to_string(port));
    args.push_back("--user-data-dir=" + browser->user_data_dir.string());
    args.push_back("--window-size=" + std::to_string(settings.viewport.width) + "," +
                   std::to_string(settings.viewport.height));
    args.push_back("about:blank");
    try {
      browser->process.emplace(executable, bp::args(args), bp::std_out > bp::null,
                               bp::std_err > bp::null, bp::std_in < bp::null);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kLaunchFailure, std::string("cannot start browser: ") + e.what());
    }
    browser->http_endpoint = "http://127.0.0.1:" + std::to_string(port);
  }

  // Wait for the DevTools HTTP endpoint.
  const auto give_up = std::chrono::steady_clock::now() + config.launch_timeout;
  while (true) {
    httplib::Client client(browser->http_endpoint);
    client.set_connection_timeout(1);
    if (auto res = client.Get("/json/version"); res && res->status == 200) break;
    if (browser->process && !browser->process->running()) {
      throw Error(ErrorCode::kLaunchFailure, "browser exited during startup");
    }
    if (std::chrono::steady_clock::now() > give_up) {
      throw Error(ErrorCode::kLaunchFailure, "devtools endpoint did not come up");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }

  httplib::Client client(browser->http_endpoint);
  auto created = client.Put("/json/new?about:blank");
  if (!created || created->status != 200) {
    throw Error(ErrorCode::kLaunchFailure, "cannot open a browser tab");
  }
  const json target = json::parse(created->body, nullptr, false);
  if (target.is_discarded() || !target.contains("webSocketDebuggerUrl")) {
    throw Error(ErrorCode::kLaunchFailure, "unexpected /json/new reply");
  }
  browser->target_id = target.value("id", "");
  auto connection = CdpConnection::open(target["webSocketDebuggerUrl"].get<std::string>());

  std::unique_ptr<CdpEnvironment> env(
      new CdpEnvironment(std::move(browser), std::move(connection), settings, clock));
  try {
    env->page_->call("Page.enable");
    env->page_->call("Network.enable");
    env->page_->call("Emulation.setDeviceMetricsOverride",
                     {{"width", settings.viewport.width},
                      {"height", settings.viewport.height},
                      {"deviceScaleFactor", 1},
                      {"mobile", false}});
  } catch (const Error& e) {
    throw Error(ErrorCode::kLaunchFailure, e.what());
  }
  return env;
}

void CdpEnvironment::ensure_open() const {
  if (closed_) throw Error(ErrorCode::kSessionClosed, "browser session closed");
}

void CdpEnvironment::close() {
  if (closed_) return;
  closed_ = true;
  if (page_) page_->close();
  browser_.reset();
}

void CdpEnvironment::process_event(const json& event) {
  const std::string method = event.value("method", "");
  const json& params = event.contains("params") ? event["params"] : json::object();
  if (method == "Network.requestWillBeSent") {
    inflight_requests_.insert(params.value("requestId", ""));
  } else if (method == "Network.loadingFinished" || method == "Network.loadingFailed") {
    inflight_requests_.erase(params.value("requestId", ""));
  } else if (method == "Page.frameStartedLoading") {
    loading_frames_.insert(params.value("frameId", ""));
  } else if (method == "Page.frameStoppedLoading") {
    loading_frames_.erase(params.value("frameId", ""));
  }
}

void CdpEnvironment::settle() {
  using std::chrono::steady_clock;
  const auto cap = steady_clock::now() + settings_.settle_cap;
  auto quiet_since = steady_clock::now();
  while (steady_clock::now() < cap) {
    if (auto event = page_->next_event(std::chrono::milliseconds(25))) process_event(*event);
    const auto now = steady_clock::now();
    if (!inflight_requests_.empty() || !loading_frames_.empty()) {
      quiet_since = now;
    } else if (now - quiet_since >= settings_.settle_quiet) {
      return;
    }
  }
  // Long-polling requests never finish; forget them so the next settle starts clean.
  inflight_requests_.clear();
}

std::string CdpEnvironment::current_url() {
  const json history = page_->call("Page.getNavigationHistory");
  const int index = history.value("currentIndex", 0);
  const json& entries = history.at("entries");
  if (index < 0 || index >= static_cast<int>(entries.size())) return {};
  return entries[index].value("url", "");
}

Screenshot CdpEnvironment::screenshot() {
  ensure_open();
  // Drain events that arrived since the last action so bookkeeping stays current.
  while (auto event = page_->next_event(std::chrono::milliseconds(0))) process_event(*event);
  const json result = page_->call("Page.captureScreenshot",
                                  {{"format", "png"}, {"captureBeyondViewport", false}});
  Screenshot shot;
  shot.encoded = base64_decode(result.at("data").get<std::string>());
  const Extent size = image_dimensions(shot.encoded);
  shot.width = size.width;
  shot.height = size.height;
  shot.captured_at = std::chrono::system_clock::now();
  shot.url = current_url();
  return shot;
}

void CdpEnvironment::mouse(const std::string& type, Point p, const std::string& button,
                           int click_count, double delta_x, double delta_y) {
  json params = {{"type", type}, {"x", p.x}, {"y", p.y}, {"button", button},
                 {"clickCount", click_count}};
  if (button == "left") params["buttons"] = type == "mouseReleased" ? 0 : 1;
  if (button == "right") params["buttons"] = type == "mouseReleased" ? 0 : 2;
  if (type == "mouseWheel") {
    params["deltaX"] = delta_x;
    params["deltaY"] = delta_y;
  }
  page_->call("Input.dispatchMouseEvent", params);
}

void CdpEnvironment::key_chord(const std::vector<std::string>& keys) {
  int modifiers = 0;
  for (const auto& name : keys) modifiers |= key_info(name).modifier;
  const bool command_chord = (modifiers & (1 | 2 | 4)) != 0;
  for (const auto& name : keys) {
    const KeyInfo info = key_info(name);
    json params = {{"type", info.text.empty() || command_chord ? "rawKeyDown" : "keyDown"},
                   {"key", info.key},
                   {"code", info.code},
                   {"windowsVirtualKeyCode", info.key_code},
                   {"modifiers", modifiers}};
    if (!info.text.empty() && !command_chord) params["text"] = info.text;
    page_->call("Input.dispatchKeyEvent", params);
  }
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) {
    const KeyInfo info = key_info(*it);
    page_->call("Input.dispatchKeyEvent", {{"type", "keyUp"},
                                           {"key", info.key},
                                           {"code", info.code},
                                           {"windowsVirtualKeyCode", info.key_code},
                                           {"modifiers", modifiers}});
  }
}

void CdpEnvironment::press_enter() { key_chord({"enter"}); }

ExecutionOutcome CdpEnvironment::execute(const ActionCommand& command) {
  ensure_open();
  check_pixel_action(command, settings_.viewport);
  try {
    if (command.is<action::Wait>()) {
      clock_.sleep_for(settings_.wait_duration);
      return ExecutionOutcome::ok();
    }
    if (command.is<action::Finished>()) return ExecutionOutcome::ok();
    if (command.is<action::Navigate>()) return navigate(command.as<action::Navigate>().url);

    if (command.is<action::Click>()) {
      const Point p = command.as<action::Click>().point;
      mouse("mouseMoved", p, "none", 0);
      mouse("mousePressed", p, "left", 1);
      mouse("mouseReleased", p, "left", 1);
    } else if (command.is<action::DoubleClick>()) {
      const Point p = command.as<action::DoubleClick>().point;
      mouse("mouseMoved", p, "none", 0);
      for (int count = 1; count <= 2; ++count) {
        mouse("mousePressed", p, "left", count);
        mouse("mouseReleased", p, "left", count);
      }
    } else if (command.is<action::RightClick>()) {
      const Point p = command.as<action::RightClick>().point;
      mouse("mouseMoved", p, "none", 0);
      mouse("mousePressed", p, "right", 1);
      mouse("mouseReleased", p, "right", 1);
    } else if (command.is<action::Drag>()) {
      const auto& drag = command.as<action::Drag>();
      mouse("mouseMoved", drag.start, "none", 0);
      mouse("mousePressed", drag.start, "left", 1);
      const int steps = std::max(1, settings_.drag_steps);
      for (int i = 1; i <= steps; ++i) {
        clock_.sleep_for(settings_.drag_duration / steps);
        const Point p{drag.start.x + (drag.end.x - drag.start.x) * i / steps,
                      drag.start.y + (drag.end.y - drag.start.y) * i / steps, CoordSpace::kPixel};
        json params = {{"type", "mouseMoved"}, {"x", p.x}, {"y", p.y}, {"button", "left"},
                       {"buttons", 1}};
        page_->call("Input.dispatchMouseEvent", params);
      }
      mouse("mouseReleased", drag.end, "left", 1);
    } else if (command.is<action::Hotkey>()) {
      const auto& keys = command.as<action::Hotkey>().keys;
      if (keys == std::vector<std::string>{"alt", "left"}) return back();
      key_chord(keys);
    } else if (command.is<action::Type>()) {
      const std::string& content = command.as<action::Type>().content;
      std::size_t start = 0;
      while (start <= content.size()) {
        const auto newline = content.find('\n', start);
        const std::string chunk =
            content.substr(start, newline == std::string::npos ? std::string::npos : newline - start);
        if (!chunk.empty()) page_->call("Input.insertText", {{"text", chunk}});
        if (newline == std::string::npos) break;
        press_enter();
        start = newline + 1;
      }
    } else if (command.is<action::Scroll>()) {
      const auto& scroll = command.as<action::Scroll>();
      const double dy = settings_.scroll_fraction * settings_.viewport.height;
      const double dx = settings_.scroll_fraction * settings_.viewport.width;
      double delta_x = 0;
      double delta_y = 0;
      switch (scroll.direction) {
        case ScrollDirection::kUp: delta_y = -dy; break;
        case ScrollDirection::kDown: delta_y = dy; break;
        case ScrollDirection::kLeft: delta_x = -dx; break;
        case ScrollDirection::kRight: delta_x = dx; break;
      }
      mouse("mouseWheel", scroll.point, "none", 0, delta_x, delta_y);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSessionClosed) throw;
    return ExecutionOutcome::error(e.what());
  }
  settle();
  return ExecutionOutcome::ok();
}

ExecutionOutcome CdpEnvironment::navigate(std::string_view url) {
  ensure_open();
  try {
    const json result = page_->call("Page.navigate", {{"url", std::string(url)}});
    if (const std::string error = result.value("errorText", ""); !error.empty()) {
      settle();
      return ExecutionOutcome::error("NavigationFailure: " + error);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSessionClosed) throw;
    return ExecutionOutcome::error(std::string("NavigationFailure: ") + e.what());
  }
  settle();
  return ExecutionOutcome::ok();
}

ExecutionOutcome CdpEnvironment::back() {
  ensure_open();
  const json history = page_->call("Page.getNavigationHistory");
  const int index = history.value("currentIndex", 0);
  if (index <= 0) return ExecutionOutcome::no_effect("history is empty");
  page_->call("Page.navigateToHistoryEntry",
              {{"entryId", history.at("entries")[index - 1].at("id")}});
  settle();
  return ExecutionOutcome::ok();
}

std::unique_ptr<Environment> open_session(const SessionConfig& config, Clock& clock) {
  std::unique_ptr<Environment> env;
  if (config.simulated) {
    EnvSettings settings = config.settings;
    settings.viewport = config.simulated->graph.viewport;
    env = std::make_unique<SimulatedEnvironment>(config.simulated->graph, settings, clock);
  } else if (config.chrome) {
    env = CdpEnvironment::launch(*config.chrome, config.settings, clock);
  } else {
    throw Error(ErrorCode::kLaunchFailure, "session config names no environment");
  }
  if (config.start_url) {
    const ExecutionOutcome outcome = env->navigate(*config.start_url);
    if (outcome.kind == OutcomeKind::kError) {
      throw Error(ErrorCode::kLaunchFailure, outcome.detail);
    }
  }
  return env;
}

}  // namespace websight
