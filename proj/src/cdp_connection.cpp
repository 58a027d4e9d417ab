#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "websight/cdp_env.hpp"
#include "websight/error.hpp"

namespace websight {

namespace beast = boost::beast;
namespace net = boost::asio;
using nlohmann::json;
using tcp = net::ip::tcp;

struct CdpConnection::Impl {
  net::io_context ioc;
  beast::websocket::stream<beast::tcp_stream> ws{ioc};
  beast::flat_buffer buffer;
  std::thread io_thread;

  std::mutex mutex;
  std::condition_variable cv;
  std::map<int, json> responses;
  std::deque<json> events;
  std::string broken;  // nonempty once the socket is unusable
  bool closed = false;
  int next_id = 1;

  // io thread only
  std::deque<std::string> outbox;

  void fail(const std::string& reason) {
    std::lock_guard lock(mutex);
    if (broken.empty()) broken = reason;
    cv.notify_all();
  }

  void start_read() {
    ws.async_read(buffer, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        fail("websocket read: " + ec.message());
        return;
      }
      json message = json::parse(beast::buffers_to_string(buffer.data()), nullptr, false);
      buffer.consume(buffer.size());
      if (!message.is_discarded()) {
        std::lock_guard lock(mutex);
        if (message.contains("id") && message["id"].is_number_integer()) {
          const int id = message["id"].get<int>();
          responses[id] = std::move(message);
        } else {
          events.push_back(std::move(message));
        }
        cv.notify_all();
      }
      start_read();
    });
  }

  void write_next() {
    ws.async_write(net::buffer(outbox.front()), [this](beast::error_code ec, std::size_t) {
      outbox.pop_front();
      if (ec) {
        fail("websocket write: " + ec.message());
        return;
      }
      if (!outbox.empty()) write_next();
    });
  }

  void send(std::string text) {
    net::post(ioc, [this, text = std::move(text)]() mutable {
      outbox.push_back(std::move(text));
      if (outbox.size() == 1) write_next();
    });
  }
};

CdpConnection::CdpConnection(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

CdpConnection::~CdpConnection() { close(); }

std::unique_ptr<CdpConnection> CdpConnection::open(const std::string& ws_url) {
  const std::string prefix = "ws://";
  if (ws_url.rfind(prefix, 0) != 0) {
    throw Error(ErrorCode::kLaunchFailure, "unsupported devtools url " + ws_url);
  }
  const auto path_begin = ws_url.find('/', prefix.size());
  const std::string authority = ws_url.substr(prefix.size(), path_begin - prefix.size());
  const std::string target = path_begin == std::string::npos ? "/" : ws_url.substr(path_begin);
  const auto colon = authority.rfind(':');
  const std::string host = authority.substr(0, colon);
  const std::string port = colon == std::string::npos ? "80" : authority.substr(colon + 1);

  auto impl = std::make_unique<Impl>();
  try {
    tcp::resolver resolver(impl->ioc);
    beast::get_lowest_layer(impl->ws).connect(resolver.resolve(host, port));
    impl->ws.read_message_max(256 * 1024 * 1024);
    impl->ws.handshake(authority, target);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kLaunchFailure,
                "cannot connect to " + ws_url + ": " + e.what());
  }
  impl->start_read();
  Impl* raw = impl.get();
  impl->io_thread = std::thread([raw] { raw->ioc.run(); });
  return std::unique_ptr<CdpConnection>(new CdpConnection(std::move(impl)));
}

json CdpConnection::call(const std::string& method, json params,
                         std::chrono::milliseconds timeout) {
  int id = 0;
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->closed) throw Error(ErrorCode::kSessionClosed, "devtools connection closed");
    if (!impl_->broken.empty()) throw Error(ErrorCode::kTransportError, impl_->broken);
    id = impl_->next_id++;
  }
  impl_->send(json{{"id", id}, {"method", method}, {"params", std::move(params)}}.dump());

  std::unique_lock lock(impl_->mutex);
  const bool arrived = impl_->cv.wait_for(lock, timeout, [&] {
    return impl_->responses.count(id) > 0 || !impl_->broken.empty();
  });
  if (!arrived) throw Error(ErrorCode::kTransportError, method + " timed out");
  auto it = impl_->responses.find(id);
  if (it == impl_->responses.end()) throw Error(ErrorCode::kTransportError, impl_->broken);
  json response = std::move(it->second);
  impl_->responses.erase(it);
  if (response.contains("error")) {
    throw Error(ErrorCode::kTransportError,
                method + ": " + response["error"].value("message", response["error"].dump()));
  }
  return response.value("result", json::object());
}

std::optional<json> CdpConnection::next_event(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mutex);
  impl_->cv.wait_for(lock, timeout, [&] {
    return !impl_->events.empty() || !impl_->broken.empty() || impl_->closed;
  });
  if (impl_->events.empty()) return std::nullopt;
  json event = std::move(impl_->events.front());
  impl_->events.pop_front();
  return event;
}

void CdpConnection::close() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->closed) return;
    impl_->closed = true;
    impl_->cv.notify_all();
  }
  Impl* raw = impl_.get();
  net::post(raw->ioc, [raw] {
    beast::error_code ec;
    beast::get_lowest_layer(raw->ws).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(raw->ws).socket().close(ec);
  });
  if (raw->io_thread.joinable()) raw->io_thread.join();
}

}  // namespace websight
