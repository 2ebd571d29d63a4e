// Copyright 2026 The domforest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "domforest/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include <json.hpp>

namespace domforest {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace fs = std::filesystem;
using tcp = asio::ip::tcp;

std::optional<fs::path> resolve_static_path(const fs::path& root, std::string_view target) {
  if (root.empty()) return std::nullopt;
  std::string path(target.substr(0, target.find_first_of("?#")));
  if (path.empty() || path.front() != '/') return std::nullopt;
  std::string decoded;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i] == '%') {
      if (i + 2 >= path.size()) return std::nullopt;
      const auto hex = path.substr(i + 1, 2);
      char* end = nullptr;
      const long v = std::strtol(hex.c_str(), &end, 16);
      if (end != hex.c_str() + 2 || v == 0) return std::nullopt;
      decoded.push_back(static_cast<char>(v));
      i += 2;
    } else {
      decoded.push_back(path[i]);
    }
  }
  if (decoded.find('\\') != std::string::npos) return std::nullopt;
  fs::path rel;
  std::stringstream parts(decoded);
  std::string seg;
  while (std::getline(parts, seg, '/')) {
    if (seg.empty() || seg == ".") continue;
    if (seg == "..") return std::nullopt;
    rel /= seg;
  }
  std::error_code ec;
  const fs::path base = fs::weakly_canonical(root, ec);
  if (ec) return std::nullopt;
  fs::path full = base / rel;
  if (fs::is_directory(full, ec)) full /= "index.html";
  full = fs::weakly_canonical(full, ec);
  if (ec || !fs::is_regular_file(full, ec)) return std::nullopt;
  const auto mismatch = std::mismatch(base.begin(), base.end(), full.begin(), full.end());
  if (mismatch.first != base.end()) return std::nullopt;
  return full;
}

std::string_view mime_type(const fs::path& file) {
  const auto ext = file.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

namespace {

struct Connected {
  int client;
};
struct Disconnected {
  int client;
};
struct Incoming {
  int client;
  std::string text;
};
using Event = std::variant<Connected, Disconnected, Incoming>;

class WsConnection;

}  // namespace

struct LiveServer::Impl {
  std::unique_ptr<Session> session;
  ServerOptions opts;
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  std::thread io_thread;
  std::thread sim_thread;
  std::atomic<bool> running{false};
  std::atomic<std::uint64_t> ticks{0};

  std::mutex events_mu;
  std::deque<Event> events;

  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopped = false;

  // Touched only on the I/O thread.
  std::map<int, std::weak_ptr<WsConnection>> connections;
  int next_client = 1;

  void push_event(Event e) {
    std::lock_guard lk(events_mu);
    events.push_back(std::move(e));
  }

  void do_accept();
  void sim_loop();
  void deliver(std::vector<Session::Reply> replies, std::string frame, std::string full_frame,
               std::vector<int> full_clients);
};

namespace {

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, LiveServer::Impl* server, int id)
      : ws_(std::move(socket)), server_(server), id_(id) {}

  template <class Body>
  void run(http::request<Body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_->connections[self->id_] = self;
      self->server_->push_event(Connected{self->id_});
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> text, bool droppable) {
    if (closed_) return;
    if (droppable) {
      std::size_t frames = 0;
      for (const auto& q : queue_) frames += q.second ? 1 : 0;
      if (frames >= server_->opts.max_queued_frames) return;
    }
    queue_.emplace_back(std::move(text), droppable);
    if (queue_.size() == 1) write();
  }

  void close() {
    if (closed_) return;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      self->server_->push_event(Incoming{self->id_, beast::buffers_to_string(self->buffer_.data())});
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front().first), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  void finish() {
    if (closed_) return;
    closed_ = true;
    queue_.clear();
    server_->connections.erase(id_);
    server_->push_event(Disconnected{id_});
  }

  websocket::stream<beast::tcp_stream> ws_;
  LiveServer::Impl* server_;
  int id_;
  beast::flat_buffer buffer_;
  std::deque<std::pair<std::shared_ptr<const std::string>, bool>> queue_;
  bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, LiveServer::Impl* server) : stream_(std::move(socket)), server_(server) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->handle();
    });
  }

  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/ws") return reply(http::status::not_found, "text/plain", "websocket endpoint is /ws\n");
      stream_.expires_never();
      auto ws = std::make_shared<WsConnection>(stream_.release_socket(), server_, server_->next_client++);
      ws->run(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      return reply(http::status::method_not_allowed, "text/plain", "only GET and HEAD are supported\n");
    }
    const auto file = resolve_static_path(server_->opts.static_dir, std::string_view(req_.target().data(), req_.target().size()));
    if (!file) return reply(http::status::not_found, "text/plain", "not found\n");
    std::ifstream in(*file, std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    reply(http::status::ok, std::string(mime_type(*file)), body.str());
  }

  void reply(http::status status, const std::string& type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "domforest");
    res->set(http::field::content_type, type);
    res->keep_alive(req_.keep_alive());
    const bool head = req_.method() == http::verb::head;
    res->body() = std::move(body);
    res->prepare_payload();
    if (head) res->body().clear();
    http::async_write(stream_, *res, [self = shared_from_this(), res, keep = res->keep_alive()](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (keep) return self->read();
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  LiveServer::Impl* server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

void LiveServer::Impl::do_accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpConnection>(std::move(socket), this)->run();
    do_accept();
  });
}

void LiveServer::Impl::deliver(std::vector<Session::Reply> replies, std::string frame, std::string full_frame,
                               std::vector<int> full_clients) {
  asio::post(io, [this, replies = std::move(replies), frame = std::make_shared<const std::string>(std::move(frame)),
                  full = std::make_shared<const std::string>(std::move(full_frame)),
                  full_clients = std::move(full_clients)] {
    for (const auto& r : replies) {
      auto it = connections.find(r.client);
      if (it == connections.end()) continue;
      if (auto c = it->second.lock()) c->send(std::make_shared<const std::string>(r.text), false);
    }
    if (frame->empty()) return;
    for (const auto& [id, weak] : connections) {
      auto c = weak.lock();
      if (!c) continue;
      const bool wants_full = std::find(full_clients.begin(), full_clients.end(), id) != full_clients.end();
      c->send(wants_full && !full->empty() ? full : frame, true);
    }
  });
}

void LiveServer::Impl::sim_loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / session->tick_hz()));
  auto next = clock::now();
  std::map<int, bool> clients;
  while (running) {
    std::deque<Event> batch;
    {
      std::lock_guard lk(events_mu);
      batch.swap(events);
    }
    std::vector<Session::Reply> replies;
    for (auto& e : batch) {
      if (auto* c = std::get_if<Connected>(&e)) {
        clients[c->client] = true;
        replies.push_back({c->client, session->connect(c->client)});
      } else if (auto* d = std::get_if<Disconnected>(&e)) {
        clients.erase(d->client);
        session->disconnect(d->client);
      } else if (auto* m = std::get_if<Incoming>(&e)) {
        auto r = session->handle(m->client, m->text);
        replies.insert(replies.end(), r.begin(), r.end());
      }
    }
    std::vector<int> full_clients;
    for (const auto& [id, _] : clients) {
      if (session->wants_full_grid(id)) full_clients.push_back(id);
    }
    std::string frame, full;
    try {
      const SessionFrame f = session->tick();
      frame = frame_to_json(decimate_frame(f, session->max_transport_grid()));
      if (!full_clients.empty()) full = frame_to_json(f);
    } catch (const std::exception& ex) {
      for (const auto& [id, _] : clients) {
        replies.push_back({id, nlohmann::json{{"type", "error"}, {"message", std::string("simulation: ") + ex.what()}}.dump()});
      }
      running = false;
    }
    ++ticks;
    deliver(std::move(replies), std::move(frame), std::move(full), std::move(full_clients));
    next += period;
    const auto now = clock::now();
    if (next < now) next = now;
    std::this_thread::sleep_until(next);
  }
}

LiveServer::LiveServer(std::unique_ptr<Session> session, const ServerOptions& opts) : impl_(std::make_unique<Impl>()) {
  if (!session) throw std::invalid_argument("server: session is null");
  impl_->session = std::move(session);
  impl_->opts = opts;
  beast::error_code ec;
  const auto addr = asio::ip::make_address(opts.address, ec);
  if (ec) throw std::runtime_error("server: invalid address '" + opts.address + "'");
  const tcp::endpoint ep(addr, opts.port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw std::runtime_error("server: cannot listen on " + opts.address + ":" + std::to_string(opts.port) + ": " +
                             ec.message());
  }
}

LiveServer::~LiveServer() { stop(); }

std::uint16_t LiveServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::uint64_t LiveServer::ticks() const { return impl_->ticks.load(); }

void LiveServer::start() {
  if (impl_->running.exchange(true)) return;
  impl_->do_accept();
  impl_->io_thread = std::thread([this] {
    auto guard = asio::make_work_guard(impl_->io);
    impl_->io.run();
  });
  impl_->sim_thread = std::thread([this] { impl_->sim_loop(); });
}

void LiveServer::stop() {
  if (!impl_) return;
  const bool was_running = impl_->running.exchange(false);
  if (impl_->sim_thread.joinable()) impl_->sim_thread.join();
  if (was_running) {
    asio::post(impl_->io, [this] {
      beast::error_code ec;
      impl_->acceptor.close(ec);
      for (auto& [_, weak] : impl_->connections) {
        if (auto c = weak.lock()) c->close();
      }
      impl_->io.stop();
    });
  }
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
  {
    std::lock_guard lk(impl_->stop_mu);
    impl_->stopped = true;
  }
  impl_->stop_cv.notify_all();
}

void LiveServer::wait() {
  std::unique_lock lk(impl_->stop_mu);
  impl_->stop_cv.wait(lk, [this] { return impl_->stopped; });
}

}  // namespace domforest
