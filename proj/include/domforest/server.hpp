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

#pragma once

#include "domforest/session.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace domforest {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::string static_dir;     // empty disables static file serving
  std::size_t max_queued_frames = 8;
};

/// Maps a request target onto a file below `root`. Rejects anything that would escape the
/// root; directory requests resolve to their index.html.
std::optional<std::filesystem::path> resolve_static_path(const std::filesystem::path& root, std::string_view target);

std::string_view mime_type(const std::filesystem::path& file);

/// Websocket endpoint at `/ws` plus static files on the same port. Network I/O runs on one
/// thread, the simulation on another; they exchange events through queues only.
class LiveServer {
 public:
  /// Binds immediately so a port collision is reported here.
  LiveServer(std::unique_ptr<Session> session, const ServerOptions& opts);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  std::uint16_t port() const;
  void start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler runs it.
  void wait();
  std::uint64_t ticks() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace domforest
