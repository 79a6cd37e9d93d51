#pragma once

// Session wire protocol. Each message is a 4-byte big-endian length followed
// by that many bytes of UTF-8 JSON.
//
// Request:       {"id": any, "kind": "<command or query>", ...payload}
// Reply:         {"type": "reply", "id": ..., "ok": true, "result": {...}}
//                {"type": "reply", "id": ..., "ok": false,
//                 "error": {"code": "validation|parse|sampling|io", "message": "..."}}
// Notification:  {"type": "view-update", "cursor": n, "journal": n, "summary": {...}}
//                pushed to every client after a command that changed the state.
//
// The extra kind "shutdown" stops the server after replying.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "sketchnd/session.hpp"

namespace sketchnd {

constexpr std::size_t kMaxFrameBytes = 64u << 20;

/// Length prefix plus payload. Throws ValidationError above kMaxFrameBytes.
std::string encode_frame(std::string_view payload);

/// Reassembles frames from an arbitrary byte stream.
class FrameDecoder {
 public:
  /// Throws ValidationError when a declared length exceeds kMaxFrameBytes.
  void feed(std::string_view bytes);
  /// Next complete payload, if any.
  std::optional<std::string> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
};

struct HandlerOutput {
  Json reply;
  std::optional<Json> notification;
  bool shutdown = false;
};

/// Transport-free request handling over a session.
class ProtocolHandler {
 public:
  explicit ProtocolHandler(Session& session) : session_(session) {}

  HandlerOutput handle_message(std::string_view message);
  HandlerOutput handle(const Json& request);

  Session& session() { return session_; }

 private:
  Session& session_;
};

/// Serves one connected stream until EOF or a shutdown request. Returns true
/// on shutdown. Throws IoError on read/write failures.
bool serve_connection(int fd, ProtocolHandler& handler);

/// Listens on a Unix socket at `path` (replacing a stale socket file) and
/// serves any number of clients from a single command loop until a shutdown
/// request. `on_ready` runs once the socket accepts connections.
void serve_unix_socket(const std::string& path, ProtocolHandler& handler,
                       const std::function<void()>& on_ready = {});

}  // namespace sketchnd
