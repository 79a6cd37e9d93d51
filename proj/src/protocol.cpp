#include "sketchnd/protocol.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

#include "sketchnd/error.hpp"

namespace sketchnd {

std::string encode_frame(std::string_view payload) {
  if (payload.size() > kMaxFrameBytes) throw ValidationError("message exceeds the frame size limit");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xFF));
  out.push_back(static_cast<char>((n >> 16) & 0xFF));
  out.push_back(static_cast<char>((n >> 8) & 0xFF));
  out.push_back(static_cast<char>(n & 0xFF));
  out.append(payload);
  return out;
}

void FrameDecoder::feed(std::string_view bytes) {
  buffer_.append(bytes);
  if (buffer_.size() >= 4) {
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(buffer_[static_cast<std::size_t>(i)]);
    if (n > kMaxFrameBytes) throw ValidationError("declared frame length exceeds the limit");
  }
}

std::optional<std::string> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(buffer_[static_cast<std::size_t>(i)]);
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::string payload = buffer_.substr(4, n);
  buffer_.erase(0, 4 + static_cast<std::size_t>(n));
  // A following frame's header may now be at the front.
  if (buffer_.size() >= 4) feed({});
  return payload;
}

HandlerOutput ProtocolHandler::handle_message(std::string_view message) {
  Json request;
  try {
    request = Json::parse(message);
  } catch (const Json::exception& e) {
    HandlerOutput out;
    out.reply = {{"type", "reply"},
                 {"id", nullptr},
                 {"ok", false},
                 {"error", {{"code", "parse"}, {"message", std::string("malformed message: ") + e.what()}}}};
    return out;
  }
  return handle(request);
}

HandlerOutput ProtocolHandler::handle(const Json& request) {
  HandlerOutput out;
  const Json id = request.is_object() && request.contains("id") ? request.at("id") : Json(nullptr);
  out.reply = {{"type", "reply"}, {"id", id}};

  if (request.is_object() && request.value("kind", std::string()) == "shutdown") {
    out.reply["ok"] = true;
    out.reply["result"] = Json::object();
    out.shutdown = true;
    return out;
  }

  Json command = request;
  if (command.is_object()) command.erase("id");
  const CommandOutcome outcome = session_.apply(command);
  out.reply["ok"] = outcome.ok;
  if (outcome.ok) {
    out.reply["result"] = outcome.result;
  } else {
    out.reply["error"] = {{"code", outcome.error_code}, {"message", outcome.message}};
  }
  if (outcome.mutated) {
    out.notification = Json{{"type", "view-update"},
                            {"cursor", session_.cursor()},
                            {"journal", session_.journal().size()},
                            {"summary", state_summary(session_.state())}};
  }
  return out;
}

namespace {

void write_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("socket write failed: ") + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

/// Reads what is available. Returns false on EOF.
bool read_some(int fd, FrameDecoder& decoder) {
  char chunk[65536];
  for (;;) {
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("socket read failed: ") + std::strerror(errno));
    }
    if (n == 0) return false;
    decoder.feed({chunk, static_cast<std::size_t>(n)});
    return true;
  }
}

std::string frame_json(const Json& j) { return encode_frame(j.dump()); }

class FdGuard {
 public:
  explicit FdGuard(int fd) : fd_(fd) {}
  ~FdGuard() {
    if (fd_ >= 0) ::close(fd_);
  }
  FdGuard(const FdGuard&) = delete;
  FdGuard& operator=(const FdGuard&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

}  // namespace

bool serve_connection(int fd, ProtocolHandler& handler) {
  FrameDecoder decoder;
  for (;;) {
    while (auto message = decoder.next()) {
      const auto out = handler.handle_message(*message);
      write_all(fd, frame_json(out.reply));
      if (out.notification) write_all(fd, frame_json(*out.notification));
      if (out.shutdown) return true;
    }
    if (!read_some(fd, decoder)) return false;
  }
}

void serve_unix_socket(const std::string& path, ProtocolHandler& handler, const std::function<void()>& on_ready) {
  sockaddr_un addr{};
  if (path.size() >= sizeof addr.sun_path) throw IoError("socket path too long: " + path);
  addr.sun_family = AF_UNIX;
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);

  FdGuard listener(::socket(AF_UNIX, SOCK_STREAM, 0));
  if (listener.get() < 0) throw IoError(std::string("cannot create socket: ") + std::strerror(errno));
  ::unlink(path.c_str());
  if (::bind(listener.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0)
    throw IoError("cannot bind " + path + ": " + std::strerror(errno));
  if (::listen(listener.get(), 8) < 0) throw IoError("cannot listen on " + path + ": " + std::strerror(errno));
  if (on_ready) on_ready();

  struct Client {
    int fd;
    FrameDecoder decoder;
  };
  std::vector<Client> clients;
  bool running = true;
  while (running) {
    std::vector<pollfd> fds;
    fds.push_back({listener.get(), POLLIN, 0});
    for (const auto& c : clients) fds.push_back({c.fd, POLLIN, 0});
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (fds[0].revents & POLLIN) {
      const int fd = ::accept(listener.get(), nullptr, nullptr);
      if (fd >= 0) clients.push_back({fd, {}});
    }
    std::vector<int> closed;
    for (std::size_t i = 1; i < fds.size() && running; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      Client& client = clients[i - 1];
      bool open = true;
      try {
        open = read_some(client.fd, client.decoder);
        while (auto message = client.decoder.next()) {
          const auto out = handler.handle_message(*message);
          write_all(client.fd, frame_json(out.reply));
          if (out.notification) {
            const std::string frame = frame_json(*out.notification);
            for (const auto& other : clients) {
              try {
                write_all(other.fd, frame);
              } catch (const IoError&) {
                // the reader side will notice the dead peer
              }
            }
          }
          if (out.shutdown) running = false;
        }
      } catch (const Error&) {
        open = false;
      }
      if (!open) closed.push_back(client.fd);
    }
    for (int fd : closed) {
      ::close(fd);
      std::erase_if(clients, [fd](const Client& c) { return c.fd == fd; });
    }
  }
  for (const auto& c : clients) ::close(c.fd);
  ::unlink(path.c_str());
}

}  // namespace sketchnd
