#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "sketchnd/error.hpp"
#include "sketchnd/protocol.hpp"

using namespace sketchnd;

namespace {

void write_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    REQUIRE(n > 0);
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::vector<Json> read_frames(int fd, std::size_t wanted) {
  FrameDecoder decoder;
  std::vector<Json> out;
  char buf[4096];
  while (out.size() < wanted) {
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n <= 0) break;
    decoder.feed({buf, static_cast<std::size_t>(n)});
    while (auto payload = decoder.next()) out.push_back(Json::parse(*payload));
  }
  return out;
}

std::string frame(const Json& j) { return encode_frame(j.dump()); }

}  // namespace

TEST_CASE("frames carry a big-endian length prefix") {
  const std::string f = encode_frame("abc");
  REQUIRE(f.size() == 7);
  CHECK(f[0] == 0);
  CHECK(f[1] == 0);
  CHECK(f[2] == 0);
  CHECK(f[3] == 3);
  CHECK(f.substr(4) == "abc");
  const std::string big = encode_frame(std::string(300, 'x'));
  CHECK(static_cast<unsigned char>(big[2]) == 1);
  CHECK(static_cast<unsigned char>(big[3]) == 44);
}

TEST_CASE("the decoder reassembles frames split across arbitrary chunks") {
  const std::string stream = encode_frame("{\"a\":1}") + encode_frame("") + encode_frame("hello world");
  for (std::size_t chunk = 1; chunk <= stream.size(); ++chunk) {
    FrameDecoder decoder;
    std::vector<std::string> got;
    for (std::size_t at = 0; at < stream.size(); at += chunk) {
      decoder.feed(std::string_view(stream).substr(at, chunk));
      while (auto p = decoder.next()) got.push_back(*p);
    }
    REQUIRE(got.size() == 3);
    CHECK(got[0] == "{\"a\":1}");
    CHECK(got[1].empty());
    CHECK(got[2] == "hello world");
    CHECK(decoder.buffered() == 0);
  }
}

TEST_CASE("oversized frames are rejected") {
  FrameDecoder decoder;
  const std::string header{'\x7f', '\x00', '\x00', '\x00'};
  CHECK_THROWS_AS(decoder.feed(header), ValidationError);
}

TEST_CASE("the handler replies with ids, results and error codes") {
  Session session(4);
  ProtocolHandler handler(session);

  auto out = handler.handle(Json{{"id", 7}, {"kind", "get-state-summary"}});
  CHECK(out.reply.at("type") == "reply");
  CHECK(out.reply.at("id") == 7);
  CHECK(out.reply.at("ok") == true);
  CHECK(out.reply.at("result").at("points") == 500);
  CHECK_FALSE(out.notification.has_value());

  out = handler.handle(Json{{"id", "a"}, {"kind", "set-range"}, {"dim", 0}, {"min", 5}, {"max", 5}});
  CHECK(out.reply.at("ok") == false);
  CHECK(out.reply.at("error").at("code") == "validation");
  CHECK_FALSE(out.reply.at("error").at("message").get<std::string>().empty());
  CHECK_FALSE(out.notification.has_value());

  out = handler.handle_message("{broken");
  CHECK(out.reply.at("ok") == false);
  CHECK(out.reply.at("error").at("code") == "parse");

  out = handler.handle(Json{{"id", 1}, {"kind", "import"}, {"path", "/no/such/file"}});
  CHECK(out.reply.at("error").at("code") == "io");
}

TEST_CASE("mutating commands produce a view update") {
  Session session(4);
  ProtocolHandler handler(session);
  auto out = handler.handle(Json{{"id", 1}, {"kind", "new-dataset"}, {"dims", 3}, {"points", 10}});
  REQUIRE(out.notification.has_value());
  CHECK(out.notification->at("type") == "view-update");
  CHECK(out.notification->at("cursor") == 1);
  CHECK(out.notification->at("summary").at("points") == 10);

  out = handler.handle(Json{{"id", 2}, {"kind", "undo"}});
  REQUIRE(out.notification.has_value());
  CHECK(out.notification->at("cursor") == 0);

  out = handler.handle(Json{{"id", 3}, {"kind", "shutdown"}});
  CHECK(out.shutdown);
  CHECK(out.reply.at("ok") == true);
}

TEST_CASE("a stream connection answers every request in order") {
  int fds[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
  const std::string requests = frame({{"id", 1}, {"kind", "rename"}, {"dim", 0}, {"name", "left"}}) +
                               frame({{"id", 2}, {"kind", "get-state-summary"}});
  write_all(fds[1], requests);
  ::shutdown(fds[1], SHUT_WR);

  Session session(2);
  ProtocolHandler handler(session);
  CHECK_FALSE(serve_connection(fds[0], handler));
  ::close(fds[0]);

  const auto frames = read_frames(fds[1], 3);
  ::close(fds[1]);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].at("id") == 1);
  CHECK(frames[1].at("type") == "view-update");
  CHECK(frames[2].at("id") == 2);
  CHECK(session.state().data.dim(0).name == "left");
}

TEST_CASE("the socket server broadcasts updates and stops on request") {
  const auto path = (std::filesystem::temp_directory_path() / "sketchnd_test.sock").string();
  Session session(9);
  ProtocolHandler handler(session);
  std::atomic<bool> ready{false};
  std::thread server([&] { serve_unix_socket(path, handler, [&] { ready = true; }); });
  while (!ready) std::this_thread::sleep_for(std::chrono::milliseconds(1));

  auto connect_client = [&] {
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    std::snprintf(addr.sun_path, sizeof addr.sun_path, "%s", path.c_str());
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    return fd;
  };
  const int watcher = connect_client();
  const int editor = connect_client();

  // Round trip on the watcher first so the server has registered it.
  write_all(watcher, frame({{"id", 0}, {"kind", "get-state-summary"}}));
  CHECK(read_frames(watcher, 1).at(0).at("id") == 0);

  write_all(editor, frame({{"id", 1}, {"kind", "set-samples"}, {"cluster", 0}, {"count", 30}}));
  const auto editor_frames = read_frames(editor, 2);
  REQUIRE(editor_frames.size() == 2);
  CHECK(editor_frames[0].at("ok") == true);
  CHECK(editor_frames[1].at("type") == "view-update");
  const auto watcher_frames = read_frames(watcher, 1);
  REQUIRE(watcher_frames.size() == 1);
  CHECK(watcher_frames[0].at("summary").at("points") == 30);

  write_all(editor, frame({{"id", 2}, {"kind", "shutdown"}}));
  CHECK(read_frames(editor, 1).at(0).at("id") == 2);
  server.join();
  ::close(watcher);
  ::close(editor);
  CHECK_FALSE(std::filesystem::exists(path));
}
