#include "wire.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>
#include <openssl/evp.h>

#include "error.hpp"

extern char** environ;

namespace kitnet {

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) fail(ErrorCode::kProtocol, "base64 length is not a multiple of 4");
  std::string out(3 * (text.size() / 4), '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) fail(ErrorCode::kProtocol, "malformed base64");
  // EVP_DecodeBlock counts padding as zero bytes.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string raster_bytes(const DepthImage& image) {
  // The KNDI payload is exactly this layout.
  return encode_kndi(image).substr(16);
}

namespace {

class FdChannel final : public LineChannel {
 public:
  explicit FdChannel(int fd, pid_t child = -1) : fd_(fd), child_(child) {}
  ~FdChannel() override {
    ::close(fd_);
    if (child_ > 0) reap();
  }

  void send_line(std::string_view line) override {
    std::string buf(line);
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::send(fd_, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kTransport, std::string("send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(double timeout_s) override {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    for (;;) {
      const auto nl = pending_.find('\n');
      if (nl != std::string::npos) {
        std::string line = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) fail(ErrorCode::kTransport, "timed out waiting for the estimator");
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kTransport, std::string("poll failed: ") + std::strerror(errno));
      }
      if (r == 0) continue;
      char chunk[65536];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kTransport, std::string("recv failed: ") + std::strerror(errno));
      }
      if (n == 0) fail(ErrorCode::kTransport, "estimator closed the connection");
      pending_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  void reap() {
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(child_, nullptr, WNOHANG) != 0) return;
      ::usleep(10000);
    }
    ::kill(child_, SIGKILL);
    ::waitpid(child_, nullptr, 0);
  }

  int fd_;
  pid_t child_;
  std::string pending_;
};

std::unique_ptr<LineChannel> connect_tcp(const std::string& hostport) {
  const auto colon = hostport.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::kInvalidArgument, "tcp endpoint needs host:port");
  const std::string host = hostport.substr(0, colon);
  const std::string port = hostport.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    fail(ErrorCode::kTransport, "cannot resolve " + hostport + ": " + ::gai_strerror(rc));
  }
  std::string last = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return std::make_unique<FdChannel>(fd);
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  fail(ErrorCode::kTransport, "cannot connect to tcp://" + hostport + ": " + last);
}

std::unique_ptr<LineChannel> connect_unix(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof addr.sun_path) fail(ErrorCode::kInvalidArgument, "unix socket path too long");
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) fail(ErrorCode::kTransport, std::string("socket failed: ") + std::strerror(errno));
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    fail(ErrorCode::kTransport, "cannot connect to unix://" + path + ": " + why);
  }
  return std::make_unique<FdChannel>(fd);
}

std::unique_ptr<LineChannel> spawn_exec(const std::string& command) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    fail(ErrorCode::kTransport, std::string("socketpair failed: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, sv[1], 0);
  posix_spawn_file_actions_adddup2(&actions, sv[1], 1);
  const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(sv[1]);
  if (rc != 0) {
    ::close(sv[0]);
    fail(ErrorCode::kTransport, "cannot spawn '" + command + "': " + std::strerror(rc));
  }
  return std::make_unique<FdChannel>(sv[0], pid);
}

using nlohmann::json;

json parse_reply(const std::string& line) {
  json reply = json::parse(line, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) fail(ErrorCode::kProtocol, "estimator reply is not a JSON object");
  return reply;
}

void require_version(const json& reply) {
  const auto v = reply.find("v");
  if (v == reply.end() || !v->is_number_integer() || v->get<int>() != 1) {
    fail(ErrorCode::kProtocol, "estimator speaks an unsupported protocol version (expected v=1)");
  }
}

}  // namespace

std::unique_ptr<LineChannel> open_channel(const std::string& endpoint, double) {
  if (endpoint.rfind("tcp://", 0) == 0) return connect_tcp(endpoint.substr(6));
  if (endpoint.rfind("unix://", 0) == 0) return connect_unix(endpoint.substr(7));
  if (endpoint.rfind("exec:", 0) == 0) return spawn_exec(endpoint.substr(5));
  fail(ErrorCode::kInvalidArgument, "unknown endpoint scheme in '" + endpoint + "' (tcp://, unix://, exec:)");
}

ExternalClient::ExternalClient(const std::string& endpoint, double timeout_s)
    : channel_(open_channel(endpoint, timeout_s)), timeout_s_(timeout_s) {}

ExternalClient::ExternalClient(std::unique_ptr<LineChannel> channel, double timeout_s)
    : channel_(std::move(channel)), timeout_s_(timeout_s) {}

const Handshake& ExternalClient::handshake() {
  if (handshake_) return *handshake_;
  channel_->send_line(R"({"op":"hello"})");
  const json reply = parse_reply(channel_->read_line(timeout_s_));
  require_version(reply);
  const auto raster = reply.find("raster");
  if (raster == reply.end() || !raster->is_array() || raster->size() != 2 || !(*raster)[0].is_number_integer() ||
      !(*raster)[1].is_number_integer() || (*raster)[0].get<int>() <= 0 || (*raster)[1].get<int>() <= 0) {
    fail(ErrorCode::kProtocol, "handshake reply lacks a valid \"raster\":[w,h]");
  }
  handshake_ = Handshake{1, (*raster)[0].get<int>(), (*raster)[1].get<int>()};
  return *handshake_;
}

std::string ExternalClient::encode_request(const DepthImage& image_start, const DepthImage& image_goal) {
  nlohmann::ordered_json req;
  req["v"] = 1;
  req["op"] = "estimate";
  req["w"] = image_start.width();
  req["h"] = image_start.height();
  req["img_s"] = base64_encode(raster_bytes(image_start));
  req["img_g"] = base64_encode(raster_bytes(image_goal));
  return req.dump();
}

WireEstimate ExternalClient::estimate(const DepthImage& image_start, const DepthImage& image_goal) {
  const Handshake& hs = handshake();
  for (const DepthImage* img : {&image_start, &image_goal}) {
    if (img->width() != hs.raster_width || img->height() != hs.raster_height) {
      fail(ErrorCode::kSizeMismatch, "raster is " + std::to_string(img->width()) + "x" +
                                         std::to_string(img->height()) + " but the estimator expects " +
                                         std::to_string(hs.raster_width) + "x" + std::to_string(hs.raster_height));
    }
  }
  channel_->send_line(encode_request(image_start, image_goal));
  const json reply = parse_reply(channel_->read_line(timeout_s_));
  require_version(reply);
  if (const auto err = reply.find("error"); err != reply.end()) {
    fail(ErrorCode::kProtocol, "estimator error: " + (err->is_string() ? err->get<std::string>() : err->dump()));
  }
  const auto q = reply.find("quat_wxyz");
  if (q == reply.end() || !q->is_array() || q->size() != 4) fail(ErrorCode::kProtocol, "reply lacks quat_wxyz[4]");
  std::array<double, 4> wxyz{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(*q)[i].is_number()) fail(ErrorCode::kProtocol, "quat_wxyz entries must be numbers");
    wxyz[i] = (*q)[i].get<double>();
  }
  WireEstimate out;
  try {
    out.rotation = UnitQuaternion::from_wxyz(wxyz);
  } catch (const Error& e) {
    fail(ErrorCode::kProtocol, std::string("invalid quaternion in reply: ") + e.what());
  }
  if (const auto c = reply.find("confidence"); c != reply.end() && !c->is_null()) {
    if (!c->is_number()) fail(ErrorCode::kProtocol, "confidence must be a number or null");
    out.confidence = c->get<double>();
  }
  return out;
}

Handshake external_handshake(const std::string& endpoint, double timeout_s) {
  ExternalClient client(endpoint, timeout_s);
  return client.handshake();
}

}  // namespace kitnet
