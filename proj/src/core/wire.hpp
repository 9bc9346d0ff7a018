#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "render.hpp"
#include "so3.hpp"

namespace kitnet {

std::string base64_encode(std::string_view bytes);
/// Throws kProtocol on malformed input.
std::string base64_decode(std::string_view text);

/// Raw float32 little-endian row-major payload of a raster.
std::string raster_bytes(const DepthImage& image);

/// A bidirectional, line-oriented byte stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  /// Writes `line` followed by '\n'.
  virtual void send_line(std::string_view line) = 0;
  /// Blocks until a full line arrives (without the '\n') or the timeout
  /// expires. Throws kTransport on timeout, EOF or I/O failure.
  virtual std::string read_line(double timeout_s) = 0;
};

/// Endpoints: "tcp://host:port", "unix:///path/to.sock", or "exec:<command>"
/// (spawned through /bin/sh, spoken to over its stdin/stdout).
/// Throws kInvalidArgument for an unknown scheme, kTransport when the peer
/// is unreachable.
std::unique_ptr<LineChannel> open_channel(const std::string& endpoint, double timeout_s);

struct Handshake {
  int version = 0;
  int raster_width = 0;
  int raster_height = 0;
};

struct WireEstimate {
  UnitQuaternion rotation;
  std::optional<double> confidence;
};

/// Client side of the newline-delimited JSON estimator protocol (v1).
/// Owns one channel; requests are serialized.
class ExternalClient {
 public:
  ExternalClient(const std::string& endpoint, double timeout_s);
  explicit ExternalClient(std::unique_ptr<LineChannel> channel, double timeout_s = 10.0);

  /// Sends {"op":"hello"}; requires {"v":1,"raster":[w,h]}. Throws
  /// kProtocol on anything else.
  const Handshake& handshake();
  /// Rejects rasters that differ from the negotiated size with
  /// kSizeMismatch before anything is sent.
  WireEstimate estimate(const DepthImage& image_start, const DepthImage& image_goal);

  /// The exact request line estimate() sends for these rasters.
  static std::string encode_request(const DepthImage& image_start, const DepthImage& image_goal);

 private:
  std::unique_ptr<LineChannel> channel_;
  double timeout_s_;
  std::optional<Handshake> handshake_;
};

/// Runs a single handshake against the endpoint.
Handshake external_handshake(const std::string& endpoint, double timeout_s = 10.0);

}  // namespace kitnet
