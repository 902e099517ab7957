#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsinterp/oracle.hpp"

namespace tsinterp {

/// "stdio:<command line>" launches a subprocess and talks over its
/// stdin/stdout; "tcp:<host>:<port>" connects to a listening server.
struct Endpoint {
  enum class Kind { stdio, tcp };
  Kind kind = Kind::stdio;
  std::vector<std::string> command;
  std::string host;
  int port = 0;

  static Endpoint parse(const std::string& text);
  std::string describe() const;
};

/// Bidirectional line transport.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  /// Throws ProtocolError on timeout or end of stream.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<LineChannel> open_channel(const Endpoint& endpoint,
                                          std::chrono::milliseconds connect_timeout);

/// Client side of the external-model wire protocol. Requests on one handle
/// are serialized; ids increase monotonically and every reply must carry
/// the id of the pending request.
class ExternalModelHandle final : public ForecastOracle {
 public:
  /// Opens the channel and performs the hello handshake. Throws
  /// ProtocolError if the server's version or shape metadata differ.
  static std::unique_ptr<ExternalModelHandle> connect(
      const Endpoint& endpoint, const ModelShape& expected,
      std::chrono::milliseconds timeout = std::chrono::seconds(30));

  ExternalModelHandle(std::unique_ptr<LineChannel> channel, const ModelShape& expected,
                      std::chrono::milliseconds timeout);

  ModelShape shape() const override { return shape_; }
  std::vector<Grid> predict(std::span<const ModelInput> batch) const override;
  bool has_exact_gradient() const override { return gradient_capable_; }
  Grid gradient(const ModelInput& input, OutputIndex index) const override;
  std::vector<Grid> jacobian(const ModelInput& input) const override;

  std::int64_t requests_sent() const;

 private:
  /// Sends one request and returns the matching reply; throws ProtocolError
  /// for id mismatches and for error replies.
  nlohmann::json exchange(nlohmann::json request) const;

  std::unique_ptr<LineChannel> channel_;
  ModelShape shape_;
  std::chrono::milliseconds timeout_;
  bool gradient_capable_ = false;
  mutable std::mutex mutex_;
  mutable std::int64_t next_id_ = 0;
};

}  // namespace tsinterp
