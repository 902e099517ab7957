#include "tsinterp/external_model.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>
#include <thread>

#include "tsinterp/errors.hpp"
#include "tsinterp/wire.hpp"

namespace tsinterp {

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint ep;
  if (text.rfind("stdio:", 0) == 0) {
    ep.kind = Kind::stdio;
    std::istringstream ss(text.substr(6));
    std::string word;
    while (ss >> word) ep.command.push_back(word);
    if (ep.command.empty()) throw ValidationError("stdio endpoint needs a command: '" + text + "'");
    return ep;
  }
  if (text.rfind("tcp:", 0) == 0) {
    ep.kind = Kind::tcp;
    const std::string rest = text.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
      ep.host = "127.0.0.1";
      ep.port = std::atoi(rest.c_str());
    } else {
      ep.host = rest.substr(0, colon);
      ep.port = std::atoi(rest.substr(colon + 1).c_str());
    }
    if (ep.port <= 0 || ep.port > 65535) throw ValidationError("invalid tcp endpoint '" + text + "'");
    return ep;
  }
  throw ValidationError("endpoint must start with 'stdio:' or 'tcp:', got '" + text + "'");
}

std::string Endpoint::describe() const {
  if (kind == Kind::tcp) return "tcp:" + host + ":" + std::to_string(port);
  std::string s = "stdio:";
  for (std::size_t i = 0; i < command.size(); ++i) s += (i ? " " : "") + command[i];
  return s;
}

namespace {

class FdLineReader {
 public:
  explicit FdLineReader(int fd) : fd_(fd) {}

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw ProtocolError("timed out waiting for a reply from the external model");
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (r == 0) continue;
      char chunk[65536];
      const ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw ProtocolError(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw ProtocolError("external model closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("write to external model failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::vector<std::string>& command) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw ProtocolError(std::string("pipe failed: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw ProtocolError(std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      std::vector<char*> argv;
      for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      ::execvp(argv[0], argv.data());
      std::_Exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    reader_ = std::make_unique<FdLineReader>(read_fd_);
  }

  ~ProcessChannel() override {
    if (write_fd_ >= 0) ::close(write_fd_);  // end of stream: server shuts down
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
    if (read_fd_ >= 0) ::close(read_fd_);
  }

  void write_line(const std::string& line) override { write_all(write_fd_, line + "\n"); }
  std::string read_line(std::chrono::milliseconds timeout) override { return reader_->read_line(timeout); }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::unique_ptr<FdLineReader> reader_;
};

class SocketChannel final : public LineChannel {
 public:
  SocketChannel(const std::string& host, int port, std::chrono::milliseconds connect_timeout) {
    ::signal(SIGPIPE, SIG_IGN);
    const auto deadline = std::chrono::steady_clock::now() + connect_timeout;
    std::string last_error = "no address";
    while (fd_ < 0) {
      addrinfo hints{};
      hints.ai_family = AF_UNSPEC;
      hints.ai_socktype = SOCK_STREAM;
      addrinfo* res = nullptr;
      const std::string port_text = std::to_string(port);
      if (const int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints, &res); rc != 0) {
        throw ProtocolError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
      }
      for (addrinfo* a = res; a != nullptr && fd_ < 0; a = a->ai_next) {
        const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
          fd_ = fd;
        } else {
          last_error = std::strerror(errno);
          ::close(fd);
        }
      }
      ::freeaddrinfo(res);
      if (fd_ >= 0) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        throw ProtocolError("cannot connect to tcp:" + host + ":" + std::to_string(port) + ": " + last_error);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    reader_ = std::make_unique<FdLineReader>(fd_);
  }

  ~SocketChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void write_line(const std::string& line) override { write_all(fd_, line + "\n"); }
  std::string read_line(std::chrono::milliseconds timeout) override { return reader_->read_line(timeout); }

 private:
  int fd_ = -1;
  std::unique_ptr<FdLineReader> reader_;
};

}  // namespace

std::unique_ptr<LineChannel> open_channel(const Endpoint& endpoint,
                                          std::chrono::milliseconds connect_timeout) {
  if (endpoint.kind == Endpoint::Kind::stdio) return std::make_unique<ProcessChannel>(endpoint.command);
  return std::make_unique<SocketChannel>(endpoint.host, endpoint.port, connect_timeout);
}

std::unique_ptr<ExternalModelHandle> ExternalModelHandle::connect(const Endpoint& endpoint,
                                                                  const ModelShape& expected,
                                                                  std::chrono::milliseconds timeout) {
  return std::make_unique<ExternalModelHandle>(open_channel(endpoint, timeout), expected, timeout);
}

ExternalModelHandle::ExternalModelHandle(std::unique_ptr<LineChannel> channel, const ModelShape& expected,
                                         std::chrono::milliseconds timeout)
    : channel_(std::move(channel)), shape_(expected), timeout_(timeout) {
  const auto reply = exchange(wire::hello_request(next_id_, expected));
  const int version = reply.value("protocol_version", -1);
  if (version != wire::kProtocolVersion) {
    throw ProtocolError("handshake failed: engine speaks protocol version " +
                        std::to_string(wire::kProtocolVersion) + ", server replied " + std::to_string(version));
  }
  if (!reply.contains("shape")) throw ProtocolError("handshake failed: reply carries no shape metadata");
  const ModelShape served = wire::shape_from_json(reply["shape"]);
  if (!(served == expected)) {
    throw ProtocolError("handshake failed: shape mismatch, engine expects " + expected.describe() +
                        " but server reports " + served.describe());
  }
  gradient_capable_ = reply.contains("capabilities") && reply["capabilities"].value("gradient", false);
}

nlohmann::json ExternalModelHandle::exchange(nlohmann::json request) const {
  std::lock_guard lock(mutex_);
  const std::int64_t id = next_id_++;
  request["id"] = id;
  channel_->write_line(wire::to_line(request));
  const std::string line = channel_->read_line(timeout_);
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("unparseable reply from external model: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_integer()) {
    throw ProtocolError("reply without an integer id");
  }
  if (reply["id"].get<std::int64_t>() != id) {
    throw ProtocolError("reply id " + std::to_string(reply["id"].get<std::int64_t>()) +
                        " does not match pending request " + std::to_string(id));
  }
  if (reply.contains("error")) {
    throw ProtocolError("external model error: " + reply["error"].dump());
  }
  return reply;
}

std::vector<Grid> ExternalModelHandle::predict(std::span<const ModelInput> batch) const {
  for (const auto& in : batch) check_input_shape(shape_, in);
  if (batch.empty()) return {};
  const auto reply = exchange(wire::predict_request(0, batch));
  if (!reply.contains("outputs")) throw ProtocolError("predict reply has no outputs");
  return wire::grids_from_json(reply["outputs"], batch.size(), shape_.outputs, shape_.horizon, "outputs");
}

Grid ExternalModelHandle::gradient(const ModelInput& input, OutputIndex index) const {
  check_input_shape(shape_, input);
  check_output_index(shape_, index);
  if (!gradient_capable_) return finite_diff_gradient(*this, input, index);
  const auto reply = exchange(wire::gradient_request(0, std::span<const ModelInput>(&input, 1), index));
  if (!reply.contains("gradients")) throw ProtocolError("gradient reply has no gradients");
  auto g = wire::grids_from_json(reply["gradients"], 1, shape_.features, shape_.lookback, "gradients");
  return std::move(g[0]);
}

std::vector<Grid> ExternalModelHandle::jacobian(const ModelInput& input) const {
  if (!gradient_capable_) return finite_diff_jacobian(*this, input);
  return ForecastOracle::jacobian(input);
}

std::int64_t ExternalModelHandle::requests_sent() const {
  std::lock_guard lock(mutex_);
  return next_id_;
}

}  // namespace tsinterp
