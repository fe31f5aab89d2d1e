#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tuition/engine.hpp"

namespace tuition::wire {

// Decodes an inbound BILLREQ / PAYMENT / REVERSAL line, runs it through the
// engine and returns the encoded reply. Failures become "ERROR|<code>".
std::string dispatch_line(ups::Engine& engine, std::string_view line);

// Request/response exchange of one wire line.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string exchange(const std::string& line) = 0;
};

class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(ups::Engine& engine) : engine_(engine) {}
  std::string exchange(const std::string& line) override { return dispatch_line(engine_, line); }

 private:
  ups::Engine& engine_;
};

// Newline-framed client over a Unix domain socket.
class SocketTransport final : public Transport {
 public:
  explicit SocketTransport(const std::filesystem::path& socket_path);
  ~SocketTransport() override;
  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  std::string exchange(const std::string& line) override;

 private:
  int fd_ = -1;
  std::string buffer_;
};

// Serves the engine on a Unix domain socket, one thread per connection.
class SocketServer {
 public:
  SocketServer(ups::Engine& engine, std::filesystem::path socket_path);
  ~SocketServer();
  SocketServer(const SocketServer&) = delete;
  SocketServer& operator=(const SocketServer&) = delete;

  // Blocks until stop() is called.
  void serve();
  void stop();

 private:
  void handle_connection(int fd);

  ups::Engine& engine_;
  std::filesystem::path path_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::mutex threads_mutex_;
  std::vector<std::thread> threads_;
  std::vector<int> client_fds_;
};

}  // namespace tuition::wire
