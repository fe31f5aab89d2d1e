#include "tuition/server.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "tuition/error.hpp"

namespace tuition::wire {

namespace {

struct Dispatcher {
  ups::Engine& engine;

  std::string operator()(const protocol::BillRequest& m) const {
    return protocol::encode(engine.handle_bill_request(m));
  }
  std::string operator()(const protocol::PaymentMessage& m) const {
    if (m.transaction_type == TransactionType::Payment) {
      return protocol::encode(protocol::PaymentStatusMessage{engine.handle_payment(m)});
    }
    return protocol::encode(protocol::ReversalStatusMessage{engine.handle_reversal(m)});
  }
  template <typename Other>
  std::string operator()(const Other&) const {
    throw Error(ErrorCode::UnknownKind, "not a request the engine accepts");
  }
};

sockaddr_un socket_address(const std::filesystem::path& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string s = path.string();
  if (s.size() >= sizeof addr.sun_path) throw Error(ErrorCode::IoError, "socket path too long");
  std::memcpy(addr.sun_path, s.c_str(), s.size() + 1);
  return addr;
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

std::string dispatch_line(ups::Engine& engine, std::string_view line) {
  try {
    return std::visit(Dispatcher{engine}, protocol::decode(line));
  } catch (const Error& e) {
    return "ERROR|" + std::string(to_string(e.code()));
  }
}

// --- client -----------------------------------------------------------------------

SocketTransport::SocketTransport(const std::filesystem::path& socket_path) {
  fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::IoError, std::string("socket: ") + std::strerror(errno));
  const auto addr = socket_address(socket_path);
  if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::IoError, "connect " + socket_path.string() + ": " + std::strerror(err));
  }
}

SocketTransport::~SocketTransport() {
  if (fd_ >= 0) ::close(fd_);
}

std::string SocketTransport::exchange(const std::string& line) {
  if (!send_all(fd_, line + "\n")) throw Error(ErrorCode::IoError, "send failed");
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return reply;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(ErrorCode::IoError, "connection closed by engine");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// --- server -----------------------------------------------------------------------

SocketServer::SocketServer(ups::Engine& engine, std::filesystem::path socket_path)
    : engine_(engine), path_(std::move(socket_path)) {
  listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::IoError, std::string("socket: ") + std::strerror(errno));
  std::error_code ec;
  std::filesystem::remove(path_, ec);
  const auto addr = socket_address(path_);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    throw Error(ErrorCode::IoError, "bind " + path_.string() + ": " + std::strerror(err));
  }
}

SocketServer::~SocketServer() {
  stop();
  std::lock_guard lock(threads_mutex_);
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

void SocketServer::stop() {
  stopping_.store(true);
  std::lock_guard lock(threads_mutex_);
  for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
}

void SocketServer::serve() {
  while (!stopping_.load()) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    if (ready <= 0) continue;
    const int client = ::accept(listen_fd_, nullptr, nullptr);
    if (client < 0) continue;
    std::lock_guard lock(threads_mutex_);
    if (stopping_.load()) {
      ::close(client);
      break;
    }
    client_fds_.push_back(client);
    threads_.emplace_back([this, client] { handle_connection(client); });
  }
}

void SocketServer::handle_connection(int fd) {
  std::string buffer;
  char chunk[4096];
  while (!stopping_.load()) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      std::string_view line(buffer.data(), nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      const std::string reply = dispatch_line(engine_, line) + "\n";
      buffer.erase(0, nl + 1);
      if (!send_all(fd, reply)) {
        buffer.clear();
        break;
      }
    }
  }
  std::lock_guard lock(threads_mutex_);
  client_fds_.erase(std::remove(client_fds_.begin(), client_fds_.end(), fd), client_fds_.end());
  ::close(fd);
}

}  // namespace tuition::wire
