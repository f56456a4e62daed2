#include "gymlink/rpc.hpp"

#include <cerrno>
#include <cstring>
#include <optional>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace gymlink {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

// Reads exactly n bytes. Returns false on orderly EOF before the first byte.
bool recv_exact(int fd, char* out, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw Error(Errc::TruncatedFrame, "peer closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::ConnectionError, errno_text("recv"));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void send_all(int fd, std::string_view bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t r = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::ConnectionError, errno_text("send"));
    }
    sent += static_cast<std::size_t>(r);
  }
}

// Blocks for the next frame; nullopt on clean EOF.
std::optional<Message> read_message(int fd) {
  std::string header(kFrameHeaderSize, '\0');
  if (!recv_exact(fd, header.data(), header.size())) return std::nullopt;
  const std::uint32_t n = read_frame_length(header);
  std::string body(n, '\0');
  if (n > 0 && !recv_exact(fd, body.data(), n)) throw Error(Errc::TruncatedFrame, "peer closed mid-frame");
  return decode_body(body);
}

int connect_to(const Address& address, Duration timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(address.port);
  if (int rc = ::getaddrinfo(address.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::ConnectionError, "resolve " + address.to_string() + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);

  const int fd = ::socket(res->ai_family, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw Error(Errc::ConnectionError, errno_text("socket"));

  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  if (rc < 0 && errno == EINPROGRESS) {
    pollfd pfd{fd, POLLOUT, 0};
    const int ms = std::max(1, static_cast<int>(timeout.count() * 1000.0));
    rc = ::poll(&pfd, 1, ms);
    if (rc == 0) {
      ::close(fd);
      throw Error(Errc::ConnectionError, "connect to " + address.to_string() + " timed out");
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      ::close(fd);
      throw Error(Errc::ConnectionError, "connect to " + address.to_string() + ": " + std::strerror(err));
    }
  } else if (rc < 0) {
    const std::string why = errno_text("connect");
    ::close(fd);
    throw Error(Errc::ConnectionError, address.to_string() + ": " + why);
  }
  ::fcntl(fd, F_SETFL, flags);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

Payload error_payload(Errc code, const std::string& message) {
  return {{"code", std::string(to_string(code))}, {"message", message}};
}

}  // namespace

Address Address::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw Error(Errc::InvalidArgument, "address '" + std::string(text) + "' is not host:port");
  }
  Address out;
  out.host = std::string(text.substr(0, colon));
  if (out.host.empty()) out.host = "127.0.0.1";
  const std::string port(text.substr(colon + 1));
  try {
    const unsigned long p = std::stoul(port);
    if (p > 65535) throw std::out_of_range("port");
    out.port = static_cast<std::uint16_t>(p);
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "bad port in '" + std::string(text) + "'");
  }
  return out;
}

std::string Address::to_string() const { return host + ":" + std::to_string(port); }

// ---------------------------------------------------------------------------
// Client

RpcClient::RpcClient(const Address& address, Duration connect_timeout)
    : address_(address), fd_(connect_to(address, connect_timeout)) {
  reader_ = std::thread([this] { read_loop(); });
}

RpcClient::~RpcClient() { close(); }

void RpcClient::close() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  if (reader_.joinable()) reader_.join();
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  fail_all(Errc::ConnectionError, "connection closed");
}

void RpcClient::fail_all(Errc code, const std::string& why) {
  std::lock_guard lock(pending_mutex_);
  broken_ = true;
  for (auto& [id, promise] : pending_) {
    promise.set_exception(std::make_exception_ptr(Error(code, why)));
  }
  pending_.clear();
}

void RpcClient::read_loop() {
  try {
    while (true) {
      std::optional<Message> msg = read_message(fd_);
      if (!msg) {
        fail_all(Errc::ConnectionError, "peer closed the connection");
        return;
      }
      std::promise<Payload> promise;
      {
        std::lock_guard lock(pending_mutex_);
        auto it = pending_.find(msg->id);
        if (it == pending_.end()) continue;  // caller gave up on it
        promise = std::move(it->second);
        pending_.erase(it);
      }
      if (msg->kind == MessageKind::Response) {
        promise.set_value(std::move(msg->payload));
      } else if (msg->kind == MessageKind::Error) {
        Errc code = Errc::RemoteError;
        std::string text;
        if (auto c = msg->payload.find("code"); c != msg->payload.end()) {
          if (auto* s = std::get_if<std::string>(&c->second)) code = errc_from_string(*s);
        }
        if (auto m = msg->payload.find("message"); m != msg->payload.end()) {
          if (auto* s = std::get_if<std::string>(&m->second)) text = *s;
        }
        promise.set_exception(std::make_exception_ptr(RemoteError(code, text)));
      } else {
        promise.set_exception(std::make_exception_ptr(Error(Errc::MalformedBody, "request received by client")));
      }
    }
  } catch (const Error& e) {
    // No resynchronization: the stream is abandoned after any framing error.
    ::shutdown(fd_, SHUT_RDWR);
    fail_all(e.code() == Errc::ConnectionError ? Errc::ConnectionError : e.code(), e.detail());
  }
}

RpcClient::Pending RpcClient::send(const std::string& service, const Payload& payload) {
  Message msg{0, MessageKind::Request, service, payload};
  Pending out;
  {
    std::lock_guard lock(pending_mutex_);
    if (broken_) throw Error(Errc::ConnectionError, "connection to " + address_.to_string() + " is closed");
    msg.id = next_id_++;
    out.id = msg.id;
    out.result = pending_[msg.id].get_future();
  }
  const std::string frame = encode_frame(msg);
  try {
    std::lock_guard lock(write_mutex_);
    send_all(fd_, frame);
  } catch (const Error& e) {
    ::shutdown(fd_, SHUT_RDWR);
    fail_all(Errc::ConnectionError, e.detail());
  }
  return out;
}

Payload RpcClient::wait(Pending& pending, Duration deadline) {
  if (pending.result.wait_for(deadline) != std::future_status::ready) {
    std::size_t dropped = 0;
    {
      std::lock_guard lock(pending_mutex_);
      dropped = pending_.erase(pending.id);
    }
    // Not in the map any more means the reader already owns the promise.
    if (dropped) throw Error(Errc::DeadlineExceeded, "no reply within " + std::to_string(deadline.count()) + " s");
  }
  return pending.result.get();
}

Payload RpcClient::call(const std::string& service, const Payload& payload, Duration deadline) {
  Pending p = send(service, payload);
  return wait(p, deadline);
}

Payload call(const Address& address, const std::string& service, const Payload& payload, Duration deadline) {
  RpcClient client(address, deadline);
  return client.call(service, payload, deadline);
}

// ---------------------------------------------------------------------------
// Server

struct RpcServer::Connection {
  int fd = -1;
  std::mutex write_mutex;
  std::thread reader;
  std::atomic<bool> done{false};
  std::mutex inflight_mutex;
  std::condition_variable inflight_cv;
  int inflight = 0;

  void wait_idle() {
    std::unique_lock lock(inflight_mutex);
    inflight_cv.wait(lock, [this] { return inflight == 0; });
  }
};

RpcServer::~RpcServer() { stop(); }

void RpcServer::add_service(const std::string& name, Handler handler) { services_[name] = std::move(handler); }

void RpcServer::start(std::uint16_t port, const std::string& host) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw Error(Errc::ConnectionError, errno_text("socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(Errc::InvalidArgument, "bad listen host '" + host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listen_fd_, 64) < 0) {
    const std::string why = errno_text("bind");
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(Errc::ConnectionError, why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  stopping_ = false;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void RpcServer::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::vector<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(conn_mutex_);
    conns.swap(connections_);
  }
  for (auto& c : conns) ::shutdown(c->fd, SHUT_RDWR);
  for (auto& c : conns) {
    if (c->reader.joinable()) c->reader.join();
    c->wait_idle();
    ::close(c->fd);
  }
}

void RpcServer::accept_loop() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 50);
    if (rc <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    std::lock_guard lock(conn_mutex_);
    // Reap connections whose peer went away.
    std::erase_if(connections_, [](const std::shared_ptr<Connection>& c) {
      if (!c->done) return false;
      c->reader.join();
      c->wait_idle();
      ::close(c->fd);
      return true;
    });
    conn->reader = std::thread([this, conn] { serve(conn); });
    connections_.push_back(conn);
  }
}

void RpcServer::serve(const std::shared_ptr<Connection>& conn) {
  try {
    while (!stopping_) {
      std::optional<Message> request = read_message(conn->fd);
      if (!request) break;
      if (request->kind != MessageKind::Request) break;
      {
        std::lock_guard lock(conn->inflight_mutex);
        ++conn->inflight;
      }
      // Each request runs on its own thread so a blocking service (send_action)
      // does not hold up replies to later requests on the same connection.
      std::thread([this, conn, req = std::move(*request)] {
        const Message reply = dispatch(req);
        std::string frame;
        try {
          frame = encode_frame(reply);
        } catch (const Error& e) {
          frame = encode_frame({req.id, MessageKind::Error, req.service, error_payload(e.code(), e.detail())});
        }
        try {
          std::lock_guard lock(conn->write_mutex);
          send_all(conn->fd, frame);
        } catch (const Error&) {
          ::shutdown(conn->fd, SHUT_RDWR);
        }
        std::lock_guard lock(conn->inflight_mutex);
        --conn->inflight;
        conn->inflight_cv.notify_all();
      }).detach();
    }
  } catch (const Error&) {
    // Malformed or truncated input: drop the connection.
  }
  ::shutdown(conn->fd, SHUT_RDWR);
  conn->done = true;
}

Message RpcServer::dispatch(const Message& request) const {
  Message reply{request.id, MessageKind::Response, request.service, {}};
  auto it = services_.find(request.service);
  if (it == services_.end()) {
    reply.kind = MessageKind::Error;
    reply.payload = error_payload(Errc::UnknownService, "no service '" + request.service + "'");
    return reply;
  }
  try {
    reply.payload = it->second(request.payload);
  } catch (const RemoteError& e) {
    reply.kind = MessageKind::Error;
    reply.payload = error_payload(e.remote_code(), e.remote_detail());
  } catch (const Error& e) {
    reply.kind = MessageKind::Error;
    reply.payload = error_payload(e.code(), e.detail());
  } catch (const std::exception& e) {
    reply.kind = MessageKind::Error;
    reply.payload = error_payload(Errc::Internal, e.what());
  }
  return reply;
}

}  // namespace gymlink
