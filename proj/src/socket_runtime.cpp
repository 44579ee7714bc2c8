#include "fogline/socket_runtime.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "fogline/error.hpp"

namespace fogline::framework {

namespace {

bool read_exact(int fd, uint8_t* buf, size_t len) {
  size_t done = 0;
  while (done < len) {
    ssize_t got = ::recv(fd, buf + done, len - done, 0);
    if (got <= 0) return false;
    done += static_cast<size_t>(got);
  }
  return true;
}

bool write_all(int fd, const uint8_t* buf, size_t len) {
  size_t done = 0;
  while (done < len) {
    ssize_t sent = ::send(fd, buf + done, len - done, MSG_NOSIGNAL);
    if (sent <= 0) return false;
    done += static_cast<size_t>(sent);
  }
  return true;
}

int connect_to(const Address& addr) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(addr.port);
  sa.sin_addr.s_addr = htonl(addr.ip.bits());
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    ::close(fd);
    return -1;
  }
  return fd;
}

bool send_frame(const Address& addr, const comm::Envelope& env) {
  int fd = connect_to(addr);
  if (fd < 0) return false;
  auto frame = comm::encode_frame(env);
  const bool ok = write_all(fd, frame.data(), frame.size());
  ::close(fd);
  return ok;
}

}  // namespace

struct SocketRuntime::Impl {
  struct Host {
    comm::Component* component = nullptr;
    Address addr;
    int listen_fd = -1;
    std::thread listener;
    std::thread worker;
    std::mutex inbox_mutex;
    std::condition_variable inbox_cv;
    std::deque<comm::Envelope> inbox;
    std::mutex handler_mutex;  // serializes on_message with result polling
  };

  std::chrono::steady_clock::time_point epoch = std::chrono::steady_clock::now();
  std::atomic<bool> stopping{false};
  std::atomic<uint64_t> cid_counter{0};
  std::vector<std::unique_ptr<Host>> hosts;
  std::mutex conn_threads_mutex;
  std::vector<std::thread> conn_threads;

  double now_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch)
        .count();
  }

  void read_connection(Host* host, int fd) {
    while (!stopping) {
      uint8_t header[4];
      if (!read_exact(fd, header, 4)) break;
      const uint32_t n = (static_cast<uint32_t>(header[0]) << 24) |
                         (static_cast<uint32_t>(header[1]) << 16) |
                         (static_cast<uint32_t>(header[2]) << 8) | static_cast<uint32_t>(header[3]);
      if (n > 16 * 1024 * 1024) break;
      std::vector<uint8_t> frame(4 + n);
      std::memcpy(frame.data(), header, 4);
      if (!read_exact(fd, frame.data() + 4, n)) break;
      comm::Envelope env;
      try {
        env = comm::decode_frame(frame.data(), frame.size());
      } catch (const Error&) {
        break;
      }
      {
        std::lock_guard<std::mutex> lock(host->inbox_mutex);
        host->inbox.push_back(std::move(env));
      }
      host->inbox_cv.notify_one();
    }
    ::close(fd);
  }

  void listen_loop(Host* host) {
    while (!stopping) {
      int conn = ::accept(host->listen_fd, nullptr, nullptr);
      if (conn < 0) break;
      std::lock_guard<std::mutex> lock(conn_threads_mutex);
      conn_threads.emplace_back([this, host, conn]() { read_connection(host, conn); });
    }
  }

  struct SocketContext final : comm::Context {
    Impl* impl;
    comm::Component* self;

    double now_ms() override { return impl->now_ms(); }
    void busy_for(double ms) override {
      if (ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
    }
    comm::DeliveryResult send(comm::Envelope env) override {
      env.src = self->bound_address();
      env.reply_to = self->bound_address();
      if (env.correlation_id.empty()) env.correlation_id = new_correlation_id();
      return forward(std::move(env));
    }
    comm::DeliveryResult forward(comm::Envelope env) override {
      const Address dst = env.dst;
      if (!send_frame(dst, env)) return {comm::Delivery::RoutingError, 0.0};
      return {comm::Delivery::Delivered, 0.0};
    }
    std::string new_correlation_id() override {
      return "s" + std::to_string(++impl->cid_counter);
    }
  };

  void worker_loop(Host* host) {
    while (true) {
      comm::Envelope env;
      {
        std::unique_lock<std::mutex> lock(host->inbox_mutex);
        host->inbox_cv.wait(lock, [&] { return stopping || !host->inbox.empty(); });
        if (stopping && host->inbox.empty()) return;
        env = std::move(host->inbox.front());
        host->inbox.pop_front();
      }
      SocketContext ctx;
      ctx.impl = this;
      ctx.self = host->component;
      std::lock_guard<std::mutex> lock(host->handler_mutex);
      host->component->on_message(ctx, env);
    }
  }

  Host* host_of(const comm::Component* component) {
    for (auto& host : hosts)
      if (host->component == component) return host.get();
    return nullptr;
  }
};

SocketRuntime::SocketRuntime() : impl_(std::make_unique<Impl>()) {}

SocketRuntime::~SocketRuntime() { shutdown(); }

double SocketRuntime::now_ms() const { return impl_->now_ms(); }

Address SocketRuntime::attach(comm::Component* component, uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) raise(Errc::BootFailure, "socket() failed");
  int reuse = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &reuse, sizeof(reuse));
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    ::close(fd);
    raise(Errc::BootFailure, "bind() failed");
  }
  if (::listen(fd, 64) != 0) {
    ::close(fd);
    raise(Errc::BootFailure, "listen() failed");
  }
  socklen_t len = sizeof(sa);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);

  auto host = std::make_unique<Impl::Host>();
  host->component = component;
  host->addr = Address{Ipv4(ntohl(sa.sin_addr.s_addr)), ntohs(sa.sin_port)};
  host->listen_fd = fd;
  component->set_identity(component->component_id().empty() ? host->addr.str()
                                                            : component->component_id(),
                          host->addr);
  Impl::Host* raw = host.get();
  host->listener = std::thread([impl = impl_.get(), raw]() { impl->listen_loop(raw); });
  host->worker = std::thread([impl = impl_.get(), raw]() { impl->worker_loop(raw); });
  impl_->hosts.push_back(std::move(host));
  return raw->addr;
}

void SocketRuntime::shutdown() {
  if (impl_->stopping.exchange(true)) return;
  for (auto& host : impl_->hosts) {
    if (host->listen_fd >= 0) {
      ::shutdown(host->listen_fd, SHUT_RDWR);
      ::close(host->listen_fd);
      host->listen_fd = -1;
    }
    host->inbox_cv.notify_all();
  }
  for (auto& host : impl_->hosts) {
    if (host->listener.joinable()) host->listener.join();
    if (host->worker.joinable()) host->worker.join();
  }
  std::vector<std::thread> conns;
  {
    std::lock_guard<std::mutex> lock(impl_->conn_threads_mutex);
    conns.swap(impl_->conn_threads);
  }
  for (auto& t : conns)
    if (t.joinable()) t.join();
}

SubmitOutcome SocketRuntime::submit(UserClient& user, const std::string& app_tag,
                                    nlohmann::json input, double deadline_ms) {
  Impl::Host* host = impl_->host_of(&user);
  if (!host) raise(Errc::InvalidArgument, "user client is not attached to the runtime");

  const double t0 = impl_->now_ms();
  const std::string request_id = "r-s" + std::to_string(++impl_->cid_counter);
  comm::Envelope env = user.make_request(app_tag, std::move(input), request_id);
  env.src = user.bound_address();
  env.reply_to = user.bound_address();
  env.correlation_id = request_id;
  if (!send_frame(env.dst, env))
    raise(Errc::MasterUnreachable, "cannot connect to master at " + env.dst.str());

  while (impl_->now_ms() - t0 < deadline_ms) {
    {
      std::lock_guard<std::mutex> lock(host->handler_mutex);
      if (auto result = user.take_result(request_id)) {
        if (!result->ok) raise(Errc::BadInput, result->error);
        return {std::move(result->output), impl_->now_ms() - t0};
      }
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  raise(Errc::Timeout, "no result within " + std::to_string(deadline_ms) + " ms");
}

}  // namespace fogline::framework
