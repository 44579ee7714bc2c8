#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "fogline/comm.hpp"
#include "fogline/framework.hpp"

namespace fogline::framework {

/// Real-socket transport: every component gets a loopback TCP listener and
/// a worker thread draining a serial inbox. Frames follow the envelope wire
/// format. The component-facing contract matches the simulated transport;
/// only timings differ.
class SocketRuntime {
 public:
  SocketRuntime();
  ~SocketRuntime();

  SocketRuntime(const SocketRuntime&) = delete;
  SocketRuntime& operator=(const SocketRuntime&) = delete;

  /// Binds on 127.0.0.1 (port 0 picks an ephemeral one) and starts the
  /// component's listener and worker threads. Returns the bound address.
  Address attach(comm::Component* component, uint16_t port = 0);

  void shutdown();

  double now_ms() const;

  /// Blocking request through a bound UserClient; wall-clock response time.
  SubmitOutcome submit(UserClient& user, const std::string& app_tag, nlohmann::json input,
                       double deadline_ms = 10000.0);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fogline::framework
