#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogline/apps.hpp"
#include "fogline/comm.hpp"
#include "fogline/component_kind.hpp"
#include "fogline/net.hpp"

namespace fogline::simnet {
class SimWorld;
}

namespace fogline::framework {

// compute consumed by answering one health probe
inline constexpr double kPingHandlingMs = 0.2;

struct RegistrationRecord {
  std::string component_id;
  ComponentKind kind = ComponentKind::Actor;
  Address address;
  std::string node;
  std::vector<std::string> capabilities;
  int64_t registered_tick = 0;
};

struct PlacementRequest {
  std::string request_id;
  std::string app_name;
  Address user_address;
  nlohmann::json input;
  int64_t submitted_tick = 0;
};

struct ProfileEvent {
  std::string source;
  enum class Kind { Periodic, EventDriven } kind = Kind::EventDriven;
  std::string metric_name;
  double value = 0.0;
  int64_t tick = 0;
};

enum class SchedulerPolicy { RoundRobin };

struct SchedulerState {
  SchedulerPolicy policy = SchedulerPolicy::RoundRobin;
  size_t cursor = 0;
  std::vector<std::string> actor_order;  // registration order
};

/// Cyclic draw: returns actor_order[cursor] and advances the cursor.
std::string roundrobin_next(SchedulerState& sched);

/// Round robin that skips actors failing `capable`; the draw is consumed
/// only by the successful pick.
std::string next_capable(SchedulerState& sched,
                         const std::function<bool(const std::string&)>& capable);

struct TaskAssignment {
  int task_index = 0;
  std::string task_kind;
  std::string actor_id;
};

struct PlacementPlan {
  std::string request_id;
  std::string app_name;
  std::vector<TaskAssignment> assignments;
};

/// Persistent log sink. Events append to one file, one line each, with
/// monotone sequence numbers that survive restarts.
class RemoteLogger : public comm::Component {
 public:
  explicit RemoteLogger(std::string path);

  uint64_t append(const ProfileEvent& event);
  uint64_t count() const { return seq_; }
  const std::string& path() const { return path_; }

  static std::vector<ProfileEvent> read_log(const std::string& path);

  void on_message(comm::Context& ctx, const comm::Envelope& env) override;

 private:
  std::string path_;
  uint64_t seq_ = 0;
};

/// Registry, scheduler and placement engine.
class Master : public comm::Component {
 public:
  Master(std::string id, std::string node, Address logger_addr, std::string logger_id);

  /// Deliverability check applied to registering addresses; defaults to
  /// accepting everything.
  void set_routable_predicate(std::function<bool(const Address&)> predicate);
  void register_app(apps::TaskGraph app);

  RegistrationRecord register_component(ComponentKind kind, const Address& address,
                                        const std::string& node,
                                        std::vector<std::string> capabilities,
                                        const std::string& component_id,
                                        comm::Context* ctx = nullptr);

  /// Maps every task of the app to a capable actor via round robin.
  PlacementPlan plan_placement(const std::string& request_id, const std::string& app_name);

  void on_message(comm::Context& ctx, const comm::Envelope& env) override;

  SchedulerState& scheduler() { return scheduler_; }
  const std::map<std::string, RegistrationRecord>& registry() const { return registry_; }
  const std::string& node() const { return node_; }

 private:
  struct PendingRequest {
    PlacementPlan plan;
    apps::TaskGraph app;
    nlohmann::json request_input;
    nlohmann::json prev_output;
    size_t next_assignment = 0;
    Address user_addr;
    std::string user_id;
    std::string user_cid;
  };

  void emit_profile(comm::Context& ctx, const std::string& source, ProfileEvent::Kind kind,
                    const std::string& metric, double value);
  void dispatch_next_task(comm::Context& ctx, PendingRequest& pending);
  void finish_with_error(comm::Context& ctx, PendingRequest& pending, const std::string& error);

  std::string node_;
  Address logger_addr_;
  std::string logger_id_;
  std::function<bool(const Address&)> routable_;
  std::map<std::string, RegistrationRecord> registry_;
  std::set<Address> bound_addresses_;
  SchedulerState scheduler_;
  std::map<std::string, apps::TaskGraph> app_registry_;
  std::map<std::string, PendingRequest> pending_;
};

/// Node agent: spawns and caches TaskExecutors, runs their task logic.
class Actor : public comm::Component {
 public:
  Actor(std::string id, std::string node, std::vector<std::string> capabilities,
        Address master_addr, std::string master_id, Address logger_addr, std::string logger_id);

  const std::vector<std::string>& capabilities() const { return capabilities_; }
  const std::string& node() const { return node_; }

  /// Returns the cached executor id for the kind, creating and registering
  /// it on first use.
  std::string spawn_executor(const std::string& task_kind, comm::Context* ctx = nullptr);

  /// Registration message announcing this actor to the master.
  comm::Envelope make_registration() const;

  /// Hook invoked on first spawn of each kind; returns the executor's bound
  /// address (e.g. after attaching a ping responder / pod).
  std::function<Address(const std::string& executor_id, const std::string& task_kind)> on_spawn;

  void on_message(comm::Context& ctx, const comm::Envelope& env) override;

  const std::map<std::string, std::string>& executor_cache() const { return executors_; }

 private:
  std::string node_;
  std::vector<std::string> capabilities_;
  Address master_addr_;
  std::string master_id_;
  Address logger_addr_;
  std::string logger_id_;
  std::map<std::string, std::string> executors_;  // task kind -> executor id
  std::map<std::string, Address> executor_addrs_;
};

/// Request origin; measures response time on its own clock.
class UserClient : public comm::Component {
 public:
  UserClient(std::string id, Address master_addr, std::string master_id);

  comm::Envelope make_request(const std::string& app_tag, nlohmann::json input,
                              const std::string& request_id);

  struct Result {
    nlohmann::json output;
    double arrival_ms = 0.0;
    bool ok = true;
    std::string error;
  };
  std::optional<Result> take_result(const std::string& request_id);

  void on_message(comm::Context& ctx, const comm::Envelope& env) override;

  const Address& master_addr() const { return master_addr_; }

 private:
  Address master_addr_;
  std::string master_id_;
  std::map<std::string, Result> results_;
};

/// Answers health probes on behalf of one hosted executor.
class PingResponder : public comm::Component {
 public:
  explicit PingResponder(std::string id) { set_identity(std::move(id), {}); }
  void on_message(comm::Context& ctx, const comm::Envelope& env) override;
};

/// Store-and-forward element implementing the proxy routing policy.
class ProxyComponent : public comm::Component {
 public:
  explicit ProxyComponent(std::string id, comm::ProxyRoutingTable table = {});

  void set_route(const std::string& component_id, const Address& addr);
  const comm::ProxyRoutingTable& table() const { return table_; }

  void on_message(comm::Context& ctx, const comm::Envelope& env) override;

 private:
  comm::ProxyRoutingTable table_;
};

/// Shared reply helper: answers a ping with a pong, consuming the probe
/// handling budget. Returns true when the envelope was a ping.
bool answer_ping(comm::Context& ctx, const comm::Envelope& env, const std::string& self_id);

comm::Envelope make_profile_envelope(const std::string& from_id, const Address& logger_addr,
                                     const std::string& logger_id, const ProfileEvent& event);

/// Sends `user`'s request through the world and runs the clock until the
/// result lands or `deadline_ms` of simulated time passes.
struct SubmitOutcome {
  nlohmann::json result;
  double response_ms = 0.0;
};
SubmitOutcome user_submit(simnet::SimWorld& world, UserClient& user, const std::string& app_tag,
                          nlohmann::json input, double deadline_ms = 60000.0);

}  // namespace fogline::framework
