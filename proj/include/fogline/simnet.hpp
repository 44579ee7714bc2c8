#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "fogline/apps.hpp"
#include "fogline/comm.hpp"
#include "fogline/overlay.hpp"

namespace fogline::simnet {

struct LinkSpec {
  double rtt_ms = 0.0;
  double jitter_ms = 0.0;
  double loss_prob = 0.0;
};

/// Symmetric per-node-pair RTT/jitter/loss table. The diagonal is the
/// same-node short circuit.
class LatencyMatrix {
 public:
  void set_same_node_us(double us) { same_node_us_ = us; }
  double same_node_us() const { return same_node_us_; }
  double same_node_ms() const { return same_node_us_ / 1000.0; }

  void set_link(const std::string& a, const std::string& b, LinkSpec spec);
  const LinkSpec& link(const std::string& a, const std::string& b) const;
  bool has_link(const std::string& a, const std::string& b) const;

  /// Validation per the matrix contract: non-negative values, probabilities
  /// in [0,1]. Symmetry holds by construction (unordered pair keys).
  void validate() const;

  static LatencyMatrix from_json(const std::string& text);
  std::string to_json() const;

  /// Layer-derived defaults: edge-edge 2 ms, edge-cloud 50 ms,
  /// cloud-cloud 1 ms, no jitter, no loss.
  static LatencyMatrix defaults_for(const std::vector<overlay::NodeRecord>& nodes);

 private:
  double same_node_us_ = 50.0;
  std::map<std::pair<std::string, std::string>, LinkSpec> links_;
};

/// Virtual time plus a time-ordered event queue; ties fire in insertion
/// order. Time never moves backwards.
class SimClock {
 public:
  double now_ms() const { return now_ms_; }

  void schedule_at(double t_ms, std::function<void()> fn);
  void schedule_after(double delay_ms, std::function<void()> fn) {
    schedule_at(now_ms_ + delay_ms, std::move(fn));
  }

  /// Fires every event due at or before until_ms; returns how many fired.
  int advance(double until_ms);
  /// Fires the earliest pending event; false when idle.
  bool step();
  std::optional<double> next_event_time() const;
  size_t pending() const { return queue_.size(); }

 private:
  struct Event {
    double t;
    uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.t > b.t || (a.t == b.t && a.seq > b.seq);
    }
  };
  double now_ms_ = 0.0;
  uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

/// Draws one uniform double in [0, 1).
double uniform01(std::mt19937_64& rng);

struct DeliverOutcome {
  bool dropped = false;
  double latency_ms = 0.0;
};

/// Computes the seeded one-way latency (rtt/2 +- jitter) or a loss for the
/// node pair and, unless dropped, schedules `arrival` on the clock.
DeliverOutcome schedule_delivery(const LatencyMatrix& matrix, SimClock& clock,
                                 std::mt19937_64& rng, const std::string& src_node,
                                 const std::string& dst_node, std::function<void()> arrival);

/// Where every component of a deployment runs; actor order is the
/// scheduler's registration order.
struct DeploymentLayout {
  std::string master_node;
  std::string logger_node;
  std::string user_node;
  std::vector<std::string> actor_nodes;
};

/// Closed-form, jitter-free response time of one request: user->Master,
/// then per task Master->Actor, executor busy time, Actor->Master, and the
/// final Master->user hop. Averaged over the round-robin cursor positions
/// the request stream actually visits, so it equals the steady-state mean.
double expected_response_time(const LatencyMatrix& matrix, const DeploymentLayout& layout,
                              const apps::TaskGraph& app);

/// Single-owner simulated world: virtual clock, seeded latency draws, and
/// per-component serial inboxes. Components attach at addresses on nodes;
/// all policy checks of comm::send apply on every send.
class SimWorld : public comm::Transport {
 public:
  SimWorld(overlay::MeshPlan plan, LatencyMatrix matrix, comm::BindingStrategy strategy,
           uint64_t seed);

  SimClock& clock() { return clock_; }
  std::mt19937_64& rng() { return rng_; }
  const overlay::MeshPlan& plan() const { return plan_; }
  void set_plan(overlay::MeshPlan plan) { plan_ = std::move(plan); }
  const comm::BindingStrategy& default_strategy() const { return strategy_; }

  void attach(comm::Component* component, const std::string& node_tag, const Address& addr);
  void detach(const Address& addr);
  /// Per-component strategy override (the proxy itself runs host-network).
  void set_component_strategy(const std::string& component_id, comm::BindingStrategy strategy);

  std::optional<std::string> node_of(const Address& addr) const override;
  comm::DeliveryResult deliver(comm::Envelope env, const std::string& src_node) override;

  /// Sends on behalf of an attached component, stamping src/replyTo.
  comm::DeliveryResult send_from(comm::Component& sender, comm::Envelope env);
  /// Sends from a bare node (control-plane traffic without a component).
  comm::DeliveryResult send_from_node(const std::string& node_tag, comm::Envelope env);

  void run_until(double t_ms) { clock_.advance(t_ms); }
  /// Runs until the queue drains or the clock passes max_ms.
  void run_until_idle(double max_ms);

  std::string new_correlation_id();

  // observability for the protocol-equivalence checks
  uint64_t delivered_count() const { return delivered_count_; }
  uint64_t delivered_hops() const { return delivered_hops_; }
  uint64_t delivered_count_to(const std::string& component_id) const;
  void reset_counters();

  /// Invoked on every final delivery; test hooks assert per-message
  /// discipline here.
  std::function<void(const comm::Envelope&)> on_delivered;

 private:
  struct Binding {
    comm::Component* component;
    std::string node;
  };

  void dispatch(comm::Envelope env);

  overlay::MeshPlan plan_;
  LatencyMatrix matrix_;
  comm::BindingStrategy strategy_;
  SimClock clock_;
  std::mt19937_64 rng_;
  std::map<Address, Binding> bindings_;
  std::map<std::string, comm::BindingStrategy> strategy_overrides_;
  std::map<std::string, double> busy_until_;
  // busy time already spent by the handler currently dispatching; sends
  // made from inside it depart that much later
  double send_delay_ = 0.0;
  uint64_t cid_counter_ = 0;
  uint64_t delivered_count_ = 0;
  uint64_t delivered_hops_ = 0;
  std::map<std::string, uint64_t> delivered_per_component_;
};

}  // namespace fogline::simnet
