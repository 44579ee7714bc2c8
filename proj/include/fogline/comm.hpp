#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogline/net.hpp"
#include "fogline/overlay.hpp"

namespace fogline::comm {

/// The wire message. `reply_to` is always present once an envelope has
/// passed normalize_envelope; `hop_count` moves only when a forwarding
/// element (the proxy) touches the message.
struct Envelope {
  std::string msg_type;
  Address src;
  Address dst;
  Address reply_to;
  std::string correlation_id;
  nlohmann::json payload = nlohmann::json::object();
  int hop_count = 0;
};

enum class StrategyKind { HostNetwork, ProxyServer, EnvVariable };

/// Which address a component binds and how its traffic travels.
struct BindingStrategy {
  StrategyKind kind = StrategyKind::HostNetwork;
  Address proxy_addr;  // meaningful for ProxyServer only
  // Set on the proxy's own outbound legs: it forwards with the cluster
  // controller's network access and is exempt from the VPN visibility check.
  bool cluster_privileged = false;

  static BindingStrategy host_network() { return {StrategyKind::HostNetwork, {}, false}; }
  static BindingStrategy env_variable() { return {StrategyKind::EnvVariable, {}, false}; }
  static BindingStrategy proxy_server(Address proxy) {
    return {StrategyKind::ProxyServer, proxy, false};
  }
  static BindingStrategy proxy_upstream() { return {StrategyKind::HostNetwork, {}, true}; }
};

const char* strategy_name(StrategyKind k);

enum class Delivery { Delivered, RoutingError, Dropped };

struct DeliveryResult {
  Delivery status = Delivery::Delivered;
  double latency_ms = 0.0;

  bool delivered() const { return status == Delivery::Delivered; }
};

/// Routing policy of the proxy: component id -> concrete address.
struct ProxyRoutingTable {
  std::map<std::string, Address> entries;
  std::optional<Address> default_route;
};

// --- wire format -----------------------------------------------------------
// 4-byte big-endian length, then a UTF-8 JSON object with keys
// type, src, dst, replyTo, cid, hops, payload.

nlohmann::json envelope_to_json(const Envelope& env);
Envelope envelope_from_json(const nlohmann::json& doc);

std::vector<uint8_t> encode_frame(const Envelope& env);
/// Decodes one full frame; `data` must hold the length prefix and body.
Envelope decode_frame(const uint8_t* data, size_t len);

/// Unifies proprietary-style payloads (no reply field) and generic-style
/// payloads (reply carried in the message): the result always knows where
/// answers go, so no receiver needs per-method special cases.
Envelope normalize_envelope(const std::string& raw_json, const Address& sender_bound_addr);

/// Rewrites dst from the routing table entry for the component id carried
/// in payload["target"]; bumps hop_count, preserves src and correlation id.
Envelope proxy_forward(const ProxyRoutingTable& table, const Envelope& env);

/// The address a component binds under the given strategy.
Ipv4 bind_address(const BindingStrategy& strategy, const overlay::NodeRecord& node, Ipv4 pod_ip);

// --- transport contract ----------------------------------------------------

class Context;

/// A message-driven component: single-owner inbox, one message at a time.
class Component {
 public:
  virtual ~Component() = default;
  virtual void on_message(Context& ctx, const Envelope& env) = 0;

  const std::string& component_id() const { return id_; }
  const Address& bound_address() const { return addr_; }
  void set_identity(std::string id, Address addr) {
    id_ = std::move(id);
    addr_ = addr;
  }

 private:
  std::string id_;
  Address addr_;
};

/// Per-dispatch view a component gets while handling a message. Sends are
/// stamped with the component's bound address as both src and replyTo.
class Context {
 public:
  virtual ~Context() = default;
  virtual double now_ms() = 0;
  virtual DeliveryResult send(Envelope env) = 0;
  /// Passes an envelope on unchanged (src preserved); forwarding elements
  /// use this instead of send.
  virtual DeliveryResult forward(Envelope env) = 0;
  /// Consumes compute time on the current component's timeline.
  virtual void busy_for(double ms) = 0;
  virtual std::string new_correlation_id() = 0;
};

/// Transport seen by comm::send: able to place an envelope into the
/// recipient's inbox and to say on which node an address is bound.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual DeliveryResult deliver(Envelope env, const std::string& src_node) = 0;
  virtual std::optional<std::string> node_of(const Address& addr) const = 0;
};

/// Applies the binding strategy's routing policy, then hands the envelope
/// to the transport. `src_node` is where the sender runs.
DeliveryResult send(Transport& transport, const overlay::MeshPlan& plan,
                    const BindingStrategy& strategy, const std::string& src_node, Envelope env);

}  // namespace fogline::comm
