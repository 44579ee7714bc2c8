#include "fogline/comm.hpp"

#include "fogline/error.hpp"

namespace fogline::comm {

const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::HostNetwork: return "HostNetwork";
    case StrategyKind::ProxyServer: return "ProxyServer";
    case StrategyKind::EnvVariable: return "EnvVariable";
  }
  return "?";
}

nlohmann::json envelope_to_json(const Envelope& env) {
  return nlohmann::json{
      {"type", env.msg_type}, {"src", env.src.str()},       {"dst", env.dst.str()},
      {"replyTo", env.reply_to.str()}, {"cid", env.correlation_id}, {"hops", env.hop_count},
      {"payload", env.payload},
  };
}

Envelope envelope_from_json(const nlohmann::json& doc) {
  Envelope env;
  try {
    env.msg_type = doc.at("type").get<std::string>();
    env.src = Address::parse(doc.at("src").get<std::string>());
    env.dst = Address::parse(doc.at("dst").get<std::string>());
    env.reply_to = Address::parse(doc.at("replyTo").get<std::string>());
    env.correlation_id = doc.at("cid").get<std::string>();
    env.hop_count = doc.at("hops").get<int>();
    env.payload = doc.at("payload");
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedPayload, std::string("bad envelope object: ") + e.what());
  }
  return env;
}

std::vector<uint8_t> encode_frame(const Envelope& env) {
  const std::string body = envelope_to_json(env).dump();
  std::vector<uint8_t> frame(4 + body.size());
  const uint32_t n = static_cast<uint32_t>(body.size());
  frame[0] = static_cast<uint8_t>(n >> 24);
  frame[1] = static_cast<uint8_t>(n >> 16);
  frame[2] = static_cast<uint8_t>(n >> 8);
  frame[3] = static_cast<uint8_t>(n);
  std::copy(body.begin(), body.end(), frame.begin() + 4);
  return frame;
}

Envelope decode_frame(const uint8_t* data, size_t len) {
  if (len < 4) raise(Errc::MalformedPayload, "frame shorter than its length prefix");
  const uint32_t n = (static_cast<uint32_t>(data[0]) << 24) | (static_cast<uint32_t>(data[1]) << 16) |
                     (static_cast<uint32_t>(data[2]) << 8) | static_cast<uint32_t>(data[3]);
  if (len < 4 + static_cast<size_t>(n)) raise(Errc::MalformedPayload, "truncated frame body");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(data + 4, data + 4 + n);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedPayload, std::string("frame body is not JSON: ") + e.what());
  }
  return envelope_from_json(doc);
}

Envelope normalize_envelope(const std::string& raw_json, const Address& sender_bound_addr) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw_json);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedPayload, std::string("unparseable message: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("type") || !doc.contains("dst"))
    raise(Errc::MalformedPayload, "message needs at least 'type' and 'dst'");

  Envelope env;
  env.msg_type = doc["type"].get<std::string>();
  env.dst = Address::parse(doc["dst"].get<std::string>());
  env.src = doc.contains("src") ? Address::parse(doc["src"].get<std::string>()) : sender_bound_addr;
  // Proprietary-style senders omit the reply field; fill it with the
  // sender's bound address so every receiver can answer uniformly.
  env.reply_to = doc.contains("replyTo") ? Address::parse(doc["replyTo"].get<std::string>())
                                         : sender_bound_addr;
  env.correlation_id = doc.value("cid", "");
  env.hop_count = doc.value("hops", 0);
  env.payload = doc.contains("payload") ? doc["payload"] : nlohmann::json::object();
  return env;
}

Envelope proxy_forward(const ProxyRoutingTable& table, const Envelope& env) {
  if (!env.payload.is_object() || !env.payload.contains("target"))
    raise(Errc::MalformedPayload, "proxied envelope lacks a target component id");
  const std::string target = env.payload["target"].get<std::string>();

  Envelope out = env;
  auto it = table.entries.find(target);
  if (it != table.entries.end()) {
    out.dst = it->second;
  } else if (table.default_route) {
    out.dst = *table.default_route;
  } else {
    raise(Errc::NoRoute, "no routing entry for component '" + target + "'");
  }
  out.hop_count = env.hop_count + 1;
  return out;
}

Ipv4 bind_address(const BindingStrategy& strategy, const overlay::NodeRecord& node, Ipv4 pod_ip) {
  switch (strategy.kind) {
    case StrategyKind::HostNetwork:
      return node.vpn_ip;
    case StrategyKind::EnvVariable:
    case StrategyKind::ProxyServer:
      return pod_ip;
  }
  return pod_ip;
}

DeliveryResult send(Transport& transport, const overlay::MeshPlan& plan,
                    const BindingStrategy& strategy, const std::string& src_node, Envelope env) {
  if (strategy.kind == StrategyKind::ProxyServer && env.dst != strategy.proxy_addr) {
    // All traffic funnels through the proxy; the real recipient travels
    // in payload["target"].
    env.dst = strategy.proxy_addr;
  }

  const auto dst_node = transport.node_of(env.dst);
  if (!dst_node) return {Delivery::RoutingError, 0.0};

  if (strategy.cluster_privileged) return transport.deliver(std::move(env), src_node);

  switch (strategy.kind) {
    case StrategyKind::HostNetwork:
    case StrategyKind::ProxyServer: {
      auto decision = overlay::route(plan, src_node, env.dst.ip);
      if (!decision.deliverable) return {Delivery::RoutingError, 0.0};
      break;
    }
    case StrategyKind::EnvVariable: {
      // Pods on the same node talk over the local bridge; cross-node pod
      // addresses must be visible to the VPN or the hosts refuse them.
      if (*dst_node != src_node) {
        auto decision = overlay::route(plan, src_node, env.dst.ip);
        if (!decision.deliverable) return {Delivery::RoutingError, 0.0};
      }
      break;
    }
  }
  return transport.deliver(std::move(env), src_node);
}

}  // namespace fogline::comm
