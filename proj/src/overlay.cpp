#include "fogline/overlay.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fogline/error.hpp"

namespace fogline::overlay {

namespace {

std::string base64_encode(const unsigned char* data, size_t len) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (size_t i = 0; i < len; i += 3) {
    uint32_t chunk = static_cast<uint32_t>(data[i]) << 16;
    if (i + 1 < len) chunk |= static_cast<uint32_t>(data[i + 1]) << 8;
    if (i + 2 < len) chunk |= static_cast<uint32_t>(data[i + 2]);
    out.push_back(alphabet[(chunk >> 18) & 0x3f]);
    out.push_back(alphabet[(chunk >> 12) & 0x3f]);
    out.push_back(i + 1 < len ? alphabet[(chunk >> 6) & 0x3f] : '=');
    out.push_back(i + 2 < len ? alphabet[chunk & 0x3f] : '=');
  }
  return out;
}

// Opaque 32-byte key material; no real cryptography behind it.
std::string random_key(std::mt19937_64& rng) {
  unsigned char bytes[32];
  for (int i = 0; i < 32; i += 8) {
    uint64_t word = rng();
    for (int j = 0; j < 8; ++j) bytes[i + j] = static_cast<unsigned char>(word >> (8 * j));
  }
  return base64_encode(bytes, sizeof(bytes));
}

std::mt19937_64 make_rng(std::optional<uint64_t> seed) {
  if (seed) return std::mt19937_64(*seed);
  std::random_device rd;
  return std::mt19937_64((static_cast<uint64_t>(rd()) << 32) ^ rd());
}

// True when `range` is fully covered by the union of `covers`.
bool covered_by(const Cidr& range, const std::vector<Cidr>& covers) {
  for (const auto& c : covers)
    if (c.contains(range)) return true;
  bool any_overlap = false;
  for (const auto& c : covers)
    if (c.overlaps(range)) { any_overlap = true; break; }
  if (!any_overlap) return false;
  if (range.prefix_len() == 32) return false;  // overlap without containment is impossible at /32
  Cidr lower(range.network(), range.prefix_len() + 1);
  return covered_by(lower, covers) && covered_by(range.upper_half(), covers);
}

// Collects up to `limit` addresses of `range` not covered by `covers`,
// in ascending order.
void collect_uncovered(const Cidr& range, const std::vector<Cidr>& covers,
                       std::vector<Ipv4>& out, size_t limit) {
  if (out.size() >= limit) return;
  for (const auto& c : covers)
    if (c.contains(range)) return;
  bool any_overlap = false;
  for (const auto& c : covers)
    if (c.overlaps(range)) { any_overlap = true; break; }
  if (!any_overlap) {
    for (uint64_t i = 0; i < range.num_addresses() && out.size() < limit; ++i)
      out.push_back(Ipv4(range.network().bits() + static_cast<uint32_t>(i)));
    return;
  }
  Cidr lower(range.network(), range.prefix_len() + 1);
  collect_uncovered(lower, covers, out, limit);
  collect_uncovered(range.upper_half(), covers, out, limit);
}

std::vector<Cidr> union_allowed(const MeshPlan& plan) {
  std::vector<Cidr> all;
  for (const auto& peer : plan.peers)
    all.insert(all.end(), peer.allowed_cidrs.begin(), peer.allowed_cidrs.end());
  return all;
}

}  // namespace

const char* layer_name(Layer l) { return l == Layer::Edge ? "Edge" : "Cloud"; }

const char* role_name(Role r) {
  switch (r) {
    case Role::Server: return "Server";
    case Role::Agent: return "Agent";
    case Role::Unassigned: return "Unassigned";
  }
  return "?";
}

Layer parse_layer(const std::string& text) {
  if (text == "Edge" || text == "edge") return Layer::Edge;
  if (text == "Cloud" || text == "cloud") return Layer::Cloud;
  raise(Errc::InvalidArgument, "unknown computing layer: '" + text + "'");
}

const char* remedy_name(Remedy r) {
  switch (r) {
    case Remedy::None: return "None";
    case Remedy::ReplaceCni: return "ReplaceCni";
    case Remedy::ExtendAllowedIps: return "ExtendAllowedIps";
  }
  return "?";
}

const PeerSpec* MeshPlan::find_peer(const std::string& tag) const {
  for (const auto& peer : peers)
    if (peer.node.tag == tag) return &peer;
  return nullptr;
}

MeshPlan plan_mesh(const std::vector<NodeRecord>& nodes, const Cidr& subnet, int base_port,
                   std::optional<uint64_t> seed) {
  if (nodes.empty()) raise(Errc::InvalidArgument, "cannot plan a mesh over zero nodes");
  if (nodes.size() > subnet.usable_hosts())
    raise(Errc::SubnetExhausted, "subnet " + subnet.str() + " has " +
                                     std::to_string(subnet.usable_hosts()) + " usable hosts, need " +
                                     std::to_string(nodes.size()));

  std::set<uint32_t> taken;
  for (const auto& node : nodes) {
    if (!node.vpn_ip_set) continue;
    if (!subnet.contains(node.vpn_ip))
      raise(Errc::InvalidArgument,
            "vpn_ip " + node.vpn_ip.str() + " of node " + node.tag + " outside " + subnet.str());
    if (!taken.insert(node.vpn_ip.bits()).second)
      raise(Errc::DuplicateVpnIp, node.vpn_ip.str() + " assigned to more than one node");
  }

  auto rng = make_rng(seed);
  MeshPlan plan;
  plan.subnet = subnet;
  plan.keepalive_s = kDefaultKeepaliveS;

  std::vector<NodeRecord> ordered = nodes;
  std::sort(ordered.begin(), ordered.end(),
            [](const NodeRecord& a, const NodeRecord& b) { return a.tag < b.tag; });

  uint32_t cursor = subnet.first_host().bits();
  const uint32_t last = subnet.broadcast().bits();
  int port = base_port;
  for (auto& node : ordered) {
    if (!node.vpn_ip_set) {
      while (cursor < last && taken.count(cursor)) ++cursor;
      if (cursor >= last) raise(Errc::SubnetExhausted, "ran out of host addresses in " + subnet.str());
      node.vpn_ip = Ipv4(cursor);
      node.vpn_ip_set = true;
      taken.insert(cursor);
    }
    PeerSpec peer;
    peer.node = node;
    peer.private_key = random_key(rng);
    peer.public_key = random_key(rng);
    peer.listen_port = port++;
    peer.allowed_cidrs = {Cidr(node.vpn_ip, 32)};
    plan.peers.push_back(std::move(peer));
  }
  return plan;
}

std::string render_peer_config(const MeshPlan& plan, const std::string& peer_tag) {
  const PeerSpec* self = plan.find_peer(peer_tag);
  if (!self) raise(Errc::UnknownPeer, "no peer tagged '" + peer_tag + "' in plan");

  std::ostringstream out;
  out << "[Interface]\n";
  out << "PrivateKey = " << self->private_key << "\n";
  out << "Address = " << self->node.vpn_ip.str() << "/" << plan.subnet.prefix_len() << "\n";
  out << "ListenPort = " << self->listen_port << "\n";

  for (const auto& peer : plan.peers) {
    if (peer.node.tag == peer_tag) continue;
    out << "\n[Peer]\n";
    out << "PublicKey = " << peer.public_key << "\n";
    out << "AllowedIPs = ";
    for (size_t i = 0; i < peer.allowed_cidrs.size(); ++i) {
      if (i) out << ", ";
      out << peer.allowed_cidrs[i].str();
    }
    out << "\n";
    // Peers without a public address are reached over the keepalive-held
    // reverse path; they advertise no endpoint.
    if (peer.node.public_ip)
      out << "Endpoint = " << peer.node.public_ip->str() << ":" << peer.listen_port << "\n";
    out << "PersistentKeepalive = " << plan.keepalive_s << "\n";
  }
  return out.str();
}

ParsedPeerConfig parse_peer_config(const std::string& text) {
  ParsedPeerConfig config;
  std::istringstream in(text);
  std::string line;
  enum class Section { NoneYet, Interface, Peer } section = Section::NoneYet;

  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };

  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line == "[Interface]") {
      section = Section::Interface;
      continue;
    }
    if (line == "[Peer]") {
      section = Section::Peer;
      config.peers.emplace_back();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      raise(Errc::MalformedDocument, "config line without '=': '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (section == Section::Interface) {
      if (key == "PrivateKey") {
        config.private_key = value;
      } else if (key == "Address") {
        auto slash = value.find('/');
        if (slash == std::string::npos) {
          config.address = Ipv4::parse(value);
          config.address_prefix_len = 32;
        } else {
          config.address = Ipv4::parse(value.substr(0, slash));
          config.address_prefix_len = std::stoi(value.substr(slash + 1));
        }
      } else if (key == "ListenPort") {
        config.listen_port = std::stoi(value);
      }
    } else if (section == Section::Peer) {
      auto& peer = config.peers.back();
      if (key == "PublicKey") {
        peer.public_key = value;
      } else if (key == "AllowedIPs") {
        std::istringstream items(value);
        std::string item;
        while (std::getline(items, item, ',')) peer.allowed_ips.push_back(Cidr::parse(trim(item)));
      } else if (key == "Endpoint") {
        peer.endpoint = Address::parse(value);
      } else if (key == "PersistentKeepalive") {
        peer.persistent_keepalive = std::stoi(value);
      }
    } else {
      raise(Errc::MalformedDocument, "key outside any section: '" + line + "'");
    }
  }
  return config;
}

std::string render_parsed_config(const ParsedPeerConfig& config) {
  std::ostringstream out;
  out << "[Interface]\n";
  out << "PrivateKey = " << config.private_key << "\n";
  out << "Address = " << config.address.str() << "/" << config.address_prefix_len << "\n";
  out << "ListenPort = " << config.listen_port << "\n";
  for (const auto& peer : config.peers) {
    out << "\n[Peer]\n";
    out << "PublicKey = " << peer.public_key << "\n";
    out << "AllowedIPs = ";
    for (size_t i = 0; i < peer.allowed_ips.size(); ++i) {
      if (i) out << ", ";
      out << peer.allowed_ips[i].str();
    }
    out << "\n";
    if (peer.endpoint) out << "Endpoint = " << peer.endpoint->str() << "\n";
    out << "PersistentKeepalive = " << peer.persistent_keepalive << "\n";
  }
  return out.str();
}

ConflictReport detect_cidr_conflict(const MeshPlan& plan, const Cidr& cluster_cidr) {
  ConflictReport report;
  report.conflicting_cidr = cluster_cidr;

  if (cluster_cidr.overlaps(plan.subnet)) {
    // Pod range collides with the VPN's own host range; extending the
    // allowed list cannot help, the pod network has to move.
    report.kind = ConflictKind::SubnetOverlap;
    report.remedies = {Remedy::ReplaceCni};
    const Cidr& inner = plan.subnet.contains(cluster_cidr) ? cluster_cidr : plan.subnet;
    for (uint64_t i = 0; i < inner.num_addresses() && report.unroutable_examples.size() < 3; ++i) {
      Ipv4 addr(inner.network().bits() + static_cast<uint32_t>(i));
      if (addr == inner.network() || addr == inner.broadcast()) continue;
      if (cluster_cidr.contains(addr) && plan.subnet.contains(addr))
        report.unroutable_examples.push_back(addr);
    }
    return report;
  }

  const std::vector<Cidr> all_allowed = union_allowed(plan);
  if (covered_by(cluster_cidr, all_allowed)) {
    report.kind = ConflictKind::None;
    return report;
  }

  report.kind = ConflictKind::Unroutable;
  report.remedies = {Remedy::ExtendAllowedIps, Remedy::ReplaceCni};
  std::vector<Ipv4> samples;
  collect_uncovered(cluster_cidr, all_allowed, samples, 5);
  for (const auto& addr : samples) {
    if (report.unroutable_examples.size() >= 3) break;
    if (addr == cluster_cidr.network() || addr == cluster_cidr.broadcast()) continue;
    report.unroutable_examples.push_back(addr);
  }
  if (report.unroutable_examples.empty() && !samples.empty())
    report.unroutable_examples.push_back(samples.front());
  return report;
}

std::string ConflictReport::describe() const {
  std::ostringstream out;
  switch (kind) {
    case ConflictKind::None:
      out << "no conflict: " << conflicting_cidr.str() << " is routable from every peer";
      return out.str();
    case ConflictKind::SubnetOverlap:
      out << "conflict: " << conflicting_cidr.str() << " overlaps the VPN host range";
      break;
    case ConflictKind::Unroutable:
      out << "conflict: addresses in " << conflicting_cidr.str() << " are invisible to the VPN";
      break;
  }
  if (!unroutable_examples.empty()) {
    out << " (e.g.";
    for (const auto& a : unroutable_examples) out << " " << a.str();
    out << ")";
  }
  out << "; remedies:";
  for (const auto& r : remedies) out << " " << remedy_name(r);
  return out.str();
}

MeshPlan reconcile_allowed_ips(const MeshPlan& plan, const Cidr& cluster_cidr) {
  if (cluster_cidr.overlaps(plan.subnet))
    raise(Errc::OverlappingRanges,
          cluster_cidr.str() + " overlaps mesh subnet " + plan.subnet.str());
  MeshPlan result = plan;
  for (auto& peer : result.peers) {
    bool present = std::any_of(peer.allowed_cidrs.begin(), peer.allowed_cidrs.end(),
                               [&](const Cidr& c) { return c == cluster_cidr; });
    if (!present) peer.allowed_cidrs.push_back(cluster_cidr);
  }
  return result;
}

CniReplacement apply_replace_cni(const MeshPlan& plan) {
  CniReplacement result;
  result.pod_cidr = plan.subnet.upper_half();
  result.plan = plan;
  for (auto& peer : result.plan.peers) {
    bool present = std::any_of(peer.allowed_cidrs.begin(), peer.allowed_cidrs.end(),
                               [&](const Cidr& c) { return c == result.pod_cidr; });
    if (!present) peer.allowed_cidrs.push_back(result.pod_cidr);
  }
  return result;
}

RouteDecision route(const MeshPlan& plan, const std::string& src_tag, Ipv4 dst_ip) {
  if (!plan.find_peer(src_tag)) raise(Errc::UnknownPeer, "unknown source peer '" + src_tag + "'");

  int best_len = -1;
  const PeerSpec* best = nullptr;
  for (const auto& peer : plan.peers) {
    for (const auto& cidr : peer.allowed_cidrs) {
      if (!cidr.contains(dst_ip)) continue;
      // Longest prefix wins; equal lengths fall back to the lowest tag.
      if (cidr.prefix_len() > best_len ||
          (cidr.prefix_len() == best_len && best && peer.node.tag < best->node.tag)) {
        best_len = cidr.prefix_len();
        best = &peer;
      }
    }
  }
  if (!best) return RouteDecision{false, {}};
  return RouteDecision{true, best->node.tag};
}

std::vector<NodeRecord> default_inventory() {
  auto node = [](std::string tag, std::string name, Layer layer, int cores, int mem_mb,
                 std::optional<std::string> public_ip, std::string vpn_ip) {
    NodeRecord n;
    n.tag = std::move(tag);
    n.name = std::move(name);
    n.layer = layer;
    n.cpu_cores = cores;
    n.mem_mb = mem_mb;
    if (public_ip) n.public_ip = Ipv4::parse(*public_ip);
    n.vpn_ip = Ipv4::parse(vpn_ip);
    n.vpn_ip_set = true;
    return n;
  };
  return {
      node("A", "Nectar1", Layer::Cloud, 16, 64 * 1024, "45.113.235.156", "192.0.0.1"),
      node("B", "Nectar2", Layer::Cloud, 2, 9 * 1024, "45.113.232.199", "192.0.0.2"),
      node("C", "Nectar3", Layer::Cloud, 2, 9 * 1024, "45.113.232.232", "192.0.0.3"),
      node("D", "VM1", Layer::Edge, 1, 512, std::nullopt, "192.0.0.4"),
      node("E", "VM2", Layer::Edge, 1, 512, std::nullopt, "192.0.0.5"),
  };
}

std::vector<NodeRecord> parse_inventory_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedDocument, std::string("inventory is not valid JSON: ") + e.what());
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty())
    raise(Errc::MalformedDocument, "inventory needs a non-empty 'nodes' array");

  std::vector<NodeRecord> nodes;
  std::set<std::string> tags;
  for (const auto& item : doc["nodes"]) {
    NodeRecord n;
    try {
      n.tag = item.at("tag").get<std::string>();
      n.name = item.at("name").get<std::string>();
      n.layer = parse_layer(item.at("layer").get<std::string>());
      n.cpu_cores = item.at("cpu_cores").get<int>();
      n.mem_mb = item.at("mem_mb").get<int>();
      if (item.contains("public_ip") && !item["public_ip"].is_null()) {
        std::string ip = item["public_ip"].get<std::string>();
        if (!ip.empty() && ip != "-") n.public_ip = Ipv4::parse(ip);
      }
      if (item.contains("vpn_ip") && !item["vpn_ip"].is_null()) {
        std::string ip = item["vpn_ip"].get<std::string>();
        if (!ip.empty()) {
          n.vpn_ip = Ipv4::parse(ip);
          n.vpn_ip_set = true;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      raise(Errc::MalformedDocument, std::string("bad node record: ") + e.what());
    } catch (const Error&) {
      throw;
    }
    if (n.cpu_cores < 1 || n.mem_mb < 1)
      raise(Errc::MalformedDocument, "node " + n.tag + ": capacities must be >= 1");
    if (n.layer == Layer::Edge && n.public_ip)
      raise(Errc::MalformedDocument, "edge node " + n.tag + " must not carry a public_ip");
    if (!tags.insert(n.tag).second)
      raise(Errc::MalformedDocument, "duplicate node tag '" + n.tag + "'");
    nodes.push_back(std::move(n));
  }
  return nodes;
}

std::string inventory_to_json(const std::vector<NodeRecord>& nodes) {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes) {
    nlohmann::json item;
    item["tag"] = n.tag;
    item["name"] = n.name;
    item["layer"] = layer_name(n.layer);
    item["cpu_cores"] = n.cpu_cores;
    item["mem_mb"] = n.mem_mb;
    if (n.public_ip) item["public_ip"] = n.public_ip->str();
    if (n.vpn_ip_set) item["vpn_ip"] = n.vpn_ip.str();
    doc["nodes"].push_back(std::move(item));
  }
  return doc.dump(2);
}

std::string mesh_plan_to_json(const MeshPlan& plan) {
  nlohmann::json doc;
  doc["subnet"] = plan.subnet.str();
  doc["keepalive_s"] = plan.keepalive_s;
  doc["peers"] = nlohmann::json::array();
  for (const auto& peer : plan.peers) {
    nlohmann::json item;
    item["tag"] = peer.node.tag;
    item["name"] = peer.node.name;
    item["layer"] = layer_name(peer.node.layer);
    item["cpu_cores"] = peer.node.cpu_cores;
    item["mem_mb"] = peer.node.mem_mb;
    if (peer.node.public_ip) item["public_ip"] = peer.node.public_ip->str();
    item["vpn_ip"] = peer.node.vpn_ip.str();
    item["private_key"] = peer.private_key;
    item["public_key"] = peer.public_key;
    item["listen_port"] = peer.listen_port;
    item["allowed_cidrs"] = nlohmann::json::array();
    for (const auto& cidr : peer.allowed_cidrs) item["allowed_cidrs"].push_back(cidr.str());
    doc["peers"].push_back(std::move(item));
  }
  return doc.dump(2);
}

MeshPlan mesh_plan_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedDocument, std::string("mesh plan: ") + e.what());
  }
  MeshPlan plan;
  try {
    plan.subnet = Cidr::parse(doc.at("subnet").get<std::string>());
    plan.keepalive_s = doc.value("keepalive_s", kDefaultKeepaliveS);
    for (const auto& item : doc.at("peers")) {
      PeerSpec peer;
      peer.node.tag = item.at("tag").get<std::string>();
      peer.node.name = item.at("name").get<std::string>();
      peer.node.layer = parse_layer(item.at("layer").get<std::string>());
      peer.node.cpu_cores = item.value("cpu_cores", 1);
      peer.node.mem_mb = item.value("mem_mb", 1);
      if (item.contains("public_ip"))
        peer.node.public_ip = Ipv4::parse(item["public_ip"].get<std::string>());
      peer.node.vpn_ip = Ipv4::parse(item.at("vpn_ip").get<std::string>());
      peer.node.vpn_ip_set = true;
      peer.private_key = item.at("private_key").get<std::string>();
      peer.public_key = item.at("public_key").get<std::string>();
      peer.listen_port = item.at("listen_port").get<int>();
      for (const auto& cidr : item.at("allowed_cidrs"))
        peer.allowed_cidrs.push_back(Cidr::parse(cidr.get<std::string>()));
      plan.peers.push_back(std::move(peer));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedDocument, std::string("mesh plan: ") + e.what());
  }
  return plan;
}

}  // namespace fogline::overlay
