#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fogline/net.hpp"

namespace fogline::overlay {

enum class Layer { Edge, Cloud };
enum class Role { Server, Agent, Unassigned };

const char* layer_name(Layer l);
const char* role_name(Role r);
Layer parse_layer(const std::string& text);

/// One physical or virtual machine of the computing environment.
/// Cloud nodes may carry a public address; edge nodes never do.
struct NodeRecord {
  std::string tag;   // single-letter label
  std::string name;
  Layer layer = Layer::Edge;
  int cpu_cores = 1;
  int mem_mb = 1;
  std::optional<Ipv4> public_ip;
  Ipv4 vpn_ip;          // 0.0.0.0 means "assign for me"
  bool vpn_ip_set = false;
  Role role = Role::Unassigned;
};

struct PeerSpec {
  NodeRecord node;
  std::string private_key;
  std::string public_key;
  int listen_port = 0;
  std::vector<Cidr> allowed_cidrs;  // always contains node.vpn_ip/32
};

/// Full P2P mesh: every peer knows every other peer.
struct MeshPlan {
  Cidr subnet;
  std::vector<PeerSpec> peers;  // sorted by tag
  int keepalive_s = 25;

  const PeerSpec* find_peer(const std::string& tag) const;
};

enum class Remedy { None, ReplaceCni, ExtendAllowedIps };
enum class ConflictKind { None, Unroutable, SubnetOverlap };

const char* remedy_name(Remedy r);

/// Outcome of checking a cluster pod range against the mesh. `remedies`
/// is ranked best-first; `remedy()` is the top proposal.
struct ConflictReport {
  ConflictKind kind = ConflictKind::None;
  Cidr conflicting_cidr;
  std::vector<Ipv4> unroutable_examples;  // at most 3
  std::vector<Remedy> remedies;

  Remedy remedy() const { return remedies.empty() ? Remedy::None : remedies.front(); }
  std::string describe() const;
};

struct RouteDecision {
  bool deliverable = false;
  std::string peer_tag;  // set when deliverable
};

inline constexpr int kDefaultBasePort = 4999;
inline constexpr int kDefaultKeepaliveS = 25;

/// Builds the full-mesh plan over `nodes`. Unset vpn_ips are assigned
/// sequentially from `subnet`; one keypair is generated per peer.
/// Pass `seed` for reproducible key material.
MeshPlan plan_mesh(const std::vector<NodeRecord>& nodes, const Cidr& subnet,
                   int base_port = kDefaultBasePort,
                   std::optional<uint64_t> seed = std::nullopt);

/// Renders the INI-style config for one peer: an [Interface] section and
/// one [Peer] section per other member of the mesh.
std::string render_peer_config(const MeshPlan& plan, const std::string& peer_tag);

/// View of a parsed peer config, structured exactly as rendered.
struct ParsedPeerConfig {
  std::string private_key;
  Ipv4 address;
  int address_prefix_len = 32;
  int listen_port = 0;
  struct PeerSection {
    std::string public_key;
    std::vector<Cidr> allowed_ips;
    std::optional<Address> endpoint;
    int persistent_keepalive = 0;
  };
  std::vector<PeerSection> peers;
};

ParsedPeerConfig parse_peer_config(const std::string& text);

/// Re-renders a parsed config; render -> parse -> render is a fixpoint.
std::string render_parsed_config(const ParsedPeerConfig& config);

ConflictReport detect_cidr_conflict(const MeshPlan& plan, const Cidr& cluster_cidr);

/// Extends every peer's allowed range with `cluster_cidr` so pod traffic
/// survives the VPN. Idempotent; rejects ranges overlapping the mesh subnet.
MeshPlan reconcile_allowed_ips(const MeshPlan& plan, const Cidr& cluster_cidr);

/// Relocates the pod network into the mesh subnet's reserved upper half and
/// teaches every peer to route it. Returned pod CIDR replaces the cluster's.
struct CniReplacement {
  MeshPlan plan;
  Cidr pod_cidr;
};
CniReplacement apply_replace_cni(const MeshPlan& plan);

RouteDecision route(const MeshPlan& plan, const std::string& src_tag, Ipv4 dst_ip);

/// The five-node demo environment: three cloud instances, two edge VMs.
std::vector<NodeRecord> default_inventory();

std::vector<NodeRecord> parse_inventory_json(const std::string& text);
std::string inventory_to_json(const std::vector<NodeRecord>& nodes);

std::string mesh_plan_to_json(const MeshPlan& plan);
MeshPlan mesh_plan_from_json(const std::string& text);

}  // namespace fogline::overlay
