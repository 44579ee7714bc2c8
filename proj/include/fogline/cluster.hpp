#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fogline/component_kind.hpp"
#include "fogline/net.hpp"
#include "fogline/overlay.hpp"

namespace fogline::cluster {

struct ResourceLimits {
  int cpu_millicores = 0;  // 0 means unlimited
  int mem_mb = 0;          // 0 means unlimited
};

enum class RestartPolicy { Always, Never };
enum class PodPhase { Pending, Starting, Ready, Failed, Terminated };

const char* phase_name(PodPhase p);

/// Desired state of one component deployment, as declared by its document.
struct DeploymentSpec {
  std::string name;
  int replicas = 0;
  std::optional<ComponentKind> component;
  std::vector<std::string> args;
  std::map<std::string, std::string> env;
  std::optional<std::string> node_name;
  bool host_network = false;
  RestartPolicy restart_policy = RestartPolicy::Always;
  ResourceLimits resource_limits;
  // unrecognized document keys, preserved verbatim
  std::map<std::string, std::string> annotations;
};

struct PodRecord {
  std::string uid;
  std::string deployment;
  std::string node;
  PodPhase phase = PodPhase::Pending;
  Ipv4 pod_ip;
  bool host_network = false;
  ResourceLimits limits;
  int restarts = 0;
  int64_t last_probe_tick = -1;
  int consecutive_probe_failures = 0;
  uint64_t created_seq = 0;

  bool live() const {
    return phase == PodPhase::Pending || phase == PodPhase::Starting || phase == PodPhase::Ready;
  }
};

struct ClusterState {
  overlay::NodeRecord server;
  std::vector<overlay::NodeRecord> agents;
  std::map<std::string, DeploymentSpec> deployments;
  std::vector<PodRecord> pods;
  Cidr pod_cidr;
  Ipv4 next_pod_ip;
  std::string join_token;
  int64_t clock_tick = 0;
  uint64_t uid_counter = 0;
  uint64_t creation_counter = 0;

  std::vector<const overlay::NodeRecord*> nodes() const;
  const overlay::NodeRecord* find_node(const std::string& name) const;
  PodRecord* find_pod(const std::string& uid);
  const PodRecord* find_pod(const std::string& uid) const;
};

// probe policy: a pod is failed after this many consecutive missed probes
inline constexpr int kProbeFailureThreshold = 3;
inline constexpr double kProbeTimeoutMs = 500.0;

/// Brings a fresh single-server cluster up on `node` and mints its join
/// token. Returns the state and the token.
std::pair<ClusterState, std::string> start_server(const overlay::NodeRecord& node,
                                                  const Cidr& pod_cidr,
                                                  std::optional<uint64_t> seed = std::nullopt);

/// Adds an agent. Validates the token, rejects re-joins, and, when a mesh
/// plan is supplied, refuses nodes that cannot reach the server address.
void join_agent(ClusterState& state, overlay::NodeRecord node, Ipv4 server_addr,
                const std::string& token, const overlay::MeshPlan* plan = nullptr);

/// Parses the structured subset of a deployment document. Unknown keys are
/// kept as annotations, never rejected.
DeploymentSpec parse_deployment(const std::string& yaml_text);

/// Upserts the spec under its name; pods appear only at the next reconcile.
void apply_deployment(ClusterState& state, DeploymentSpec spec);

void delete_deployment(ClusterState& state, const std::string& name);

/// Picks the node for one pod of `spec`: the pinned node when set, else the
/// node with the lowest committed-utilization ratio (max of cpu and mem),
/// ties broken by tag order.
std::string schedule_pod(const ClusterState& state, const DeploymentSpec& spec);

struct Action {
  enum class Kind { CreatePod, TerminatePod, ScheduleFailed } kind;
  std::string pod_uid;
  std::string deployment;
  std::string node;
  std::string detail;
};

/// One reconciliation pass: drives live pod counts to the declared replica
/// counts, replaces failed pods (restart policy permitting), terminates
/// excess and orphaned pods. A converged state yields no actions.
std::vector<Action> reconcile(ClusterState& state);

enum class Health { Ready, NotReady, Missing };

/// Applies one probe outcome: success promotes Pending/Starting pods to
/// Ready; kProbeFailureThreshold consecutive misses turn a pod Failed.
Health record_probe_result(ClusterState& state, const std::string& uid, bool responded);

/// Synchronous probe through the supplied pinger.
Health probe_health(ClusterState& state, const std::string& uid,
                    const std::function<bool(const PodRecord&)>& pinger);

/// Container started; the pod may now answer probes.
void mark_started(ClusterState& state, const std::string& uid);

/// Replaces a live pod's limits in place, without a restart.
void update_limits(ClusterState& state, const std::string& uid, ResourceLimits limits);

/// Marks a live pod Terminated; the next reconcile replaces it if its
/// deployment still wants the replica.
void delete_pod(ClusterState& state, const std::string& uid);

struct NodeUtilization {
  int cpu_committed_mc = 0;
  int mem_committed_mb = 0;
  int pod_count = 0;
  double cpu_ratio = 0.0;
  double mem_ratio = 0.0;
};

NodeUtilization node_utilization(const ClusterState& state, const std::string& node_name,
                                 const std::string& skip_uid = {});

/// One line per node: `<node> <role> <pods> <cpu%> <mem%>`.
std::string dump_nodes(const ClusterState& state);

std::string cluster_state_to_json(const ClusterState& state);
ClusterState cluster_state_from_json(const std::string& text);

}  // namespace fogline::cluster
