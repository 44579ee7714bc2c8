#include "fogline/cluster.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "fogline/error.hpp"

namespace fogline::cluster {

namespace {

std::string random_token(std::optional<uint64_t> seed) {
  std::mt19937_64 rng;
  if (seed) {
    rng.seed(*seed);
  } else {
    std::random_device rd;
    rng.seed((static_cast<uint64_t>(rd()) << 32) ^ rd());
  }
  static const char* hex = "0123456789abcdef";
  std::string token;
  token.reserve(64);
  for (int i = 0; i < 8; ++i) {
    uint64_t word = rng();
    for (int j = 0; j < 16; ++j) {
      token.push_back(hex[word & 0xf]);
      word >>= 4;
    }
  }
  return token;
}

int parse_cpu_quantity(const std::string& text) {
  // "250m" -> 250 millicores, "2" -> 2000
  if (text.empty()) return 0;
  if (text.back() == 'm') return std::stoi(text.substr(0, text.size() - 1));
  return static_cast<int>(std::stod(text) * 1000.0);
}

int parse_mem_quantity(const std::string& text) {
  // "128Mi" / "1Gi" / bare bytes -> MB
  if (text.empty()) return 0;
  if (text.size() > 2 && text.compare(text.size() - 2, 2, "Mi") == 0)
    return std::stoi(text.substr(0, text.size() - 2));
  if (text.size() > 2 && text.compare(text.size() - 2, 2, "Gi") == 0)
    return std::stoi(text.substr(0, text.size() - 2)) * 1024;
  return static_cast<int>(std::stod(text) / (1024.0 * 1024.0));
}

std::optional<ComponentKind> infer_component(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  auto has = [&](const char* sub) { return lower.find(sub) != std::string::npos; };
  // Identity is keyed on the deployment name, not the image string.
  if (has("master")) return ComponentKind::Master;
  if (has("remote_logger") || has("remotelogger") || has("logger")) return ComponentKind::RemoteLogger;
  if (has("taskexecutor") || has("executor")) return ComponentKind::TaskExecutor;
  if (has("actor")) return ComponentKind::Actor;
  if (has("user")) return ComponentKind::User;
  return std::nullopt;
}

void annotate(DeploymentSpec& spec, const std::string& path, const YAML::Node& node) {
  YAML::Emitter out;
  out << node;
  spec.annotations[path] = out.c_str() ? out.c_str() : "";
}

Ipv4 allocate_pod_ip(ClusterState& state) {
  const Cidr& cidr = state.pod_cidr;
  std::set<uint32_t> used;
  for (const auto& pod : state.pods)
    if (pod.live() && !pod.host_network) used.insert(pod.pod_ip.bits());

  uint32_t candidate = state.next_pod_ip.bits();
  const uint32_t first = cidr.first_host().bits();
  const uint32_t last = cidr.broadcast().bits();  // exclusive upper bound for hosts
  if (candidate < first || candidate >= last) candidate = first;
  for (uint64_t tries = 0; tries < cidr.num_addresses(); ++tries) {
    if (candidate >= last) candidate = first;
    if (!used.count(candidate)) {
      state.next_pod_ip = Ipv4(candidate + 1);
      return Ipv4(candidate);
    }
    ++candidate;
  }
  raise(Errc::NoCapacity, "pod network " + cidr.str() + " exhausted");
}

}  // namespace

const char* phase_name(PodPhase p) {
  switch (p) {
    case PodPhase::Pending: return "Pending";
    case PodPhase::Starting: return "Starting";
    case PodPhase::Ready: return "Ready";
    case PodPhase::Failed: return "Failed";
    case PodPhase::Terminated: return "Terminated";
  }
  return "?";
}

std::vector<const overlay::NodeRecord*> ClusterState::nodes() const {
  std::vector<const overlay::NodeRecord*> all;
  all.push_back(&server);
  for (const auto& agent : agents) all.push_back(&agent);
  return all;
}

const overlay::NodeRecord* ClusterState::find_node(const std::string& name) const {
  for (const auto* node : nodes())
    if (node->name == name) return node;
  return nullptr;
}

PodRecord* ClusterState::find_pod(const std::string& uid) {
  for (auto& pod : pods)
    if (pod.uid == uid) return &pod;
  return nullptr;
}

const PodRecord* ClusterState::find_pod(const std::string& uid) const {
  for (const auto& pod : pods)
    if (pod.uid == uid) return &pod;
  return nullptr;
}

std::pair<ClusterState, std::string> start_server(const overlay::NodeRecord& node,
                                                  const Cidr& pod_cidr,
                                                  std::optional<uint64_t> seed) {
  if (!node.vpn_ip_set) raise(Errc::InvalidArgument, "server node needs a vpn_ip");
  ClusterState state;
  state.server = node;
  state.server.role = overlay::Role::Server;
  state.pod_cidr = pod_cidr;
  state.next_pod_ip = pod_cidr.first_host();
  state.join_token = random_token(seed);
  std::string token = state.join_token;
  return {std::move(state), std::move(token)};
}

void join_agent(ClusterState& state, overlay::NodeRecord node, Ipv4 server_addr,
                const std::string& token, const overlay::MeshPlan* plan) {
  if (token != state.join_token) raise(Errc::BadToken, "join token does not match the server's");
  if (node.tag == state.server.tag || node.name == state.server.name)
    raise(Errc::DuplicateNode, "node " + node.tag + " is already the server");
  for (const auto& agent : state.agents)
    if (agent.tag == node.tag || agent.name == node.name)
      raise(Errc::DuplicateNode, "node " + node.tag + " is already a member");
  if (plan) {
    try {
      auto decision = overlay::route(*plan, node.tag, server_addr);
      if (!decision.deliverable)
        raise(Errc::UnreachableServer,
              "node " + node.tag + " cannot route to server " + server_addr.str());
    } catch (const Error& e) {
      if (e.code() == Errc::UnknownPeer)
        raise(Errc::UnreachableServer, "node " + node.tag + " is not on the mesh");
      throw;
    }
  }
  node.role = overlay::Role::Agent;
  state.agents.push_back(std::move(node));
}

DeploymentSpec parse_deployment(const std::string& yaml_text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    raise(Errc::MalformedDocument, std::string("deployment document: ") + e.what());
  }
  if (!doc.IsMap()) raise(Errc::MalformedDocument, "deployment document is not a mapping");

  DeploymentSpec spec;

  if (!doc["metadata"] || !doc["metadata"]["name"])
    raise(Errc::MissingField, "metadata.name");
  spec.name = doc["metadata"]["name"].as<std::string>();

  if (!doc["spec"] || !doc["spec"]["replicas"]) raise(Errc::MissingField, "spec.replicas");
  try {
    spec.replicas = doc["spec"]["replicas"].as<int>();
  } catch (const YAML::Exception&) {
    raise(Errc::MalformedDocument, "spec.replicas is not an integer");
  }
  if (spec.replicas < 0) raise(Errc::MalformedDocument, "spec.replicas must be >= 0");

  spec.component = infer_component(spec.name);

  const std::set<std::string> known_top = {"apiVersion", "kind", "metadata", "spec", "status"};
  for (const auto& item : doc) {
    const std::string key = item.first.as<std::string>();
    if (!known_top.count(key)) annotate(spec, key, item.second);
  }
  if (doc["metadata"]["labels"]) annotate(spec, "metadata.labels", doc["metadata"]["labels"]);

  const YAML::Node spec_node = doc["spec"];
  const std::set<std::string> known_spec = {"replicas", "template"};
  for (const auto& item : spec_node) {
    const std::string key = item.first.as<std::string>();
    if (!known_spec.count(key)) annotate(spec, "spec." + key, item.second);
  }

  YAML::Node pod_spec;
  if (spec_node["template"] && spec_node["template"]["spec"])
    pod_spec = spec_node["template"]["spec"];
  if (pod_spec) {
    if (pod_spec["nodeName"]) spec.node_name = pod_spec["nodeName"].as<std::string>();
    if (pod_spec["hostNetwork"]) spec.host_network = pod_spec["hostNetwork"].as<bool>();
    if (pod_spec["restartPolicy"]) {
      const std::string policy = pod_spec["restartPolicy"].as<std::string>();
      spec.restart_policy = policy == "Never" ? RestartPolicy::Never : RestartPolicy::Always;
    }
    const std::set<std::string> known_pod = {"containers", "nodeName", "hostNetwork",
                                             "restartPolicy"};
    for (const auto& item : pod_spec) {
      const std::string key = item.first.as<std::string>();
      if (!known_pod.count(key)) annotate(spec, "spec.template.spec." + key, item.second);
    }

    if (pod_spec["containers"] && pod_spec["containers"].size() > 0) {
      const YAML::Node container = pod_spec["containers"][0];
      if (container["args"])
        for (const auto& arg : container["args"]) spec.args.push_back(arg.as<std::string>());
      if (container["env"])
        for (const auto& entry : container["env"])
          if (entry["name"])
            spec.env[entry["name"].as<std::string>()] =
                entry["value"] ? entry["value"].as<std::string>() : "";
      if (container["resources"] && container["resources"]["limits"]) {
        const YAML::Node limits = container["resources"]["limits"];
        if (limits["cpu"]) spec.resource_limits.cpu_millicores =
            parse_cpu_quantity(limits["cpu"].as<std::string>());
        if (limits["memory"]) spec.resource_limits.mem_mb =
            parse_mem_quantity(limits["memory"].as<std::string>());
      }
      const std::set<std::string> known_container = {"args", "env", "resources"};
      for (const auto& item : container) {
        const std::string key = item.first.as<std::string>();
        if (!known_container.count(key)) annotate(spec, "container." + key, item.second);
      }
    }
  }
  return spec;
}

void apply_deployment(ClusterState& state, DeploymentSpec spec) {
  state.deployments[spec.name] = std::move(spec);
}

void delete_deployment(ClusterState& state, const std::string& name) {
  state.deployments.erase(name);
}

NodeUtilization node_utilization(const ClusterState& state, const std::string& node_name,
                                 const std::string& skip_uid) {
  NodeUtilization util;
  for (const auto& pod : state.pods) {
    if (!pod.live() || pod.node != node_name || pod.uid == skip_uid) continue;
    util.cpu_committed_mc += pod.limits.cpu_millicores;
    util.mem_committed_mb += pod.limits.mem_mb;
    util.pod_count++;
  }
  const overlay::NodeRecord* node = state.find_node(node_name);
  if (node) {
    util.cpu_ratio = static_cast<double>(util.cpu_committed_mc) / (node->cpu_cores * 1000.0);
    util.mem_ratio = static_cast<double>(util.mem_committed_mb) / node->mem_mb;
  }
  return util;
}

namespace {

bool fits_on(const ClusterState& state, const overlay::NodeRecord& node,
             const ResourceLimits& limits) {
  const auto util = node_utilization(state, node.name);
  const int cpu_cap = node.cpu_cores * 1000;
  if (limits.cpu_millicores > 0 && util.cpu_committed_mc + limits.cpu_millicores > cpu_cap)
    return false;
  if (limits.mem_mb > 0 && util.mem_committed_mb + limits.mem_mb > node.mem_mb) return false;
  return true;
}

}  // namespace

std::string schedule_pod(const ClusterState& state, const DeploymentSpec& spec) {
  if (spec.node_name) {
    const overlay::NodeRecord* node = state.find_node(*spec.node_name);
    if (!node) raise(Errc::NodeNotFound, "pinned node '" + *spec.node_name + "' is not a member");
    if (!fits_on(state, *node, spec.resource_limits))
      raise(Errc::NoCapacity, "pinned node '" + *spec.node_name + "' is out of capacity");
    return *spec.node_name;
  }

  const overlay::NodeRecord* best = nullptr;
  double best_ratio = 0.0;
  for (const auto* node : state.nodes()) {
    if (!fits_on(state, *node, spec.resource_limits)) continue;
    const auto util = node_utilization(state, node->name);
    const double ratio = std::max(util.cpu_ratio, util.mem_ratio);
    if (!best || ratio < best_ratio || (ratio == best_ratio && node->tag < best->tag)) {
      best = node;
      best_ratio = ratio;
    }
  }
  if (!best) raise(Errc::NoCapacity, "no node can take the pod within its limits");
  return best->name;
}

std::vector<Action> reconcile(ClusterState& state) {
  std::vector<Action> actions;
  state.clock_tick++;

  // Pods whose deployment vanished are torn down first.
  for (auto& pod : state.pods) {
    if (pod.live() && !state.deployments.count(pod.deployment)) {
      pod.phase = PodPhase::Terminated;
      actions.push_back({Action::Kind::TerminatePod, pod.uid, pod.deployment, pod.node,
                         "deployment deleted"});
    }
  }

  for (auto& [name, spec] : state.deployments) {
    std::vector<PodRecord*> live;
    std::vector<PodRecord*> failed_lineage;
    for (auto& pod : state.pods) {
      if (pod.deployment != name) continue;
      if (pod.live()) live.push_back(&pod);
      else if (pod.phase == PodPhase::Failed) failed_lineage.push_back(&pod);
    }

    // Excess replicas go first, newest first, keeping the oldest stable pods.
    std::sort(live.begin(), live.end(),
              [](const PodRecord* a, const PodRecord* b) { return a->created_seq > b->created_seq; });
    while (static_cast<int>(live.size()) > spec.replicas) {
      PodRecord* victim = live.front();
      live.erase(live.begin());
      victim->phase = PodPhase::Terminated;
      actions.push_back({Action::Kind::TerminatePod, victim->uid, name, victim->node, "excess replica"});
    }

    int want = spec.replicas - static_cast<int>(live.size());
    if (spec.restart_policy == RestartPolicy::Never)
      want -= static_cast<int>(failed_lineage.size());
    // Replacements inherit the failure lineage, newest failure first.
    std::sort(failed_lineage.begin(), failed_lineage.end(),
              [](const PodRecord* a, const PodRecord* b) { return a->created_seq > b->created_seq; });

    for (int i = 0; i < want; ++i) {
      int restarts = 0;
      if (spec.restart_policy == RestartPolicy::Always && !failed_lineage.empty()) {
        PodRecord* predecessor = failed_lineage.front();
        failed_lineage.erase(failed_lineage.begin());
        restarts = predecessor->restarts + 1;
        predecessor->phase = PodPhase::Terminated;
      }
      std::string node_name;
      try {
        node_name = schedule_pod(state, spec);
      } catch (const Error& e) {
        actions.push_back({Action::Kind::ScheduleFailed, "", name, "", e.what()});
        continue;
      }
      PodRecord pod;
      pod.uid = "pod-" + std::to_string(++state.uid_counter);
      pod.deployment = name;
      pod.node = node_name;
      pod.phase = PodPhase::Pending;
      pod.host_network = spec.host_network;
      pod.limits = spec.resource_limits;
      pod.restarts = restarts;
      pod.created_seq = ++state.creation_counter;
      if (spec.host_network) {
        pod.pod_ip = state.find_node(node_name)->vpn_ip;
      } else {
        try {
          pod.pod_ip = allocate_pod_ip(state);
        } catch (const Error& e) {
          actions.push_back({Action::Kind::ScheduleFailed, "", name, node_name, e.what()});
          continue;
        }
      }
      actions.push_back({Action::Kind::CreatePod, pod.uid, name, node_name, ""});
      state.pods.push_back(std::move(pod));
    }
  }
  return actions;
}

Health record_probe_result(ClusterState& state, const std::string& uid, bool responded) {
  PodRecord* pod = state.find_pod(uid);
  if (!pod || !pod->live()) return Health::Missing;
  pod->last_probe_tick = state.clock_tick;
  if (responded) {
    pod->consecutive_probe_failures = 0;
    pod->phase = PodPhase::Ready;
    return Health::Ready;
  }
  if (++pod->consecutive_probe_failures >= kProbeFailureThreshold) pod->phase = PodPhase::Failed;
  return Health::NotReady;
}

Health probe_health(ClusterState& state, const std::string& uid,
                    const std::function<bool(const PodRecord&)>& pinger) {
  const PodRecord* pod = state.find_pod(uid);
  if (!pod || !pod->live()) return Health::Missing;
  return record_probe_result(state, uid, pinger(*pod));
}

void mark_started(ClusterState& state, const std::string& uid) {
  PodRecord* pod = state.find_pod(uid);
  if (!pod || !pod->live()) raise(Errc::PodNotFound, "no live pod '" + uid + "'");
  if (pod->phase == PodPhase::Pending) pod->phase = PodPhase::Starting;
}

void update_limits(ClusterState& state, const std::string& uid, ResourceLimits limits) {
  PodRecord* pod = state.find_pod(uid);
  if (!pod || !pod->live()) raise(Errc::PodNotFound, "no live pod '" + uid + "'");
  const overlay::NodeRecord* node = state.find_node(pod->node);
  if (node) {
    const auto util = node_utilization(state, pod->node, pod->uid);
    const int cpu_cap = node->cpu_cores * 1000;
    if (limits.cpu_millicores > 0 && util.cpu_committed_mc + limits.cpu_millicores > cpu_cap)
      raise(Errc::WouldExceedNode, "cpu limit would overflow node " + pod->node);
    if (limits.mem_mb > 0 && util.mem_committed_mb + limits.mem_mb > node->mem_mb)
      raise(Errc::WouldExceedNode, "memory limit would overflow node " + pod->node);
  }
  pod->limits = limits;
}

void delete_pod(ClusterState& state, const std::string& uid) {
  PodRecord* pod = state.find_pod(uid);
  if (!pod || pod->phase == PodPhase::Terminated)
    raise(Errc::PodNotFound, "no pod '" + uid + "' to delete");
  pod->phase = PodPhase::Terminated;
}

std::string dump_nodes(const ClusterState& state) {
  std::ostringstream out;
  for (const auto* node : state.nodes()) {
    const auto util = node_utilization(state, node->name);
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-8s %3d %5.1f%% %5.1f%%\n", node->name.c_str(),
                  role_name(node->role), util.pod_count, util.cpu_ratio * 100.0,
                  util.mem_ratio * 100.0);
    out << line;
  }
  return out.str();
}

// --- state serialization ----------------------------------------------------

namespace {

nlohmann::json node_to_json(const overlay::NodeRecord& node) {
  nlohmann::json doc{{"tag", node.tag},           {"name", node.name},
                     {"layer", overlay::layer_name(node.layer)},
                     {"cpu_cores", node.cpu_cores}, {"mem_mb", node.mem_mb},
                     {"role", overlay::role_name(node.role)}};
  if (node.public_ip) doc["public_ip"] = node.public_ip->str();
  if (node.vpn_ip_set) doc["vpn_ip"] = node.vpn_ip.str();
  return doc;
}

overlay::NodeRecord node_from_json(const nlohmann::json& doc) {
  overlay::NodeRecord node;
  node.tag = doc.at("tag").get<std::string>();
  node.name = doc.at("name").get<std::string>();
  node.layer = overlay::parse_layer(doc.at("layer").get<std::string>());
  node.cpu_cores = doc.at("cpu_cores").get<int>();
  node.mem_mb = doc.at("mem_mb").get<int>();
  const std::string role = doc.value("role", "Unassigned");
  node.role = role == "Server" ? overlay::Role::Server
              : role == "Agent" ? overlay::Role::Agent
                                : overlay::Role::Unassigned;
  if (doc.contains("public_ip")) node.public_ip = Ipv4::parse(doc["public_ip"].get<std::string>());
  if (doc.contains("vpn_ip")) {
    node.vpn_ip = Ipv4::parse(doc["vpn_ip"].get<std::string>());
    node.vpn_ip_set = true;
  }
  return node;
}

nlohmann::json spec_to_json(const DeploymentSpec& spec) {
  nlohmann::json doc{{"name", spec.name},
                     {"replicas", spec.replicas},
                     {"args", spec.args},
                     {"env", spec.env},
                     {"host_network", spec.host_network},
                     {"restart_policy", spec.restart_policy == RestartPolicy::Never ? "Never" : "Always"},
                     {"cpu_millicores", spec.resource_limits.cpu_millicores},
                     {"mem_mb", spec.resource_limits.mem_mb},
                     {"annotations", spec.annotations}};
  if (spec.component) doc["component"] = component_kind_name(*spec.component);
  if (spec.node_name) doc["node_name"] = *spec.node_name;
  return doc;
}

DeploymentSpec spec_from_json(const nlohmann::json& doc) {
  DeploymentSpec spec;
  spec.name = doc.at("name").get<std::string>();
  spec.replicas = doc.at("replicas").get<int>();
  spec.args = doc.value("args", std::vector<std::string>{});
  spec.env = doc.value("env", std::map<std::string, std::string>{});
  spec.host_network = doc.value("host_network", false);
  spec.restart_policy =
      doc.value("restart_policy", "Always") == std::string("Never") ? RestartPolicy::Never
                                                                    : RestartPolicy::Always;
  spec.resource_limits.cpu_millicores = doc.value("cpu_millicores", 0);
  spec.resource_limits.mem_mb = doc.value("mem_mb", 0);
  spec.annotations = doc.value("annotations", std::map<std::string, std::string>{});
  if (doc.contains("component"))
    spec.component = parse_component_kind(doc["component"].get<std::string>());
  if (doc.contains("node_name")) spec.node_name = doc["node_name"].get<std::string>();
  return spec;
}

nlohmann::json pod_to_json(const PodRecord& pod) {
  return nlohmann::json{{"uid", pod.uid},
                        {"deployment", pod.deployment},
                        {"node", pod.node},
                        {"phase", phase_name(pod.phase)},
                        {"pod_ip", pod.pod_ip.str()},
                        {"host_network", pod.host_network},
                        {"cpu_millicores", pod.limits.cpu_millicores},
                        {"mem_mb", pod.limits.mem_mb},
                        {"restarts", pod.restarts},
                        {"last_probe_tick", pod.last_probe_tick},
                        {"consecutive_probe_failures", pod.consecutive_probe_failures},
                        {"created_seq", pod.created_seq}};
}

PodRecord pod_from_json(const nlohmann::json& doc) {
  PodRecord pod;
  pod.uid = doc.at("uid").get<std::string>();
  pod.deployment = doc.at("deployment").get<std::string>();
  pod.node = doc.at("node").get<std::string>();
  const std::string phase = doc.at("phase").get<std::string>();
  if (phase == "Pending") pod.phase = PodPhase::Pending;
  else if (phase == "Starting") pod.phase = PodPhase::Starting;
  else if (phase == "Ready") pod.phase = PodPhase::Ready;
  else if (phase == "Failed") pod.phase = PodPhase::Failed;
  else pod.phase = PodPhase::Terminated;
  pod.pod_ip = Ipv4::parse(doc.at("pod_ip").get<std::string>());
  pod.host_network = doc.value("host_network", false);
  pod.limits.cpu_millicores = doc.value("cpu_millicores", 0);
  pod.limits.mem_mb = doc.value("mem_mb", 0);
  pod.restarts = doc.value("restarts", 0);
  pod.last_probe_tick = doc.value("last_probe_tick", int64_t{-1});
  pod.consecutive_probe_failures = doc.value("consecutive_probe_failures", 0);
  pod.created_seq = doc.value("created_seq", uint64_t{0});
  return pod;
}

}  // namespace

std::string cluster_state_to_json(const ClusterState& state) {
  nlohmann::json doc;
  doc["server"] = node_to_json(state.server);
  doc["agents"] = nlohmann::json::array();
  for (const auto& agent : state.agents) doc["agents"].push_back(node_to_json(agent));
  doc["deployments"] = nlohmann::json::object();
  for (const auto& [name, spec] : state.deployments) doc["deployments"][name] = spec_to_json(spec);
  doc["pods"] = nlohmann::json::array();
  for (const auto& pod : state.pods) doc["pods"].push_back(pod_to_json(pod));
  doc["pod_cidr"] = state.pod_cidr.str();
  doc["next_pod_ip"] = state.next_pod_ip.str();
  doc["join_token"] = state.join_token;
  doc["clock_tick"] = state.clock_tick;
  doc["uid_counter"] = state.uid_counter;
  doc["creation_counter"] = state.creation_counter;
  return doc.dump(2);
}

ClusterState cluster_state_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedDocument, std::string("cluster state: ") + e.what());
  }
  ClusterState state;
  try {
    state.server = node_from_json(doc.at("server"));
    for (const auto& item : doc.at("agents")) state.agents.push_back(node_from_json(item));
    for (const auto& [name, item] : doc.at("deployments").items())
      state.deployments[name] = spec_from_json(item);
    for (const auto& item : doc.at("pods")) state.pods.push_back(pod_from_json(item));
    state.pod_cidr = Cidr::parse(doc.at("pod_cidr").get<std::string>());
    state.next_pod_ip = Ipv4::parse(doc.at("next_pod_ip").get<std::string>());
    state.join_token = doc.at("join_token").get<std::string>();
    state.clock_tick = doc.value("clock_tick", int64_t{0});
    state.uid_counter = doc.value("uid_counter", uint64_t{0});
    state.creation_counter = doc.value("creation_counter", uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedDocument, std::string("cluster state: ") + e.what());
  }
  return state;
}

}  // namespace fogline::cluster
