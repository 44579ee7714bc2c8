#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fogline/bench.hpp"
#include "fogline/cluster.hpp"
#include "fogline/error.hpp"
#include "fogline/overlay.hpp"
#include "fogline/simnet.hpp"

namespace {

using namespace fogline;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitAuth = 3;
constexpr int kExitConnectivity = 4;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::BadToken:
      return kExitAuth;
    case Errc::UnreachableServer:
    case Errc::MasterUnreachable:
      return kExitConnectivity;
    default:
      return kExitInput;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::MalformedDocument, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::StorageFailure, "cannot write '" + path + "'");
  out << content;
}

std::string state_path(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("FOGLINE_STATE"); env && *env) return env;
  return "fogline-state.json";
}

/// Exclusive advisory lock held for the life of one command; concurrent
/// invocations on the same state file queue up instead of corrupting it.
class StateLock {
 public:
  explicit StateLock(const std::string& path) {
    fd_ = ::open((path + ".lock").c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~StateLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  int fd_ = -1;
};

struct PersistedState {
  cluster::ClusterState cluster;
  overlay::MeshPlan mesh;
  std::vector<overlay::NodeRecord> inventory;
};

PersistedState load_state(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedDocument, std::string("state file: ") + e.what());
  }
  PersistedState state;
  state.cluster = cluster::cluster_state_from_json(doc.at("cluster").dump());
  state.mesh = overlay::mesh_plan_from_json(doc.at("mesh").dump());
  state.inventory = overlay::parse_inventory_json(doc.at("inventory").dump());
  return state;
}

void save_state(const std::string& path, const PersistedState& state) {
  nlohmann::json doc;
  doc["cluster"] = nlohmann::json::parse(cluster::cluster_state_to_json(state.cluster));
  doc["mesh"] = nlohmann::json::parse(overlay::mesh_plan_to_json(state.mesh));
  doc["inventory"] = nlohmann::json::parse(overlay::inventory_to_json(state.inventory));
  write_file(path, doc.dump(2) + "\n");
}

const overlay::NodeRecord& find_node(const std::vector<overlay::NodeRecord>& nodes,
                                     const std::string& key) {
  for (const auto& node : nodes)
    if (node.name == key || node.tag == key) return node;
  raise(Errc::NodeNotFound, "no inventory node named or tagged '" + key + "'");
}

int cmd_mesh_gen(const std::string& inventory_path, const std::string& out_dir,
                 const std::string& subnet_str, int base_port, std::optional<uint64_t> seed,
                 const std::string& cluster_cidr_str) {
  auto nodes = overlay::parse_inventory_json(read_file(inventory_path));
  auto plan = overlay::plan_mesh(nodes, Cidr::parse(subnet_str), base_port, seed);
  std::filesystem::create_directories(out_dir);
  for (const auto& peer : plan.peers) {
    const std::string path = out_dir + "/" + peer.node.tag + ".conf";
    write_file(path, overlay::render_peer_config(plan, peer.node.tag));
    std::cout << "wrote " << path << "\n";
  }
  if (!cluster_cidr_str.empty()) {
    auto report = overlay::detect_cidr_conflict(plan, Cidr::parse(cluster_cidr_str));
    std::cout << report.describe() << "\n";
  }
  return kExitOk;
}

int cmd_cluster_init(const std::string& state_file, const std::string& inventory_path,
                     const std::string& node_key, const std::string& pod_cidr_str,
                     const std::string& subnet_str, std::optional<uint64_t> seed) {
  PersistedState state;
  state.inventory = overlay::parse_inventory_json(read_file(inventory_path));
  state.mesh = overlay::plan_mesh(state.inventory, Cidr::parse(subnet_str),
                                  overlay::kDefaultBasePort, seed);
  // inventory vpn addresses may have been assigned by the planner
  for (auto& node : state.inventory)
    if (const auto* peer = state.mesh.find_peer(node.tag)) node = peer->node;

  const auto& server = find_node(state.inventory, node_key);
  auto [cluster_state, token] = cluster::start_server(server, Cidr::parse(pod_cidr_str), seed);
  state.cluster = std::move(cluster_state);
  save_state(state_file, state);
  std::cout << token << "\n";
  return kExitOk;
}

int cmd_cluster_join(const std::string& state_file, const std::string& node_key,
                     const std::string& server_str, const std::string& token) {
  auto state = load_state(state_file);
  const auto& node = find_node(state.inventory, node_key);
  cluster::join_agent(state.cluster, node, Ipv4::parse(server_str), token, &state.mesh);
  save_state(state_file, state);
  std::cout << "node " << node.name << " joined as agent\n";
  return kExitOk;
}

int cmd_cluster_status(const std::string& state_file) {
  auto state = load_state(state_file);
  std::cout << cluster::dump_nodes(state.cluster);
  return kExitOk;
}

int cmd_deploy_apply(const std::string& state_file, const std::string& file) {
  auto state = load_state(state_file);
  auto spec = cluster::parse_deployment(read_file(file));
  cluster::apply_deployment(state.cluster, spec);
  auto actions = cluster::reconcile(state.cluster);
  save_state(state_file, state);
  std::cout << "deployment " << spec.name << " applied, " << actions.size() << " action(s)\n";
  for (const auto& action : actions) {
    const char* kind = action.kind == cluster::Action::Kind::CreatePod      ? "create"
                       : action.kind == cluster::Action::Kind::TerminatePod ? "terminate"
                                                                            : "schedule-failed";
    std::cout << "  " << kind << " " << action.pod_uid << " (" << action.deployment << ")"
              << (action.node.empty() ? "" : " on " + action.node) << "\n";
  }
  return kExitOk;
}

int cmd_deploy_get(const std::string& state_file, const std::string& name) {
  auto state = load_state(state_file);
  for (const auto& pod : state.cluster.pods) {
    if (!name.empty() && pod.deployment != name) continue;
    char line[256];
    std::snprintf(line, sizeof(line), "%-10s %-24s %-12s %-10s %s\n", pod.uid.c_str(),
                  pod.deployment.c_str(), pod.node.c_str(), cluster::phase_name(pod.phase),
                  pod.pod_ip.str().c_str());
    std::cout << line;
  }
  return kExitOk;
}

int cmd_deploy_delete(const std::string& state_file, const std::string& name) {
  auto state = load_state(state_file);
  cluster::delete_deployment(state.cluster, name);
  auto actions = cluster::reconcile(state.cluster);
  save_state(state_file, state);
  std::cout << "deployment " << name << " deleted, " << actions.size() << " pod(s) terminated\n";
  return kExitOk;
}

int cmd_bench_run(const std::string& app, const std::string& mode_str,
                  const std::string& layout_str, int samples, uint64_t seed,
                  const std::string& matrix_path, const std::string& out_dir) {
  bench::ExperimentPlan plan = bench::default_plan(app, bench::parse_mode(mode_str),
                                                   bench::parse_layout(layout_str), samples, seed);
  if (!matrix_path.empty()) plan.matrix = simnet::LatencyMatrix::from_json(read_file(matrix_path));
  auto summary = bench::run_experiment(plan, out_dir);
  std::printf("%s %s %s: n=%d mean=%.3f ms ci95=[%.3f, %.3f] failures=%d\n", summary.app.c_str(),
              summary.mode.c_str(), summary.layout.c_str(), summary.n, summary.mean_ms,
              summary.ci95_low_ms, summary.ci95_high_ms, summary.failures);
  std::cout << "raw samples: " << summary.raw_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale edge/cloud orchestration stack"};
  app.require_subcommand(1);

  std::string state_flag;
  app.add_option("--state", state_flag, "cluster state file (or FOGLINE_STATE)");

  // mesh-gen
  auto* mesh_cmd = app.add_subcommand("mesh-gen", "plan the VPN mesh and render peer configs");
  std::string inventory_path, out_dir = "mesh-out", subnet = "192.0.0.0/24", cluster_cidr;
  int base_port = overlay::kDefaultBasePort;
  std::optional<uint64_t> mesh_seed;
  mesh_cmd->add_option("--inventory", inventory_path, "node inventory JSON")->required();
  mesh_cmd->add_option("--out", out_dir, "output directory");
  mesh_cmd->add_option("--subnet", subnet, "mesh subnet CIDR");
  mesh_cmd->add_option("--base-port", base_port, "first listen port");
  mesh_cmd->add_option("--seed", mesh_seed, "deterministic key material");
  mesh_cmd->add_option("--cluster-cidr", cluster_cidr, "check the pod network for conflicts");

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "server/agent cluster management");
  cluster_cmd->require_subcommand(1);
  auto* init_cmd = cluster_cmd->add_subcommand("init", "start the server and print its token");
  std::string init_inventory, init_node, pod_cidr = "10.42.0.0/16", init_subnet = "192.0.0.0/24";
  std::optional<uint64_t> init_seed;
  init_cmd->add_option("--inventory", init_inventory, "node inventory JSON")->required();
  init_cmd->add_option("--node", init_node, "server node name or tag")->required();
  init_cmd->add_option("--pod-cidr", pod_cidr, "pod network CIDR");
  init_cmd->add_option("--subnet", init_subnet, "mesh subnet CIDR");
  init_cmd->add_option("--seed", init_seed, "deterministic token/keys");

  auto* join_cmd = cluster_cmd->add_subcommand("join", "join a node as agent");
  std::string join_node, join_server, join_token;
  join_cmd->add_option("--node", join_node, "joining node name or tag")->required();
  join_cmd->add_option("--server", join_server, "server VPN address")->required();
  join_cmd->add_option("--token", join_token, "join token")->required();

  auto* status_cmd = cluster_cmd->add_subcommand("status", "print the node table");

  // deploy
  auto* deploy_cmd = app.add_subcommand("deploy", "apply, inspect or delete deployments");
  deploy_cmd->require_subcommand(1);
  auto* apply_cmd = deploy_cmd->add_subcommand("apply", "apply a deployment document");
  std::string apply_file;
  apply_cmd->add_option("-f,--file", apply_file, "deployment YAML")->required();
  auto* get_cmd = deploy_cmd->add_subcommand("get", "list pods");
  std::string get_name;
  get_cmd->add_option("name", get_name, "deployment name (all when omitted)");
  auto* delete_cmd = deploy_cmd->add_subcommand("delete", "delete a deployment");
  std::string delete_name;
  delete_cmd->add_option("name", delete_name, "deployment name")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "benchmark harness");
  bench_cmd->require_subcommand(1);
  auto* run_cmd = bench_cmd->add_subcommand("run", "run one experiment");
  std::string bench_app = "Formula", bench_mode = "orchestrated", bench_layout = "hybrid";
  std::string matrix_path, bench_out = "bench-out";
  int bench_samples = 100;
  uint64_t bench_seed = 1;
  run_cmd->add_option("--app", bench_app, "Formula | FD480 | FD240");
  run_cmd->add_option("--mode", bench_mode, "orchestrated | native");
  run_cmd->add_option("--layout", bench_layout, "hybrid | cloud");
  run_cmd->add_option("--samples", bench_samples, "sample count (>= 30)");
  run_cmd->add_option("--seed", bench_seed, "experiment seed");
  run_cmd->add_option("--matrix", matrix_path, "latency matrix JSON");
  run_cmd->add_option("--out", bench_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const std::string state_file = state_path(state_flag);
    if (mesh_cmd->parsed())
      return cmd_mesh_gen(inventory_path, out_dir, subnet, base_port, mesh_seed, cluster_cidr);
    if (init_cmd->parsed()) {
      StateLock lock(state_file);
      return cmd_cluster_init(state_file, init_inventory, init_node, pod_cidr, init_subnet,
                              init_seed);
    }
    if (join_cmd->parsed()) {
      StateLock lock(state_file);
      return cmd_cluster_join(state_file, join_node, join_server, join_token);
    }
    if (status_cmd->parsed()) {
      StateLock lock(state_file);
      return cmd_cluster_status(state_file);
    }
    if (apply_cmd->parsed()) {
      StateLock lock(state_file);
      return cmd_deploy_apply(state_file, apply_file);
    }
    if (get_cmd->parsed()) {
      StateLock lock(state_file);
      return cmd_deploy_get(state_file, get_name);
    }
    if (delete_cmd->parsed()) {
      StateLock lock(state_file);
      return cmd_deploy_delete(state_file, delete_name);
    }
    if (run_cmd->parsed())
      return cmd_bench_run(bench_app, bench_mode, bench_layout, bench_samples, bench_seed,
                           matrix_path, bench_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
