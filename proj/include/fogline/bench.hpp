#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fogline/cluster.hpp"
#include "fogline/comm.hpp"
#include "fogline/framework.hpp"
#include "fogline/overlay.hpp"
#include "fogline/simnet.hpp"

namespace fogline::bench {

enum class Mode { Orchestrated, Native };
enum class Layout { Hybrid, Cloud };

const char* mode_name(Mode m);
const char* layout_name(Layout l);
Mode parse_mode(const std::string& text);
Layout parse_layout(const std::string& text);

inline constexpr int kMinSamples = 30;
inline constexpr double kProbeCadenceMs = 50.0;
inline constexpr double kWarmupMs = 1000.0;
inline constexpr double kSampleDeadlineMs = 30000.0;

struct ExperimentPlan {
  std::string app_tag = "Formula";
  Mode mode = Mode::Orchestrated;
  Layout layout = Layout::Hybrid;
  int samples = 100;
  uint64_t seed = 1;
  simnet::LatencyMatrix matrix;
  comm::BindingStrategy strategy = comm::BindingStrategy::host_network();
};

/// Plan over the default five-node environment and its default matrix.
ExperimentPlan default_plan(const std::string& app_tag, Mode mode, Layout layout,
                            int samples = 100, uint64_t seed = 1);

struct Summary {
  double mean_ms = 0.0;
  double ci95_low_ms = 0.0;
  double ci95_high_ms = 0.0;
  int n = 0;
  int failures = 0;
  std::string raw_path;
  std::string app;
  std::string mode;
  std::string layout;
  std::string condition_digest;  // app + matrix fingerprint, guards compare()

  std::string to_json() const;
};

/// Mean plus two-sided 95% confidence interval via the t distribution.
Summary summarize(const std::vector<double>& samples);

/// Signed relative difference (a.mean - b.mean) / b.mean; both summaries
/// must describe the same app under the same matrix.
double compare(const Summary& a, const Summary& b);

/// Placement of the framework components for the two experiment layouts,
/// as node tags of the default environment.
simnet::DeploymentLayout layout_nodes(Layout layout);

/// WAN-dominated random matrix: edge links draw a LAN RTT, every link that
/// touches a cloud node draws around a shared WAN RTT an order larger.
simnet::LatencyMatrix random_wan_matrix(const std::vector<overlay::NodeRecord>& nodes,
                                        uint64_t seed);

/// Fully wired simulated deployment of the five components over the default
/// environment; orchestrated mode runs them inside reconciled pods with
/// health probing at the default cadence.
class SimHarness {
 public:
  struct Options {
    Mode mode = Mode::Native;
    Layout layout = Layout::Hybrid;
    comm::BindingStrategy strategy = comm::BindingStrategy::host_network();
    simnet::LatencyMatrix matrix;
    uint64_t seed = 1;
    std::string logger_path;
    /// EnvVariable only: apply the allowed-range reconciliation before boot.
    bool reconcile_pod_cidr = false;
  };

  explicit SimHarness(Options options);
  ~SimHarness();

  /// Boots components (and the cluster, when orchestrated) and runs the
  /// clock through the warmup window.
  void boot();

  framework::SubmitOutcome submit(const std::string& app_tag, nlohmann::json input,
                                  double deadline_ms = kSampleDeadlineMs);

  simnet::SimWorld& world() { return *world_; }
  framework::Master& master() { return *master_; }
  framework::UserClient& user() { return *user_; }
  cluster::ClusterState* cluster_state() { return cluster_state_ ? &*cluster_state_ : nullptr; }
  const overlay::MeshPlan& mesh() const { return mesh_; }
  const std::vector<overlay::NodeRecord>& nodes() const { return nodes_; }
  const std::string& logger_path() const { return logger_path_; }
  const Cidr& pod_cidr() const { return pod_cidr_; }

 private:
  struct ProbeCollector;

  void boot_cluster();
  void control_tick();
  std::string deployment_component(const std::string& deployment) const;
  Address place_component(const std::string& component_id, const std::string& node_tag,
                          uint16_t port);

  Options options_;
  std::vector<overlay::NodeRecord> nodes_;
  overlay::MeshPlan mesh_;
  Cidr pod_cidr_;
  Ipv4 next_pod_ip_;
  std::string logger_path_;
  std::unique_ptr<simnet::SimWorld> world_;
  std::unique_ptr<framework::RemoteLogger> logger_;
  std::unique_ptr<framework::Master> master_;
  std::vector<std::unique_ptr<framework::Actor>> actors_;
  std::unique_ptr<framework::UserClient> user_;
  std::unique_ptr<framework::ProxyComponent> proxy_;
  std::vector<std::unique_ptr<framework::PingResponder>> responders_;
  std::unique_ptr<ProbeCollector> collector_;
  std::map<std::string, Address> component_addrs_;
  std::map<std::string, std::string> node_tag_by_name_;
  std::optional<cluster::ClusterState> cluster_state_;
  std::map<std::string, std::string> pod_component_;  // pod uid -> component id
  uint16_t next_executor_port_ = 8000;
};

/// Runs `plan.samples` sequential submissions, records per-sample response
/// times to CSV and returns the summary. Timeout samples count as failures
/// and stay out of the mean.
Summary run_experiment(const ExperimentPlan& plan, const std::string& out_dir);

}  // namespace fogline::bench
