#include "fogline/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "fogline/apps.hpp"
#include "fogline/error.hpp"

namespace fogline::bench {

namespace {

constexpr const char* kTaskKinds[] = {"formula-add", "formula-mul", "formula-div", "fd-frame"};

uint64_t fnv1a(const std::string& text) {
  uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string sanitize(std::string name) {
  for (auto& c : name)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return name;
}

nlohmann::json draw_input(const std::string& app_tag, std::mt19937_64& rng) {
  auto draw_int = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1));
  };
  if (app_tag == "Formula") {
    nlohmann::json input;
    input["a"] = draw_int(-1000, 1000);
    input["b"] = draw_int(-1000, 1000);
    input["c"] = draw_int(-1000, 1000);
    input["d"] = draw_int(1, 1000);
    return input;
  }
  return nlohmann::json{{"seed", rng()}};
}

}  // namespace

const char* mode_name(Mode m) { return m == Mode::Orchestrated ? "orchestrated" : "native"; }
const char* layout_name(Layout l) { return l == Layout::Hybrid ? "hybrid" : "cloud"; }

Mode parse_mode(const std::string& text) {
  if (text == "orchestrated" || text == "Orchestrated") return Mode::Orchestrated;
  if (text == "native" || text == "Native") return Mode::Native;
  raise(Errc::InvalidArgument, "unknown mode '" + text + "'");
}

Layout parse_layout(const std::string& text) {
  if (text == "hybrid" || text == "Hybrid") return Layout::Hybrid;
  if (text == "cloud" || text == "Cloud") return Layout::Cloud;
  raise(Errc::InvalidArgument, "unknown layout '" + text + "'");
}

ExperimentPlan default_plan(const std::string& app_tag, Mode mode, Layout layout, int samples,
                            uint64_t seed) {
  if (!apps::is_known_app_tag(app_tag)) raise(Errc::UnknownApp, "unknown app tag '" + app_tag + "'");
  ExperimentPlan plan;
  plan.app_tag = app_tag;
  plan.mode = mode;
  plan.layout = layout;
  plan.samples = samples;
  plan.seed = seed;
  plan.matrix = simnet::LatencyMatrix::defaults_for(overlay::default_inventory());
  return plan;
}

Summary summarize(const std::vector<double>& samples) {
  if (samples.size() < 2)
    raise(Errc::InsufficientSamples, "need at least 2 samples, got " +
                                         std::to_string(samples.size()));
  const int n = static_cast<int>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));

  Summary summary;
  summary.n = n;
  summary.mean_ms = mean;
  if (sd == 0.0) {
    summary.ci95_low_ms = summary.ci95_high_ms = mean;
    return summary;
  }
  boost::math::students_t_distribution<double> dist(n - 1);
  const double t = boost::math::quantile(dist, 0.975);
  const double half = t * sd / std::sqrt(static_cast<double>(n));
  summary.ci95_low_ms = mean - half;
  summary.ci95_high_ms = mean + half;
  return summary;
}

double compare(const Summary& a, const Summary& b) {
  if (a.app != b.app || a.condition_digest != b.condition_digest)
    raise(Errc::MixedConditions, "summaries describe different apps or matrices");
  if (b.mean_ms == 0.0) raise(Errc::InvalidArgument, "reference mean is zero");
  return (a.mean_ms - b.mean_ms) / b.mean_ms;
}

std::string Summary::to_json() const {
  nlohmann::json doc{{"app", app},
                     {"mode", mode},
                     {"layout", layout},
                     {"n", n},
                     {"mean_ms", mean_ms},
                     {"ci95_low_ms", ci95_low_ms},
                     {"ci95_high_ms", ci95_high_ms},
                     {"failures", failures}};
  return doc.dump(2);
}

simnet::DeploymentLayout layout_nodes(Layout layout) {
  simnet::DeploymentLayout nodes;
  if (layout == Layout::Hybrid) {
    // master and one actor at the edge, logger and two actors in the cloud
    nodes.master_node = "D";
    nodes.logger_node = "A";
    nodes.actor_nodes = {"E", "B", "C"};
  } else {
    nodes.master_node = "A";
    nodes.logger_node = "B";
    nodes.actor_nodes = {"A", "B", "C"};
  }
  nodes.user_node = "E";  // the requesting device stays at the edge
  return nodes;
}

simnet::LatencyMatrix random_wan_matrix(const std::vector<overlay::NodeRecord>& nodes,
                                        uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double lan_rtt = 1.0 + 3.0 * simnet::uniform01(rng);
  const double wan_rtt = 20.0 + 80.0 * simnet::uniform01(rng);
  simnet::LatencyMatrix matrix;
  for (size_t i = 0; i < nodes.size(); ++i) {
    for (size_t j = i + 1; j < nodes.size(); ++j) {
      const bool lan = nodes[i].layer == overlay::Layer::Edge &&
                       nodes[j].layer == overlay::Layer::Edge;
      // Cloud regions are geographically spread: every link that touches a
      // cloud node rides the WAN. +-5% per-pair wobble keeps pairs distinct.
      const double base = lan ? lan_rtt : wan_rtt;
      const double wobble = 1.0 + 0.05 * (2.0 * simnet::uniform01(rng) - 1.0);
      simnet::LinkSpec spec;
      spec.rtt_ms = base * wobble;
      matrix.set_link(nodes[i].tag, nodes[j].tag, spec);
    }
  }
  return matrix;
}

// --- SimHarness ---------------------------------------------------------------

struct SimHarness::ProbeCollector final : comm::Component {
  std::set<std::string> pongs;
  void on_message(comm::Context&, const comm::Envelope& env) override {
    if (env.msg_type == "pong") pongs.insert(env.correlation_id);
  }
};

SimHarness::SimHarness(Options options) : options_(std::move(options)) {
  nodes_ = overlay::default_inventory();
  mesh_ = overlay::plan_mesh(nodes_, Cidr::parse("192.0.0.0/24"), overlay::kDefaultBasePort,
                             options_.seed);
  pod_cidr_ = Cidr::parse("10.42.0.0/16");
  next_pod_ip_ = pod_cidr_.first_host();
  for (const auto& node : nodes_) node_tag_by_name_[node.name] = node.tag;

  // The proxy's concrete address must be fixed before anyone sends.
  if (options_.strategy.kind == comm::StrategyKind::ProxyServer &&
      options_.strategy.proxy_addr.port == 0)
    options_.strategy.proxy_addr = Address{nodes_.front().vpn_ip, 7000};

  overlay::MeshPlan plan = mesh_;
  if (options_.reconcile_pod_cidr) plan = overlay::reconcile_allowed_ips(mesh_, pod_cidr_);
  world_ = std::make_unique<simnet::SimWorld>(plan, options_.matrix, options_.strategy,
                                              options_.seed);
  logger_path_ = options_.logger_path.empty() ? "fogline_events.log" : options_.logger_path;
}

SimHarness::~SimHarness() = default;

Address SimHarness::place_component(const std::string& component_id, const std::string& node_tag,
                                    uint16_t port) {
  const overlay::NodeRecord* node = nullptr;
  for (const auto& n : nodes_)
    if (n.tag == node_tag) node = &n;
  if (!node) raise(Errc::NodeNotFound, "no node tagged '" + node_tag + "'");

  Ipv4 pod_ip = next_pod_ip_;
  next_pod_ip_ = Ipv4(next_pod_ip_.bits() + 1);
  const Address addr{comm::bind_address(options_.strategy, *node, pod_ip), port};
  component_addrs_[component_id] = addr;
  return addr;
}

void SimHarness::boot() {
  const auto layout = layout_nodes(options_.layout);

  std::remove(logger_path_.c_str());
  logger_ = std::make_unique<framework::RemoteLogger>(logger_path_);
  logger_->set_identity("logger", {});
  world_->attach(logger_.get(), layout.logger_node,
                 place_component("logger", layout.logger_node, 5000));

  master_ = std::make_unique<framework::Master>("master", layout.master_node,
                                                component_addrs_["logger"], "logger");
  const Address master_addr = place_component("master", layout.master_node, 5001);
  world_->attach(master_.get(), layout.master_node, master_addr);
  master_->register_app(apps::app_by_tag("Formula"));
  master_->register_app(apps::app_by_tag("FD480"));
  master_->register_app(apps::app_by_tag("FD240"));
  {
    // Registration acceptance mirrors what the transport would deliver:
    // under the proxy pattern any bound component is reachable through it.
    simnet::SimWorld* w = world_.get();
    const std::string master_node = layout.master_node;
    const bool via_proxy = options_.strategy.kind == comm::StrategyKind::ProxyServer;
    master_->set_routable_predicate([w, master_node, via_proxy](const Address& addr) {
      auto node = w->node_of(addr);
      if (!node) return false;
      if (via_proxy || *node == master_node) return true;
      return overlay::route(w->plan(), master_node, addr.ip).deliverable;
    });
  }

  if (options_.strategy.kind == comm::StrategyKind::ProxyServer) {
    proxy_ = std::make_unique<framework::ProxyComponent>("proxy");
    // reachable on its host's address; forwards with the controller's
    // network access
    world_->attach(proxy_.get(), nodes_.front().tag, options_.strategy.proxy_addr);
    world_->set_component_strategy("proxy", comm::BindingStrategy::proxy_upstream());
    component_addrs_["proxy"] = options_.strategy.proxy_addr;
  }

  std::vector<std::string> kinds(std::begin(kTaskKinds), std::end(kTaskKinds));
  uint16_t actor_port = 6001;
  int actor_idx = 0;
  for (const auto& node_tag : layout.actor_nodes) {
    auto actor = std::make_unique<framework::Actor>("actor-" + std::to_string(++actor_idx),
                                                    node_tag, kinds, component_addrs_["master"],
                                                    "master", component_addrs_["logger"], "logger");
    const Address addr = place_component(actor->component_id(), node_tag, actor_port++);
    world_->attach(actor.get(), node_tag, addr);
    actors_.push_back(std::move(actor));
  }

  user_ = std::make_unique<framework::UserClient>("user", component_addrs_["master"], "master");
  world_->attach(user_.get(), layout.user_node, place_component("user", layout.user_node, 7100));

  if (proxy_)
    for (const auto& [id, addr] : component_addrs_)
      if (id != "proxy") proxy_->set_route(id, addr);

  // executors surface as components of their own: a ping responder on the
  // actor's node, plus a pod when the cluster is in the loop
  for (auto& actor : actors_) {
    framework::Actor* raw = actor.get();
    actor->on_spawn = [this, raw](const std::string& executor_id, const std::string& task_kind) {
      const Address addr = place_component(executor_id, raw->node(), next_executor_port_++);
      auto responder = std::make_unique<framework::PingResponder>(executor_id);
      world_->attach(responder.get(), raw->node(), addr);
      responders_.push_back(std::move(responder));
      if (proxy_) proxy_->set_route(executor_id, addr);
      if (cluster_state_) {
        cluster::DeploymentSpec spec;
        spec.name = "fogbus2-executor-" + sanitize(task_kind) + "-" + raw->node();
        spec.replicas = 1;
        spec.component = ComponentKind::TaskExecutor;
        spec.host_network = options_.strategy.kind == comm::StrategyKind::HostNetwork;
        for (const auto& n : nodes_)
          if (n.tag == raw->node()) spec.node_name = n.name;
        cluster::apply_deployment(*cluster_state_, spec);
        pod_component_["deployment:" + spec.name] = executor_id;
      }
      return addr;
    };
  }

  // actors register one at a time so the scheduler order equals the layout order
  for (auto& actor : actors_) {
    world_->send_from(*actor, actor->make_registration());
    world_->run_until_idle(world_->clock().now_ms() + 1000.0);
  }

  if (options_.mode == Mode::Orchestrated) boot_cluster();

  world_->run_until(kWarmupMs);
}

std::string SimHarness::deployment_component(const std::string& deployment) const {
  auto it = pod_component_.find("deployment:" + deployment);
  return it == pod_component_.end() ? "" : it->second;
}

void SimHarness::boot_cluster() {
  auto inventory = nodes_;
  auto [state, token] = cluster::start_server(inventory.front(), pod_cidr_, options_.seed);
  cluster_state_ = std::move(state);
  for (size_t i = 1; i < inventory.size(); ++i)
    cluster::join_agent(*cluster_state_, inventory[i], inventory.front().vpn_ip, token, &mesh_);

  const auto layout = layout_nodes(options_.layout);
  auto node_name = [&](const std::string& tag) {
    for (const auto& n : nodes_)
      if (n.tag == tag) return n.name;
    return std::string();
  };
  auto deploy = [&](const std::string& name, ComponentKind kind, const std::string& node_tag,
                    const std::string& component_id) {
    cluster::DeploymentSpec spec;
    spec.name = name;
    spec.replicas = 1;
    spec.component = kind;
    spec.node_name = node_name(node_tag);
    spec.host_network = options_.strategy.kind == comm::StrategyKind::HostNetwork;
    cluster::apply_deployment(*cluster_state_, spec);
    pod_component_["deployment:" + name] = component_id;
  };

  deploy("fogbus2-master", ComponentKind::Master, layout.master_node, "master");
  deploy("fogbus2-remote-logger", ComponentKind::RemoteLogger, layout.logger_node, "logger");
  for (size_t i = 0; i < layout.actor_nodes.size(); ++i)
    deploy("fogbus2-actor-" + std::to_string(i + 1), ComponentKind::Actor, layout.actor_nodes[i],
           "actor-" + std::to_string(i + 1));

  collector_ = std::make_unique<ProbeCollector>();
  collector_->set_identity("probe-collector", {});
  const Address collector_addr{nodes_.front().vpn_ip, 4001};
  world_->attach(collector_.get(), nodes_.front().tag, collector_addr);
  world_->set_component_strategy("probe-collector", comm::BindingStrategy::proxy_upstream());
  component_addrs_["probe-collector"] = collector_addr;

  world_->clock().schedule_after(0.0, [this]() { control_tick(); });
}

void SimHarness::control_tick() {
  auto actions = cluster::reconcile(*cluster_state_);
  for (const auto& action : actions) {
    if (action.kind != cluster::Action::Kind::CreatePod) continue;
    cluster::mark_started(*cluster_state_, action.pod_uid);
    const std::string component = deployment_component(action.deployment);
    if (!component.empty()) pod_component_[action.pod_uid] = component;
  }

  // one ping per live pod; outcomes are judged when the timeout lapses
  std::vector<std::pair<std::string, std::string>> outstanding;  // uid, cid
  for (const auto& pod : cluster_state_->pods) {
    if (!pod.live()) continue;
    auto comp_it = pod_component_.find(pod.uid);
    if (comp_it == pod_component_.end()) continue;
    auto addr_it = component_addrs_.find(comp_it->second);
    if (addr_it == component_addrs_.end()) continue;
    comm::Envelope ping;
    ping.msg_type = "ping";
    ping.dst = addr_it->second;
    const std::string cid =
        "probe:" + pod.uid + ":" + std::to_string(cluster_state_->clock_tick);
    ping.correlation_id = cid;
    ping.payload = {{"from", "probe-collector"}, {"target", comp_it->second}};
    world_->send_from(*collector_, std::move(ping));
    outstanding.emplace_back(pod.uid, cid);
  }

  world_->clock().schedule_after(cluster::kProbeTimeoutMs, [this, outstanding]() {
    for (const auto& [uid, cid] : outstanding)
      cluster::record_probe_result(*cluster_state_, uid, collector_->pongs.count(cid) > 0);
  });

  world_->clock().schedule_after(kProbeCadenceMs, [this]() { control_tick(); });
}

framework::SubmitOutcome SimHarness::submit(const std::string& app_tag, nlohmann::json input,
                                            double deadline_ms) {
  return framework::user_submit(*world_, *user_, app_tag, std::move(input), deadline_ms);
}

// --- run_experiment -------------------------------------------------------------

Summary run_experiment(const ExperimentPlan& plan, const std::string& out_dir) {
  if (plan.samples < kMinSamples)
    raise(Errc::InvalidArgument, "need at least " + std::to_string(kMinSamples) +
                                     " samples for a valid confidence interval");
  if (!apps::is_known_app_tag(plan.app_tag))
    raise(Errc::UnknownApp, "unknown app tag '" + plan.app_tag + "'");

  std::filesystem::create_directories(out_dir);
  const std::string base = sanitize(plan.app_tag) + "_" + mode_name(plan.mode) + "_" +
                           layout_name(plan.layout) + "_seed" + std::to_string(plan.seed);

  SimHarness::Options options;
  options.mode = plan.mode;
  options.layout = plan.layout;
  options.strategy = plan.strategy;
  options.matrix = plan.matrix;
  options.seed = plan.seed;
  options.logger_path = out_dir + "/" + base + "_events.log";

  SimHarness harness(std::move(options));
  try {
    harness.boot();
  } catch (const Error& e) {
    raise(Errc::BootFailure, std::string("deployment failed to boot: ") + e.what());
  }

  std::mt19937_64 input_rng(plan.seed ^ 0x5eedf00dull);
  std::vector<double> ok_samples;
  std::ostringstream csv;
  csv << "sample_idx,response_ms,status\n";
  int failures = 0;
  for (int i = 0; i < plan.samples; ++i) {
    nlohmann::json input = draw_input(plan.app_tag, input_rng);
    try {
      auto outcome = harness.submit(plan.app_tag, std::move(input));
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%d,%.3f,ok\n", i, outcome.response_ms);
      csv << buf;
      ok_samples.push_back(outcome.response_ms);
    } catch (const Error& e) {
      if (e.code() != Errc::Timeout) throw;
      csv << i << ",,timeout\n";
      ++failures;
    }
  }

  const std::string raw_path = out_dir + "/" + base + ".csv";
  {
    std::ofstream out(raw_path, std::ios::binary);
    out << csv.str();
  }

  Summary summary = summarize(ok_samples);
  summary.failures = failures;
  summary.raw_path = raw_path;
  summary.app = plan.app_tag;
  summary.mode = mode_name(plan.mode);
  summary.layout = layout_name(plan.layout);
  summary.condition_digest = std::to_string(fnv1a(plan.app_tag + "|" + plan.matrix.to_json()));

  {
    std::ofstream out(out_dir + "/" + base + "_summary.json", std::ios::binary);
    out << summary.to_json() << "\n";
  }
  {
    std::ofstream out(out_dir + "/" + base + "_plot.csv", std::ios::binary);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "app,mode,layout,mean_ms,ci95_low_ms,ci95_high_ms\n%s,%s,%s,%.3f,%.3f,%.3f\n",
                  summary.app.c_str(), summary.mode.c_str(), summary.layout.c_str(),
                  summary.mean_ms, summary.ci95_low_ms, summary.ci95_high_ms);
    out << buf;
  }
  return summary;
}

}  // namespace fogline::bench
