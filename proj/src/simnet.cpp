#include "fogline/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fogline/error.hpp"

namespace fogline::simnet {

namespace {

std::pair<std::string, std::string> pair_key(const std::string& a, const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

void LatencyMatrix::set_link(const std::string& a, const std::string& b, LinkSpec spec) {
  if (a == b) raise(Errc::InvalidArgument, "diagonal entries are fixed by same_node_us");
  links_[pair_key(a, b)] = spec;
}

bool LatencyMatrix::has_link(const std::string& a, const std::string& b) const {
  return a == b || links_.count(pair_key(a, b)) > 0;
}

const LinkSpec& LatencyMatrix::link(const std::string& a, const std::string& b) const {
  auto it = links_.find(pair_key(a, b));
  if (it == links_.end())
    raise(Errc::UnknownNodePair, "no latency entry for (" + a + ", " + b + ")");
  return it->second;
}

void LatencyMatrix::validate() const {
  if (same_node_us_ < 0) raise(Errc::InvalidArgument, "same_node_us must be >= 0");
  for (const auto& [key, spec] : links_) {
    if (spec.rtt_ms < 0 || spec.jitter_ms < 0)
      raise(Errc::InvalidArgument, "negative latency on (" + key.first + ", " + key.second + ")");
    if (spec.loss_prob < 0 || spec.loss_prob > 1)
      raise(Errc::InvalidArgument, "loss_prob outside [0,1] on (" + key.first + ", " + key.second + ")");
  }
}

LatencyMatrix LatencyMatrix::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedDocument, std::string("matrix is not valid JSON: ") + e.what());
  }
  LatencyMatrix matrix;
  if (doc.contains("same_node_us")) matrix.same_node_us_ = doc["same_node_us"].get<double>();
  if (!doc.contains("links") || !doc["links"].is_array())
    raise(Errc::MalformedDocument, "matrix needs a 'links' array");
  for (const auto& item : doc["links"]) {
    LinkSpec spec;
    std::string a, b;
    try {
      a = item.at("a").get<std::string>();
      b = item.at("b").get<std::string>();
      spec.rtt_ms = item.at("rtt_ms").get<double>();
      spec.jitter_ms = item.value("jitter_ms", 0.0);
      spec.loss_prob = item.value("loss_prob", 0.0);
    } catch (const nlohmann::json::exception& e) {
      raise(Errc::MalformedDocument, std::string("bad link record: ") + e.what());
    }
    matrix.set_link(a, b, spec);
  }
  matrix.validate();
  return matrix;
}

std::string LatencyMatrix::to_json() const {
  nlohmann::json doc;
  doc["same_node_us"] = same_node_us_;
  doc["links"] = nlohmann::json::array();
  for (const auto& [key, spec] : links_) {
    doc["links"].push_back({{"a", key.first},
                            {"b", key.second},
                            {"rtt_ms", spec.rtt_ms},
                            {"jitter_ms", spec.jitter_ms},
                            {"loss_prob", spec.loss_prob}});
  }
  return doc.dump(2);
}

LatencyMatrix LatencyMatrix::defaults_for(const std::vector<overlay::NodeRecord>& nodes) {
  LatencyMatrix matrix;
  for (size_t i = 0; i < nodes.size(); ++i) {
    for (size_t j = i + 1; j < nodes.size(); ++j) {
      const bool ei = nodes[i].layer == overlay::Layer::Edge;
      const bool ej = nodes[j].layer == overlay::Layer::Edge;
      LinkSpec spec;
      if (ei && ej) spec.rtt_ms = 2.0;
      else if (!ei && !ej) spec.rtt_ms = 1.0;
      else spec.rtt_ms = 50.0;
      matrix.set_link(nodes[i].tag, nodes[j].tag, spec);
    }
  }
  return matrix;
}

void SimClock::schedule_at(double t_ms, std::function<void()> fn) {
  // Late scheduling (t below now) is clamped to now: the event is overdue,
  // not in the past.
  queue_.push(Event{std::max(t_ms, now_ms_), next_seq_++, std::move(fn)});
}

int SimClock::advance(double until_ms) {
  if (until_ms < now_ms_)
    raise(Errc::TimeReversal, "advance to " + std::to_string(until_ms) + " before now " +
                                  std::to_string(now_ms_));
  int fired = 0;
  while (!queue_.empty() && queue_.top().t <= until_ms) {
    Event ev = queue_.top();
    queue_.pop();
    now_ms_ = ev.t;
    ev.fn();
    ++fired;
  }
  now_ms_ = until_ms;
  return fired;
}

bool SimClock::step() {
  if (queue_.empty()) return false;
  Event ev = queue_.top();
  queue_.pop();
  now_ms_ = ev.t;
  ev.fn();
  return true;
}

std::optional<double> SimClock::next_event_time() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().t;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

DeliverOutcome schedule_delivery(const LatencyMatrix& matrix, SimClock& clock,
                                 std::mt19937_64& rng, const std::string& src_node,
                                 const std::string& dst_node, std::function<void()> arrival) {
  double latency;
  if (src_node == dst_node) {
    latency = matrix.same_node_ms();
  } else {
    const LinkSpec& spec = matrix.link(src_node, dst_node);
    if (spec.loss_prob > 0.0 && uniform01(rng) < spec.loss_prob) return {true, 0.0};
    latency = spec.rtt_ms / 2.0;
    if (spec.jitter_ms > 0.0) latency += (2.0 * uniform01(rng) - 1.0) * spec.jitter_ms;
    latency = std::max(latency, 0.0);
  }
  clock.schedule_after(latency, std::move(arrival));
  return {false, latency};
}

double expected_response_time(const LatencyMatrix& matrix, const DeploymentLayout& layout,
                              const apps::TaskGraph& app) {
  if (layout.master_node.empty() || layout.user_node.empty() || layout.actor_nodes.empty())
    raise(Errc::IncompleteLayout, "layout must place master, user and at least one actor");
  auto one_way = [&](const std::string& a, const std::string& b) {
    if (a == b) return matrix.same_node_ms();
    return matrix.link(a, b).rtt_ms / 2.0;
  };

  const auto order = apps::topo_order(app);
  const size_t k = layout.actor_nodes.size();
  const size_t t = order.size();

  // The cursor advances t positions per request, so successive requests
  // visit the cursor orbit {0, g, 2g, ...} with g = gcd(t, k).
  const size_t g = std::gcd(t % k == 0 ? k : t % k, k);
  double total = 0.0;
  size_t starts = 0;
  for (size_t start = 0; start < k; start += g) {
    double rt = one_way(layout.user_node, layout.master_node);
    size_t cursor = start;
    for (int idx : order) {
      const std::string& actor_node = layout.actor_nodes[cursor % k];
      cursor++;
      const auto& params = app.tasks[idx].params;
      double busy = 0.0;
      if (params.contains("frames") && params.contains("per_frame_cost_ms"))
        busy = params["frames"].get<int>() * params["per_frame_cost_ms"].get<double>();
      rt += one_way(layout.master_node, actor_node) + busy +
            one_way(actor_node, layout.master_node);
    }
    rt += one_way(layout.master_node, layout.user_node);
    total += rt;
    ++starts;
  }
  return total / static_cast<double>(starts);
}

SimWorld::SimWorld(overlay::MeshPlan plan, LatencyMatrix matrix, comm::BindingStrategy strategy,
                   uint64_t seed)
    : plan_(std::move(plan)), matrix_(std::move(matrix)), strategy_(strategy), rng_(seed) {}

void SimWorld::attach(comm::Component* component, const std::string& node_tag,
                      const Address& addr) {
  if (bindings_.count(addr))
    raise(Errc::DuplicateAddress, "address " + addr.str() + " already bound");
  bindings_[addr] = Binding{component, node_tag};
  component->set_identity(component->component_id().empty() ? addr.str() : component->component_id(),
                          addr);
}

void SimWorld::detach(const Address& addr) { bindings_.erase(addr); }

void SimWorld::set_component_strategy(const std::string& component_id,
                                      comm::BindingStrategy strategy) {
  strategy_overrides_[component_id] = strategy;
}

std::optional<std::string> SimWorld::node_of(const Address& addr) const {
  auto it = bindings_.find(addr);
  if (it == bindings_.end()) return std::nullopt;
  return it->second.node;
}

std::string SimWorld::new_correlation_id() { return "c" + std::to_string(++cid_counter_); }

uint64_t SimWorld::delivered_count_to(const std::string& component_id) const {
  auto it = delivered_per_component_.find(component_id);
  return it == delivered_per_component_.end() ? 0 : it->second;
}

void SimWorld::reset_counters() {
  delivered_count_ = 0;
  delivered_hops_ = 0;
  delivered_per_component_.clear();
}

comm::DeliveryResult SimWorld::deliver(comm::Envelope env, const std::string& src_node) {
  auto dst_it = bindings_.find(env.dst);
  if (dst_it == bindings_.end()) return {comm::Delivery::RoutingError, 0.0};

  double latency;
  const std::string& dst_node = dst_it->second.node;
  if (src_node == dst_node) {
    latency = matrix_.same_node_ms();
  } else {
    const LinkSpec& spec = matrix_.link(src_node, dst_node);
    if (spec.loss_prob > 0.0 && uniform01(rng_) < spec.loss_prob)
      return {comm::Delivery::Dropped, 0.0};
    latency = spec.rtt_ms / 2.0;
    if (spec.jitter_ms > 0.0) latency += (2.0 * uniform01(rng_) - 1.0) * spec.jitter_ms;
    latency = std::max(latency, 0.0);
  }
  clock_.schedule_after(send_delay_ + latency,
                        [this, env = std::move(env)]() mutable { dispatch(std::move(env)); });
  return {comm::Delivery::Delivered, latency};
}

void SimWorld::dispatch(comm::Envelope env) {
  auto it = bindings_.find(env.dst);
  if (it == bindings_.end()) return;  // component left between send and arrival
  comm::Component* component = it->second.component;
  const std::string node = it->second.node;

  double& busy_until = busy_until_[component->component_id()];
  const double now = clock_.now_ms();
  if (busy_until > now) {
    // Inbox discipline: one message at a time; requeue at the moment the
    // component frees up. Queue order preserves arrival order on ties.
    clock_.schedule_at(busy_until, [this, env = std::move(env)]() mutable { dispatch(std::move(env)); });
    return;
  }

  delivered_count_++;
  delivered_hops_ += static_cast<uint64_t>(env.hop_count);
  delivered_per_component_[component->component_id()]++;
  if (on_delivered) on_delivered(env);

  struct DispatchContext final : comm::Context {
    SimWorld* world;
    comm::Component* self;
    std::string node;
    double start;
    double busy_spent = 0.0;

    double now_ms() override { return start + busy_spent; }
    void busy_for(double ms) override {
      if (ms > 0) {
        busy_spent += ms;
        world->send_delay_ = busy_spent;
      }
    }
    comm::DeliveryResult send(comm::Envelope out) override {
      out.src = self->bound_address();
      out.reply_to = self->bound_address();
      if (out.correlation_id.empty()) out.correlation_id = world->new_correlation_id();
      return forward(std::move(out));
    }
    comm::DeliveryResult forward(comm::Envelope out) override {
      auto strat_it = world->strategy_overrides_.find(self->component_id());
      const comm::BindingStrategy& strategy = strat_it != world->strategy_overrides_.end()
                                                  ? strat_it->second
                                                  : world->strategy_;
      return comm::send(*world, world->plan_, strategy, node, std::move(out));
    }
    std::string new_correlation_id() override { return world->new_correlation_id(); }
  };

  DispatchContext ctx;
  ctx.world = this;
  ctx.self = component;
  ctx.node = node;
  ctx.start = now;
  send_delay_ = 0.0;
  component->on_message(ctx, env);
  send_delay_ = 0.0;
  if (ctx.busy_spent > 0) busy_until = now + ctx.busy_spent;
}

comm::DeliveryResult SimWorld::send_from(comm::Component& sender, comm::Envelope env) {
  env.src = sender.bound_address();
  env.reply_to = sender.bound_address();
  if (env.correlation_id.empty()) env.correlation_id = new_correlation_id();
  auto node = node_of(sender.bound_address());
  if (!node) raise(Errc::InvalidArgument, "sender is not attached to the world");
  auto strat_it = strategy_overrides_.find(sender.component_id());
  const comm::BindingStrategy& strategy =
      strat_it != strategy_overrides_.end() ? strat_it->second : strategy_;
  return comm::send(*this, plan_, strategy, *node, std::move(env));
}

comm::DeliveryResult SimWorld::send_from_node(const std::string& node_tag, comm::Envelope env) {
  return comm::send(*this, plan_, comm::BindingStrategy::host_network(), node_tag, std::move(env));
}

void SimWorld::run_until_idle(double max_ms) {
  while (auto t = clock_.next_event_time()) {
    if (*t > max_ms) break;
    clock_.step();
  }
}

}  // namespace fogline::simnet
