#include "fogline/apps.hpp"

#include <algorithm>

#include "fogline/error.hpp"

namespace fogline::apps {

namespace {

double require_number(const nlohmann::json& input, const char* key) {
  if (!input.is_object() || !input.contains(key) || !input[key].is_number())
    raise(Errc::BadInput, std::string("missing numeric field '") + key + "'");
  return input[key].get<double>();
}

}  // namespace

uint64_t mix64(uint64_t x) {
  // splitmix64 finalizer; platform-independent, unlike std::hash
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

TaskGraph build_formula_app() {
  TaskGraph graph;
  graph.app_name = "Formula";
  graph.tasks = {
      {"formula-add", {{"bind", {{"lhs", "a"}, {"rhs", "b"}}}}},
      {"formula-mul", {{"bind", {{"lhs", "$prev"}, {"rhs", "c"}}}}},
      {"formula-div", {{"bind", {{"lhs", "$prev"}, {"rhs", "d"}}}}},
  };
  graph.edges = {{0, 1}, {1, 2}};
  return graph;
}

double eval_formula_reference(double a, double b, double c, double d) {
  if (d == 0.0) raise(Errc::DivisionByZero, "formula divides by d = 0");
  return (a + b) * c / d;
}

TaskGraph build_facedetection_app(Resolution res, int frames) {
  if (frames < 1) raise(Errc::InvalidArgument, "frame stream needs at least one frame");
  const double cost = res == Resolution::R480 ? kFrameCost480Ms : kFrameCost240Ms;
  TaskGraph graph;
  graph.app_name = res == Resolution::R480 ? "FD480" : "FD240";
  graph.tasks = {{"fd-frame",
                  {{"resolution", res == Resolution::R480 ? "480" : "240"},
                   {"frames", frames},
                   {"per_frame_cost_ms", cost},
                   {"bind", {{"seed", "seed"}}}}}};
  return graph;
}

bool is_known_app_tag(const std::string& tag) {
  return tag == "Formula" || tag == "FD480" || tag == "FD240";
}

TaskGraph app_by_tag(const std::string& tag) {
  if (tag == "Formula") return build_formula_app();
  if (tag == "FD480") return build_facedetection_app(Resolution::R480, kDefaultFrameCount);
  if (tag == "FD240") return build_facedetection_app(Resolution::R240, kDefaultFrameCount);
  raise(Errc::UnknownApp, "no application tagged '" + tag + "'");
}

TaskOutcome execute_task(const std::string& kind, const nlohmann::json& params,
                         const nlohmann::json& input) {
  if (kind == "formula-add") {
    return {{{"value", require_number(input, "lhs") + require_number(input, "rhs")}}, 0.0};
  }
  if (kind == "formula-mul") {
    return {{{"value", require_number(input, "lhs") * require_number(input, "rhs")}}, 0.0};
  }
  if (kind == "formula-div") {
    const double rhs = require_number(input, "rhs");
    if (rhs == 0.0) raise(Errc::BadInput, "division by zero");
    return {{{"value", require_number(input, "lhs") / rhs}}, 0.0};
  }
  if (kind == "fd-frame") {
    if (!params.contains("frames") || !params.contains("per_frame_cost_ms"))
      raise(Errc::BadInput, "fd-frame needs 'frames' and 'per_frame_cost_ms' params");
    const int frames = params["frames"].get<int>();
    const double cost = params["per_frame_cost_ms"].get<double>();
    const uint64_t seed =
        input.is_object() && input.contains("seed") ? input["seed"].get<uint64_t>() : 0;
    uint64_t detections = 0;
    for (int i = 0; i < frames; ++i) detections += mix64(seed ^ static_cast<uint64_t>(i)) % 5;
    nlohmann::json out{{"value", static_cast<double>(detections)},
                       {"frames", frames},
                       {"detections", detections}};
    return {std::move(out), frames * cost};
  }
  raise(Errc::UnknownTaskKind, "no executor implementation for '" + kind + "'");
}

std::vector<int> topo_order(const TaskGraph& graph) {
  const int n = static_cast<int>(graph.tasks.size());
  std::vector<int> indegree(n, 0);
  for (const auto& [from, to] : graph.edges) {
    if (from < 0 || from >= n || to < 0 || to >= n)
      raise(Errc::InvalidArgument, "edge endpoint outside task list");
    ++indegree[to];
  }
  std::vector<int> order;
  std::vector<int> ready;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<>());
    int next = ready.back();
    ready.pop_back();
    order.push_back(next);
    for (const auto& [from, to] : graph.edges)
      if (from == next && --indegree[to] == 0) ready.push_back(to);
  }
  if (static_cast<int>(order.size()) != n)
    raise(Errc::InvalidArgument, "task graph has a cycle");
  return order;
}

}  // namespace fogline::apps
