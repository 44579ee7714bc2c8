#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace fogline::apps {

/// One task of an application; `params` carries the kind's fixed knobs and
/// the input bindings resolved by the scheduler at dispatch time.
struct TaskNode {
  std::string task_kind;
  nlohmann::json params = nlohmann::json::object();
};

/// An application as a DAG of dependent tasks.
struct TaskGraph {
  std::string app_name;
  std::vector<TaskNode> tasks;
  std::vector<std::pair<int, int>> edges;
};

enum class Resolution { R480, R240 };

struct FrameStreamSpec {
  Resolution resolution = Resolution::R480;
  int frame_count = 1;
  double per_frame_cost_ms = 0.0;
};

// Per-frame compute budgets; calibration constants, not measurements.
inline constexpr double kFrameCost480Ms = 8.0;
inline constexpr double kFrameCost240Ms = 3.0;
inline constexpr int kDefaultFrameCount = 10;

/// The serialized arithmetic app: s = a+b, p = s*c, r = p/d as a
/// three-task chain.
TaskGraph build_formula_app();

/// Direct evaluation of the same formula, bypassing the distributed path.
double eval_formula_reference(double a, double b, double c, double d);

/// Synthetic frame-stream app: one streaming task, cost proportional to
/// frame count and resolution.
TaskGraph build_facedetection_app(Resolution res, int frames);

/// Looks up an application by its registry tag: Formula, FD480 or FD240.
TaskGraph app_by_tag(const std::string& tag);
bool is_known_app_tag(const std::string& tag);

struct TaskOutcome {
  nlohmann::json output;
  double busy_ms = 0.0;
};

/// Runs one task: exact arithmetic for the formula kinds, a seeded
/// detection stub plus simulated per-frame cost for fd-frame.
TaskOutcome execute_task(const std::string& kind, const nlohmann::json& params,
                         const nlohmann::json& input);

/// Kahn topological order; the formula chain has exactly one.
std::vector<int> topo_order(const TaskGraph& graph);

/// Deterministic stub hash used for fd-frame detections.
uint64_t mix64(uint64_t x);

}  // namespace fogline::apps
