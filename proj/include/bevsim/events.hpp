#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bevsim/scene.hpp"

namespace bevsim {

enum class EventKind { Enter, Exit, Collision };
enum class EventSource { Observed, Predicted, Counterfactual };

const char* event_kind_name(EventKind k);
const char* event_source_name(EventSource s);
std::optional<EventKind> event_kind_from_name(const std::string& name);
std::optional<EventSource> event_source_from_name(const std::string& name);

struct Event {
  EventKind kind = EventKind::Enter;
  int frame = 0;
  std::vector<int> participants;  // 1 body for Enter/Exit, 2 for Collision
  EventSource source = EventSource::Observed;

  bool involves(int body_id) const;
  bool operator==(const Event& o) const = default;
};

using EventLog = std::vector<Event>;

/// Contact metadata recorded by the simulator, one entry per resolved or
/// detected overlap per substep.
struct ContactRecord {
  int substep = 0;  // global substep index at detection time
  int i = -1;
  int j = -1;     // -1 for wall contacts
  int wall = -1;  // wall index, or -1
  bool impulse_applied = false;
  double approach_speed = 0.0;
};

/// Enter/exit from visibility plus one Collision per contact onset
/// (contiguous per-pair overlap runs collapse to their first frame).
EventLog extract_events(const Trajectory& trajectory, const SceneConfig& scene,
                        const std::vector<ContactRecord>& contacts,
                        EventSource source = EventSource::Observed);

/// DAG over events: edge E1 -> E2 iff E1 happens strictly earlier and the
/// two events share at least one participant. Ancestors are computed as the
/// transitive closure of reversed edges.
struct CausalGraph {
  std::vector<Event> events;
  std::vector<std::vector<int>> children;  // adjacency by event index

  std::vector<int> ancestors_of(int event_index) const;
  int index_of(const Event& e) const;  // -1 if absent
};

CausalGraph build_causal_graph(const EventLog& events);

}  // namespace bevsim
