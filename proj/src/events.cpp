#include "bevsim/events.hpp"

#include <algorithm>
#include <map>

namespace bevsim {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Enter: return "enter";
    case EventKind::Exit: return "exit";
    case EventKind::Collision: return "collision";
  }
  return "enter";
}

const char* event_source_name(EventSource s) {
  switch (s) {
    case EventSource::Observed: return "observed";
    case EventSource::Predicted: return "predicted";
    case EventSource::Counterfactual: return "counterfactual";
  }
  return "observed";
}

std::optional<EventKind> event_kind_from_name(const std::string& name) {
  if (name == "enter") return EventKind::Enter;
  if (name == "exit") return EventKind::Exit;
  if (name == "collision") return EventKind::Collision;
  return std::nullopt;
}

std::optional<EventSource> event_source_from_name(const std::string& name) {
  if (name == "observed") return EventSource::Observed;
  if (name == "predicted") return EventSource::Predicted;
  if (name == "counterfactual") return EventSource::Counterfactual;
  return std::nullopt;
}

bool Event::involves(int body_id) const {
  return std::find(participants.begin(), participants.end(), body_id) != participants.end();
}

EventLog extract_events(const Trajectory& trajectory, const SceneConfig& scene,
                        const std::vector<ContactRecord>& contacts, EventSource source) {
  EventLog log;
  const int frames = trajectory.frame_count();
  if (frames == 0) return log;
  const int bodies = trajectory.body_count();
  const int substeps = scene.physics.substeps_per_frame;

  for (int b = 0; b < bodies; ++b) {
    const int id = trajectory.frames[0].bodies[b].id;
    int first_inside = -1;
    int last_inside = -1;
    for (int f = 0; f < frames; ++f) {
      const auto& s = trajectory.frames[f].bodies[b];
      if (scene.visibility.contains({s.x, s.y})) {
        if (first_inside < 0) first_inside = f;
        last_inside = f;
      }
    }
    if (first_inside < 0) continue;  // never visible: no events for this body
    log.push_back({EventKind::Enter, trajectory.frames[first_inside].frame, {id}, source});
    if (last_inside + 1 < frames) {
      log.push_back({EventKind::Exit, trajectory.frames[last_inside + 1].frame, {id}, source});
    }
  }

  // Collision onsets: collapse contiguous per-pair overlap runs (consecutive
  // substeps) to their first substep, then attribute that substep to the
  // frame interval containing it.
  std::map<std::pair<int, int>, int> last_substep;
  for (const auto& c : contacts) {
    if (c.j < 0) continue;  // wall bounces are not events
    const std::pair<int, int> key{c.i, c.j};
    auto it = last_substep.find(key);
    const bool onset = (it == last_substep.end() || c.substep > it->second + 1);
    last_substep[key] = c.substep;
    if (!onset) continue;
    const int frame = c.substep / substeps;
    const int id_a = trajectory.frames[0].bodies[c.i].id;
    const int id_b = trajectory.frames[0].bodies[c.j].id;
    log.push_back({EventKind::Collision, frame, {id_a, id_b}, source});
  }

  std::stable_sort(log.begin(), log.end(), [](const Event& a, const Event& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.participants < b.participants;
  });
  return log;
}

int CausalGraph::index_of(const Event& e) const {
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (events[k] == e) return static_cast<int>(k);
  }
  return -1;
}

std::vector<int> CausalGraph::ancestors_of(int event_index) const {
  std::vector<bool> seen(events.size(), false);
  std::vector<int> stack{event_index};
  std::vector<int> out;
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    for (std::size_t k = 0; k < events.size(); ++k) {
      if (seen[k]) continue;
      const auto& kids = children[k];
      if (std::find(kids.begin(), kids.end(), cur) != kids.end()) {
        seen[k] = true;
        out.push_back(static_cast<int>(k));
        stack.push_back(static_cast<int>(k));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

CausalGraph build_causal_graph(const EventLog& events) {
  CausalGraph g;
  g.events = events;
  g.children.resize(events.size());
  for (std::size_t a = 0; a < events.size(); ++a) {
    for (std::size_t b = 0; b < events.size(); ++b) {
      if (a == b || events[a].frame >= events[b].frame) continue;
      const bool shared = std::any_of(
          events[a].participants.begin(), events[a].participants.end(),
          [&](int p) { return events[b].involves(p); });
      if (shared) g.children[a].push_back(static_cast<int>(b));
    }
  }
  return g;
}

}  // namespace bevsim
