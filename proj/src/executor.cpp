#include "bevsim/executor.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "bevsim/dynamics.hpp"
#include "bevsim/errors.hpp"

namespace bevsim {

using nlohmann::json;

namespace {

const std::set<std::string> kStandardConcepts = {
    "gray", "red",  "blue",  "green",    "brown",      "cyan",
    "purple", "yellow", "metal", "rubber", "sphere",   "cube",
    "cylinder", "moving", "stationary"};

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

int sentinel_order(const ExecEvent& e) {
  switch (e.sentinel) {
    case ExecEvent::Sentinel::Start: return std::numeric_limits<int>::min() / 2;
    case ExecEvent::Sentinel::End: return std::numeric_limits<int>::max() / 2;
    case ExecEvent::Sentinel::None: break;
  }
  return e.event.frame;
}

std::vector<ExecEvent> wrap_events(const EventLog& log) {
  std::vector<ExecEvent> out;
  out.reserve(log.size());
  for (const auto& e : log) out.push_back({ExecEvent::Sentinel::None, e});
  return out;
}

}  // namespace

json Value::to_json() const {
  auto event_json = [](const ExecEvent& e) -> json {
    if (e.sentinel == ExecEvent::Sentinel::Start) return {{"sentinel", "start"}};
    if (e.sentinel == ExecEvent::Sentinel::End) return {{"sentinel", "end"}};
    return {{"kind", event_kind_name(e.event.kind)},
            {"frame", e.event.frame},
            {"participants", e.event.participants},
            {"source", event_source_name(e.event.source)}};
  };
  switch (tag) {
    case Tag::Objects: return {{"type", "objects"}, {"value", objects}};
    case Tag::Object: return {{"type", "object"}, {"value", object}};
    case Tag::Events: {
      json arr = json::array();
      for (const auto& e : events) arr.push_back(event_json(e));
      return {{"type", "events"}, {"value", arr}};
    }
    case Tag::Event: return {{"type", "event"}, {"value", event_json(event)}};
    case Tag::Int: return {{"type", "int"}, {"value", integer}};
    case Tag::Bool: return {{"type", "bool"}, {"value", boolean}};
    case Tag::Concept: return {{"type", "concept"}, {"value", concept_name}};
    case Tag::Frame: return {{"type", "frame"}, {"value", frame}};
  }
  return {};
}

Program program_from_json(const json& j) {
  if (!j.is_array()) throw DataError("program: expected an array of operations");
  Program program;
  for (const auto& step : j) {
    if (!step.is_object() || !step.contains("op")) {
      throw DataError("program: each step needs an \"op\" field");
    }
    ProgramStep s;
    s.op = step.at("op").get<std::string>();
    s.args = step.value("args", json::array());
    if (!s.args.is_array()) throw DataError("program: \"args\" must be an array");
    program.push_back(std::move(s));
  }
  return program;
}

ExecutionContext make_context(const SceneConfig& fitted, int observed_frames,
                              int horizon) {
  return make_context(fitted, fitted, observed_frames, horizon);
}

ExecutionContext make_context(const SceneConfig& fitted,
                              const SceneConfig& prediction_scene, int observed_frames,
                              int horizon) {
  ExecutionContext ctx;
  ctx.scene = fitted;
  ctx.prediction_scene = prediction_scene;
  ctx.observed_frames = observed_frames;
  ctx.horizon = horizon > 0 ? horizon : observed_frames;
  SimulationResult sim = simulate(fitted, std::max(observed_frames - 1, 1));
  ctx.trajectory = std::move(sim.trajectory);
  ctx.events = std::move(sim.events);
  ctx.graph = build_causal_graph(ctx.events);
  return ctx;
}

std::pair<EventLog, Trajectory> counterfactual_simulation(const SceneConfig& scene,
                                                          int body_id, int n_frames) {
  SceneConfig modified = scene;
  const int index = modified.body_index(body_id);
  if (index < 0) throw UnknownBody(body_id);
  modified.bodies.erase(modified.bodies.begin() + index);
  SimulationResult sim = simulate(modified, n_frames);
  for (auto& e : sim.events) e.source = EventSource::Counterfactual;
  return {std::move(sim.events), std::move(sim.trajectory)};
}

EventLog predictive_simulation(const SceneConfig& prediction_scene, int observed_frames,
                               int horizon) {
  if (horizon < 1) throw DataError("predictive horizon must be >= 1");
  SimulationResult sim =
      simulate(prediction_scene, std::max(observed_frames - 1 + horizon, 1));
  EventLog out;
  for (auto& e : sim.events) {
    if (e.frame < observed_frames) continue;  // already part of the clip
    e.source = EventSource::Predicted;
    out.push_back(std::move(e));
  }
  return out;
}

SceneConfig apply_heavier(const SceneConfig& scene, int body_id) {
  SceneConfig out = scene;
  const int index = out.body_index(body_id);
  if (index < 0) throw UnknownBody(body_id);
  out.bodies[index].params.mass *= 5.0;
  return out;
}

SceneConfig apply_lighter(const SceneConfig& scene, int body_id) {
  SceneConfig out = scene;
  const int index = out.body_index(body_id);
  if (index < 0) throw UnknownBody(body_id);
  out.bodies[index].params.mass *= 0.2;
  return out;
}

namespace {

class Executor {
 public:
  explicit Executor(ExecutionContext& ctx) : ctx_(ctx) {}

  Value run(const Program& program) {
    std::optional<Value> piped;
    for (const auto& step : program) piped = apply(step, piped);
    if (!piped) throw TypeMismatch("empty program");
    return *piped;
  }

 private:
  ExecutionContext& ctx_;

  Value eval_arg(const json& arg, const std::optional<Value>& piped) {
    if (arg.is_string()) {
      const std::string s = arg.get<std::string>();
      if (s == "PIPE") {
        if (!piped) throw TypeMismatch("PIPE with no previous value");
        return *piped;
      }
      Value v;
      v.tag = Value::Tag::Concept;
      v.concept_name = s;
      return v;
    }
    if (arg.is_number_integer()) {
      Value v;
      v.tag = Value::Tag::Int;
      v.integer = arg.get<long long>();
      return v;
    }
    if (arg.is_boolean()) {
      Value v;
      v.tag = Value::Tag::Bool;
      v.boolean = arg.get<bool>();
      return v;
    }
    if (arg.is_array()) {  // nested sub-program
      Executor sub(ctx_);
      return sub.run(program_from_json(arg));
    }
    throw TypeMismatch("unsupported argument kind");
  }

  /// Resolve the op's inputs: explicit args first; if the op needs more
  /// inputs than args supply, the previous value fills the first slot.
  std::vector<Value> inputs(const ProgramStep& step, const std::optional<Value>& piped,
                            std::size_t needed) {
    std::vector<Value> vals;
    for (const auto& a : step.args) vals.push_back(eval_arg(a, piped));
    if (vals.size() < needed) {
      if (!piped) throw TypeMismatch(step.op + ": missing input");
      vals.insert(vals.begin(), *piped);
    }
    if (vals.size() < needed) throw TypeMismatch(step.op + ": missing argument");
    return vals;
  }

  const SceneBody& body(int id) const {
    const SceneBody* b = ctx_.scene.find_body(id);
    if (!b) throw UnknownBody(id);
    return *b;
  }

  std::vector<int> as_objects(const Value& v, const char* op) const {
    if (v.tag == Value::Tag::Objects) return v.objects;
    if (v.tag == Value::Tag::Object) return {v.object};
    throw TypeMismatch(std::string(op) + ": expected objects");
  }

  std::vector<ExecEvent> as_events(const Value& v, const char* op) const {
    if (v.tag == Value::Tag::Events) return v.events;
    if (v.tag == Value::Tag::Event) return {v.event};
    throw TypeMismatch(std::string(op) + ": expected events");
  }

  const Event& as_real_event(const Value& v, const char* op) const {
    if (v.tag != Value::Tag::Event || v.event.sentinel != ExecEvent::Sentinel::None) {
      throw TypeMismatch(std::string(op) + ": expected a concrete event");
    }
    return v.event.event;
  }

  std::string require_concept(const Value& v, const char* op) const {
    if (v.tag != Value::Tag::Concept) throw TypeMismatch(std::string(op) + ": expected a concept");
    return lowercase(v.concept_name);
  }

  bool known_concept(const std::string& c) const {
    if (kStandardConcepts.count(c)) return true;
    for (const auto& b : ctx_.scene.bodies) {
      for (const auto& [key, val] : b.params.attributes) {
        if (lowercase(val) == c) return true;
      }
    }
    return false;
  }

  std::optional<Vec2d> speed_vector(int body_id, int frame) const {
    const int index = ctx_.scene.body_index(body_id);
    const int frames = ctx_.trajectory.frame_count();
    if (index < 0 || frame < 0 || frame >= frames) return std::nullopt;
    const double h = ctx_.scene.physics.frame_dt();
    const int a = frame + 1 < frames ? frame : frame - 1;
    if (a < 0) return std::nullopt;
    const auto& s0 = ctx_.trajectory.at(a, index);
    const auto& s1 = ctx_.trajectory.at(a + 1, index);
    if (!s0.present || !s1.present) return std::nullopt;
    return Vec2d{(s1.x - s0.x) / h, (s1.y - s0.y) / h};
  }

  const EventLog& predicted_events() {
    if (!ctx_.predicted_cache) {
      ctx_.predicted_cache =
          predictive_simulation(ctx_.prediction_scene, ctx_.observed_frames, ctx_.horizon);
    }
    return *ctx_.predicted_cache;
  }

  Value apply(const ProgramStep& step, const std::optional<Value>& piped) {
    const std::string op = lowercase(step.op);
    Value out;

    if (op == "start" || op == "end") {
      out.tag = Value::Tag::Event;
      out.event.sentinel =
          op == "start" ? ExecEvent::Sentinel::Start : ExecEvent::Sentinel::End;
      return out;
    }
    if (op == "objects") {
      out.tag = Value::Tag::Objects;
      for (const auto& b : ctx_.scene.bodies) out.objects.push_back(b.id);
      return out;
    }
    if (op == "events") {
      out.tag = Value::Tag::Events;
      out.events = wrap_events(ctx_.events);
      return out;
    }
    if (op == "unseenevents") {
      out.tag = Value::Tag::Events;
      out.events = wrap_events(predicted_events());
      return out;
    }

    if (op == "query_color" || op == "query_material" || op == "query_shape") {
      auto in = inputs(step, piped, 1);
      if (in[0].tag != Value::Tag::Object) throw TypeMismatch(op + ": expected an object");
      const char* key = op == "query_color" ? "color"
                        : op == "query_material" ? "material"
                                                 : "shape";
      const auto& attrs = body(in[0].object).params.attributes;
      auto it = attrs.find(key);
      out.tag = Value::Tag::Concept;
      out.concept_name = it != attrs.end() ? it->second : "";
      return out;
    }

    if (op == "count") {
      auto in = inputs(step, piped, 1);
      out.tag = Value::Tag::Int;
      if (in[0].tag == Value::Tag::Objects) {
        out.integer = static_cast<long long>(in[0].objects.size());
      } else if (in[0].tag == Value::Tag::Events) {
        out.integer = static_cast<long long>(in[0].events.size());
      } else {
        throw TypeMismatch("count: expected objects or events");
      }
      return out;
    }

    if (op == "exist") {
      auto in = inputs(step, piped, 1);
      out.tag = Value::Tag::Bool;
      if (in[0].tag == Value::Tag::Objects) {
        out.boolean = !in[0].objects.empty();
      } else if (in[0].tag == Value::Tag::Events) {
        out.boolean = !in[0].events.empty();
      } else {
        throw TypeMismatch("exist: expected objects or events");
      }
      return out;
    }

    if (op == "belong_to") {
      auto in = inputs(step, piped, 2);
      if (in[0].tag != Value::Tag::Event) throw TypeMismatch("belong_to: expected an event");
      const auto set = as_events(in[1], "belong_to");
      out.tag = Value::Tag::Bool;
      out.boolean = std::find(set.begin(), set.end(), in[0].event) != set.end();
      return out;
    }

    if (op == "negate") {
      auto in = inputs(step, piped, 1);
      if (in[0].tag != Value::Tag::Bool) throw TypeMismatch("negate: expected a bool");
      out.tag = Value::Tag::Bool;
      out.boolean = !in[0].boolean;
      return out;
    }

    if (op == "counterfactual_simulation") {
      auto in = inputs(step, piped, 1);
      if (in[0].tag != Value::Tag::Object) {
        throw TypeMismatch("counterfactual_simulation: expected an object");
      }
      const int target = in[0].object;
      SceneConfig modified = ctx_.scene;
      for (const auto& [id, mass] : ctx_.mass_override) {
        const int index = modified.body_index(id);
        if (index < 0) throw UnknownBody(id);
        modified.bodies[index].params.mass = mass;
      }
      EventLog log;
      if (ctx_.mass_override.count(target)) {
        // A mass-modified target stays in the scene ("what if it were
        // heavier"), only removal questions drop the body.
        SimulationResult sim = simulate(modified, std::max(ctx_.observed_frames - 1, 1));
        for (auto& e : sim.events) e.source = EventSource::Counterfactual;
        log = std::move(sim.events);
      } else {
        log = counterfactual_simulation(modified, target,
                                        std::max(ctx_.observed_frames - 1, 1))
                  .first;
      }
      out.tag = Value::Tag::Events;
      out.events = wrap_events(log);
      return out;
    }

    if (op == "predictive_simulation") {
      inputs(step, piped, 1);  // objects input is the pipe; rollouts cover the scene
      out.tag = Value::Tag::Events;
      out.events = wrap_events(predicted_events());
      return out;
    }

    if (op == "apply_heavier" || op == "apply_lighter") {
      auto in = inputs(step, piped, 1);
      if (in[0].tag != Value::Tag::Object) throw TypeMismatch(op + ": expected an object");
      const double factor = op == "apply_heavier" ? 5.0 : 0.2;
      const int id = in[0].object;
      const double current = ctx_.mass_override.count(id) ? ctx_.mass_override[id]
                                                          : body(id).params.mass;
      ctx_.mass_override[id] = current * factor;
      return in[0];
    }

    if (op == "filter_static_concept") {
      auto in = inputs(step, piped, 2);
      const auto objs = as_objects(in[0], "filter_static_concept");
      const std::string concept_value = require_concept(in[1], "filter_static_concept");
      if (!known_concept(concept_value)) throw UnknownConcept(concept_value);
      out.tag = Value::Tag::Objects;
      for (int id : objs) {
        for (const auto& [key, val] : body(id).params.attributes) {
          if (lowercase(val) == concept_value) {
            out.objects.push_back(id);
            break;
          }
        }
      }
      return out;
    }

    if (op == "filter_dynamic_concept") {
      auto in = inputs(step, piped, 3);
      const auto objs = as_objects(in[0], "filter_dynamic_concept");
      const std::string concept_value = require_concept(in[1], "filter_dynamic_concept");
      if (concept_value != "moving" && concept_value != "stationary") throw UnknownConcept(concept_value);
      int frame = 0;
      if (in[2].tag == Value::Tag::Int) {
        frame = static_cast<int>(in[2].integer);
      } else if (in[2].tag == Value::Tag::Frame) {
        frame = in[2].frame;
      } else {
        throw TypeMismatch("filter_dynamic_concept: expected a frame");
      }
      out.tag = Value::Tag::Objects;
      for (int id : objs) {
        const auto vel = speed_vector(id, frame);
        if (!vel) continue;  // not observable at that frame
        const bool moving = norm(*vel) > kMoveSpeedThreshold;
        if (moving == (concept_value == "moving")) out.objects.push_back(id);
      }
      return out;
    }

    if (op == "unique") {
      auto in = inputs(step, piped, 1);
      if (in[0].tag == Value::Tag::Objects) {
        if (in[0].objects.size() != 1) throw UniqueViolation(in[0].objects.size());
        out.tag = Value::Tag::Object;
        out.object = in[0].objects[0];
        return out;
      }
      if (in[0].tag == Value::Tag::Events) {
        if (in[0].events.size() != 1) throw UniqueViolation(in[0].events.size());
        out.tag = Value::Tag::Event;
        out.event = in[0].events[0];
        return out;
      }
      throw TypeMismatch("unique: expected objects or events");
    }

    if (op == "filter_in" || op == "filter_out") {
      auto in = inputs(step, piped, 2);
      const auto evs = as_events(in[0], op.c_str());
      const auto objs = as_objects(in[1], op.c_str());
      const EventKind kind = op == "filter_in" ? EventKind::Enter : EventKind::Exit;
      out.tag = Value::Tag::Events;
      for (const auto& e : evs) {
        if (e.sentinel != ExecEvent::Sentinel::None || e.event.kind != kind) continue;
        if (std::any_of(objs.begin(), objs.end(),
                        [&](int id) { return e.event.involves(id); })) {
          out.events.push_back(e);
        }
      }
      return out;
    }

    if (op == "filter_collision") {
      auto in = inputs(step, piped, 2);
      const auto evs = as_events(in[0], "filter_collision");
      const auto objs = as_objects(in[1], "filter_collision");
      out.tag = Value::Tag::Events;
      for (const auto& e : evs) {
        if (e.sentinel != ExecEvent::Sentinel::None ||
            e.event.kind != EventKind::Collision) {
          continue;
        }
        if (std::any_of(objs.begin(), objs.end(),
                        [&](int id) { return e.event.involves(id); })) {
          out.events.push_back(e);
        }
      }
      return out;
    }

    if (op == "get_col_partner") {
      auto in = inputs(step, piped, 2);
      const Event& e = as_real_event(in[0], "get_col_partner");
      if (in[1].tag != Value::Tag::Object) {
        throw TypeMismatch("get_col_partner: expected an object");
      }
      if (e.kind != EventKind::Collision || !e.involves(in[1].object)) {
        throw TypeMismatch("get_col_partner: object not part of the collision");
      }
      out.tag = Value::Tag::Object;
      out.object = e.participants[0] == in[1].object ? e.participants[1]
                                                     : e.participants[0];
      return out;
    }

    if (op == "filter_before" || op == "filter_after") {
      auto in = inputs(step, piped, 2);
      const auto evs = as_events(in[0], op.c_str());
      if (in[1].tag != Value::Tag::Event) throw TypeMismatch(op + ": expected a target event");
      const int pivot = sentinel_order(in[1].event);
      out.tag = Value::Tag::Events;
      for (const auto& e : evs) {
        const int f = sentinel_order(e);
        if ((op == "filter_before" && f < pivot) || (op == "filter_after" && f > pivot)) {
          out.events.push_back(e);
        }
      }
      return out;
    }

    if (op == "filter_order") {
      auto in = inputs(step, piped, 2);
      auto evs = as_events(in[0], "filter_order");
      const std::string order = require_concept(in[1], "filter_order");
      if (evs.empty()) throw UniqueViolation(0);
      std::stable_sort(evs.begin(), evs.end(), [](const ExecEvent& a, const ExecEvent& b) {
        const int fa = sentinel_order(a), fb = sentinel_order(b);
        if (fa != fb) return fa < fb;
        return a.event.participants < b.event.participants;  // documented tie-break
      });
      out.tag = Value::Tag::Event;
      if (order == "first") {
        out.event = evs.front();
      } else if (order == "second") {
        if (evs.size() < 2) throw UniqueViolation(evs.size());
        out.event = evs[1];
      } else if (order == "last") {
        out.event = evs.back();
      } else {
        throw UnknownConcept(order);
      }
      return out;
    }

    if (op == "filter_ancestor") {
      auto in = inputs(step, piped, 2);
      const Event& target = as_real_event(in[0], "filter_ancestor");
      const auto candidates = as_events(in[1], "filter_ancestor");
      const int index = ctx_.graph.index_of(target);
      if (index < 0) throw TypeMismatch("filter_ancestor: event not in the causal graph");
      const auto ancestors = ctx_.graph.ancestors_of(index);
      out.tag = Value::Tag::Events;
      for (const auto& c : candidates) {
        if (c.sentinel != ExecEvent::Sentinel::None) continue;
        for (int a : ancestors) {
          if (ctx_.graph.events[a] == c.event) {
            out.events.push_back(c);
            break;
          }
        }
      }
      return out;
    }

    if (op == "get_frame") {
      auto in = inputs(step, piped, 1);
      if (in[0].tag != Value::Tag::Event) throw TypeMismatch("get_frame: expected an event");
      out.tag = Value::Tag::Frame;
      if (in[0].event.sentinel == ExecEvent::Sentinel::Start) {
        out.frame = 0;
      } else if (in[0].event.sentinel == ExecEvent::Sentinel::End) {
        out.frame = std::max(ctx_.observed_frames - 1, 0);
      } else {
        out.frame = in[0].event.event.frame;
      }
      return out;
    }

    throw TypeMismatch("unknown operation: " + step.op);
  }
};

}  // namespace

Value execute_program(const Program& program, ExecutionContext& ctx) {
  Executor executor(ctx);
  return executor.run(program);
}

}  // namespace bevsim
