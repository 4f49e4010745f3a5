#include "tensegrity/tensegrity.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tensegrity/control.hpp"
#include "tensegrity/dynamics.hpp"
#include "tensegrity/gallery.hpp"
#include "tensegrity/lab.hpp"
#include "tensegrity/model.hpp"
#include "tensegrity/report.hpp"
#include "tensegrity/topology_io.hpp"

struct tsg_structure {
  tensegrity::StructureDef def;
};
struct tsg_config {
  tensegrity::SimConfig config;
};
struct tsg_world {
  tensegrity::WorldState state;
};
struct tsg_program {
  tensegrity::ControllerProgram program;
};
struct tsg_trajectory {
  tensegrity::TrajectoryRecord record;
};
struct tsg_manifest {
  tensegrity::RunManifest manifest;
};

namespace {

using namespace tensegrity;

thread_local std::string g_last_error;

struct ApiError : std::runtime_error {
  ApiError(tsg_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  tsg_status status;
};

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

template <typename F>
tsg_status guard(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const ApiError& e) {
    g_last_error = e.what();
    return e.status;
  } catch (const DivergenceError& e) {
    g_last_error = e.what();
    return TSG_ERR_DIVERGED;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return TSG_ERR_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TSG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TSG_ERR_INTERNAL;
  }
}

template <typename T>
const T& need(const T* p, const char* what) {
  if (!p) throw ApiError(TSG_ERR_ARGUMENT, std::string(what) + " is NULL");
  return *p;
}
template <typename T>
T& need(T* p, const char* what) {
  if (!p) throw ApiError(TSG_ERR_ARGUMENT, std::string(what) + " is NULL");
  return *p;
}

const char* need_str(const char* p, const char* what) {
  if (!p) throw ApiError(TSG_ERR_ARGUMENT, std::string(what) + " is NULL");
  return p;
}

std::string read_file(const char* path) {
  if (!path) throw ApiError(TSG_ERR_ARGUMENT, "path is NULL");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ApiError(TSG_ERR_IO, std::string("cannot read ") + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw ApiError(TSG_ERR_IO, std::string("error reading ") + path);
  return ss.str();
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

template <typename E>
std::string join_errors(const std::vector<E>& errors) {
  std::string out;
  for (const auto& e : errors) out += e.str() + "\n";
  return out;
}

/// Built-in metadata for a structure carrying a built-in name, or nullptr.
const BuiltinModel* builtin_for(const std::string& name) {
  static const std::map<std::string, BuiltinModel> models = [] {
    std::map<std::string, BuiltinModel> m;
    for (const auto& n : builtin_names()) m.emplace(n, builtin_model(n));
    return m;
  }();
  const auto it = models.find(name);
  return it == models.end() ? nullptr : &it->second;
}

MotionMeasure resolve_measure(const StructureDef& s, const char* text) {
  if (!text || !*text) throw ApiError(TSG_ERR_ARGUMENT, "measure is empty");
  const std::string spec(text);
  if (spec.find(':') != std::string::npos) return parse_measure(spec);
  const BuiltinModel* model = builtin_for(s.name);
  if (!model) throw ApiError(TSG_ERR_ARGUMENT, "structure '" + s.name + "' has no presets; give a measure spec");
  const DofGroup* dof = find_dof(*model, spec);
  if (!dof) throw ApiError(TSG_ERR_ARGUMENT, "unknown preset '" + spec + "' for " + s.name);
  return dof->measure;
}

std::vector<NodeRef> parse_markers(const StructureDef& s, const char* text) {
  if (!text || !*text) throw ApiError(TSG_ERR_ARGUMENT, "marker list is empty");
  std::vector<NodeRef> out;
  std::string_view rest(text);
  while (true) {
    const std::size_t comma = rest.find(',');
    NodeRef ref = parse_node_ref(rest.substr(0, comma));
    const RigidBodySpec* b = s.find_body(ref.body);
    if (!b || !b->find_node(ref.node)) throw ApiError(TSG_ERR_ARGUMENT, "unresolved marker " + ref.str());
    out.push_back(std::move(ref));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

void add_unique(std::vector<NodeRef>& markers, const std::vector<NodeRef>& more) {
  for (const auto& m : more)
    if (std::find(markers.begin(), markers.end(), m) == markers.end()) markers.push_back(m);
}

void check_world(const StructureDef& s, const WorldState& w) {
  if (w.body_states.size() != s.bodies.size() || w.commanded_lengths.size() != s.active_cable_indices().size())
    throw ApiError(TSG_ERR_ARGUMENT, "world does not belong to structure " + s.name);
}

void check_program(const ControllerProgram& p, const StructureDef& s) {
  if (const auto problems = validate_program(p, s); !problems.empty())
    throw ApiError(TSG_ERR_VALIDATION, join_lines(problems));
}

ExperimentTiming timing_of(const tsg_timing* t) {
  ExperimentTiming out;
  if (!t) return out;
  if (t->duration > 0) out.duration = t->duration;
  if (t->sample_period > 0) out.sample_period = t->sample_period;
  if (t->settle_tol > 0) out.settle_tol = t->settle_tol;
  if (t->settle_max_time > 0) out.settle_max_time = t->settle_max_time;
  return out;
}

tsg_status finish_parse(StructureParse&& r, tsg_structure** out, char** diagnostics) {
  if (!r.ok()) {
    put(diagnostics, join_errors(r.errors));
    throw ApiError(TSG_ERR_VALIDATION, r.errors.empty() ? "invalid structure" : r.errors.front().str());
  }
  put(diagnostics, "");
  *out = new tsg_structure{std::move(*r.structure)};
  return TSG_OK;
}

tsg_status finish_parse(ProgramParse&& r, tsg_program** out, char** diagnostics) {
  if (!r.ok()) {
    put(diagnostics, join_errors(r.errors));
    throw ApiError(TSG_ERR_VALIDATION, r.errors.empty() ? "invalid program" : r.errors.front().str());
  }
  put(diagnostics, "");
  *out = new tsg_program{std::move(*r.program)};
  return TSG_OK;
}

}  // namespace

extern "C" {

const char* tsg_version(void) { return library_version(); }

const char* tsg_status_name(tsg_status status) {
  switch (status) {
    case TSG_OK: return "ok";
    case TSG_ERR_ARGUMENT: return "invalid argument";
    case TSG_ERR_VALIDATION: return "validation failed";
    case TSG_ERR_IO: return "i/o error";
    case TSG_ERR_NOT_CONVERGED: return "not converged";
    case TSG_ERR_DIVERGED: return "diverged";
    case TSG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* tsg_last_error(void) { return g_last_error.c_str(); }

void tsg_string_free(char* s) { std::free(s); }

tsg_status tsg_builtin_names(char** out) {
  return guard([&] {
    need(out, "out");
    put(out, join_lines(builtin_names()));
    return TSG_OK;
  });
}

tsg_status tsg_structure_builtin(const char* name, tsg_structure** out) {
  return guard([&] {
    need(out, "out");
    const BuiltinModel* m = builtin_for(name ? name : "");
    if (!m)
      throw ApiError(TSG_ERR_ARGUMENT, "unknown built-in model '" + std::string(name ? name : "") +
                                           "' (expected elbow, tetra-arm or saddle-arm)");
    *out = new tsg_structure{m->structure};
    return TSG_OK;
  });
}

tsg_status tsg_structure_parse(const char* text, tsg_structure** out, char** diagnostics) {
  return guard([&] {
    need(out, "out");
    return finish_parse(parse_structure(need_str(text, "text")), out, diagnostics);
  });
}

tsg_status tsg_structure_load(const char* path, tsg_structure** out, char** diagnostics) {
  return guard([&] {
    need(out, "out");
    return finish_parse(parse_structure(read_file(path)), out, diagnostics);
  });
}

tsg_status tsg_structure_serialize(const tsg_structure* s, char** out) {
  return guard([&] {
    put(&need(out, "out"), serialize_structure(need(s, "structure").def));
    return TSG_OK;
  });
}

tsg_status tsg_structure_validate(const tsg_structure* s, char** diagnostics) {
  return guard([&] {
    const auto violations = validate_structure(need(s, "structure").def);
    put(diagnostics, join_errors(violations));
    if (!violations.empty()) throw ApiError(TSG_ERR_VALIDATION, violations.front().str());
    return TSG_OK;
  });
}

tsg_status tsg_structure_name(const tsg_structure* s, char** out) {
  return guard([&] {
    put(&need(out, "out"), need(s, "structure").def.name);
    return TSG_OK;
  });
}

size_t tsg_structure_body_count(const tsg_structure* s) { return s ? s->def.bodies.size() : 0; }

size_t tsg_structure_cable_count(const tsg_structure* s) { return s ? s->def.cables.size() : 0; }

tsg_status tsg_structure_presets(const tsg_structure* s, char** out) {
  return guard([&] {
    std::vector<std::string> names;
    if (const BuiltinModel* m = builtin_for(need(s, "structure").def.name))
      for (const auto& d : m->dofs) names.push_back(d.preset);
    put(&need(out, "out"), join_lines(names));
    return TSG_OK;
  });
}

tsg_status tsg_structure_end_effector(const tsg_structure* s, char** out) {
  return guard([&] {
    const BuiltinModel* m = builtin_for(need(s, "structure").def.name);
    if (!m) throw ApiError(TSG_ERR_ARGUMENT, "structure '" + s->def.name + "' has no default end effector");
    put(&need(out, "out"), m->end_effector.str());
    return TSG_OK;
  });
}

void tsg_structure_free(tsg_structure* s) { delete s; }

tsg_status tsg_config_create(double dt, tsg_config** out) {
  return guard([&] {
    need(out, "out");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ApiError(TSG_ERR_ARGUMENT, "dt must be > 0");
    auto* c = new tsg_config{};
    c->config.dt = dt;
    *out = c;
    return TSG_OK;
  });
}

tsg_status tsg_config_add_obstacle(tsg_config* c, const char* spec) {
  return guard([&] {
    need(c, "config").config.obstacles.push_back(parse_obstacle(need_str(spec, "spec")));
    return TSG_OK;
  });
}

size_t tsg_config_obstacle_count(const tsg_config* c) { return c ? c->config.obstacles.size() : 0; }

void tsg_config_free(tsg_config* c) { delete c; }

tsg_status tsg_world_initial(const tsg_structure* s, tsg_world** out) {
  return guard([&] {
    need(out, "out");
    *out = new tsg_world{initial_state(need(s, "structure").def)};
    return TSG_OK;
  });
}

tsg_status tsg_world_load_state(const tsg_structure* s, const char* text, tsg_world** out) {
  return guard([&] {
    need(out, "out");
    const DocNode doc = parse_document(need_str(text, "text"));
    *out = new tsg_world{state_from_document(need(s, "structure").def, doc)};
    return TSG_OK;
  });
}

tsg_status tsg_world_settle(const tsg_structure* s, const tsg_config* c, tsg_world* w, double tol, double max_time,
                            double* residual) {
  return guard([&] {
    const StructureDef& def = need(s, "structure").def;
    WorldState& state = need(w, "world").state;
    check_world(def, state);
    Simulator sim(def, need(c, "config").config);
    SettleResult r = sim.settle(state, tol, max_time);
    state = std::move(r.state);
    if (residual) *residual = r.residual;
    if (!r.converged) {
      throw ApiError(TSG_ERR_NOT_CONVERGED, "settle did not converge by t=" + format_real(state.time) +
                                                " s (residual " + format_real(r.residual) + " m/s)");
    }
    return TSG_OK;
  });
}

double tsg_world_time(const tsg_world* w) { return w ? w->state.time : 0.0; }

tsg_status tsg_world_min_tension(const tsg_structure* s, const tsg_world* w, double* out) {
  return guard([&] {
    const StructureDef& def = need(s, "structure").def;
    check_world(def, need(w, "world").state);
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& cable : def.cables) lo = std::min(lo, read_cable(cable, def, w->state).tension);
    need(out, "out") = lo;
    return TSG_OK;
  });
}

tsg_status tsg_world_state_document(const tsg_structure* s, const tsg_world* w, int converged, double residual,
                                    char** out) {
  return guard([&] {
    const StructureDef& def = need(s, "structure").def;
    check_world(def, need(w, "world").state);
    DocNode root;
    root.children.push_back(state_document(def, w->state, {converged != 0, residual}));
    put(&need(out, "out"), render_document(root));
    return TSG_OK;
  });
}

void tsg_world_free(tsg_world* w) { delete w; }

tsg_status tsg_program_parse(const char* text, tsg_program** out, char** diagnostics) {
  return guard([&] {
    need(out, "out");
    return finish_parse(parse_program(need_str(text, "text")), out, diagnostics);
  });
}

tsg_status tsg_program_load(const char* path, tsg_program** out, char** diagnostics) {
  return guard([&] {
    need(out, "out");
    return finish_parse(parse_program(read_file(path)), out, diagnostics);
  });
}

tsg_status tsg_program_preset(const tsg_structure* s, const tsg_world* w, const char* preset, tsg_program** out) {
  return guard([&] {
    need(out, "out");
    const StructureDef& def = need(s, "structure").def;
    check_world(def, need(w, "world").state);
    const BuiltinModel* model = builtin_for(def.name);
    if (!model) throw ApiError(TSG_ERR_ARGUMENT, "structure '" + def.name + "' has no presets");
    const DofGroup* dof = find_dof(*model, preset ? preset : "");
    if (!dof) {
      std::string known;
      for (const auto& d : model->dofs) known += (known.empty() ? "" : ", ") + d.preset;
      throw ApiError(TSG_ERR_ARGUMENT,
                     "unknown preset '" + std::string(preset ? preset : "") + "' for " + def.name + " (" + known + ")");
    }
    *out = new tsg_program{dof_program(def, w->state, *dof)};
    return TSG_OK;
  });
}

tsg_status tsg_program_validate(const tsg_program* p, const tsg_structure* s, char** diagnostics) {
  return guard([&] {
    const auto problems = validate_program(need(p, "program").program, need(s, "structure").def);
    put(diagnostics, join_lines(problems));
    if (!problems.empty()) throw ApiError(TSG_ERR_VALIDATION, problems.front());
    return TSG_OK;
  });
}

tsg_status tsg_program_serialize(const tsg_program* p, char** out) {
  return guard([&] {
    put(&need(out, "out"), serialize_program(need(p, "program").program));
    return TSG_OK;
  });
}

void tsg_program_free(tsg_program* p) { delete p; }

tsg_status tsg_measure_markers(const tsg_structure* s, const char* measure, char** out) {
  return guard([&] {
    const MotionMeasure m = resolve_measure(need(s, "structure").def, measure);
    std::string list;
    for (const auto& ref : m.markers()) list += (list.empty() ? "" : ",") + ref.str();
    put(&need(out, "out"), list);
    return TSG_OK;
  });
}

tsg_status tsg_track(const tsg_structure* s, const tsg_config* c, const tsg_world* initial, const tsg_program* p,
                     const char* markers, double duration, double sample_period, tsg_trajectory** out,
                     tsg_world** final_state) {
  return guard([&] {
    need(out, "out");
    const StructureDef& def = need(s, "structure").def;
    check_world(def, need(initial, "initial world").state);
    check_program(need(p, "program").program, def);
    const auto refs = parse_markers(def, markers);
    WorldState end;
    auto* t = new tsg_trajectory{
        track(def, initial->state, p->program, refs, duration, sample_period, need(c, "config").config, &end)};
    *out = t;
    if (final_state) *final_state = new tsg_world{std::move(end)};
    return TSG_OK;
  });
}

size_t tsg_trajectory_sample_count(const tsg_trajectory* t) { return t ? t->record.samples.size() : 0; }

tsg_status tsg_trajectory_csv(const tsg_trajectory* t, char** out) {
  return guard([&] {
    put(&need(out, "out"), trajectory_csv(need(t, "trajectory").record));
    return TSG_OK;
  });
}

tsg_status tsg_trajectory_warnings(const tsg_trajectory* t, char** out) {
  return guard([&] {
    put(&need(out, "out"), join_lines(need(t, "trajectory").record.warnings));
    return TSG_OK;
  });
}

tsg_status tsg_trajectory_range_of_motion(const tsg_structure* s, const tsg_trajectory* t, const char* measure,
                                          char** report) {
  return guard([&] {
    const MotionMeasure m = resolve_measure(need(s, "structure").def, measure);
    DocNode root;
    root.children.push_back(range_of_motion_document(measure_motion(need(t, "trajectory").record, m)));
    put(&need(report, "report"), render_document(root));
    return TSG_OK;
  });
}

void tsg_trajectory_free(tsg_trajectory* t) { delete t; }

tsg_status tsg_experiment_workspace(const tsg_structure* s, const tsg_config* c, const tsg_world* settled,
                                    const tsg_program* p, const char* measure, const char* marker,
                                    const tsg_timing* timing, tsg_trajectory** trajectory, char** report) {
  return guard([&] {
    const StructureDef& def = need(s, "structure").def;
    check_world(def, need(settled, "settled world").state);
    check_program(need(p, "program").program, def);
    need(report, "report");
    const MotionMeasure m = resolve_measure(def, measure);
    const auto target = parse_markers(def, marker);
    if (target.size() != 1) throw ApiError(TSG_ERR_ARGUMENT, "workspace takes exactly one marker");
    std::vector<NodeRef> markers = target;
    add_unique(markers, m.markers());
    const ExperimentTiming tm = timing_of(timing);
    TrajectoryRecord traj =
        track(def, settled->state, p->program, markers, tm.duration, tm.sample_period, need(c, "config").config);
    Vec3 pivot;
    const PlaneSpec plane = measure_plane(def, settled->state, m, &pivot);
    DocNode root;
    DocNode ws = workspace_document(workspace_summary(traj, target.front(), plane, pivot), plane, pivot);
    ws.children.insert(ws.children.begin(), DocNode{"marker", target.front().str(), {}});
    ws.children.insert(ws.children.begin(), DocNode{"measure", m.name, {}});
    root.children.push_back(std::move(ws));
    root.children.push_back(range_of_motion_document(measure_motion(traj, m)));
    *report = dup(render_document(root));
    if (trajectory) *trajectory = new tsg_trajectory{std::move(traj)};
    return TSG_OK;
  });
}

tsg_status tsg_experiment_compliance(const tsg_structure* s, const tsg_config* c, const tsg_world* settled,
                                     const tsg_program* p, const char* markers, const tsg_timing* timing,
                                     tsg_trajectory** free_run, tsg_trajectory** obstructed_run, char** report) {
  return guard([&] {
    const StructureDef& def = need(s, "structure").def;
    check_world(def, need(settled, "settled world").state);
    check_program(need(p, "program").program, def);
    need(report, "report");
    SimConfig base = need(c, "config").config;
    const std::vector<Obstacle> obstacles = std::move(base.obstacles);
    base.obstacles.clear();
    if (obstacles.empty()) throw ApiError(TSG_ERR_ARGUMENT, "compliance needs at least one obstacle");
    const ExperimentTiming tm = timing_of(timing);
    ComplianceReport r = compliance_experiment(def, settled->state, p->program, obstacles, parse_markers(def, markers),
                                               tm.duration, tm.sample_period, base);
    DocNode root;
    root.children.push_back(compliance_document(r));
    *report = dup(render_document(root));
    if (free_run) *free_run = new tsg_trajectory{std::move(r.free_trajectory)};
    if (obstructed_run) *obstructed_run = new tsg_trajectory{std::move(r.obstructed_trajectory)};
    return TSG_OK;
  });
}

tsg_status tsg_experiment_repeatability(const tsg_structure* s, const tsg_config* c, const tsg_program* p,
                                        const char* measure, const uint64_t* seeds, size_t seed_count, double noise,
                                        const tsg_timing* timing, char** report) {
  return guard([&] {
    const StructureDef& def = need(s, "structure").def;
    check_program(need(p, "program").program, def);
    need(report, "report");
    if (seed_count > 0) need(seeds, "seeds");
    const MotionMeasure m = resolve_measure(def, measure);
    const std::vector<std::uint64_t> list(seeds, seeds + seed_count);
    const RepeatabilityReport r =
        repeatability(def, p->program, m, list, noise, need(c, "config").config, timing_of(timing));
    DocNode root;
    root.children.push_back(repeatability_document(r));
    *report = dup(render_document(root));
    return TSG_OK;
  });
}

tsg_status tsg_manifest_create(const char* command, tsg_manifest** out) {
  return guard([&] {
    need(out, "out");
    auto* m = new tsg_manifest{};
    m->manifest.command = command ? command : "";
    *out = m;
    return TSG_OK;
  });
}

tsg_status tsg_manifest_add_input(tsg_manifest* m, const char* path) {
  return guard([&] {
    need(m, "manifest").manifest.inputs.emplace_back(need_str(path, "path"));
    return TSG_OK;
  });
}

tsg_status tsg_manifest_add_output(tsg_manifest* m, const char* path) {
  return guard([&] {
    need(m, "manifest").manifest.outputs.emplace_back(need_str(path, "path"));
    return TSG_OK;
  });
}

tsg_status tsg_manifest_set(tsg_manifest* m, const char* key, const char* value) {
  return guard([&] {
    need(m, "manifest").manifest.config.emplace_back(need_str(key, "key"), value ? value : "");
    return TSG_OK;
  });
}

tsg_status tsg_manifest_render(const tsg_manifest* m, char** out) {
  return guard([&] {
    DocNode root;
    root.children.push_back(manifest_document(need(m, "manifest").manifest));
    put(&need(out, "out"), render_document(root));
    return TSG_OK;
  });
}

void tsg_manifest_free(tsg_manifest* m) { delete m; }

}  // extern "C"
