#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tensegrity/tensegrity.h"

namespace {

enum Exit { kSuccess = 0, kValidation = 1, kUsage = 2, kNotConverged = 3, kDiverged = 4 };

struct Failure {
  int code;
  std::string message;
};

int exit_code(tsg_status s) {
  switch (s) {
    case TSG_OK: return kSuccess;
    case TSG_ERR_VALIDATION: return kValidation;
    case TSG_ERR_NOT_CONVERGED: return kNotConverged;
    case TSG_ERR_DIVERGED: return kDiverged;
    default: return kUsage;
  }
}

/// Owns a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  tsg_string_free(s);
  return out;
}

void check(tsg_status s, const std::string& context) {
  if (s != TSG_OK) throw Failure{exit_code(s), context + ": " + tsg_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Structure = std::unique_ptr<tsg_structure, Deleter<tsg_structure, tsg_structure_free>>;
using Config = std::unique_ptr<tsg_config, Deleter<tsg_config, tsg_config_free>>;
using World = std::unique_ptr<tsg_world, Deleter<tsg_world, tsg_world_free>>;
using Program = std::unique_ptr<tsg_program, Deleter<tsg_program, tsg_program_free>>;
using Trajectory = std::unique_ptr<tsg_trajectory, Deleter<tsg_trajectory, tsg_trajectory_free>>;
using Manifest = std::unique_ptr<tsg_manifest, Deleter<tsg_manifest, tsg_manifest_free>>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kUsage, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string part; std::getline(is, part, sep);)
    if (!part.empty()) out.push_back(part);
  return out;
}

std::vector<std::string> lines(const std::string& text) { return split(text, '\n'); }

/// Prefixes each diagnostic line with the file it came from.
std::string located(const std::string& path, const std::string& diagnostics) {
  std::string out;
  for (const auto& l : lines(diagnostics)) out += (out.empty() ? "" : "\n") + path + ":" + l;
  return out;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Collects outputs and writes the manifest after everything else.
class Run {
 public:
  explicit Run(const std::string& command) {
    tsg_manifest* m = nullptr;
    check(tsg_manifest_create(command.c_str(), &m), "manifest");
    manifest_.reset(m);
  }

  void input(const std::string& path) { check(tsg_manifest_add_input(manifest_.get(), path.c_str()), "manifest"); }
  void set(const std::string& key, const std::string& value) {
    check(tsg_manifest_set(manifest_.get(), key.c_str(), value.c_str()), "manifest");
  }

  void write(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content) || !(out.flush())) throw Failure{kUsage, "cannot write " + path};
    check(tsg_manifest_add_output(manifest_.get(), path.c_str()), "manifest");
  }

  void finish(const std::string& manifest_path) {
    check(tsg_manifest_add_output(manifest_.get(), manifest_path.c_str()), "manifest");
    char* text = nullptr;
    check(tsg_manifest_render(manifest_.get(), &text), "manifest");
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out || !(out << take(text)) || !out.flush()) throw Failure{kUsage, "cannot write " + manifest_path};
  }

 private:
  Manifest manifest_;
};

Structure load_structure(const std::string& path, Run* run) {
  tsg_structure* s = nullptr;
  char* diagnostics = nullptr;
  const tsg_status st = tsg_structure_load(path.c_str(), &s, &diagnostics);
  const std::string diag = take(diagnostics);
  if (st != TSG_OK) throw Failure{exit_code(st), diag.empty() ? path + ": " + tsg_last_error() : located(path, diag)};
  if (run) run->input(path);
  return Structure(s);
}

Config make_config(double dt, const std::vector<std::string>& obstacles) {
  tsg_config* c = nullptr;
  check(tsg_config_create(dt, &c), "--dt");
  Config config(c);
  for (const auto& o : obstacles) check(tsg_config_add_obstacle(c, o.c_str()), "--obstacle");
  return config;
}

struct SettleOptions {
  double dt = 1e-4;
  double tol = 1e-4;
  double max_time = 60.0;
  std::string state;
};

void add_settle_flags(CLI::App* cmd, SettleOptions& o) {
  cmd->add_option("--dt", o.dt, "Time step, s")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--tol", o.tol, "Settle residual velocity tolerance, m/s")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--max-time", o.max_time, "Settle time limit, s")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--state", o.state, "Start from a settled-state document instead of the construction pose");
}

struct Settled {
  World world;
  bool converged = false;
  double residual = 0.0;
};

/// Settles from the construction pose or a state file. Non-convergence is
/// returned, divergence thrown.
Settled settle(const tsg_structure* s, const SettleOptions& o, Run& run) {
  tsg_world* w = nullptr;
  if (o.state.empty()) {
    check(tsg_world_initial(s, &w), "initial state");
  } else {
    check(tsg_world_load_state(s, read_text(o.state).c_str(), &w), o.state);
    run.input(o.state);
  }
  Settled out{World(w)};
  const Config config = make_config(o.dt, {});
  const double start = tsg_world_time(w);
  const tsg_status st = tsg_world_settle(s, config.get(), w, o.tol, o.max_time, &out.residual);
  if (st != TSG_OK && st != TSG_ERR_NOT_CONVERGED) check(st, "settle");
  out.converged = st == TSG_OK;
  run.set("dt", real(o.dt));
  run.set("settle_tol", real(o.tol));
  run.set("settle_max_time", real(o.max_time));
  run.set("settled", out.converged ? "yes" : "no");
  run.set("settle_time", real(tsg_world_time(w) - start));
  run.set("settle_residual", real(out.residual));
  return out;
}

struct ProgramChoice {
  std::string controller;
  std::string preset;
};

void add_program_flags(CLI::App* cmd, ProgramChoice& p) {
  auto* c = cmd->add_option("--controller", p.controller, "Controller file");
  auto* pr = cmd->add_option("--preset", p.preset, "Built-in DOF preset");
  c->excludes(pr);
}

/// Loads or builds the controller and writes the effective program next to
/// the outputs so preset amplitudes and periods are on record.
Program load_program(const tsg_structure* s, const tsg_world* settled, const ProgramChoice& p, Run& run,
                     const std::string& program_out) {
  tsg_program* prog = nullptr;
  if (!p.controller.empty()) {
    char* diagnostics = nullptr;
    const tsg_status st = tsg_program_load(p.controller.c_str(), &prog, &diagnostics);
    const std::string diag = take(diagnostics);
    if (st != TSG_OK)
      throw Failure{exit_code(st), diag.empty() ? p.controller + ": " + tsg_last_error() : located(p.controller, diag)};
    run.input(p.controller);
    run.set("controller", p.controller);
  } else if (!p.preset.empty()) {
    check(tsg_program_preset(s, settled, p.preset.c_str(), &prog), "--preset");
    run.set("controller", "preset " + p.preset);
  } else {
    throw Failure{kUsage, "give --controller or --preset"};
  }
  Program program(prog);
  char* diagnostics = nullptr;
  const tsg_status st = tsg_program_validate(prog, s, &diagnostics);
  const std::string diag = take(diagnostics);
  if (st != TSG_OK) throw Failure{exit_code(st), "controller: " + diag};
  if (!p.preset.empty()) {
    char* text = nullptr;
    check(tsg_program_serialize(prog, &text), "controller");
    run.write(program_out, take(text));
  }
  return program;
}

std::string default_marker(const tsg_structure* s) {
  char* out = nullptr;
  if (tsg_structure_end_effector(s, &out) != TSG_OK)
    throw Failure{kUsage, "this structure has no default end effector; give markers explicitly"};
  return take(out);
}

std::string trajectory_csv(const tsg_trajectory* t) {
  char* out = nullptr;
  check(tsg_trajectory_csv(t, &out), "trajectory");
  return take(out);
}

void print_warnings(const tsg_trajectory* t) {
  char* out = nullptr;
  if (tsg_trajectory_warnings(t, &out) == TSG_OK) std::cerr << take(out);
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}


tsg_timing timing(double duration, double sample, const SettleOptions& o) {
  return {duration, sample, o.tol, o.max_time};
}

void warn_unsettled(const Settled& s) {
  if (!s.converged)
    std::cerr << "warning: settle did not converge (residual " << real(s.residual) << " m/s); continuing\n";
}

int cmd_builtin(const std::string& name, const std::string& out, std::string manifest) {
  Run run("builtin " + name);
  tsg_structure* s = nullptr;
  check(tsg_structure_builtin(name.c_str(), &s), "builtin");
  const Structure structure(s);
  char* text = nullptr;
  check(tsg_structure_serialize(s, &text), "serialize");
  run.write(out, take(text));
  run.finish(manifest.empty() ? out + ".manifest" : manifest);
  return kSuccess;
}

int cmd_validate(const std::string& path) {
  const Structure s = load_structure(path, nullptr);
  char* diagnostics = nullptr;
  const tsg_status st = tsg_structure_validate(s.get(), &diagnostics);
  const std::string diag = take(diagnostics);
  if (st != TSG_OK) throw Failure{exit_code(st), located(path, diag)};
  std::cout << "OK\n";
  return kSuccess;
}

int cmd_settle(const std::string& path, const SettleOptions& o, const std::string& out, std::string manifest) {
  Run run("settle");
  const Structure s = load_structure(path, &run);
  const Settled settled = settle(s.get(), o, run);
  char* doc = nullptr;
  check(tsg_world_state_document(s.get(), settled.world.get(), settled.converged, settled.residual, &doc), "state");
  run.write(out, take(doc));
  run.finish(manifest.empty() ? out + ".manifest" : manifest);
  if (!settled.converged) {
    std::cerr << "settle did not converge within " << real(o.max_time) << " s (residual " << real(settled.residual)
              << " m/s)\n";
    return kNotConverged;
  }
  return kSuccess;
}

struct SimulateOptions {
  SettleOptions settle;
  ProgramChoice program;
  double duration = 16.0;
  double sample = 0.01;
  std::string markers;
  std::string measure;
  std::vector<std::string> obstacles;
  std::string out;
  std::string report;
  std::string manifest;
};

int cmd_simulate(const std::string& path, const SimulateOptions& o) {
  Run run("simulate");
  const Structure s = load_structure(path, &run);
  const Config config = make_config(o.settle.dt, o.obstacles);
  const Settled settled = settle(s.get(), o.settle, run);
  warn_unsettled(settled);
  const Program program = load_program(s.get(), settled.world.get(), o.program, run, o.out + ".controller");
  std::string markers = o.markers.empty() ? default_marker(s.get()) : o.markers;
  std::string measure = o.measure.empty() ? o.program.preset : o.measure;
  if (!measure.empty()) {
    char* extra = nullptr;
    check(tsg_measure_markers(s.get(), measure.c_str(), &extra), "--measure");
    for (const auto& m : split(take(extra), ','))
      if (("," + markers + ",").find("," + m + ",") == std::string::npos) markers += "," + m;
  }
  run.set("duration", real(o.duration));
  run.set("sample_period", real(o.sample));
  run.set("markers", markers);
  run.set("obstacles", join(o.obstacles, " "));
  tsg_trajectory* t = nullptr;
  check(tsg_track(s.get(), config.get(), settled.world.get(), program.get(), markers.c_str(), o.duration, o.sample, &t,
                  nullptr),
        "simulate");
  const Trajectory traj(t);
  print_warnings(t);
  run.write(o.out, trajectory_csv(t));
  if (!measure.empty()) {
    char* report = nullptr;
    check(tsg_trajectory_range_of_motion(s.get(), t, measure.c_str(), &report), "report");
    const std::string text = take(report);
    run.write(o.report.empty() ? o.out + ".report" : o.report, text);
    std::cout << text;
  }
  run.finish(o.manifest.empty() ? o.out + ".manifest" : o.manifest);
  return kSuccess;
}

struct ExperimentOptions {
  SettleOptions settle;
  ProgramChoice program;
  double duration = 16.0;
  double sample = 0.01;
  std::string marker;
  std::string markers;
  std::string measure;
  std::vector<std::string> obstacles;
  int runs = 3;
  std::uint64_t seed = 1;
  double noise = 0.02;
  std::string out;
};

int cmd_workspace(const std::string& path, const ExperimentOptions& o) {
  Run run("experiment workspace");
  const Structure s = load_structure(path, &run);
  const Config config = make_config(o.settle.dt, {});
  const Settled settled = settle(s.get(), o.settle, run);
  warn_unsettled(settled);
  const Program program = load_program(s.get(), settled.world.get(), o.program, run, o.out + ".controller");
  const std::string measure = o.measure.empty() ? o.program.preset : o.measure;
  if (measure.empty()) throw Failure{kUsage, "workspace needs --measure or --preset"};
  const std::string marker = o.marker.empty() ? default_marker(s.get()) : o.marker;
  run.set("duration", real(o.duration));
  run.set("sample_period", real(o.sample));
  run.set("measure", measure);
  run.set("marker", marker);
  const tsg_timing tm = timing(o.duration, o.sample, o.settle);
  tsg_trajectory* t = nullptr;
  char* report = nullptr;
  check(tsg_experiment_workspace(s.get(), config.get(), settled.world.get(), program.get(), measure.c_str(),
                                 marker.c_str(), &tm, &t, &report),
        "workspace");
  const Trajectory traj(t);
  const std::string text = take(report);
  print_warnings(t);
  run.write(o.out + ".csv", trajectory_csv(t));
  run.write(o.out + ".report", text);
  run.finish(o.out + ".manifest");
  std::cout << text;
  return kSuccess;
}

int cmd_compliance(const std::string& path, const ExperimentOptions& o) {
  Run run("experiment compliance");
  const Structure s = load_structure(path, &run);
  if (o.obstacles.empty()) throw Failure{kUsage, "compliance needs at least one --obstacle"};
  const Config config = make_config(o.settle.dt, o.obstacles);
  const Settled settled = settle(s.get(), o.settle, run);
  warn_unsettled(settled);
  const Program program = load_program(s.get(), settled.world.get(), o.program, run, o.out + ".controller");
  const std::string markers = o.markers.empty() ? default_marker(s.get()) : o.markers;
  run.set("duration", real(o.duration));
  run.set("sample_period", real(o.sample));
  run.set("markers", markers);
  run.set("obstacles", join(o.obstacles, " "));
  const tsg_timing tm = timing(o.duration, o.sample, o.settle);
  tsg_trajectory* free_run = nullptr;
  tsg_trajectory* obstructed = nullptr;
  char* report = nullptr;
  check(tsg_experiment_compliance(s.get(), config.get(), settled.world.get(), program.get(), markers.c_str(), &tm,
                                  &free_run, &obstructed, &report),
        "compliance");
  const Trajectory a(free_run), b(obstructed);
  const std::string text = take(report);
  run.write(o.out + "-free.csv", trajectory_csv(free_run));
  run.write(o.out + "-obstructed.csv", trajectory_csv(obstructed));
  run.write(o.out + ".report", text);
  run.finish(o.out + ".manifest");
  std::cout << text;
  return kSuccess;
}

int cmd_repeatability(const std::string& path, const ExperimentOptions& o) {
  Run run("experiment repeatability");
  const Structure s = load_structure(path, &run);
  if (o.runs < 2) throw Failure{kUsage, "--runs must be at least 2"};
  const Config config = make_config(o.settle.dt, {});
  const Settled settled = settle(s.get(), o.settle, run);
  warn_unsettled(settled);

  // Without a controller or preset every built-in preset is measured.
  std::vector<std::string> presets;
  if (!o.program.preset.empty() || !o.program.controller.empty()) {
    presets.push_back(o.program.preset);
  } else {
    char* names = nullptr;
    check(tsg_structure_presets(s.get(), &names), "presets");
    presets = lines(take(names));
    if (presets.empty()) throw Failure{kUsage, "give --controller and --measure for a structure without presets"};
  }
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> seed_text;
  for (int i = 0; i < o.runs; ++i) {
    seeds.push_back(o.seed + static_cast<std::uint64_t>(i));
    seed_text.push_back(std::to_string(seeds.back()));
  }
  run.set("duration", real(o.duration));
  run.set("sample_period", real(o.sample));
  run.set("noise", real(o.noise));
  run.set("seeds", join(seed_text, " "));
  const tsg_timing tm = timing(o.duration, o.sample, o.settle);
  std::string all;
  for (const auto& preset : presets) {
    ProgramChoice choice = o.program;
    if (choice.controller.empty()) choice.preset = preset;
    const std::string suffix = presets.size() > 1 ? "-" + preset : "";
    const Program program = load_program(s.get(), settled.world.get(), choice, run, o.out + suffix + ".controller");
    const std::string measure = o.measure.empty() ? choice.preset : o.measure;
    if (measure.empty()) throw Failure{kUsage, "repeatability with --controller needs --measure"};
    char* report = nullptr;
    check(tsg_experiment_repeatability(s.get(), config.get(), program.get(), measure.c_str(), seeds.data(),
                                       seeds.size(), o.noise, &tm, &report),
          "repeatability " + measure);
    all += take(report);
  }
  run.write(o.out + ".report", all);
  run.finish(o.out + ".manifest");
  std::cout << all;
  return kSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensegrity manipulator simulator and experiment harness"};
  app.set_version_flag("--version", std::string(tsg_version()));
  app.require_subcommand(1);

  std::string name, path, out, manifest, kind;

  auto* builtin = app.add_subcommand("builtin", "Write a built-in structure file");
  builtin->add_option("name", name, "elbow, tetra-arm or saddle-arm")->required();
  builtin->add_option("-o,--out", out, "Structure file to write")->required();
  builtin->add_option("--manifest", manifest, "Manifest path (default <out>.manifest)");

  auto* validate = app.add_subcommand("validate", "Check a structure file");
  validate->add_option("path", path, "Structure file")->required();

  SettleOptions settle_opts;
  auto* settle_cmd = app.add_subcommand("settle", "Relax a structure to equilibrium and write its state");
  settle_cmd->add_option("path", path, "Structure file")->required();
  add_settle_flags(settle_cmd, settle_opts);
  settle_cmd->add_option("-o,--out", out, "State document to write")->required();
  settle_cmd->add_option("--manifest", manifest, "Manifest path (default <out>.manifest)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Settle, then track markers under a controller");
  simulate->add_option("path", path, "Structure file")->required();
  add_settle_flags(simulate, sim.settle);
  add_program_flags(simulate, sim.program);
  simulate->add_option("--duration", sim.duration, "Tracked time, s")->capture_default_str()->check(CLI::NonNegativeNumber);
  simulate->add_option("--sample", sim.sample, "Sample period, s")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--markers", sim.markers, "Comma-separated body.node list (default end effector)");
  simulate->add_option("--measure", sim.measure, "Preset name or measure spec for a range-of-motion report");
  simulate->add_option("--obstacle", sim.obstacles, "sphere:cx,cy,cz,r or halfspace:nx,ny,nz,offset");
  simulate->add_option("-o,--out", sim.out, "Trajectory CSV to write")->required();
  simulate->add_option("--report", sim.report, "Report path (default <out>.report)");
  simulate->add_option("--manifest", sim.manifest, "Manifest path (default <out>.manifest)");

  ExperimentOptions ex;
  auto* experiment = app.add_subcommand("experiment", "Run a workspace, compliance or repeatability experiment");
  experiment->add_option("kind", kind, "workspace, compliance or repeatability")
      ->required()
      ->check(CLI::IsMember({"workspace", "compliance", "repeatability"}));
  experiment->add_option("path", path, "Structure file")->required();
  add_settle_flags(experiment, ex.settle);
  add_program_flags(experiment, ex.program);
  experiment->add_option("--duration", ex.duration, "Tracked time, s")->capture_default_str()->check(CLI::NonNegativeNumber);
  experiment->add_option("--sample", ex.sample, "Sample period, s")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--marker", ex.marker, "Workspace marker body.node (default end effector)");
  experiment->add_option("--markers", ex.markers, "Compliance markers (default end effector)");
  experiment->add_option("--measure", ex.measure, "Preset name or measure spec");
  experiment->add_option("--obstacle", ex.obstacles, "sphere:cx,cy,cz,r or halfspace:nx,ny,nz,offset");
  experiment->add_option("--runs", ex.runs, "Repeatability runs")->capture_default_str();
  experiment->add_option("--seed", ex.seed, "First repeatability seed")->capture_default_str();
  experiment->add_option("--noise", ex.noise, "Passive cable perturbation magnitude")->capture_default_str();
  experiment->add_option("-o,--out", ex.out, "Output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*builtin) return cmd_builtin(name, out, manifest);
    if (*validate) return cmd_validate(path);
    if (*settle_cmd) return cmd_settle(path, settle_opts, out, manifest);
    if (*simulate) return cmd_simulate(path, sim);
    if (kind == "workspace") return cmd_workspace(path, ex);
    if (kind == "compliance") return cmd_compliance(path, ex);
    return cmd_repeatability(path, ex);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  }
}
