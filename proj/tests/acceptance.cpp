// Acceptance suite. Prints one PASS/FAIL line per criterion; exits nonzero on any FAIL.
// Usage: acceptance <path-to-tsg>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "tensegrity/control.hpp"
#include "tensegrity/dynamics.hpp"
#include "tensegrity/gallery.hpp"
#include "tensegrity/lab.hpp"
#include "tensegrity/report.hpp"
#include "tensegrity/topology_io.hpp"

using namespace tensegrity;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SimConfig config_dt(double dt) {
  SimConfig c;
  c.dt = dt;
  return c;
}

WorldState settled_state(const StructureDef& s) {
  const auto r = settle(s, initial_state(s), SimConfig{}, kSettleTolerance, kSettleMaxTime);
  if (!r.converged) throw std::runtime_error(s.name + " did not settle");
  return r.state;
}

Vec3 node_at(const StructureDef& s, const WorldState& w, const NodeRef& ref) {
  const int b = s.body_index(ref.body);
  return world_node_position(s.bodies[b], w.body_states[b], ref.node);
}

// ---------------------------------------------------------------------------
// 1. Component masses and lengths

struct Measured {
  const char* body;
  const char* from;
  const char* to;
  double grams;
  double centimeters;
};

bool same_to_4_figures(double a, double b) { return fmt(a, 4) == fmt(b, 4); }

Outcome criterion_1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::map<std::string, std::vector<Measured>> expected = {
      {"tetra-arm",
       {{"forearm", "crotch", "tip", 10.1, 58.6},
        {"olecranon", "tip_f", "tip_b", 6.0, 24.0},
        {"humerus", "head", "crotch", 36.6, 76.2},
        {"shoulder", "t1", "apex", 24.8, 36.1}}},
      {"saddle-arm",
       {{"forearm", "crotch", "tip", 18.5, 54.0},
        {"olecranon", "tip_f", "tip_b", 11.6, 24.0},
        {"humerus", "head", "crotch", 23.2, 53.0},
        {"saddle", "prong_l", "prong_r", 36.1, 54.0}}},
  };
  const std::map<std::string, double> full_grams = {{"tetra-arm", 77.5}, {"saddle-arm", 89.4}};
  for (const auto& [name, parts] : expected) {
    const StructureDef s = builtin_model(name).structure;
    double sum = 0.0;
    for (const auto& p : parts) {
      const auto* body = s.find_body(p.body);
      o.require(body != nullptr, name + ": no body " + p.body);
      if (!body) continue;
      const double length = (body->find_node(p.from)->local_position - body->find_node(p.to)->local_position).norm();
      o.require(same_to_4_figures(body->mass * 1000.0, p.grams),
                name + "." + p.body + " mass " + fmt(body->mass * 1000.0, 6) + " g");
      o.require(same_to_4_figures(length * 100.0, p.centimeters),
                name + "." + p.body + " length " + fmt(length * 100.0, 6) + " cm");
      sum += body->mass;
    }
    o.require(same_to_4_figures(sum * 1000.0, full_grams.at(name)), name + " full mass " + fmt(sum * 1000.0, 6) + " g");
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass) o.detail = "8 components and 2 full-arm masses agree to 4 figures in " + fmt(elapsed, 2) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. Damped oscillator oracle

double oscillator_error(double dt, double amplitude) {
  tsg_test::Oscillator osc;
  const StructureDef s = osc.structure();
  Simulator sim(s, config_dt(dt));
  WorldState w = initial_state(s);
  w.body_states[1].position.z() -= amplitude;
  const double t_end = 2.0 * 2.0 * std::numbers::pi / osc.omega();
  const std::vector<double> none;
  double worst = 0.0;
  while (w.time < t_end) {
    sim.step(w, none);
    const double x = w.body_states[1].position.z() + osc.equilibrium_length();
    worst = std::max(worst, std::abs(x - osc.displacement(-amplitude, w.time)));
  }
  return worst;
}

Outcome criterion_2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double amplitude = 0.01;
  const double coarse = oscillator_error(1e-4, amplitude);
  const double fine = oscillator_error(5e-5, amplitude);
  const double elapsed = seconds_since(t0);
  o.require(coarse < 0.01 * amplitude, "error " + fmt(coarse / amplitude * 100) + "% of amplitude");
  o.require(coarse / fine >= 1.8, "halving dt improved error only " + fmt(coarse / fine) + "x");
  o.require(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = "max error " + fmt(coarse / amplitude * 100, 3) + "% of amplitude, halving dt gives " +
               fmt(coarse / fine, 3) + "x, " + fmt(elapsed, 2) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Physics properties

void randomize_motion(WorldState& w, std::mt19937_64& rng) {
  for (auto& b : w.body_states) {
    b.position += tsg_test::random_vec(rng, 0.2);
    b.orientation = Quat(Eigen::AngleAxisd(tsg_test::uniform(rng, 0.0, 3.1), tsg_test::random_vec(rng, 1.0).normalized()));
    b.linear_velocity = tsg_test::random_vec(rng, 1.0);
    b.angular_velocity = tsg_test::random_vec(rng, 2.0);
  }
  for (auto& r : w.commanded_rates) r = tsg_test::uniform(rng, -0.05, 0.05);
}

/// Free bodies joined only to each other, no gravity; the fixed body is left unconnected.
StructureDef isolated_structure(std::mt19937_64& rng) {
  StructureDef s;
  s.name = "isolated";
  s.gravity = Vec3::Zero();
  RigidBodySpec ground;
  ground.name = "ground";
  ground.fixed = true;
  ground.nodes = {{"g", Vec3(0, 0, -10)}};
  derive_mass_properties(ground);
  s.bodies.push_back(ground);
  const int nb = tsg_test::pick(rng, 2, 3);
  for (int b = 0; b < nb; ++b) {
    RigidBodySpec body;
    body.name = "b" + std::to_string(b);
    const Vec3 center(0.5 * b, 0.0, 0.0);
    body.nodes = {{"p", center + tsg_test::random_vec(rng, 0.1)}, {"q", center + Vec3(0, 0.2, 0) + tsg_test::random_vec(rng, 0.05)}};
    body.rods = {{"p", "q", tsg_test::uniform(rng, 0.05, 0.5)}};
    body.mass = body.rods[0].mass;
    derive_mass_properties(body);
    s.bodies.push_back(body);
  }
  const int nc = tsg_test::pick(rng, 2, 4);
  for (int c = 0; c < nc; ++c) {
    CableSpec cable;
    cable.id = "c" + std::to_string(c);
    const int a = tsg_test::pick(rng, 1, nb - 1);
    const int b = tsg_test::pick(rng, a + 1, nb);
    cable.route = {{"b" + std::to_string(a - 1), tsg_test::pick(rng, 0, 1) ? "p" : "q"},
                   {"b" + std::to_string(b - 1), tsg_test::pick(rng, 0, 1) ? "p" : "q"}};
    if (cable.route[0].body == cable.route[1].body) cable.route[1].node = cable.route[0].node == "p" ? "q" : "p";
    cable.stiffness_k = tsg_test::uniform(rng, 10.0, 500.0);
    cable.damping_b = tsg_test::uniform(rng, 0.0, 1.0);
    cable.rest_length = cable.min_length = cable.max_length = tsg_test::uniform(rng, 0.1, 0.4);
    s.cables.push_back(cable);
  }
  return s;
}

Outcome criterion_3() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);

  // Tension sign and route equilibrium over random structures and states.
  long tension_cases = 0, route_cases = 0;
  double worst_force = 0.0, worst_torque = 0.0;
  while (tension_cases < 1000 || route_cases < 1000) {
    const StructureDef s = tsg_test::random_structure(rng);
    if (s.cables.empty()) continue;
    WorldState w = initial_state(s);
    randomize_motion(w, rng);
    const Simulator sim(s, SimConfig{});
    for (std::size_t c = 0; c < s.cables.size(); ++c) {
      CableReading r;
      std::vector<Vec3> f;
      try {
        r = sim.read(static_cast<int>(c), w);
        sim.node_forces(static_cast<int>(c), w, f);
      } catch (const DegenerateCableError&) {
        continue;
      }
      ++tension_cases;
      o.require(r.tension >= 0.0, "negative tension on " + s.cables[c].id);
      if (r.elongation_X <= 0.0) o.require(r.tension == 0.0, "slack cable carries " + fmt(r.tension));
      if (r.tension == 0.0) continue;
      ++route_cases;
      Vec3 force = Vec3::Zero(), torque = Vec3::Zero();
      double arm = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) {
        const Vec3 p = node_at(s, w, s.cables[c].route[k]);
        force += f[k];
        torque += p.cross(f[k]);
        arm = std::max(arm, p.norm());
      }
      worst_force = std::max(worst_force, force.norm() / r.tension);
      worst_torque = std::max(worst_torque, torque.norm() / (r.tension * std::max(arm, 1.0)));
    }
  }
  o.require(worst_force <= 1e-9, "route force residual " + fmt(worst_force) + " of tension");
  o.require(worst_torque <= 1e-9, "route torque residual " + fmt(worst_torque) + " of tension x lever");

  // Momentum and quaternion norms in isolated systems.
  double worst_drift = 0.0, worst_norm = 0.0;
  const int systems = 1000;
  for (int i = 0; i < systems; ++i) {
    const StructureDef s = isolated_structure(rng);
    Simulator sim(s, SimConfig{});
    WorldState w = initial_state(s);
    for (std::size_t b = 1; b < s.bodies.size(); ++b) {
      w.body_states[b].linear_velocity = tsg_test::random_vec(rng, 0.3);
      w.body_states[b].angular_velocity = tsg_test::random_vec(rng, 3.0);
    }
    auto momentum = [&] {
      Vec3 p = Vec3::Zero();
      for (std::size_t b = 1; b < s.bodies.size(); ++b) p += s.bodies[b].mass * w.body_states[b].linear_velocity;
      return p;
    };
    const Vec3 p0 = momentum();
    const std::vector<double> none;
    for (int k = 0; k < 10000; ++k) {
      sim.step(w, none);
      if (k % 100 == 99)
        for (std::size_t b = 1; b < s.bodies.size(); ++b)
          worst_norm = std::max(worst_norm, std::abs(w.body_states[b].orientation.norm() - 1.0));
    }
    worst_drift = std::max(worst_drift, (momentum() - p0).norm());
  }
  o.require(worst_drift < 1e-9, "momentum drift " + fmt(worst_drift) + " N s");
  o.require(worst_norm <= 1e-9, "quaternion norm error " + fmt(worst_norm));

  const double elapsed = seconds_since(t0);
  o.require(elapsed < 60.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = std::to_string(tension_cases) + " tension cases, " + std::to_string(route_cases) +
               " route cases (force " + fmt(worst_force, 2) + ", torque " + fmt(worst_torque, 2) + "), " +
               std::to_string(systems) + " isolated systems x 1e4 steps (drift " + fmt(worst_drift, 2) +
               " N s, |q|-1 " + fmt(worst_norm, 2) + "), " + fmt(elapsed, 3) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 4. Settling of the built-ins

Outcome criterion_4() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream summary;
  for (const auto& name : builtin_names()) {
    const StructureDef s = builtin_model(name).structure;
    const auto r = settle(s, initial_state(s), SimConfig{}, 1e-4, 60.0);
    o.require(r.converged, name + " did not converge (residual " + fmt(r.residual) + ")");
    o.require(r.residual < 1e-4, name + " residual " + fmt(r.residual));
    int taut = 0;
    double min_tension = 1e300;
    for (const auto& c : s.cables) {
      const double t = read_cable(c, s, r.state).tension;
      o.require(t >= 0.0, name + " cable " + c.id + " tension " + fmt(t));
      taut += t > 0.0;
      min_tension = std::min(min_tension, t);
    }
    const double fraction = static_cast<double>(taut) / s.cables.size();
    o.require(fraction >= 0.8, name + " taut fraction " + fmt(fraction));
    summary << name << " t=" << fmt(r.state.time, 3) << " s taut " << taut << "/" << s.cables.size() << "; ";
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 300.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass) o.detail = summary.str() + fmt(elapsed, 2) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 5. Passive energy decay

Outcome criterion_5() {
  Outcome o;
  std::ostringstream summary;
  for (const auto& name : builtin_names()) {
    const BuiltinModel m = builtin_model(name);
    const StructureDef& s = m.structure;
    const WorldState eq = settled_state(s);
    Simulator sim(s, SimConfig{});
    const double e_eq = sim.energy(eq);
    WorldState w = eq;
    w.body_states[s.body_index(m.end_effector.body)].position += Vec3(0.05, 0.0, 0.0);
    const double e0 = sim.energy(w) - e_eq;
    o.require(e0 > 0.0, name + ": displaced energy not above equilibrium");
    const std::vector<double> frozen = w.commanded_lengths;
    const long steps_per_second = std::lround(1.0 / sim.config().dt);
    double previous = e0, worst_rise = -1e300;
    for (int second = 1; second <= 10; ++second) {
      for (long k = 0; k < steps_per_second; ++k) sim.step(w, frozen);
      const double e = sim.energy(w) - e_eq;
      worst_rise = std::max(worst_rise, (e - previous) / e0);
      o.require(e <= previous + 1e-6 * e0, name + ": energy rose " + fmt((e - previous) / e0) + " E0 at t=" +
                                               std::to_string(second) + " s");
      previous = e;
    }
    summary << name << " E0 " << fmt(e0) << " J -> " << fmt(previous) << " J; ";
  }
  if (o.pass) o.detail = summary.str() + "energy above the settled equilibrium";
  return o;
}

// ---------------------------------------------------------------------------
// 6. Actuation limits under random programs

struct Actuated {
  const CableSpec* cable;
  double length;
  double rate = 0.0;
};

Outcome criterion_6() {
  Outcome o;
  std::mt19937_64 rng(6);
  const StructureDef s = builtin_model("tetra-arm").structure;
  std::vector<const CableSpec*> active;
  for (int i : s.active_cable_indices()) active.push_back(&s.cables[i]);
  const double dt = SimConfig{}.dt;

  int programs = 0, pair_checks = 0;
  double worst_pair_error = 0.0;
  for (; programs < 1000; ++programs) {
    ControllerProgram p;
    std::vector<const CableSpec*> pool = active;
    std::shuffle(pool.begin(), pool.end(), rng);
    const bool slow = programs % 50 == 0;
    double slow_period = 0.0;
    // One pair; its driver is the first cable of the shuffled pool.
    const CableSpec* a = pool[0];
    const CableSpec* b = pool[1];
    double period;
    double amplitude;
    if (slow) {
      const ActuatorSpec& act_a = *a->actuator;
      const ActuatorSpec& act_b = *b->actuator;
      period = tsg_test::uniform(rng, 8.0, 12.0);
      const double w = 2.0 * std::numbers::pi / period;
      const double vmax = std::min(act_a.target_velocity, act_b.target_velocity);
      const double amax = std::min(act_a.max_accel, act_b.max_accel);
      amplitude = std::min({0.5 * vmax / w, 0.5 * amax / (w * w), 0.1 * a->rest_length, 0.1 * b->rest_length});
      slow_period = period;
    } else {
      period = tsg_test::uniform(rng, 0.2, 10.0);
      amplitude = tsg_test::uniform(rng, 0.0, 0.4) * std::min(a->rest_length - a->min_length, a->max_length - a->rest_length);
    }
    p.channels.push_back({a->id, a->rest_length, amplitude, period, tsg_test::uniform(rng, 0.0, 6.3)});
    const double total = slow ? a->rest_length + b->rest_length
                              : a->min_length + b->min_length + tsg_test::uniform(rng, 0.01, 2.0) * (a->rest_length + b->rest_length);
    p.pairs.push_back({a->id, b->id, total});
    for (std::size_t i = 2; i < pool.size(); ++i) {
      const CableSpec* c = pool[i];
      const int mode = tsg_test::pick(rng, 0, 2);
      if (mode == 0) continue;
      if (mode == 1) {
        p.holds[c->id] = tsg_test::uniform(rng, c->min_length, c->max_length);
      } else {
        const double center = tsg_test::uniform(rng, c->min_length, c->max_length);
        const double room = std::min(center - c->min_length, c->max_length - center);
        p.channels.push_back({c->id, center, tsg_test::uniform(rng, 0.0, room), tsg_test::uniform(rng, 0.1, 10.0), 0.0});
      }
    }
    const auto problems = validate_program(p, s);
    o.require(problems.empty(), "generated program invalid: " + (problems.empty() ? "" : problems[0]));
    if (!problems.empty()) continue;

    std::map<std::string, Actuated> state;
    for (const auto* c : active) state[c->id] = {c, c->rest_length};
    const double duration = slow ? 6.0 * slow_period : tsg_test::uniform(rng, 1.0, 5.0);
    const long steps = std::lround(duration / dt);
    for (long k = 0; k < steps; ++k) {
      const double t = k * dt;
      const auto targets = targets_at(p, t);
      o.require(targets.at(a->id) + targets.at(b->id) == total, "pair target sum differs from total");
      for (auto& [id, st] : state) {
        const auto it = targets.find(id);
        const double target = it == targets.end() ? st.length : it->second;
        const ActuatorSpec& act = *st.cable->actuator;
        const auto next = limit_actuation(st.length, st.rate, target, dt, act, st.cable->min_length, st.cable->max_length);
        o.require(next.length >= st.cable->min_length && next.length <= st.cable->max_length, id + " left [min, max]");
        o.require(std::abs(next.rate) <= act.target_velocity * (1.0 + 1e-12), id + " exceeded target velocity");
        if (std::abs(next.rate - st.rate) > act.max_accel * dt * (1.0 + 1e-9))
          o.require(false, id + " exceeded max accel: rate " + fmt(st.rate, 9) + " -> " + fmt(next.rate, 9));
        st.length = next.length;
        st.rate = next.rate;
      }
      if (slow && t >= 5.0 * slow_period) {
        const double err = std::abs(state[a->id].length + state[b->id].length - total);
        worst_pair_error = std::max(worst_pair_error, err);
        ++pair_checks;
      }
    }
    if (!o.pass) break;
  }
  o.require(worst_pair_error < 1e-4, "pair actual sum off by " + fmt(worst_pair_error) + " m after 5 periods");

  // The simulator applies the same limiter to its commanded state.
  {
    Simulator sim(s, SimConfig{});
    WorldState w = initial_state(s);
    const BuiltinModel model = builtin_model("tetra-arm");
    const DofGroup* dof = find_dof(model, "elbow-pitch");
    const ControllerProgram p = dof_program(s, w, *dof);
    std::vector<double> lengths = w.commanded_lengths, rates = w.commanded_rates;
    std::vector<double> targets = w.commanded_lengths;
    for (long k = 0; k < 20000; ++k) {
      for (const auto& [id, v] : targets_at(p, k * dt)) targets[sim.active_slot(id)] = v;
      sim.step(w, targets);
      for (int i = 0; i < sim.active_count(); ++i) {
        const CableSpec& c = sim.active_cable(i);
        const auto next = limit_actuation(lengths[i], rates[i], targets[i], dt, *c.actuator, c.min_length, c.max_length);
        lengths[i] = next.length;
        rates[i] = next.rate;
      }
    }
    o.require(lengths == w.commanded_lengths && rates == w.commanded_rates, "simulator commands differ from limiter");
  }
  if (o.pass)
    o.detail = std::to_string(programs) + " random programs within limits; pair targets exact; slow pair sum within " +
               fmt(worst_pair_error, 2) + " m over " + std::to_string(pair_checks) + " late steps";
  return o;
}

// ---------------------------------------------------------------------------
// 7 and 8. DOF presets

struct PresetRun {
  std::string arm, preset;
  double displacement = 0.0;  // m, largest end-effector distance from the settled pose
  double vertical = 0.0;      // m, largest |dz|
  double sweep = 0.0;
  bool angular = true;
};

std::vector<PresetRun> run_presets() {
  std::vector<PresetRun> out;
  for (const char* arm : {"tetra-arm", "saddle-arm"}) {
    const BuiltinModel m = builtin_model(arm);
    const WorldState w = settled_state(m.structure);
    for (const auto& dof : m.dofs) {
      const ControllerProgram p = dof_program(m.structure, w, dof);
      std::vector<NodeRef> markers = {m.end_effector};
      for (const auto& mk : dof.measure.markers())
        if (std::find(markers.begin(), markers.end(), mk) == markers.end()) markers.push_back(mk);
      const auto traj = track(m.structure, w, p, markers, kPresetDuration, 0.01, SimConfig{});
      PresetRun r{arm, dof.preset};
      const Vec3 p0 = traj.samples.front().positions[0];
      for (const auto& smp : traj.samples) {
        r.displacement = std::max(r.displacement, (smp.positions[0] - p0).norm());
        r.vertical = std::max(r.vertical, std::abs(smp.positions[0].z() - p0.z()));
      }
      const auto rom = measure_motion(traj, dof.measure);
      r.sweep = rom.sweep;
      r.angular = rom.angular;
      out.push_back(r);
    }
  }
  return out;
}

Outcome criterion_7(const std::vector<PresetRun>& runs) {
  Outcome o;
  std::ostringstream summary;
  int count = 0;
  for (const auto& r : runs) {
    o.require(r.displacement > 0.02, r.arm + " " + r.preset + " moved only " + fmt(r.displacement * 100) + " cm");
    if (r.arm == "tetra-arm" && r.preset == "shoulder-lift")
      o.require(r.vertical > 0.005, "shoulder-lift vertical travel " + fmt(r.vertical * 100) + " cm");
    summary << r.arm << "/" << r.preset << " " << fmt(r.displacement * 100, 3) << " cm";
    if (r.preset == "shoulder-lift") summary << " (z " << fmt(r.vertical * 100, 3) << " cm)";
    summary << "; ";
    ++count;
  }
  o.require(count == 8, "expected 8 presets, ran " + std::to_string(count));
  if (o.pass) o.detail = summary.str();
  return o;
}

Outcome criterion_8(const std::vector<PresetRun>& runs) {
  Outcome o;
  const auto it = std::find_if(runs.begin(), runs.end(),
                               [](const PresetRun& r) { return r.arm == "tetra-arm" && r.preset == "elbow-pitch"; });
  o.require(it != runs.end(), "no tetra-arm elbow-pitch run");
  if (it == runs.end()) return o;
  o.require(it->angular, "elbow-pitch measure is not angular");
  o.require(it->sweep >= 15.0, "sweep " + fmt(it->sweep) + " deg");
  if (o.pass) o.detail = "tetra-arm elbow-pitch sweep " + fmt(it->sweep, 4) + " deg";
  return o;
}

// ---------------------------------------------------------------------------
// 9. Compliance

Outcome criterion_9() {
  Outcome o;
  const BuiltinModel m = builtin_model("tetra-arm");
  const StructureDef& s = m.structure;
  const WorldState w = settled_state(s);
  const DofGroup* dof = find_dof(m, "shoulder-pitch");
  const ControllerProgram p = dof_program(s, w, *dof);
  const std::vector<NodeRef> markers = {m.end_effector};
  const double duration = 8.0, sample = 0.01;

  // Slanted wall through the point 70% along the end effector's -x excursion.
  const auto free_run = track(s, w, p, markers, duration, sample, SimConfig{});
  const double x0 = free_run.samples.front().positions[0].x();
  double x_min = x0;
  for (const auto& smp : free_run.samples) x_min = std::min(x_min, smp.positions[0].x());
  const double x_cut = x0 + 0.7 * (x_min - x0);
  Vec3 cut = free_run.samples.front().positions[0];
  for (const auto& smp : free_run.samples)
    if (smp.positions[0].x() <= x_cut) {
      cut = smp.positions[0];
      break;
    }
  const Vec3 normal = Vec3(1.0, 0.0, 1.0).normalized();
  const Obstacle wall{Halfspace{normal, normal.dot(cut)}};

  const auto r = compliance_experiment(s, w, p, {wall}, markers, duration, sample, SimConfig{});
  o.require(r.contact_interval.has_value(), "obstacle never touched the structure");
  o.require(r.max_deviation > 0.01, "max deviation " + fmt(r.max_deviation * 100) + " cm");
  o.require(r.recovery_error < 0.1 * r.max_deviation,
            "recovery error " + fmt(r.recovery_error) + " vs max deviation " + fmt(r.max_deviation));
  const double window_start = duration * (1.0 - kRecoveryFraction);
  if (r.contact_interval)
    o.require(r.contact_interval->second < window_start, "contact continues into the recovery window");

  const Obstacle far{Halfspace{Vec3(-1.0, 0.0, 0.0), -10.0}};
  const auto clear = compliance_experiment(s, w, p, {far}, markers, duration, sample, SimConfig{});
  o.require(clear.max_deviation < 1e-6, "trajectories differ by " + fmt(clear.max_deviation) + " m without contact");
  o.require(!clear.contact_interval, "distant obstacle reported contact");

  if (o.pass && r.contact_interval)
    o.detail = "contact " + fmt(r.contact_interval->first, 3) + "-" + fmt(r.contact_interval->second, 3) +
               " s, max deviation " + fmt(r.max_deviation * 100, 3) + " cm, recovery error " +
               fmt(r.recovery_error * 1000, 3) + " mm; without contact " + fmt(clear.max_deviation, 2) + " m";
  return o;
}

// ---------------------------------------------------------------------------
// 10. Repeatability

Outcome criterion_10() {
  Outcome o;
  const double mean = (10.0 + 12.0 + 14.0) / 3.0;
  const double sigma = std::sqrt(((10 - mean) * (10 - mean) + (12 - mean) * (12 - mean) + (14 - mean) * (14 - mean)) / 3.0);
  const auto hand = sweep_stats({10.0, 12.0, 14.0});
  o.require(hand.mean == 12.0 && fmt(hand.std_dev, 4) == "1.633" && std::abs(hand.std_dev - sigma) < 1e-12,
            "sweep_stats({10,12,14}) gave " + fmt(hand.mean) + ", " + fmt(hand.std_dev));

  const BuiltinModel m = builtin_model("tetra-arm");
  const WorldState w = settled_state(m.structure);
  std::ostringstream summary;
  for (const auto& dof : m.dofs) {
    const ControllerProgram p = dof_program(m.structure, w, dof);
    const auto quiet = repeatability(m.structure, p, dof.measure, {1, 2, 3}, 0.0, SimConfig{});
    o.require(quiet.std_dev == 0.0 && quiet.sample_std_dev == 0.0, dof.preset + " noise 0 std_dev " + fmt(quiet.std_dev));
    o.require(!quiet.flagged, dof.preset + " noise 0 run failed");

    const auto noisy = repeatability(m.structure, p, dof.measure, {1, 2, 3, 4, 5}, 0.02, SimConfig{});
    o.require(noisy.runs.size() == 5, dof.preset + " run count");
    std::vector<double> sweeps;
    for (const auto& run : noisy.runs) {
      o.require(run.completed, dof.preset + " seed " + std::to_string(run.seed) + ": " + run.error);
      sweeps.push_back(run.sweep);
    }
    o.require(!noisy.flagged, dof.preset + " flagged");
    double sum = 0.0;
    for (double v : sweeps) sum += v;
    const double mu = sum / sweeps.size();
    double ss = 0.0;
    for (double v : sweeps) ss += (v - mu) * (v - mu);
    o.require(std::abs(noisy.mean - mu) <= 1e-12 * std::abs(mu), dof.preset + " mean mismatch");
    o.require(std::abs(noisy.std_dev - std::sqrt(ss / sweeps.size())) <= 1e-9, dof.preset + " std dev mismatch");
    const DocNode doc = repeatability_document(noisy);
    int listed = 0;
    for (const auto& c : doc.children) listed += c.key == "run" && c.find("sweep");
    o.require(listed == 5 && doc.find("mean") && doc.find("std_dev"), dof.preset + " report incomplete");
    summary << dof.preset << " " << fmt(noisy.mean, 4) << "+-" << fmt(noisy.std_dev, 3) << (noisy.angular ? " deg" : " m")
            << "; ";
  }
  if (o.pass) o.detail = "noise 0 spread 0; noise 2%, 5 seeds: " + summary.str();
  return o;
}

// ---------------------------------------------------------------------------
// 11. Parser round trip and corruption

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

struct TokenPos {
  std::size_t begin, end;
};

std::vector<TokenPos> tokens_of(const std::string& line) {
  std::vector<TokenPos> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ') ++i;
    out.push_back({b, i});
  }
  return out;
}

Outcome criterion_11() {
  Outcome o;
  int round_trips = 0;
  for (const auto& name : builtin_names()) {
    const StructureDef s = canonicalize(builtin_model(name).structure);
    const auto r = parse_structure(serialize_structure(s));
    o.require(r.ok() && structurally_equal(s, *r.structure, 0.0), name + " round trip");
    ++round_trips;
  }
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const StructureDef s = tsg_test::random_structure(rng);
    const auto r = parse_structure(serialize_structure(s));
    std::string diff;
    o.require(r.ok() && structurally_equal(s, *r.structure, 0.0, &diff), "random round trip: " + diff);
    ++round_trips;
  }

  // Replace each token of each built-in file in turn.
  const std::vector<std::string> replacements = {"@@", "x", "-1", "0", "1e999", "#"};
  long corruptions = 0, still_valid = 0;
  for (const auto& name : builtin_names()) {
    const std::vector<std::string> lines = split_lines(serialize_structure(builtin_model(name).structure));
    int header = 0;
    for (std::size_t li = 0; li < lines.size(); ++li) {
      const int line_no = static_cast<int>(li) + 1;
      if (!lines[li].empty() && lines[li][0] != ' ') header = line_no;
      for (const auto& tok : tokens_of(lines[li])) {
        const std::string original = lines[li].substr(tok.begin, tok.end - tok.begin);
        for (const auto& rep : replacements) {
          if (rep == original) continue;
          std::string text;
          for (std::size_t k = 0; k < lines.size(); ++k)
            text += (k == li ? lines[k].substr(0, tok.begin) + rep + lines[k].substr(tok.end) : lines[k]) + "\n";
          ++corruptions;
          const auto r = parse_structure(text);
          if (r.ok()) {
            ++still_valid;
            continue;
          }
          const ParseError& e = r.errors.front();
          const bool here = e.span.line == line_no || e.span.line == header;
          // Renaming a definition leaves its later uses dangling; a comment mark drops the rest of the line.
          const bool comment = rep == "#";
          bool dangling = false;
          for (const auto& later : tokens_of(lines[li])) {
            if (later.begin < tok.begin || (!comment && later.begin != tok.begin)) continue;
            const std::string dropped = lines[li].substr(later.begin, later.end - later.begin);
            dangling = dangling || (e.kind == ParseErrorKind::reference && e.span.line > line_no &&
                                    e.message.find("'" + dropped + "'") != std::string::npos);
          }
          // Whole-structure checks have no single line to blame.
          const bool global = e.message.rfind("structure ", 0) == 0;
          // Commenting out a block header hands its indented lines to the previous block.
          std::size_t block_end = li + 1;
          while (block_end < lines.size() && !lines[block_end].empty() && lines[block_end][0] == ' ') ++block_end;
          const bool orphaned = comment && tok.begin == 0 && e.span.line > line_no &&
                                e.span.line <= static_cast<int>(block_end);
          const bool lexical = rep == "@@";
          if (lexical) {
            const bool reported = std::any_of(r.errors.begin(), r.errors.end(),
                                              [&](const ParseError& x) { return x.span.line == line_no; });
            o.require(here && reported, name + " line " + std::to_string(line_no) + " '" + rep +
                                                  "': first error at " + e.str());
          } else {
            o.require(here || dangling || orphaned || global, name + " line " + std::to_string(line_no) + " '" + original + "'->'" + rep +
                                            "': first error at " + e.str());
          }
        }
      }
    }
  }
  if (o.pass)
    o.detail = std::to_string(round_trips) + " exact round trips; " + std::to_string(corruptions) +
               " single-token corruptions, " + std::to_string(still_valid) + " still valid, the rest located";
  return o;
}

// ---------------------------------------------------------------------------
// 12. CLI contract

struct CliRun {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

CliRun run_cli(const std::string& tsg, const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = quote(tsg) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

std::set<std::string> manifest_outputs(const fs::path& manifest) {
  std::set<std::string> files;
  const DocNode doc = parse_document(slurp(manifest));
  const DocNode* m = doc.find("manifest");
  if (!m || !m->find("outputs")) return files;
  for (const auto& c : m->find("outputs")->children)
    if (c.key == "file") files.insert(fs::path(c.value).filename().string());
  return files;
}

std::set<std::string> files_in(const fs::path& dir) {
  std::set<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files.insert(e.path().filename().string());
  return files;
}

int count_lines(const std::string& text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

Outcome criterion_12(const std::string& tsg) {
  Outcome o;
  if (tsg.empty() || !fs::exists(tsg)) {
    o.require(false, "tsg binary not given");
    return o;
  }
  const fs::path root = fs::temp_directory_path() / ("tsg_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root / "inputs");
  const fs::path in = root / "inputs";
  int cases = 0;

  // Each producing command writes into its own directory so every file there must be in its manifest.
  auto expect = [&](const std::string& label, const std::string& args, int code, const fs::path& dir = {}) {
    ++cases;
    const fs::path scratch = dir.empty() ? root : dir;
    fs::create_directories(scratch);
    CliRun r = run_cli(tsg, args, root);
    o.require(r.code == code, label + ": exit " + std::to_string(r.code) + ", wanted " + std::to_string(code) +
                                  (r.err.empty() ? "" : " (" + r.err.substr(0, r.err.find('\n')) + ")"));
    return r;
  };
  auto check_manifest = [&](const std::string& label, const fs::path& dir, const std::string& manifest) {
    const auto listed = manifest_outputs(dir / manifest);
    const auto present = files_in(dir);
    o.require(!listed.empty(), label + ": manifest missing or empty");
    o.require(listed == present, label + ": manifest lists " + std::to_string(listed.size()) + " files, directory has " +
                                     std::to_string(present.size()));
  };

  // builtin
  const fs::path b = root / "builtin";
  fs::create_directories(b);
  expect("builtin elbow", "builtin elbow -o " + quote((b / "elbow.tsg").string()), 0, b);
  check_manifest("builtin", b, "elbow.tsg.manifest");
  expect("builtin tetra-arm", "builtin tetra-arm -o " + quote((in / "tetra.tsg").string()) + " --manifest " +
                                  quote((root / "tetra.manifest").string()), 0);
  fs::copy_file(b / "elbow.tsg", in / "elbow.tsg");
  expect("builtin unknown name", "builtin torso -o " + quote((root / "x.tsg").string()), 2);
  expect("no verb", "", 2);
  expect("unknown verb", "fly", 2);
  expect("missing required option", "builtin elbow", 2);
  expect("help", "--help", 0);

  // Structure inputs: valid, out-of-range, malformed, divergent.
  std::string elbow_text = slurp(in / "elbow.tsg");
  std::string bad = elbow_text;
  const std::size_t k = bad.find(" k=");
  bad.replace(k + 3, bad.find(' ', k + 3) - (k + 3), "-5");
  std::ofstream(in / "bad_k.tsg") << bad;
  std::ofstream(in / "garbage.tsg") << "structure broken\nbody @@ mass=1\n";
  std::ofstream(in / "stiff.tsg") << "structure stiff\n"
                                     "gravity 0 0 -9.81\n"
                                     "body anchor mass=0 fixed\n"
                                     "  node a 0 0 0\n"
                                     "  node f 0 0 -2\n"
                                     "body bob mass=0.5\n"
                                     "  node n 0 0 -1.01\n"
                                     "cable up kind=passive k=1e9 b=0.5 rest=0.9 min=0.9 max=0.9\n"
                                     "  route anchor.a bob.n\n"
                                     "cable down kind=passive k=1e9 b=0.5 rest=0.9 min=0.9 max=0.9\n"
                                     "  route bob.n anchor.f\n";
  std::ofstream(in / "bad.ctl") << "hold nonexistent len=1\n";
  std::ofstream(in / "flat.ctl") << "hold biceps len=0.4\n";
  const std::string elbow = quote((in / "elbow.tsg").string());

  // validate
  CliRun v = expect("validate good", "validate " + elbow, 0);
  o.require(v.out == "OK\n", "validate prints OK");
  v = expect("validate k=-5", "validate " + quote((in / "bad_k.tsg").string()), 1);
  o.require(v.err.find("range") != std::string::npos && v.err.find("bad_k.tsg:") != std::string::npos,
            "validate k=-5 message: " + v.err);
  expect("validate garbage", "validate " + quote((in / "garbage.tsg").string()), 1);
  expect("validate missing", "validate " + quote((in / "missing.tsg").string()), 2);

  // settle
  const fs::path st = root / "settle";
  expect("settle", "settle " + elbow + " -o " + quote((st / "elbow.state").string()), 0, st);
  check_manifest("settle", st, "elbow.state.manifest");
  const std::string state_doc = slurp(st / "elbow.state");
  o.require(state_doc.find("  converged: yes") != std::string::npos, "settle state lacks converged: yes");
  o.require(state_doc.find("    tension: -") == std::string::npos, "settle state records a negative tension");
  const fs::path st2 = root / "settle_again";
  expect("settle from state", "settle " + elbow + " --state " + quote((st / "elbow.state").string()) + " -o " +
                                  quote((st2 / "again.state").string()), 0, st2);
  const fs::path st3 = root / "settle_short";
  expect("settle --max-time 0.001", "settle " + elbow + " --max-time 0.001 -o " + quote((st3 / "s.state").string()), 3, st3);
  check_manifest("settle not converged", st3, "s.state.manifest");
  const fs::path st4 = root / "settle_stiff";
  CliRun d = expect("settle divergent", "settle " + quote((in / "stiff.tsg").string()) + " --dt 0.01 -o " +
                                            quote((st4 / "s.state").string()), 4, st4);
  o.require(d.err.find("step") != std::string::npos, "divergence message lacks step index: " + d.err);
  expect("settle bad dt", "settle " + elbow + " --dt -1 -o " + quote((root / "x.state").string()), 2);
  expect("settle invalid structure", "settle " + quote((in / "bad_k.tsg").string()) + " -o " + quote((root / "x.state").string()), 1);

  // simulate
  const fs::path sm = root / "simulate";
  CliRun sim = expect("simulate preset", "simulate " + elbow + " --preset elbow-pitch --duration 1 --sample 0.01 -o " +
                                             quote((sm / "run.csv").string()), 0, sm);
  const std::string csv = slurp(sm / "run.csv");
  const std::string header = csv.substr(0, csv.find('\n'));
  o.require(header.rfind("t,forearm.tip_x,forearm.tip_y,forearm.tip_z", 0) == 0, "simulate header: " + header);
  o.require(count_lines(csv) == 1 + 101, "simulate rows: " + std::to_string(count_lines(csv) - 1));
  o.require(csv.find('\r') == std::string::npos, "simulate CSV has CR");
  o.require(fs::exists(sm / "run.csv.report") && fs::exists(sm / "run.csv.controller"), "simulate report or controller missing");
  check_manifest("simulate", sm, "run.csv.manifest");

  const fs::path sm2 = root / "simulate_markers";
  expect("simulate controller markers", "simulate " + elbow + " --controller " + quote((in / "flat.ctl").string()) +
                                            " --duration 0.5 --sample 0.05 --markers forearm.tip,olecranon.hub -o " +
                                            quote((sm2 / "m.csv").string()), 0, sm2);
  const std::string csv2 = slurp(sm2 / "m.csv");
  o.require(csv2.substr(0, csv2.find('\n')) ==
                "t,forearm.tip_x,forearm.tip_y,forearm.tip_z,olecranon.hub_x,olecranon.hub_y,olecranon.hub_z",
            "simulate marker header: " + csv2.substr(0, csv2.find('\n')));
  o.require(count_lines(csv2) == 1 + 11, "simulate marker rows: " + std::to_string(count_lines(csv2) - 1));
  check_manifest("simulate markers", sm2, "m.csv.manifest");

  expect("simulate unknown preset", "simulate " + elbow + " --preset tail-wag -o " + quote((root / "x.csv").string()), 2);
  expect("simulate bad controller", "simulate " + elbow + " --controller " + quote((in / "bad.ctl").string()) + " -o " +
                                        quote((root / "x.csv").string()), 1);
  expect("simulate bad marker", "simulate " + elbow + " --preset elbow-pitch --markers forearm.nowhere -o " +
                                    quote((root / "x.csv").string()), 2);
  expect("simulate bad obstacle", "simulate " + elbow + " --preset elbow-pitch --obstacle cube:1 -o " +
                                      quote((root / "x.csv").string()), 2);
  expect("simulate no controller", "simulate " + elbow + " -o " + quote((root / "x.csv").string()), 2);
  expect("simulate divergent", "simulate " + quote((in / "stiff.tsg").string()) + " --controller " +
                                   quote((in / "flat.ctl").string()) + " --dt 0.01 -o " + quote((root / "x.csv").string()),
         4);

  // experiments
  const std::string tetra = quote((in / "tetra.tsg").string());
  const fs::path ws = root / "workspace";
  expect("experiment workspace", "experiment workspace " + tetra + " --preset shoulder-pitch --duration 2 -o " +
                                     quote((ws / "ws").string()), 0, ws);
  o.require(fs::exists(ws / "ws.csv") && fs::exists(ws / "ws.report"), "workspace outputs missing");
  o.require(count_lines(slurp(ws / "ws.csv")) == 1 + 201, "workspace rows");
  check_manifest("workspace", ws, "ws.manifest");

  const fs::path cp = root / "compliance";
  expect("experiment compliance", "experiment compliance " + tetra +
                                      " --preset shoulder-pitch --duration 1 --obstacle halfspace:-1,0,0,-10 -o " +
                                      quote((cp / "cp").string()), 0, cp);
  o.require(slurp(cp / "cp.report").find("contact: no") != std::string::npos, "compliance report lacks contact: no");
  check_manifest("compliance", cp, "cp.manifest");
  expect("compliance without obstacle", "experiment compliance " + tetra + " --preset shoulder-pitch -o " +
                                            quote((root / "cp").string()), 2);

  const fs::path rp = root / "repeatability";
  expect("experiment repeatability", "experiment repeatability " + tetra +
                                         " --preset elbow-pitch --duration 1 --runs 2 --noise 0 -o " +
                                         quote((rp / "rp").string()), 0, rp);
  o.require(slurp(rp / "rp.report").find("std_dev: 0\n") != std::string::npos, "repeatability noise 0 std_dev");
  check_manifest("repeatability", rp, "rp.manifest");
  expect("experiment unknown kind", "experiment juggle " + tetra + " -o " + quote((root / "j").string()), 2);

  if (o.pass) fs::remove_all(root);
  if (o.pass) o.detail = std::to_string(cases) + " CLI cases: exit codes, CSV headers and rows, manifests complete";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string tsg = argc > 1 ? argv[1] : "";
  int failures = 0;
  auto report = [&](int n, const std::string& title, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << title << ", " << fmt(seconds_since(t0), 3)
              << " s): " << o.detail << std::endl;
  };
  report(1, "model fidelity", criterion_1);
  report(2, "integrator oracle", criterion_2);
  report(3, "physics properties", criterion_3);
  report(4, "stability screening", criterion_4);
  report(5, "passive energy decay", criterion_5);
  report(6, "actuation limits", criterion_6);
  std::vector<PresetRun> presets;
  std::string preset_error;
  try {
    presets = run_presets();
  } catch (const std::exception& e) {
    preset_error = e.what();
  }
  report(7, "DOF demonstration", [&] {
    if (!preset_error.empty()) throw std::runtime_error(preset_error);
    return criterion_7(presets);
  });
  report(8, "elbow pitch articulation", [&] {
    if (!preset_error.empty()) throw std::runtime_error(preset_error);
    return criterion_8(presets);
  });
  report(9, "compliance", criterion_9);
  report(10, "repeatability harness", criterion_10);
  report(11, "parser", criterion_11);
  report(12, "CLI contract", [&] { return criterion_12(tsg); });
  std::cout << (failures ? "FAIL" : "PASS") << " acceptance: " << 12 - failures << "/12 criteria" << std::endl;
  return failures ? 1 : 0;
}
