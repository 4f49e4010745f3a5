#include "tensegrity/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tensegrity/control.hpp"

namespace tensegrity {

namespace {

constexpr double kDegenerateSegment = 1e-12;

std::string divergence_message(long step_index, const std::string& body, double time) {
  std::ostringstream os;
  os << "simulation diverged at step " << step_index << " (t=" << time << " s), body " << body;
  return os.str();
}

Mat3 world_inertia(const Mat3& body_inertia, const Quat& q) {
  const Mat3 r = q.toRotationMatrix();
  return r * body_inertia * r.transpose();
}

/// Rotation by the vector w (axis·angle) as a unit quaternion.
Quat exp_map(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    return q.normalized();
  }
  return Quat(Eigen::AngleAxisd(angle, w / angle));
}

}  // namespace

DivergenceError::DivergenceError(long step_index, std::string body, double time)
    : std::runtime_error(divergence_message(step_index, body, time)),
      step_index_(step_index),
      body_(std::move(body)),
      time_(time) {}

WorldState initial_state(const StructureDef& s) {
  WorldState w;
  w.body_states.reserve(s.bodies.size());
  for (const auto& b : s.bodies) {
    BodyState st;
    st.position = b.com;
    w.body_states.push_back(st);
  }
  for (int idx : s.active_cable_indices()) {
    w.commanded_lengths.push_back(s.cables[idx].rest_length);
    w.commanded_rates.push_back(0.0);
  }
  return w;
}

Vec3 world_node_position(const RigidBodySpec& body, const BodyState& state, std::string_view node_id) {
  const auto* node = body.find_node(node_id);
  if (!node) throw std::invalid_argument("unknown node " + std::string(node_id) + " on body " + body.name);
  return state.position + state.orientation * (node->local_position - body.com);
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(StructureDef structure, SimConfig config)
    : structure_(std::move(structure)), config_(std::move(config)) {
  if (!(config_.dt > 0.0)) throw std::invalid_argument("SimConfig.dt must be > 0");
  if (config_.max_steps_per_call <= 0) throw std::invalid_argument("SimConfig.max_steps_per_call must be > 0");
  active_ = structure_.active_cable_indices();
  for (std::size_t i = 0; i < structure_.cables.size(); ++i) {
    const auto& c = structure_.cables[i];
    CompiledCable cc;
    for (const auto& ref : c.route) {
      const int b = structure_.body_index(ref.body);
      const int n = b < 0 ? -1 : structure_.bodies[b].node_index(ref.node);
      if (b < 0 || n < 0)
        throw std::invalid_argument("cable " + c.id + ": route reference " + ref.str() + " does not resolve");
      cc.points.push_back({b, n, 0});
    }
    if (c.active()) cc.slot = static_cast<int>(std::find(active_.begin(), active_.end(), i) - active_.begin());
    cables_.push_back(std::move(cc));
  }
  std::size_t total_nodes = 0;
  for (const auto& b : structure_.bodies) {
    node_offset_.push_back(total_nodes);
    total_nodes += b.nodes.size();
  }
  pos_.resize(total_nodes);
  vel_.resize(total_nodes);
  for (auto& cc : cables_)
    for (auto& p : cc.points) p.flat = node_offset_[p.body] + p.node;
  for (const auto& b : structure_.bodies)
    inertia_inv_body_.push_back(b.fixed ? Mat3::Zero() : Mat3(b.inertia.inverse()));
  char_length_ = characteristic_length(structure_);
  scratch_wrench_.resize(structure_.bodies.size());
}

int Simulator::active_slot(std::string_view cable_id) const {
  for (std::size_t i = 0; i < active_.size(); ++i)
    if (structure_.cables[active_[i]].id == cable_id) return static_cast<int>(i);
  return -1;
}

Vec3 Simulator::node_position(const WorldState& w, int body, int node) const {
  const auto& spec = structure_.bodies[body];
  const auto& st = w.body_states[body];
  return st.position + st.orientation * (spec.nodes[node].local_position - spec.com);
}

Vec3 Simulator::node_velocity(const WorldState& w, int body, int node) const {
  const auto& st = w.body_states[body];
  const Vec3 r = node_position(w, body, node) - st.position;
  return st.linear_velocity + st.angular_velocity.cross(r);
}

void Simulator::cache_nodes(const WorldState& w) const {
  for (std::size_t b = 0; b < structure_.bodies.size(); ++b) {
    const auto& spec = structure_.bodies[b];
    const auto& st = w.body_states[b];
    const Mat3 r = st.orientation.toRotationMatrix();
    for (std::size_t n = 0; n < spec.nodes.size(); ++n) {
      const Vec3 arm = r * (spec.nodes[n].local_position - spec.com);
      const std::size_t k = node_offset_[b] + n;
      pos_[k] = st.position + arm;
      vel_[k] = st.linear_velocity + st.angular_velocity.cross(arm);
    }
  }
}

CableReading Simulator::read_cached(int cable, const WorldState& w) const {
  const auto& spec = structure_.cables[cable];
  const auto& cc = cables_[cable];
  CableReading out;
  double geometric_rate = 0.0;
  for (std::size_t i = 0; i + 1 < cc.points.size(); ++i) {
    const std::size_t k0 = cc.points[i].flat, k1 = cc.points[i + 1].flat;
    const Vec3 d = pos_[k1] - pos_[k0];
    const double len = d.norm();
    if (len < kDegenerateSegment)
      throw DegenerateCableError("cable " + spec.id + ": route points " + spec.route[i].str() + " and " +
                                 spec.route[i + 1].str() + " coincide");
    out.length += len;
    geometric_rate += d.dot(vel_[k1] - vel_[k0]) / len;
  }
  double rest = spec.rest_length;
  double rest_rate = 0.0;
  if (cc.slot >= 0) {
    rest = w.commanded_lengths[cc.slot];
    rest_rate = w.commanded_rates[cc.slot];
  }
  out.elongation_X = out.length - rest;
  out.elongation_rate_V = geometric_rate - rest_rate;
  if (out.elongation_X > 0.0) {
    const double t = spec.stiffness_k * out.elongation_X + spec.damping_b * out.elongation_rate_V;
    // NaN from overflowed geometry must reach the finiteness check, not clamp to zero.
    out.tension = std::isnan(t) ? t : std::max(0.0, t);
  }
  return out;
}

void Simulator::forces_cached(int cable, double tension, std::vector<Vec3>& out) const {
  const auto& cc = cables_[cable];
  const std::size_t n = cc.points.size();
  out.assign(n, Vec3::Zero());
  if (tension == 0.0) return;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec3 f = tension * (pos_[cc.points[i + 1].flat] - pos_[cc.points[i].flat]).normalized();
    // Each segment pulls its two ends toward each other.
    out[i] += f;
    out[i + 1] -= f;
  }
}

CableReading Simulator::read(int cable, const WorldState& w) const {
  cache_nodes(w);
  return read_cached(cable, w);
}

void Simulator::node_forces(int cable, const WorldState& w, std::vector<Vec3>& out) const {
  cache_nodes(w);
  forces_cached(cable, read_cached(cable, w).tension, out);
}

bool Simulator::in_contact(const WorldState& w) const {
  if (config_.obstacles.empty()) return false;
  cache_nodes(w);
  for (const auto& obstacle : config_.obstacles)
    for (std::size_t k = 0; k < pos_.size(); ++k)
      if (contact_force(obstacle, pos_[k], vel_[k]).squaredNorm() > 0.0) return true;
  return false;
}

void Simulator::accumulate(const WorldState& w, std::vector<Wrench>& out) const {
  const std::size_t nb = structure_.bodies.size();
  out.assign(nb, Wrench{});
  for (std::size_t b = 0; b < nb; ++b) out[b].force = structure_.bodies[b].mass * structure_.gravity;
  cache_nodes(w);

  auto apply = [&](int body, const Vec3& point, const Vec3& f) {
    out[body].force += f;
    out[body].torque += (point - w.body_states[body].position).cross(f);
  };

  std::vector<Vec3>& forces = scratch_forces_;
  for (std::size_t c = 0; c < cables_.size(); ++c) {
    const double tension = read_cached(static_cast<int>(c), w).tension;
    if (tension == 0.0) continue;
    forces_cached(static_cast<int>(c), tension, forces);
    const auto& pts = cables_[c].points;
    for (std::size_t i = 0; i < pts.size(); ++i) apply(pts[i].body, pos_[pts[i].flat], forces[i]);
  }

  if (!config_.obstacles.empty()) {
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t n = 0; n < structure_.bodies[b].nodes.size(); ++n) {
        const std::size_t k = node_offset_[b] + n;
        for (const auto& obstacle : config_.obstacles) {
          const Vec3 f = contact_force(obstacle, pos_[k], vel_[k]);
          if (f.squaredNorm() > 0.0) apply(static_cast<int>(b), pos_[k], f);
        }
      }
    }
  }
}

void Simulator::check_finite(const WorldState& w) const {
  for (std::size_t b = 0; b < w.body_states.size(); ++b) {
    const auto& st = w.body_states[b];
    if (!st.position.allFinite() || !st.orientation.coeffs().allFinite() || !st.linear_velocity.allFinite() ||
        !st.angular_velocity.allFinite())
      throw DivergenceError(steps_, structure_.bodies[b].name, w.time);
  }
  for (std::size_t i = 0; i < w.commanded_lengths.size(); ++i)
    if (!std::isfinite(w.commanded_lengths[i]) || !std::isfinite(w.commanded_rates[i]))
      throw DivergenceError(steps_, "cable " + structure_.cables[active_[i]].id, w.time);
}

void Simulator::step(WorldState& w, const std::vector<double>& targets) {
  const double dt = config_.dt;

  for (std::size_t i = 0; i < active_.size(); ++i) {
    const auto& c = structure_.cables[active_[i]];
    const auto next = limit_actuation(w.commanded_lengths[i], w.commanded_rates[i], targets[i], dt, *c.actuator,
                                       c.min_length, c.max_length);
    w.commanded_lengths[i] = next.length;
    w.commanded_rates[i] = next.rate;
  }

  accumulate(w, scratch_wrench_);

  for (std::size_t b = 0; b < structure_.bodies.size(); ++b) {
    const auto& spec = structure_.bodies[b];
    if (spec.fixed) continue;
    auto& st = w.body_states[b];
    const auto& wr = scratch_wrench_[b];

    st.linear_velocity += (wr.force / spec.mass) * dt;
    st.position += st.linear_velocity * dt;

    const Mat3 r = st.orientation.toRotationMatrix();
    const Mat3 inertia = r * spec.inertia * r.transpose();
    const Mat3 inertia_inv = r * inertia_inv_body_[b] * r.transpose();
    const Vec3& omega = st.angular_velocity;
    st.angular_velocity += inertia_inv * (wr.torque - omega.cross(inertia * omega)) * dt;
    st.orientation = (exp_map(st.angular_velocity * dt) * st.orientation).normalized();
  }

  w.time += dt;
  ++steps_;
  check_finite(w);
}

double Simulator::residual(const WorldState& w) const {
  double worst = 0.0;
  for (std::size_t b = 0; b < structure_.bodies.size(); ++b) {
    if (structure_.bodies[b].fixed) continue;
    const auto& st = w.body_states[b];
    worst = std::max(worst, st.linear_velocity.norm() + 0.1 * st.angular_velocity.norm() * char_length_);
  }
  return worst;
}

double Simulator::energy(const WorldState& w) const {
  double e = 0.0;
  for (std::size_t b = 0; b < structure_.bodies.size(); ++b) {
    const auto& spec = structure_.bodies[b];
    if (spec.fixed) continue;
    const auto& st = w.body_states[b];
    const Mat3 inertia = world_inertia(spec.inertia, st.orientation);
    e += 0.5 * spec.mass * st.linear_velocity.squaredNorm();
    e += 0.5 * st.angular_velocity.dot(inertia * st.angular_velocity);
    e -= spec.mass * structure_.gravity.dot(st.position);
  }
  cache_nodes(w);
  for (std::size_t c = 0; c < cables_.size(); ++c) {
    const auto r = read_cached(static_cast<int>(c), w);
    if (r.elongation_X > 0.0) e += 0.5 * structure_.cables[c].stiffness_k * r.elongation_X * r.elongation_X;
  }
  return e;
}

SettleResult Simulator::settle(WorldState w, double tol, double max_time) {
  if (!(tol > 0.0)) throw std::invalid_argument("settle: tol must be > 0");
  if (!(max_time >= 0.0)) throw std::invalid_argument("settle: max_time must be >= 0");
  std::vector<double> frozen = w.commanded_lengths;
  const double t_end = w.time + max_time;
  const long dwell_steps = std::max(1L, std::lround(kSettleDwell / config_.dt));
  long budget = config_.max_steps_per_call;
  long quiet = 0;
  double res = residual(w);
  // Half a step of slack keeps round-off in accumulated time from adding a step.
  while (quiet < dwell_steps && w.time + 0.5 * config_.dt < t_end && budget-- > 0) {
    step(w, frozen);
    res = residual(w);
    quiet = res < tol ? quiet + 1 : 0;
  }
  return {std::move(w), quiet >= dwell_steps, res};
}

// ---------------------------------------------------------------------------
// Free functions

CableReading read_cable(const CableSpec& cable, const StructureDef& s, const WorldState& world) {
  const int idx = s.cable_index(cable.id);
  if (idx < 0) throw std::invalid_argument("cable " + cable.id + " is not part of the structure");
  return Simulator(s, SimConfig{}).read(idx, world);
}

std::vector<Vec3> cable_node_forces(const CableSpec& cable, const StructureDef& s, const WorldState& world) {
  const int idx = s.cable_index(cable.id);
  if (idx < 0) throw std::invalid_argument("cable " + cable.id + " is not part of the structure");
  std::vector<Vec3> out;
  Simulator(s, SimConfig{}).node_forces(idx, world, out);
  return out;
}

Vec3 contact_force(const Obstacle& obstacle, const Vec3& point, const Vec3& velocity) {
  double depth = 0.0;
  Vec3 normal = Vec3::Zero();
  if (const auto* h = std::get_if<Halfspace>(&obstacle.shape)) {
    depth = h->offset - h->normal.dot(point);
    normal = h->normal;
  } else {
    const auto& sp = std::get<Sphere>(obstacle.shape);
    const Vec3 d = point - sp.center;
    const double dist = d.norm();
    depth = sp.radius - dist;
    normal = dist > 0.0 ? Vec3(d / dist) : Vec3(0.0, 0.0, 1.0);
  }
  if (depth <= 0.0) return Vec3::Zero();
  // Positive normal velocity means separating.
  const double v_n = velocity.dot(normal);
  const double magnitude = obstacle.contact_stiffness * depth - obstacle.contact_damping * v_n;
  return magnitude > 0.0 ? Vec3(magnitude * normal) : Vec3::Zero();
}

std::vector<Wrench> accumulate_forces(const StructureDef& s, const WorldState& world, const SimConfig& config) {
  std::vector<Wrench> out;
  Simulator(s, config).accumulate(world, out);
  return out;
}

WorldState step(const StructureDef& s, const WorldState& world, const CableTargets& controls,
                const SimConfig& config) {
  Simulator sim(s, config);
  std::vector<double> targets = world.commanded_lengths;
  for (const auto& [id, len] : controls) {
    const int slot = sim.active_slot(id);
    if (slot < 0) throw std::invalid_argument("control target for unknown active cable " + id);
    targets[slot] = len;
  }
  WorldState next = world;
  sim.step(next, targets);
  return next;
}

SettleResult settle(const StructureDef& s, const WorldState& world, const SimConfig& config, double tol,
                    double max_time) {
  Simulator sim(s, config);
  return sim.settle(world, tol, max_time);
}

double residual_velocity(const StructureDef& s, const WorldState& world) {
  return Simulator(s, SimConfig{}).residual(world);
}

double mechanical_energy(const StructureDef& s, const WorldState& world) {
  return Simulator(s, SimConfig{}).energy(world);
}

}  // namespace tensegrity
