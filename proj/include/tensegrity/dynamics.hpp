#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tensegrity/model.hpp"

namespace tensegrity {

struct BodyState {
  Vec3 position = Vec3::Zero();  // center of mass, world frame
  Quat orientation = Quat::Identity();
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();  // world frame
};

/// Simulation state at one instant. commanded_lengths and commanded_rates are
/// indexed like StructureDef::active_cable_indices().
struct WorldState {
  double time = 0.0;
  std::vector<BodyState> body_states;
  std::vector<double> commanded_lengths;
  std::vector<double> commanded_rates;
};

struct CableReading {
  double length = 0.0;
  double elongation_X = 0.0;
  double elongation_rate_V = 0.0;
  double tension = 0.0;
};

struct Halfspace {
  Vec3 normal{0.0, 0.0, 1.0};  // outward, unit
  double offset = 0.0;         // solid region is normal·p <= offset
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

inline constexpr double kDefaultContactStiffness = 1e5;
inline constexpr double kDefaultContactDamping = 50.0;

struct Obstacle {
  std::variant<Halfspace, Sphere> shape;
  double contact_stiffness = kDefaultContactStiffness;
  double contact_damping = kDefaultContactDamping;
};

struct SimConfig {
  double dt = 1e-4;
  std::vector<Obstacle> obstacles;
  long max_steps_per_call = 10'000'000;
};

/// Thrown when any state component becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long step_index, std::string body, double time);

  long step_index() const { return step_index_; }
  const std::string& body() const { return body_; }
  double time() const { return time_; }

 private:
  long step_index_;
  std::string body_;
  double time_;
};

/// Thrown when two consecutive route points coincide, leaving the cable
/// direction undefined.
class DegenerateCableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Construction pose: every body at its com with identity orientation, at
/// rest; active cables commanded to their rest lengths.
WorldState initial_state(const StructureDef& s);

Vec3 world_node_position(const RigidBodySpec& body, const BodyState& state, std::string_view node_id);

CableReading read_cable(const CableSpec& cable, const StructureDef& s, const WorldState& world);

/// Forces on each route entry, in route order.
std::vector<Vec3> cable_node_forces(const CableSpec& cable, const StructureDef& s, const WorldState& world);

/// Penalty force on a point. Never attractive.
Vec3 contact_force(const Obstacle& obstacle, const Vec3& point, const Vec3& velocity);

struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();  // about the body's center of mass
};

std::vector<Wrench> accumulate_forces(const StructureDef& s, const WorldState& world, const SimConfig& config);

/// Target rest length per active cable id; cables not listed hold their
/// current commanded length.
using CableTargets = std::map<std::string, double>;

/// Advances the world by one time step.
WorldState step(const StructureDef& s, const WorldState& world, const CableTargets& controls,
                const SimConfig& config);

/// Simulated time the residual must stay below tolerance before settle
/// reports convergence.
inline constexpr double kSettleDwell = 0.05;

struct SettleResult {
  WorldState state;
  bool converged = false;
  double residual = 0.0;  // velocity measure at return
};

/// Steps with active targets frozen at their current commanded lengths until
/// residual_velocity stays below tol for kSettleDwell, or max_time elapses.
SettleResult settle(const StructureDef& s, const WorldState& world, const SimConfig& config, double tol,
                    double max_time);

/// Max over free bodies of |v| + 0.1·|ω|·characteristic_length.
double residual_velocity(const StructureDef& s, const WorldState& world);

/// Kinetic + gravitational + elastic energy of taut cables.
double mechanical_energy(const StructureDef& s, const WorldState& world);

/// Precompiled structure for repeated stepping. Route references are resolved
/// once; stepping is deterministic and allocation-free after construction.
/// A Simulator keeps scratch buffers, so one instance serves one thread.
class Simulator {
 public:
  Simulator(StructureDef structure, SimConfig config);

  const StructureDef& structure() const { return structure_; }
  const SimConfig& config() const { return config_; }

  /// Index into the active-cable vectors of WorldState, or -1.
  int active_slot(std::string_view cable_id) const;
  int active_count() const { return static_cast<int>(active_.size()); }
  const CableSpec& active_cable(int slot) const { return structure_.cables[active_[slot]]; }

  Vec3 node_position(const WorldState& w, int body, int node) const;
  Vec3 node_velocity(const WorldState& w, int body, int node) const;

  CableReading read(int cable, const WorldState& w) const;
  void node_forces(int cable, const WorldState& w, std::vector<Vec3>& out) const;
  /// Nonzero when any node of the structure is in contact.
  bool in_contact(const WorldState& w) const;

  void accumulate(const WorldState& w, std::vector<Wrench>& out) const;

  /// One step towards per-slot targets (size active_count()).
  void step(WorldState& w, const std::vector<double>& targets);

  SettleResult settle(WorldState w, double tol, double max_time);

  double residual(const WorldState& w) const;
  double energy(const WorldState& w) const;

  long steps_taken() const { return steps_; }

 private:
  struct RoutePoint {
    int body;
    int node;
    std::size_t flat;  // index into the node caches
  };
  struct CompiledCable {
    std::vector<RoutePoint> points;
    int slot = -1;  // active slot or -1
  };

  void check_finite(const WorldState& w) const;
  void cache_nodes(const WorldState& w) const;
  CableReading read_cached(int cable, const WorldState& w) const;
  void forces_cached(int cable, double tension, std::vector<Vec3>& out) const;

  StructureDef structure_;
  SimConfig config_;
  std::vector<CompiledCable> cables_;
  std::vector<int> active_;
  std::vector<Mat3> inertia_inv_body_;
  double char_length_ = 0.0;
  long steps_ = 0;
  std::vector<Wrench> scratch_wrench_;
  std::vector<std::size_t> node_offset_;
  mutable std::vector<Vec3> pos_, vel_;
  mutable std::vector<Vec3> scratch_forces_;
};

}  // namespace tensegrity
