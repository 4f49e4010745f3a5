#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tensegrity {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Axial moment assigned to thin rods so the tensor stays invertible.
inline constexpr double kRodAxialInertia = 1e-9;

/// Radius of the uniform sphere used when a body lists no rod members.
inline constexpr double kDefaultSphereRadius = 0.01;

struct BodyNode {
  std::string id;
  Vec3 local_position = Vec3::Zero();
};

/// A straight member of a compression element, spanning two of the body's nodes.
/// Rods are the source of the derived mass properties.
struct RodMember {
  std::string node_a;
  std::string node_b;
  double mass = 0.0;
};

struct RigidBodySpec {
  std::string name;
  std::vector<BodyNode> nodes;
  std::vector<RodMember> rods;
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
  bool fixed = false;

  const BodyNode* find_node(std::string_view id) const;
  int node_index(std::string_view id) const;
};

struct ActuatorSpec {
  double target_velocity = 0.05;
  double max_accel = 0.5;
};

enum class CableKind { passive, active };

struct NodeRef {
  std::string body;
  std::string node;

  std::string str() const { return body + "." + node; }
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct CableSpec {
  std::string id;
  std::vector<NodeRef> route;
  double stiffness_k = 0.0;
  double damping_b = 0.0;
  double rest_length = 0.0;
  double min_length = 0.0;
  double max_length = 0.0;
  CableKind kind = CableKind::passive;
  std::optional<ActuatorSpec> actuator;

  bool active() const { return kind == CableKind::active; }
};

struct StructureDef {
  std::string name;
  std::vector<RigidBodySpec> bodies;
  std::vector<CableSpec> cables;
  Vec3 gravity{0.0, 0.0, -9.81};

  const RigidBodySpec* find_body(std::string_view name) const;
  int body_index(std::string_view name) const;
  int cable_index(std::string_view id) const;
  /// Indices into `cables` of the active cables, in definition order.
  std::vector<int> active_cable_indices() const;
};

struct Violation {
  std::string element;
  std::string rule;

  std::string str() const { return element + ": " + rule; }
};

/// Checks every structural invariant; an empty result means the structure is valid.
std::vector<Violation> validate_structure(const StructureDef& s);

/// Inertia of a uniform thin rod about its center. The axial moment is
/// regularized to kRodAxialInertia. Throws std::invalid_argument on
/// non-finite or non-positive inputs.
Mat3 thin_rod_inertia(double mass, double length, const Vec3& axis);

/// Recomputes com and inertia of a body from its rod members (parallel-axis
/// sum about the combined center of mass), or from a uniform sphere of radius
/// kDefaultSphereRadius centered on the node centroid when the body has no rods.
void derive_mass_properties(RigidBodySpec& body);

/// Rounds every real in the structure to 9 significant digits and re-derives
/// mass properties, so the result survives a text round trip bit-exactly.
StructureDef canonicalize(StructureDef s);

/// Field-for-field comparison with a relative tolerance on reals.
bool structurally_equal(const StructureDef& a, const StructureDef& b, double rel_tol = 1e-9,
                        std::string* first_difference = nullptr);

double total_free_mass(const StructureDef& s);

/// Largest node distance from the center of mass over all bodies.
double characteristic_length(const StructureDef& s);

}  // namespace tensegrity
