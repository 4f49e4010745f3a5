#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tensegrity/model.hpp"

namespace tensegrity {

/// Defaults for built-in models where no measured value exists.
inline constexpr double kPassiveStiffness = 150.0;
inline constexpr double kPassiveDamping = 1.0;
inline constexpr double kActiveStiffness = 5000.0;
inline constexpr double kActiveDamping = 5.0;
inline constexpr double kDefaultTargetVelocity = 0.05;
inline constexpr double kDefaultMaxAccel = 0.5;
/// Nominal passive pretension as a fraction of geometric length.
inline constexpr double kPretensionStrain = 0.02;
/// Active cable limits as fractions of the construction length.
inline constexpr double kActiveMinFraction = 0.5;
inline constexpr double kActiveMaxFraction = 1.5;

/// A compression element with its measured mass and length.
struct ComponentInfo {
  std::string label;  // e.g. "Forearm"
  std::string body;
  double measured_mass = 0.0;    // kg
  double measured_length = 0.0;  // m
  /// Nodes whose separation is the element's principal length.
  std::string length_from;
  std::string length_to;
};

/// How a motion is measured from tracked markers.
struct JointAngleMeasure {
  NodeRef pivot, proximal, distal;
  Vec3 plane_normal{0.0, 1.0, 0.0};  // orientation for the unwrapped angle
};
struct TravelMeasure {
  NodeRef marker;
  Vec3 axis{0.0, 0.0, 1.0};
};
struct HeadingMeasure {
  NodeRef pivot, marker;
  Vec3 plane_normal{0.0, 0.0, 1.0};
};

struct MotionMeasure {
  std::string name;
  enum class Kind { joint_angle, travel, heading } kind = Kind::joint_angle;
  JointAngleMeasure angle;
  TravelMeasure travel;
  HeadingMeasure heading;

  std::vector<NodeRef> markers() const;
  bool angular() const { return kind != Kind::travel; }
};

/// One independently actuated degree of freedom. `cables` are driven in phase
/// by identical sine channels; when `antagonist` is set it forms a
/// constant-sum pair with cables[0].
struct DofGroup {
  std::string preset;  // e.g. "elbow-pitch"
  std::vector<std::string> cables;
  std::optional<std::string> antagonist;
  MotionMeasure measure;
};

struct BuiltinModel {
  std::string name;  // CLI name: elbow, tetra-arm, saddle-arm
  StructureDef structure;
  std::vector<ComponentInfo> components;
  double measured_full_mass = 0.0;  // kg, 0 when none was measured
  std::vector<DofGroup> dofs;
  NodeRef end_effector;
  JointAngleMeasure elbow;
};

StructureDef build_elbow_joint();
StructureDef build_tetrahedrons_arm();
StructureDef build_saddle_arm();

std::vector<std::string> builtin_names();
/// Throws std::invalid_argument for an unknown name.
BuiltinModel builtin_model(std::string_view name);
const DofGroup* find_dof(const BuiltinModel& model, std::string_view preset);

/// Sets cable rest lengths so that the construction pose is in static
/// equilibrium under gravity with every cable in tension. Tensions are the
/// least-squares closest to a passive pretension of `strain` (force parity for
/// active cables), floored at a fraction of that target. Returns false when no
/// all-positive balance exists, leaving the structure unchanged.
bool balance_pretension(StructureDef& s, double strain = kPretensionStrain);

}  // namespace tensegrity
