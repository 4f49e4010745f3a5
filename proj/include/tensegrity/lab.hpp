#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tensegrity/control.hpp"
#include "tensegrity/dynamics.hpp"
#include "tensegrity/gallery.hpp"
#include "tensegrity/model.hpp"

namespace tensegrity {

/// Velocity tolerance used for settling before experiments, m/s.
inline constexpr double kSettleTolerance = 1e-4;
inline constexpr double kSettleMaxTime = 60.0;
/// Fraction of leading samples dropped as startup transient.
inline constexpr double kTransientFraction = 0.05;
/// Fraction of trailing samples averaged for compliance recovery.
inline constexpr double kRecoveryFraction = 0.10;

/// Preset defaults. Not from measurements.
inline constexpr double kPresetPeriod = 8.0;
inline constexpr double kPresetAmplitudeFraction = 0.15;
inline constexpr double kPresetDuration = 16.0;

struct TrajectorySample {
  double t = 0.0;
  std::vector<Vec3> positions;  // one per marker
};

struct TrajectoryRecord {
  double sample_period = 0.0;
  std::vector<NodeRef> markers;
  std::vector<TrajectorySample> samples;
  /// First and last time any node touched an obstacle, when one did.
  std::optional<std::pair<double, double>> contact_interval;
  std::vector<std::string> warnings;

  /// Index of a marker, or -1.
  int marker_index(const NodeRef& marker) const;
};

/// Steps the dynamics from `initial` under `program`, sampling marker world
/// positions every sample_period (both endpoints included). Active cables the
/// program does not mention hold their initial commanded length. Throws
/// std::invalid_argument for an invalid program, marker or timing, and
/// DivergenceError from the dynamics. Optionally returns the final state.
TrajectoryRecord track(const StructureDef& s, const WorldState& initial, const ControllerProgram& program,
                       const std::vector<NodeRef>& markers, double duration, double sample_period,
                       const SimConfig& config, WorldState* final_state = nullptr);

/// Angle at `pivot` between the segments to `proximal` and `distal`, degrees
/// in [0, 180], per sample.
std::vector<double> joint_angle(const TrajectoryRecord& traj, const NodeRef& pivot, const NodeRef& proximal,
                                const NodeRef& distal);

/// Signed angle from the proximal to the distal segment about
/// `plane_normal`, mapped to [0, 360) at the first sample and unwrapped, so
/// extensions past 180 degrees stay continuous.
std::vector<double> joint_angle_unwrapped(const TrajectoryRecord& traj, const NodeRef& pivot,
                                          const NodeRef& proximal, const NodeRef& distal, const Vec3& plane_normal);

/// Heading of marker about pivot in the plane with the given normal, degrees
/// relative to the first sample, unwrapped.
std::vector<double> heading_angle(const TrajectoryRecord& traj, const NodeRef& pivot, const NodeRef& marker,
                                  const Vec3& plane_normal);

/// Displacement of a marker from its first sample along `axis`, m.
std::vector<double> travel(const TrajectoryRecord& traj, const NodeRef& marker, const Vec3& axis);

struct RangeOfMotionReport {
  std::string motion;
  bool angular = true;  // degrees when true, m otherwise
  std::vector<std::pair<double, double>> series;  // (t, value)
  std::size_t discarded = 0;  // leading samples dropped
  double min = 0.0;
  double max = 0.0;
  double sweep = 0.0;
};

/// min, max and sweep after dropping the first kTransientFraction of samples.
/// Throws std::invalid_argument for an empty series.
RangeOfMotionReport range_of_motion(std::string motion, const std::vector<double>& times,
                                    const std::vector<double>& values, bool angular = true);

/// Applies a motion measure to a trajectory containing its markers.
RangeOfMotionReport measure_motion(const TrajectoryRecord& traj, const MotionMeasure& measure);

/// Multiplies every passive cable's rest length and stiffness by
/// (1 + u·magnitude), u uniform in [-1, 1], from a generator seeded by `seed`.
/// Throws std::invalid_argument unless 0 <= magnitude < 0.2.
StructureDef perturb(const StructureDef& s, std::uint64_t seed, double magnitude);

struct RepeatabilityRun {
  std::uint64_t seed = 0;
  bool completed = false;
  bool converged = false;  // settle before tracking
  double sweep = 0.0;
  std::string error;       // why the run did not complete
};

struct RepeatabilityReport {
  std::string motion;
  bool angular = true;
  double magnitude = 0.0;
  std::vector<RepeatabilityRun> runs;
  double mean = 0.0;
  double std_dev = 0.0;         // population
  double sample_std_dev = 0.0;  // n - 1, 0 when fewer than two runs completed
  bool flagged = false;         // some run failed and was left out
};

/// Population mean and standard deviation plus the n-1 variant.
struct SweepStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double sample_std_dev = 0.0;
};
SweepStats sweep_stats(const std::vector<double>& sweeps);

struct ExperimentTiming {
  double duration = kPresetDuration;
  double sample_period = 0.01;
  double settle_tol = kSettleTolerance;
  double settle_max_time = kSettleMaxTime;
};

/// For each seed: perturb, settle from the construction pose, track, measure.
/// Runs execute in parallel; the report is ordered by seed list position.
/// Throws std::invalid_argument when fewer than two seeds are given.
RepeatabilityReport repeatability(const StructureDef& s, const ControllerProgram& program,
                                  const MotionMeasure& measure, const std::vector<std::uint64_t>& seeds,
                                  double magnitude, const SimConfig& config, const ExperimentTiming& timing = {});

struct ComplianceReport {
  TrajectoryRecord free_trajectory;
  TrajectoryRecord obstructed_trajectory;
  double max_deviation = 0.0;   // m, over samples and markers
  std::optional<std::pair<double, double>> contact_interval;
  double recovery_error = 0.0;  // m, mean over the final kRecoveryFraction of samples
  bool recovered = true;        // recovery_error <= 10% of max_deviation
};

/// Tracks twice from the same state, without and with the obstacles added to
/// `config`, and compares the marker paths.
ComplianceReport compliance_experiment(const StructureDef& s, const WorldState& initial,
                                       const ControllerProgram& program, const std::vector<Obstacle>& obstacles,
                                       const std::vector<NodeRef>& markers, double duration, double sample_period,
                                       const SimConfig& config);

struct PlaneSpec {
  Vec3 origin = Vec3::Zero();
  Vec3 normal{0.0, 0.0, 1.0};
};

struct WorkspaceReport {
  double area = 0.0;           // m², convex hull of projected samples
  double angular_extent = 0.0; // degrees about the projected pivot
  std::size_t samples = 0;
  std::vector<std::pair<double, double>> hull;  // plane coordinates, counter-clockwise
};

/// Projects one marker's path onto the plane and measures its convex hull
/// area and angular extent about `pivot`.
WorkspaceReport workspace_summary(const TrajectoryRecord& traj, const NodeRef& marker, const PlaneSpec& plane,
                                  const Vec3& pivot);
/// Same for plain points.
WorkspaceReport workspace_summary(const std::vector<Vec3>& points, const PlaneSpec& plane, const Vec3& pivot);

/// Convex hull area of 2D points (monotone chain and shoelace).
double convex_hull_area(std::vector<std::pair<double, double>> points,
                        std::vector<std::pair<double, double>>* hull = nullptr);

/// Sine preset for one DOF group: every listed cable oscillates about its
/// commanded length in `world`; an antagonist is paired at constant sum.
ControllerProgram dof_program(const StructureDef& s, const WorldState& world, const DofGroup& dof,
                              double amplitude_fraction = kPresetAmplitudeFraction, double period = kPresetPeriod);

/// Plane and pivot used for workspace reporting of a DOF.
PlaneSpec dof_plane(const StructureDef& s, const WorldState& world, const DofGroup& dof, Vec3* pivot);
PlaneSpec measure_plane(const StructureDef& s, const WorldState& world, const MotionMeasure& measure, Vec3* pivot);

/// "body.node". Throws std::invalid_argument.
NodeRef parse_node_ref(std::string_view text);

/// "sphere:cx,cy,cz,r" or "halfspace:nx,ny,nz,offset"; the normal is
/// normalized. Throws std::invalid_argument.
Obstacle parse_obstacle(std::string_view spec);

/// "angle:pivot,proximal,distal[,nx,ny,nz]", "travel:marker,ax,ay,az" or
/// "heading:pivot,marker,nx,ny,nz", markers as body.node. The measure is
/// named after the spec. Throws std::invalid_argument.
MotionMeasure parse_measure(std::string_view spec);

}  // namespace tensegrity
