#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tensegrity/model.hpp"

namespace tensegrity {

struct SineChannel {
  std::string cable_id;
  double center = 0.0;
  double amplitude = 0.0;
  double period = 1.0;
  double phase = 0.0;

  double value_at(double t) const;
};

/// Constant-sum complementary pair: cable_b = total_length - target(cable_a).
/// The excursion of cable_a comes from the program's sine channel on it.
struct AntagonisticPair {
  std::string cable_a;
  std::string cable_b;
  double total_length = 0.0;
};

struct ControllerProgram {
  std::vector<SineChannel> channels;
  std::vector<AntagonisticPair> pairs;
  std::map<std::string, double> holds;
};

/// Splits total into (a', total - a') with a' within half an ulp of a, so the
/// two parts sum to total exactly in floating point for 0 <= a <= total.
std::pair<double, double> split_total(double total, double a);

/// Target length per cable id mentioned by the program.
std::map<std::string, double> targets_at(const ControllerProgram& program, double t);

/// Checks the program against a structure. Empty result means valid.
std::vector<std::string> validate_program(const ControllerProgram& program, const StructureDef& s);

struct ActuationStep {
  double length = 0.0;
  double rate = 0.0;
};

inline constexpr double kActuationDeadband = 1e-6;

/// Trapezoidal rate limiter. Moves the commanded length toward target with
/// |Δrate| <= max_accel·dt and |rate| <= target_velocity, braking early enough
/// to stop at the target; the result is clamped to [min_length, max_length].
ActuationStep limit_actuation(double current_len, double current_rate, double target, double dt,
                              const ActuatorSpec& act, double min_length, double max_length);

}  // namespace tensegrity
