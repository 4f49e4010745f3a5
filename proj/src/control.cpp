#include "tensegrity/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace tensegrity {

double SineChannel::value_at(double t) const {
  return center + amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
}

std::pair<double, double> split_total(double total, double a) {
  const double b = total - a;
  return {total - b, b};
}

std::map<std::string, double> targets_at(const ControllerProgram& program, double t) {
  std::map<std::string, double> out;
  for (const auto& [id, len] : program.holds) out[id] = len;
  for (const auto& ch : program.channels) out[ch.cable_id] = ch.value_at(t);
  for (const auto& pair : program.pairs) {
    auto it = out.find(pair.cable_a);
    if (it == out.end()) continue;
    const auto [a, b] = split_total(pair.total_length, it->second);
    it->second = a;
    out[pair.cable_b] = b;
  }
  return out;
}

std::vector<std::string> validate_program(const ControllerProgram& program, const StructureDef& s) {
  std::vector<std::string> errors;
  std::set<std::string> claimed;
  auto active_cable = [&](const std::string& id, const std::string& where) -> const CableSpec* {
    const int idx = s.cable_index(id);
    if (idx < 0) {
      errors.push_back(where + ": unknown cable " + id);
      return nullptr;
    }
    if (!s.cables[idx].active()) {
      errors.push_back(where + ": cable " + id + " is passive");
      return nullptr;
    }
    return &s.cables[idx];
  };
  auto claim = [&](const std::string& id, const std::string& where) {
    if (!claimed.insert(id).second) errors.push_back(where + ": cable " + id + " is already controlled");
  };

  for (const auto& ch : program.channels) {
    const std::string where = "sine " + ch.cable_id;
    claim(ch.cable_id, where);
    const auto* c = active_cable(ch.cable_id, where);
    if (!(ch.period > 0.0)) errors.push_back(where + ": period must be > 0");
    if (c && (ch.center - std::abs(ch.amplitude) < c->min_length ||
              ch.center + std::abs(ch.amplitude) > c->max_length))
      errors.push_back(where + ": excursion leaves [min, max]");
  }
  for (const auto& pair : program.pairs) {
    const std::string where = "pair " + pair.cable_a + " " + pair.cable_b;
    claim(pair.cable_b, where);
    const auto* a = active_cable(pair.cable_a, where);
    const auto* b = active_cable(pair.cable_b, where);
    const auto src = std::find_if(program.channels.begin(), program.channels.end(),
                                  [&](const SineChannel& ch) { return ch.cable_id == pair.cable_a; });
    if (src == program.channels.end()) errors.push_back(where + ": needs a sine channel on " + pair.cable_a);
    if (a && b && !(pair.total_length > a->min_length + b->min_length))
      errors.push_back(where + ": total must exceed the sum of minimum lengths");
  }
  for (const auto& [id, len] : program.holds) {
    const std::string where = "hold " + id;
    claim(id, where);
    const auto* c = active_cable(id, where);
    if (c && (len < c->min_length || len > c->max_length)) errors.push_back(where + ": length outside [min, max]");
  }
  return errors;
}

ActuationStep limit_actuation(double current_len, double current_rate, double target, double dt,
                              const ActuatorSpec& act, double min_length, double max_length) {
  const double dv = act.max_accel * dt;
  target = std::clamp(target, min_length, max_length);
  const double err = target - current_len;
  const double dist = std::abs(err);

  if (dist <= kActuationDeadband && std::abs(current_rate) <= dv)
    return {target, 0.0};

  // Largest speed from which stepping down by dv per step stops within dist.
  // From speed (n + f) dv the steps cover (n(n+1)/2 + (n+1) f) dv dt.
  const double steps = dist / (dv * dt);
  double n = std::floor(std::sqrt(0.25 + 2.0 * steps) - 0.5);
  if ((n + 1.0) * (n + 2.0) / 2.0 <= steps) n += 1.0;
  if (n * (n + 1.0) / 2.0 > steps) n -= 1.0;
  n = std::max(n, 0.0);
  const double f = std::clamp((steps - n * (n + 1.0) / 2.0) / (n + 1.0), 0.0, 1.0);
  const double braking = (n + f) * dv;
  const double desired_speed = std::min({act.target_velocity, braking, dist / dt});
  const double desired_rate = std::copysign(desired_speed, err);

  double rate = current_rate + std::clamp(desired_rate - current_rate, -dv, dv);
  rate = std::clamp(rate, -act.target_velocity, act.target_velocity);

  const double len = std::clamp(current_len + rate * dt, min_length, max_length);
  if (len == max_length || len == min_length)
    rate = std::clamp((len - current_len) / dt, current_rate - dv, current_rate + dv);
  return {len, rate};
}

}  // namespace tensegrity
