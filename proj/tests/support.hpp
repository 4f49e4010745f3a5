#pragma once

#include <cmath>
#include <random>
#include <string>

#include "tensegrity/dynamics.hpp"
#include "tensegrity/model.hpp"

namespace tsg_test {

using namespace tensegrity;

/// Anchor fixed at the origin, point mass hanging below on one vertical cable.
struct Oscillator {
  double mass = 0.5;
  double k = 200.0;
  double b = 0.5;
  double rest = 1.0;
  double g = 9.81;

  StructureDef structure() const {
    StructureDef s;
    s.name = "oscillator";
    s.gravity = {0.0, 0.0, -g};
    RigidBodySpec anchor;
    anchor.name = "anchor";
    anchor.fixed = true;
    anchor.nodes = {{"a", Vec3::Zero()}};
    derive_mass_properties(anchor);
    RigidBodySpec bob;
    bob.name = "bob";
    bob.mass = mass;
    bob.nodes = {{"n", Vec3(0.0, 0.0, -equilibrium_length())}};
    derive_mass_properties(bob);
    s.bodies = {anchor, bob};
    CableSpec c;
    c.id = "spring";
    c.route = {{"anchor", "a"}, {"bob", "n"}};
    c.stiffness_k = k;
    c.damping_b = b;
    c.rest_length = rest;
    c.min_length = rest;
    c.max_length = rest;
    s.cables = {c};
    return s;
  }

  double equilibrium_length() const { return rest + mass * g / k; }
  double omega() const { return std::sqrt(k / mass); }
  double zeta() const { return b / (2.0 * std::sqrt(k * mass)); }

  /// Displacement from equilibrium for release at rest from amplitude a.
  double displacement(double a, double t) const {
    const double w = omega(), z = zeta();
    const double wd = w * std::sqrt(1.0 - z * z);
    return a * std::exp(-z * w * t) * (std::cos(wd * t) + z * w / wd * std::sin(wd * t));
  }
};

inline SimConfig config(double dt) {
  SimConfig c;
  c.dt = dt;
  return c;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Vec3 random_vec(std::mt19937_64& rng, double r) {
  return {uniform(rng, -r, r), uniform(rng, -r, r), uniform(rng, -r, r)};
}

/// Random structure satisfying every validation rule, in canonical form.
inline StructureDef random_structure(std::mt19937_64& rng) {
  StructureDef s;
  s.name = "random_" + std::to_string(pick(rng, 0, 9999));
  s.gravity = {0.0, 0.0, -uniform(rng, 0.0, 10.0)};
  const int nb = pick(rng, 1, 4);
  for (int b = 0; b < nb; ++b) {
    RigidBodySpec body;
    body.name = "b" + std::to_string(b);
    body.fixed = b == 0;
    const int nn = pick(rng, 1, 5);
    for (int n = 0; n < nn; ++n) body.nodes.push_back({"n" + std::to_string(n), random_vec(rng, 1.0)});
    if (nn >= 2 && pick(rng, 0, 2) > 0) {
      const int nr = pick(rng, 1, nn - 1);
      for (int r = 0; r < nr; ++r) {
        body.rods.push_back({body.nodes[r].id, body.nodes[r + 1].id, uniform(rng, 0.001, 0.1)});
        body.mass += body.rods.back().mass;
      }
    } else {
      body.mass = body.fixed && pick(rng, 0, 1) ? 0.0 : uniform(rng, 0.001, 0.5);
    }
    s.bodies.push_back(body);
  }
  // Canonical rounding first so the rod-mass sum rule holds on the rounded values.
  s = canonicalize(s);
  for (auto& body : s.bodies)
    if (!body.rods.empty()) {
      body.mass = 0.0;
      for (const auto& r : body.rods) body.mass += r.mass;
    }

  std::size_t total_nodes = 0;
  for (const auto& body : s.bodies) total_nodes += body.nodes.size();
  const int nc = total_nodes < 2 ? 0 : pick(rng, 0, 6);
  for (int c = 0; c < nc; ++c) {
    CableSpec cable;
    cable.id = "c" + std::to_string(c);
    const int len = pick(rng, 2, 4);
    while (static_cast<int>(cable.route.size()) < len) {
      const auto& body = s.bodies[pick(rng, 0, nb - 1)];
      NodeRef ref{body.name, body.nodes[pick(rng, 0, static_cast<int>(body.nodes.size()) - 1)].id};
      if (!cable.route.empty() && cable.route.back() == ref) continue;
      cable.route.push_back(ref);
    }
    cable.stiffness_k = uniform(rng, 1.0, 5000.0);
    cable.damping_b = pick(rng, 0, 3) == 0 ? 0.0 : uniform(rng, 0.0, 10.0);
    cable.min_length = uniform(rng, 0.01, 0.5);
    cable.rest_length = cable.min_length + uniform(rng, 0.0, 1.0);
    cable.max_length = cable.rest_length + uniform(rng, 0.0, 1.0);
    if (pick(rng, 0, 1)) {
      cable.kind = CableKind::active;
      cable.actuator = ActuatorSpec{uniform(rng, 0.01, 0.2), uniform(rng, 0.1, 2.0)};
    }
    s.cables.push_back(cable);
  }
  return canonicalize(s);
}

}  // namespace tsg_test
