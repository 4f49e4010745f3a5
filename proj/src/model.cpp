#include "tensegrity/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace tensegrity {

const BodyNode* RigidBodySpec::find_node(std::string_view id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

int RigidBodySpec::node_index(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

const RigidBodySpec* StructureDef::find_body(std::string_view body_name) const {
  for (const auto& b : bodies)
    if (b.name == body_name) return &b;
  return nullptr;
}

int StructureDef::body_index(std::string_view body_name) const {
  for (std::size_t i = 0; i < bodies.size(); ++i)
    if (bodies[i].name == body_name) return static_cast<int>(i);
  return -1;
}

int StructureDef::cable_index(std::string_view cable_id) const {
  for (std::size_t i = 0; i < cables.size(); ++i)
    if (cables[i].id == cable_id) return static_cast<int>(i);
  return -1;
}

std::vector<int> StructureDef::active_cable_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < cables.size(); ++i)
    if (cables[i].active()) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

bool positive_definite(const Mat3& m) {
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

std::vector<Violation> validate_structure(const StructureDef& s) {
  std::vector<Violation> out;
  auto add = [&](std::string element, std::string rule) {
    out.push_back({std::move(element), std::move(rule)});
  };

  if (!finite(s.gravity)) add("gravity", "components must be finite");

  std::set<std::string> body_names;
  bool any_fixed = false;
  for (const auto& b : s.bodies) {
    const std::string el = "body " + b.name;
    if (b.name.empty()) add("body", "name must be non-empty");
    if (!body_names.insert(b.name).second) add(el, "duplicate body name");
    if (b.nodes.empty()) add(el, "must have at least one node");
    std::set<std::string> node_ids;
    for (const auto& n : b.nodes) {
      if (!node_ids.insert(n.id).second) add(el + " node " + n.id, "duplicate node id");
      if (!finite(n.local_position)) add(el + " node " + n.id, "position must be finite");
    }
    for (const auto& r : b.rods) {
      if (!b.find_node(r.node_a) || !b.find_node(r.node_b))
        add(el + " rod " + r.node_a + "-" + r.node_b, "rod endpoints must name nodes of the body");
      if (!(r.mass > 0.0) || !std::isfinite(r.mass))
        add(el + " rod " + r.node_a + "-" + r.node_b, "rod mass must be > 0");
    }
    if (!b.rods.empty()) {
      double rod_total = 0.0;
      for (const auto& r : b.rods) rod_total += r.mass;
      if (std::abs(rod_total - b.mass) > 1e-9 * std::max(1.0, b.mass))
        add(el, "rod masses must sum to the body mass");
    }
    if (!std::isfinite(b.mass) || b.mass < 0.0) add(el, "mass must be finite and non-negative");
    if (!finite(b.com)) add(el, "com must be finite");
    if (b.fixed) {
      any_fixed = true;
    } else {
      if (!(b.mass > 0.0)) add(el, "mass must be > 0 unless fixed");
      if (!positive_definite(b.inertia)) add(el, "inertia must be symmetric positive-definite unless fixed");
    }
  }

  if (!any_fixed && s.gravity.norm() != 0.0)
    add("structure " + s.name, "needs a fixed body or zero gravity");

  std::set<std::string> cable_ids;
  for (const auto& c : s.cables) {
    const std::string el = "cable " + c.id;
    if (c.id.empty()) add("cable", "id must be non-empty");
    if (!cable_ids.insert(c.id).second) add(el, "duplicate cable id");
    if (!(c.stiffness_k > 0.0) || !std::isfinite(c.stiffness_k)) add(el, "stiffness k must be > 0");
    if (!(c.damping_b >= 0.0) || !std::isfinite(c.damping_b)) add(el, "damping b must be >= 0");
    if (!(c.min_length > 0.0) || !std::isfinite(c.min_length)) add(el, "min length must be > 0");
    if (!(c.rest_length > 0.0) || !std::isfinite(c.rest_length)) add(el, "rest length must be > 0");
    if (!(c.min_length <= c.rest_length && c.rest_length <= c.max_length) || !std::isfinite(c.max_length))
      add(el, "requires min <= rest <= max");
    if (c.route.size() < 2) add(el, "route needs at least two nodes");
    for (std::size_t i = 0; i < c.route.size(); ++i) {
      const auto& ref = c.route[i];
      const auto* body = s.find_body(ref.body);
      if (!body || !body->find_node(ref.node))
        add(el, "route reference " + ref.str() + " does not resolve");
      if (i > 0 && c.route[i - 1] == ref) add(el, "consecutive route entries must differ (" + ref.str() + ")");
    }
    if (c.active()) {
      if (!c.actuator) {
        add(el, "active cable requires an actuator");
      } else {
        if (!(c.actuator->target_velocity > 0.0) || !std::isfinite(c.actuator->target_velocity))
          add(el, "actuator target velocity must be > 0");
        if (!(c.actuator->max_accel > 0.0) || !std::isfinite(c.actuator->max_accel))
          add(el, "actuator max acceleration must be > 0");
      }
    } else if (c.actuator) {
      add(el, "passive cable must not carry an actuator");
    }
  }
  return out;
}

Mat3 thin_rod_inertia(double mass, double length, const Vec3& axis) {
  if (!std::isfinite(mass) || !std::isfinite(length) || !axis.allFinite())
    throw std::invalid_argument("thin_rod_inertia: non-finite input");
  if (mass <= 0.0 || length <= 0.0 || axis.norm() == 0.0)
    throw std::invalid_argument("thin_rod_inertia: mass and length must be positive, axis nonzero");
  const Vec3 u = axis.normalized();
  const double perp = mass * length * length / 12.0;
  // perp on the plane orthogonal to u, regularized moment along u.
  return perp * (Mat3::Identity() - u * u.transpose()) + kRodAxialInertia * (u * u.transpose());
}

void derive_mass_properties(RigidBodySpec& body) {
  if (body.rods.empty()) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& n : body.nodes) centroid += n.local_position;
    if (!body.nodes.empty()) centroid /= static_cast<double>(body.nodes.size());
    body.com = centroid;
    const double moment = 0.4 * body.mass * kDefaultSphereRadius * kDefaultSphereRadius;
    body.inertia = moment * Mat3::Identity();
    return;
  }

  double total = 0.0;
  Vec3 weighted = Vec3::Zero();
  for (const auto& r : body.rods) {
    const auto* a = body.find_node(r.node_a);
    const auto* b = body.find_node(r.node_b);
    if (!a || !b) throw std::invalid_argument("rod in body " + body.name + " names an unknown node");
    total += r.mass;
    weighted += r.mass * 0.5 * (a->local_position + b->local_position);
  }
  body.com = weighted / total;

  Mat3 inertia = Mat3::Zero();
  for (const auto& r : body.rods) {
    const Vec3 pa = body.find_node(r.node_a)->local_position;
    const Vec3 pb = body.find_node(r.node_b)->local_position;
    const Vec3 d = pb - pa;
    const Vec3 offset = 0.5 * (pa + pb) - body.com;
    inertia += thin_rod_inertia(r.mass, d.norm(), d);
    inertia += r.mass * (offset.squaredNorm() * Mat3::Identity() - offset * offset.transpose());
  }
  body.inertia = inertia;
}

namespace {

double round9(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

Vec3 round9(const Vec3& v) { return {round9(v.x()), round9(v.y()), round9(v.z())}; }

bool close(double a, double b, double rel) {
  if (a == b) return true;
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= rel * scale;
}

bool close(const Vec3& a, const Vec3& b, double rel) {
  // Components are compared against the vector's scale so that tiny
  // off-axis terms do not dominate.
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() <= rel * scale;
}

}  // namespace

StructureDef canonicalize(StructureDef s) {
  s.gravity = round9(s.gravity);
  for (auto& b : s.bodies) {
    b.mass = round9(b.mass);
    for (auto& n : b.nodes) n.local_position = round9(n.local_position);
    for (auto& r : b.rods) r.mass = round9(r.mass);
    derive_mass_properties(b);
  }
  for (auto& c : s.cables) {
    c.stiffness_k = round9(c.stiffness_k);
    c.damping_b = round9(c.damping_b);
    c.rest_length = round9(c.rest_length);
    c.min_length = round9(c.min_length);
    c.max_length = round9(c.max_length);
    if (c.actuator) {
      c.actuator->target_velocity = round9(c.actuator->target_velocity);
      c.actuator->max_accel = round9(c.actuator->max_accel);
    }
  }
  return s;
}

bool structurally_equal(const StructureDef& a, const StructureDef& b, double rel_tol,
                        std::string* first_difference) {
  auto fail = [&](const std::string& what) {
    if (first_difference) *first_difference = what;
    return false;
  };
  if (a.name != b.name) return fail("name");
  if (!close(a.gravity, b.gravity, rel_tol)) return fail("gravity");
  if (a.bodies.size() != b.bodies.size()) return fail("body count");
  for (std::size_t i = 0; i < a.bodies.size(); ++i) {
    const auto& x = a.bodies[i];
    const auto& y = b.bodies[i];
    const std::string el = "body " + x.name;
    if (x.name != y.name) return fail(el + " name");
    if (x.fixed != y.fixed) return fail(el + " fixed");
    if (!close(x.mass, y.mass, rel_tol)) return fail(el + " mass");
    if (x.nodes.size() != y.nodes.size()) return fail(el + " node count");
    for (std::size_t j = 0; j < x.nodes.size(); ++j) {
      if (x.nodes[j].id != y.nodes[j].id) return fail(el + " node id");
      if (!close(x.nodes[j].local_position, y.nodes[j].local_position, rel_tol))
        return fail(el + " node " + x.nodes[j].id);
    }
    if (x.rods.size() != y.rods.size()) return fail(el + " rod count");
    for (std::size_t j = 0; j < x.rods.size(); ++j) {
      if (x.rods[j].node_a != y.rods[j].node_a || x.rods[j].node_b != y.rods[j].node_b)
        return fail(el + " rod endpoints");
      if (!close(x.rods[j].mass, y.rods[j].mass, rel_tol)) return fail(el + " rod mass");
    }
    if (!close(x.com, y.com, rel_tol)) return fail(el + " com");
    const double iscale = std::max(x.inertia.cwiseAbs().maxCoeff(), y.inertia.cwiseAbs().maxCoeff());
    if ((x.inertia - y.inertia).cwiseAbs().maxCoeff() > rel_tol * iscale) return fail(el + " inertia");
  }
  if (a.cables.size() != b.cables.size()) return fail("cable count");
  for (std::size_t i = 0; i < a.cables.size(); ++i) {
    const auto& x = a.cables[i];
    const auto& y = b.cables[i];
    const std::string el = "cable " + x.id;
    if (x.id != y.id) return fail(el + " id");
    if (x.kind != y.kind) return fail(el + " kind");
    if (x.route != y.route) return fail(el + " route");
    if (!close(x.stiffness_k, y.stiffness_k, rel_tol)) return fail(el + " k");
    if (!close(x.damping_b, y.damping_b, rel_tol)) return fail(el + " b");
    if (!close(x.rest_length, y.rest_length, rel_tol)) return fail(el + " rest");
    if (!close(x.min_length, y.min_length, rel_tol)) return fail(el + " min");
    if (!close(x.max_length, y.max_length, rel_tol)) return fail(el + " max");
    if (x.actuator.has_value() != y.actuator.has_value()) return fail(el + " actuator presence");
    if (x.actuator) {
      if (!close(x.actuator->target_velocity, y.actuator->target_velocity, rel_tol))
        return fail(el + " vmax");
      if (!close(x.actuator->max_accel, y.actuator->max_accel, rel_tol)) return fail(el + " amax");
    }
  }
  return true;
}

double total_free_mass(const StructureDef& s) {
  double m = 0.0;
  for (const auto& b : s.bodies)
    if (!b.fixed) m += b.mass;
  return m;
}

double characteristic_length(const StructureDef& s) {
  double r = 0.0;
  for (const auto& b : s.bodies)
    for (const auto& n : b.nodes) r = std::max(r, (n.local_position - b.com).norm());
  return r;
}

}  // namespace tensegrity
