#include "tensegrity/gallery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

namespace tensegrity {

std::vector<NodeRef> MotionMeasure::markers() const {
  switch (kind) {
    case Kind::joint_angle:
      return {angle.pivot, angle.proximal, angle.distal};
    case Kind::travel:
      return {travel.marker};
    case Kind::heading:
      return {heading.pivot, heading.marker};
  }
  return {};
}

namespace {

// ---------------------------------------------------------------------------
// Construction helper. Node positions are given in the world frame of the
// construction pose, which is also each body's local frame.

class Designer {
 public:
  explicit Designer(std::string name) { s_.name = std::move(name); }

  Designer& body(const std::string& name, double mass, bool fixed = false) {
    RigidBodySpec b;
    b.name = name;
    b.mass = mass;
    b.fixed = fixed;
    s_.bodies.push_back(std::move(b));
    return *this;
  }

  Designer& node(const std::string& id, const Vec3& p) {
    current().nodes.push_back({id, p});
    return *this;
  }

  /// Adds a member rod; masses are assigned by length in finish_body().
  Designer& rod(const std::string& a, const std::string& b) {
    current().rods.push_back({a, b, 0.0});
    return *this;
  }

  Designer& passive(const std::string& id, std::vector<NodeRef> route) {
    return cable(id, std::move(route), CableKind::passive);
  }

  Designer& active(const std::string& id, std::vector<NodeRef> route) {
    return cable(id, std::move(route), CableKind::active);
  }

  /// Rigidly turns the named bodies' nodes about an axis through `pivot`.
  Designer& turn(const std::vector<std::string>& bodies, const Vec3& pivot, const Eigen::AngleAxisd& rotation) {
    for (auto& b : s_.bodies)
      if (std::find(bodies.begin(), bodies.end(), b.name) != bodies.end())
        for (auto& n : b.nodes) n.local_position = pivot + rotation * (n.local_position - pivot);
    return *this;
  }

  StructureDef finish() {
    for (auto& b : s_.bodies) {
      if (b.rods.empty()) {
        derive_mass_properties(b);
        continue;
      }
      double total_length = 0.0;
      for (const auto& r : b.rods) total_length += rod_length(b, r);
      // Uniform linear density within one compression element.
      double assigned = 0.0;
      for (std::size_t i = 0; i < b.rods.size(); ++i) {
        auto& r = b.rods[i];
        r.mass = i + 1 == b.rods.size() ? b.mass - assigned : b.mass * rod_length(b, r) / total_length;
        assigned += r.mass;
      }
      derive_mass_properties(b);
    }
    for (auto& c : s_.cables) {
      const double len = route_length(c);
      c.rest_length = len * (1.0 - kPretensionStrain);
      if (c.active()) {
        c.min_length = kActiveMinFraction * len;
        c.max_length = kActiveMaxFraction * len;
      } else {
        c.min_length = 0.5 * c.rest_length;
        c.max_length = 1.5 * len;
      }
    }
    if (!balance_pretension(s_))
      throw std::logic_error("built-in model " + s_.name + " admits no all-tension equilibrium");
    return canonicalize(std::move(s_));
  }

 private:
  RigidBodySpec& current() { return s_.bodies.back(); }

  static double rod_length(const RigidBodySpec& b, const RodMember& r) {
    return (b.find_node(r.node_b)->local_position - b.find_node(r.node_a)->local_position).norm();
  }

  double route_length(const CableSpec& c) const {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < c.route.size(); ++i) len += (position(c.route[i + 1]) - position(c.route[i])).norm();
    return len;
  }

  Vec3 position(const NodeRef& ref) const {
    const auto* b = s_.find_body(ref.body);
    const auto* n = b ? b->find_node(ref.node) : nullptr;
    if (!n) throw std::logic_error("designer: unknown node " + ref.str());
    return n->local_position;
  }

  Designer& cable(const std::string& id, std::vector<NodeRef> route, CableKind kind) {
    CableSpec c;
    c.id = id;
    c.route = std::move(route);
    c.kind = kind;
    if (kind == CableKind::active) {
      c.stiffness_k = kActiveStiffness;
      c.damping_b = kActiveDamping;
      c.actuator = ActuatorSpec{kDefaultTargetVelocity, kDefaultMaxAccel};
    } else {
      c.stiffness_k = kPassiveStiffness;
      c.damping_b = kPassiveDamping;
    }
    s_.cables.push_back(std::move(c));
    return *this;
  }

  StructureDef s_;
};

NodeRef at(const std::string& body, const std::string& node) { return {body, node}; }

Vec3 polar(double radius, double degrees, double z) {
  const double a = degrees * M_PI / 180.0;
  return {radius * std::cos(a), radius * std::sin(a), z};
}

// ---------------------------------------------------------------------------
// Elbow module. Two perpendicular saddles in series: humerus fork (prongs ±y)
// against the olecranon's upper fork (prongs ±x), and the olecranon's lower
// fork (prongs ±y) against the forearm fork (prongs ±x). The olecranon is the
// cross of the resulting Cardan-like joint and carries the routing hoops.

struct ElbowGeometry {
  double crotch_z;         // humerus distal crotch height
  double humerus_span;     // half-span of the humerus fork
  double olecranon_span;   // half-span of the olecranon upper fork (measured length / 2)
  double lower_span;       // half-span of the olecranon lower fork
  double forearm_span;     // half-span of the forearm fork
  double drop;             // prong height of each fork
  double forearm_length;   // forearm crotch to tip
  double lever;            // lever arm of the humerus actuation hoops
  double lever_height;     // height of those hoops above the crotch
  double forearm_lever;    // lever arm of the forearm insertions
  double insertion_depth;  // insertions below the forearm crotch
  double flexion = 0.0;    // construction bend of the lower arm, rad, tip toward +x
};

void add_humerus_fork(Designer& d, const ElbowGeometry& g) {
  const double z = g.crotch_z;
  d.node("crotch", {0.0, 0.0, z})
      .node("prong_l", {0.0, -g.humerus_span, z - g.drop})
      .node("prong_r", {0.0, g.humerus_span, z - g.drop})
      .node("lever_f", {g.lever, 0.0, z + g.lever_height})
      .node("lever_b", {-g.lever, 0.0, z + g.lever_height})
      .node("lever_c", {0.0, 0.0, z + g.lever_height})
      .rod("crotch", "prong_l")
      .rod("crotch", "prong_r")
      .rod("lever_f", "lever_b");
}

void add_olecranon_and_forearm(Designer& d, const ElbowGeometry& g, double olecranon_mass, double forearm_mass) {
  const double z = g.crotch_z;
  const double oz = z - 1.5 * g.drop;  // olecranon crotch
  d.body("olecranon", olecranon_mass)
      .node("hub", {0.0, 0.0, oz})
      .node("tip_f", {g.olecranon_span, 0.0, oz + g.drop})
      .node("tip_b", {-g.olecranon_span, 0.0, oz + g.drop})
      .node("tip_l", {0.0, -g.lower_span, oz - g.drop})
      .node("tip_r", {0.0, g.lower_span, oz - g.drop})
      .rod("hub", "tip_f")
      .rod("hub", "tip_b")
      .rod("hub", "tip_l")
      .rod("hub", "tip_r");

  const double fz = oz - 1.5 * g.drop;  // forearm crotch
  const double iz = fz - g.insertion_depth;
  d.body("forearm", forearm_mass)
      .node("crotch", {0.0, 0.0, fz})
      .node("prong_f", {g.forearm_span, 0.0, fz + g.drop})
      .node("prong_b", {-g.forearm_span, 0.0, fz + g.drop})
      .node("ins_f", {g.forearm_lever, 0.0, iz})
      .node("ins_b", {-g.forearm_lever, 0.0, iz})
      .node("ins_l", {0.0, -g.forearm_lever, iz})
      .node("ins_r", {0.0, g.forearm_lever, iz})
      .node("tip", {0.0, 0.0, fz - g.forearm_length})
      .rod("crotch", "tip")
      .rod("crotch", "prong_f")
      .rod("crotch", "prong_b")
      .rod("ins_f", "ins_b")
      .rod("ins_l", "ins_r");

  if (g.flexion != 0.0)
    d.turn({"olecranon", "forearm"}, {0.0, 0.0, z - g.drop}, Eigen::AngleAxisd(-g.flexion, Vec3::UnitY()));

  // Humerus fork against olecranon upper fork.
  for (const char* h : {"prong_l", "prong_r"}) {
    const std::string hs = h;
    d.passive("hx_" + hs.substr(6) + "_hub", {at("humerus", hs), at("olecranon", "hub")});
    for (const char* o : {"tip_f", "tip_b"}) {
      const std::string os = o;
      d.passive("hx_" + hs.substr(6) + "_" + os.substr(4), {at("humerus", hs), at("olecranon", os)});
    }
  }
  d.passive("hx_crotch_f", {at("humerus", "crotch"), at("olecranon", "tip_f")});
  d.passive("hx_crotch_b", {at("humerus", "crotch"), at("olecranon", "tip_b")});

  // Olecranon lower fork against forearm fork.
  for (const char* o : {"tip_l", "tip_r"}) {
    const std::string os = o;
    d.passive("ox_" + os.substr(4) + "_crotch", {at("olecranon", os), at("forearm", "crotch")});
    for (const char* f : {"prong_f", "prong_b"}) {
      const std::string fs = f;
      d.passive("ox_" + os.substr(4) + "_" + fs.substr(6), {at("olecranon", os), at("forearm", fs)});
    }
  }
  d.passive("ox_hub_f", {at("olecranon", "hub"), at("forearm", "prong_f")});
  d.passive("ox_hub_b", {at("olecranon", "hub"), at("forearm", "prong_b")});
}

void add_elbow_actuation(Designer& d, bool with_triceps) {
  d.active("biceps", {at("humerus", "lever_f"), at("olecranon", "tip_f"), at("forearm", "ins_f")});
  if (with_triceps)
    d.active("triceps", {at("humerus", "lever_b"), at("olecranon", "tip_b"), at("forearm", "ins_b")});
  d.active("yaw_l", {at("humerus", "prong_l"), at("olecranon", "tip_l"), at("forearm", "ins_l")});
  d.active("yaw_r", {at("humerus", "prong_r"), at("olecranon", "tip_r"), at("forearm", "ins_r")});
}

// Tetrahedrons arm compression elements, kg and m.
constexpr double kTetraForearmMass = 0.0101, kTetraForearmLength = 0.586;
constexpr double kTetraOlecranonMass = 0.0060, kTetraOlecranonLength = 0.240;
constexpr double kTetraHumerusMass = 0.0366, kTetraHumerusLength = 0.762;
constexpr double kTetraShoulderMass = 0.0248, kTetraShoulderLength = 0.361;
constexpr double kTetraFullMass = 0.0775;

// Saddle arm compression elements.
constexpr double kSaddleForearmMass = 0.0185, kSaddleForearmLength = 0.54;
constexpr double kSaddleOlecranonMass = 0.0116, kSaddleOlecranonLength = 0.24;
constexpr double kSaddleHumerusMass = 0.0232, kSaddleHumerusLength = 0.53;
constexpr double kSaddleJointMass = 0.0361, kSaddleJointLength = 0.54;
constexpr double kSaddleFullMass = 0.0894;

ElbowGeometry elbow_geometry(double crotch_z, double olecranon_length, double forearm_length) {
  ElbowGeometry g;
  g.crotch_z = crotch_z;
  g.humerus_span = 0.08;
  g.olecranon_span = olecranon_length / 2.0;
  g.lower_span = 0.08;
  g.forearm_span = 0.08;
  g.drop = 0.06;
  g.forearm_length = forearm_length;
  g.lever = 0.05;
  g.lever_height = 0.20;
  g.forearm_lever = 0.04;
  g.insertion_depth = 0.12;
  return g;
}

// Standalone elbow: the humerus is anchored.
constexpr double kElbowHumerusTop = 0.30;

StructureDef make_elbow() {
  Designer d("elbow");
  const ElbowGeometry g = elbow_geometry(0.0, kTetraOlecranonLength, kTetraForearmLength);
  d.body("humerus", kTetraHumerusMass, true).node("top", {0.0, 0.0, kElbowHumerusTop}).rod("top", "crotch");
  add_humerus_fork(d, g);
  add_olecranon_and_forearm(d, g, kTetraOlecranonMass, kTetraForearmMass);
  add_elbow_actuation(d, false);
  return d.finish();
}

// Tetrahedrons arm. A regular tetrahedron (apex down) hangs from the motor
// platform; the humerus head sits at its centroid inside a four-cable cage and
// a collar below the apex carries the lift and stabilizing cables.
constexpr double kPlatformRadius = 0.25;
constexpr double kTetraTopZ = -0.10;
constexpr double kCollarDrop = 0.09;  // collar below the tetrahedron apex
constexpr double kCollarRadius = 0.07;
constexpr double kPitchLeverDepth = 0.55;  // below the humerus head
constexpr double kPitchLever = 0.05;

StructureDef make_tetrahedrons_arm() {
  Designer d("tetra-arm");
  const double edge = kTetraShoulderLength;
  const double circum = edge / std::sqrt(3.0);
  const double height = edge * std::sqrt(2.0 / 3.0);
  const double apex_z = kTetraTopZ - height;
  const double head_z = kTetraTopZ - height / 4.0;
  const double collar_z = apex_z - kCollarDrop;
  const double crotch_z = head_z - kTetraHumerusLength;

  d.body("platform", 0.0, true)
      .node("p60", polar(kPlatformRadius, 60, 0.0))
      .node("p180", polar(kPlatformRadius, 180, 0.0))
      .node("p300", polar(kPlatformRadius, 300, 0.0));

  d.body("shoulder", kTetraShoulderMass)
      .node("t1", polar(circum, 0, kTetraTopZ))
      .node("t2", polar(circum, 120, kTetraTopZ))
      .node("t3", polar(circum, 240, kTetraTopZ))
      .node("apex", {0.0, 0.0, apex_z})
      .rod("t1", "t2")
      .rod("t2", "t3")
      .rod("t3", "t1")
      .rod("t1", "apex")
      .rod("t2", "apex")
      .rod("t3", "apex");

  d.body("humerus", kTetraHumerusMass)
      .node("head", {0.0, 0.0, head_z})
      .node("collar", {0.0, 0.0, collar_z})
      .node("c1", polar(kCollarRadius, 0, collar_z))
      .node("c2", polar(kCollarRadius, 120, collar_z))
      .node("c3", polar(kCollarRadius, 240, collar_z))
      .node("pitch_f", {kPitchLever, 0.0, head_z - kPitchLeverDepth})
      .node("pitch_b", {-kPitchLever, 0.0, head_z - kPitchLeverDepth})
      .rod("head", "crotch")
      .rod("collar", "c1")
      .rod("collar", "c2")
      .rod("collar", "c3")
      .rod("pitch_f", "pitch_b");
  const ElbowGeometry g = elbow_geometry(crotch_z, kTetraOlecranonLength, kTetraForearmLength);
  add_humerus_fork(d, g);
  add_olecranon_and_forearm(d, g, kTetraOlecranonMass, kTetraForearmMass);

  d.passive("sus_t1_60", {at("platform", "p60"), at("shoulder", "t1")})
      .passive("sus_t1_300", {at("platform", "p300"), at("shoulder", "t1")})
      .passive("sus_t2_60", {at("platform", "p60"), at("shoulder", "t2")})
      .passive("sus_t2_180", {at("platform", "p180"), at("shoulder", "t2")})
      .passive("sus_t3_180", {at("platform", "p180"), at("shoulder", "t3")})
      .passive("sus_t3_300", {at("platform", "p300"), at("shoulder", "t3")});
  for (const char* t : {"t1", "t2", "t3", "apex"})
    d.passive(std::string("cage_") + t, {at("shoulder", t), at("humerus", "head")});
  for (const char* c : {"c1", "c2", "c3"})
    d.passive(std::string("collar_") + c, {at("shoulder", "apex"), at("humerus", c)});
  // Crossed braces of both hands stiffen the collar against twist while
  // keeping the shoulder mirror-symmetric about the pitch plane.
  for (int i = 1; i <= 3; ++i) {
    const std::string t = "t" + std::to_string(i);
    const std::string ahead = "c" + std::to_string(i % 3 + 1), behind = "c" + std::to_string((i + 1) % 3 + 1);
    d.passive("brace_" + t + "_" + ahead, {at("shoulder", t), at("humerus", ahead)})
        .passive("brace_" + t + "_" + behind, {at("shoulder", t), at("humerus", behind)});
  }

  d.active("lift_1", {at("shoulder", "t1"), at("humerus", "c1")})
      .active("lift_2", {at("shoulder", "t2"), at("humerus", "c2")})
      .active("lift_3", {at("shoulder", "t3"), at("humerus", "c3")})
      .active("pitch_front", {at("shoulder", "t1"), at("humerus", "pitch_f")})
      .active("pitch_back", {at("shoulder", "t2"), at("humerus", "pitch_b"), at("shoulder", "t3")});
  add_elbow_actuation(d, true);
  return d.finish();
}

// Saddle arm. A y-connector is held between the motor platform and a lower
// frame ring with its fork opening downward (prongs ±y); the humerus head is a
// second, perpendicular fork (prongs ±x) interleaved with it, giving a swivel
// point for yaw. The pitch cables pull the humerus levers horizontally.
constexpr double kSaddleTopZ = -0.08;
constexpr double kSaddleStem = 0.14;
constexpr double kSaddleDrop = 0.08;
constexpr double kHumerusForkSpan = 0.12;
constexpr double kSaddleFrameZ = -0.55;      // lower ring of the support frame
constexpr double kSaddlePitchDepth = 0.30;  // pitch levers below the humerus head
constexpr double kPitchAnchor = 0.30;
constexpr double kSaddleElbowFlexion = 25.0 * M_PI / 180.0;

StructureDef make_saddle_arm() {
  Designer d("saddle-arm");
  const double span = kSaddleJointLength / 2.0;
  const double fork_z = kSaddleTopZ - kSaddleStem;
  const double head_z = fork_z - 1.5 * kSaddleDrop;
  const double crotch_z = head_z - kSaddleHumerusLength;

  d.body("platform", 0.0, true)
      .node("p0", polar(kPlatformRadius, 0, 0.0))
      .node("p90", polar(kPlatformRadius, 90, 0.0))
      .node("p180", polar(kPlatformRadius, 180, 0.0))
      .node("p270", polar(kPlatformRadius, 270, 0.0))
      .node("f0", polar(kPlatformRadius, 0, kSaddleFrameZ))
      .node("f90", polar(kPlatformRadius, 90, kSaddleFrameZ))
      .node("f180", polar(kPlatformRadius, 180, kSaddleFrameZ))
      .node("f270", polar(kPlatformRadius, 270, kSaddleFrameZ))
      .node("front", {kPitchAnchor, 0.0, head_z - kSaddlePitchDepth})
      .node("back", {-kPitchAnchor, 0.0, head_z - kSaddlePitchDepth});

  d.body("saddle", kSaddleJointMass)
      .node("top", {0.0, 0.0, kSaddleTopZ})
      .node("fork", {0.0, 0.0, fork_z})
      .node("prong_l", {0.0, -span, fork_z - kSaddleDrop})
      .node("prong_r", {0.0, span, fork_z - kSaddleDrop})
      .rod("top", "fork")
      .rod("fork", "prong_l")
      .rod("fork", "prong_r");

  d.body("humerus", kSaddleHumerusMass)
      .node("head", {0.0, 0.0, head_z})
      .node("head_f", {kHumerusForkSpan, 0.0, head_z + kSaddleDrop})
      .node("head_b", {-kHumerusForkSpan, 0.0, head_z + kSaddleDrop})
      .node("pitch_f", {kPitchLever, 0.0, head_z - kSaddlePitchDepth})
      .node("pitch_b", {-kPitchLever, 0.0, head_z - kSaddlePitchDepth})
      .rod("head", "crotch")
      .rod("head", "head_f")
      .rod("head", "head_b")
      .rod("pitch_f", "pitch_b");
  ElbowGeometry g = elbow_geometry(crotch_z, kSaddleOlecranonLength, kSaddleForearmLength);
  // A resting flexion lets rotation about the humerus axis carry the hand.
  g.flexion = kSaddleElbowFlexion;
  add_humerus_fork(d, g);
  add_olecranon_and_forearm(d, g, kSaddleOlecranonMass, kSaddleForearmMass);

  d.passive("sus_top_0", {at("platform", "p0"), at("saddle", "top")})
      .passive("sus_top_180", {at("platform", "p180"), at("saddle", "top")})
      .passive("sus_l_0", {at("platform", "p0"), at("saddle", "prong_l")})
      .passive("sus_l_180", {at("platform", "p180"), at("saddle", "prong_l")})
      .passive("sus_l_270", {at("platform", "p270"), at("saddle", "prong_l")})
      .passive("sus_r_0", {at("platform", "p0"), at("saddle", "prong_r")})
      .passive("sus_r_180", {at("platform", "p180"), at("saddle", "prong_r")})
      .passive("sus_r_90", {at("platform", "p90"), at("saddle", "prong_r")})
      .passive("guy_l_0", {at("platform", "f0"), at("saddle", "prong_l")})
      .passive("guy_l_180", {at("platform", "f180"), at("saddle", "prong_l")})
      .passive("guy_l_270", {at("platform", "f270"), at("saddle", "prong_l")})
      .passive("guy_r_0", {at("platform", "f0"), at("saddle", "prong_r")})
      .passive("guy_r_180", {at("platform", "f180"), at("saddle", "prong_r")})
      .passive("guy_r_90", {at("platform", "f90"), at("saddle", "prong_r")});
  // Saddle joint between the two forks.
  for (const char* p : {"prong_l", "prong_r"}) d.passive(std::string("sx_") + p + "_head", {at("saddle", p), at("humerus", "head")});
  d.passive("sx_fork_f", {at("saddle", "fork"), at("humerus", "head_f")})
      .passive("sx_fork_b", {at("saddle", "fork"), at("humerus", "head_b")});

  // Braces from the prongs to the pitch levers hold the humerus against
  // sideways swing.
  for (const char* p : {"prong_l", "prong_r"})
    for (const char* l : {"pitch_f", "pitch_b"})
      d.passive(std::string("brace_") + (p + 6) + "_" + (l + 6), {at("saddle", p), at("humerus", l)});

  // Each swivel cable crosses the fork diagonally; shortening one turns the
  // humerus about the vertical while its partner pays out.
  d.active("pitch_front", {at("platform", "front"), at("humerus", "pitch_f")})
      .active("pitch_back", {at("platform", "back"), at("humerus", "pitch_b")})
      .active("swivel_a", {at("saddle", "prong_r"), at("humerus", "head_f"), at("humerus", "head_b"), at("saddle", "prong_l")})
      .active("swivel_b", {at("saddle", "prong_l"), at("humerus", "head_f"), at("humerus", "head_b"), at("saddle", "prong_r")});
  add_elbow_actuation(d, true);
  return d.finish();
}

std::vector<ComponentInfo> tetra_components() {
  return {
      {"Forearm", "forearm", kTetraForearmMass, kTetraForearmLength, "crotch", "tip"},
      {"Olecranon", "olecranon", kTetraOlecranonMass, kTetraOlecranonLength, "tip_f", "tip_b"},
      {"Humerus", "humerus", kTetraHumerusMass, kTetraHumerusLength, "head", "crotch"},
      {"Shoulder Tetrahedron", "shoulder", kTetraShoulderMass, kTetraShoulderLength, "t1", "apex"},
  };
}

std::vector<ComponentInfo> saddle_components() {
  return {
      {"Forearm", "forearm", kSaddleForearmMass, kSaddleForearmLength, "crotch", "tip"},
      {"Olecranon", "olecranon", kSaddleOlecranonMass, kSaddleOlecranonLength, "tip_f", "tip_b"},
      {"Humerus", "humerus", kSaddleHumerusMass, kSaddleHumerusLength, "head", "crotch"},
      {"Saddle Joint", "saddle", kSaddleJointMass, kSaddleJointLength, "prong_l", "prong_r"},
  };
}

/// The proximal marker is the humerus's upper end.
JointAngleMeasure elbow_angle(const std::string& humerus_top) {
  return {at("olecranon", "hub"), at("humerus", humerus_top), at("forearm", "tip")};
}

MotionMeasure angle_measure(std::string name, JointAngleMeasure m) {
  MotionMeasure out;
  out.name = std::move(name);
  out.kind = MotionMeasure::Kind::joint_angle;
  out.angle = std::move(m);
  return out;
}

MotionMeasure heading_measure(std::string name, NodeRef pivot, NodeRef marker, Vec3 normal) {
  MotionMeasure out;
  out.name = std::move(name);
  out.kind = MotionMeasure::Kind::heading;
  out.heading = {std::move(pivot), std::move(marker), normal};
  return out;
}

MotionMeasure travel_measure(std::string name, NodeRef marker, Vec3 axis) {
  MotionMeasure out;
  out.name = std::move(name);
  out.kind = MotionMeasure::Kind::travel;
  out.travel = {std::move(marker), axis};
  return out;
}

std::vector<DofGroup> elbow_dofs(bool with_triceps, const std::string& humerus_top) {
  std::vector<DofGroup> out;
  DofGroup pitch{"elbow-pitch", {"biceps"}, std::nullopt, angle_measure("Elbow Pitch", elbow_angle(humerus_top))};
  if (with_triceps) pitch.antagonist = "triceps";
  out.push_back(pitch);
  out.push_back({"elbow-yaw", {"yaw_l"}, "yaw_r",
                 heading_measure("Elbow Yaw", at("olecranon", "hub"), at("forearm", "tip"), {1.0, 0.0, 0.0})});
  return out;
}

}  // namespace

bool balance_pretension(StructureDef& s, double strain) {
  const int nb = static_cast<int>(s.bodies.size());
  const int nc = static_cast<int>(s.cables.size());
  std::vector<int> free_index(nb, -1);
  int nf = 0;
  for (int b = 0; b < nb; ++b)
    if (!s.bodies[b].fixed) free_index[b] = nf++;
  if (nc == 0 || nf == 0) return nf == 0;

  auto pos = [&](const NodeRef& r) { return s.find_body(r.body)->find_node(r.node)->local_position; };

  // Equilibrium matrix: column c is the wrench per unit tension of cable c on
  // every free body (force, then torque about the body's com).
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6 * nf, nc);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(6 * nf);
  Eigen::VectorXd target(nc), length(nc);
  for (int c = 0; c < nc; ++c) {
    const auto& cable = s.cables[c];
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < cable.route.size(); ++i) {
      const Vec3 p0 = pos(cable.route[i]);
      const Vec3 p1 = pos(cable.route[i + 1]);
      const Vec3 u = (p1 - p0).normalized();
      len += (p1 - p0).norm();
      for (auto [ref, f] : {std::pair{cable.route[i], u}, std::pair{cable.route[i + 1], Vec3(-u)}}) {
        const int b = s.body_index(ref.body);
        if (free_index[b] < 0) continue;
        const int row = 6 * free_index[b];
        a.block<3, 1>(row, c) += f;
        a.block<3, 1>(row + 3, c) += (pos(ref) - s.bodies[b].com).cross(f);
      }
    }
    length[c] = len;
    target[c] = strain * kPassiveStiffness * len;
  }
  for (int b = 0; b < nb; ++b)
    if (free_index[b] >= 0) load.segment<3>(6 * free_index[b]) = -s.bodies[b].mass * s.gravity;

  // Work in tension ratios r = t / target so every cable is weighed by its
  // own pretension. Dykstra's alternating projections between the equilibrium
  // set {A·diag(target)·r = load} and the box {r >= kFloor} converge to the
  // ratios closest to uniform pretension.
  constexpr double kFloor = 0.25;
  const Eigen::MatrixXd scaled = a * target.asDiagonal();
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(scaled);
  auto to_equilibrium = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    return r - cod.solve(scaled * r - load);
  };
  Eigen::VectorXd r = Eigen::VectorXd::Ones(nc);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(nc), q = Eigen::VectorXd::Zero(nc);
  for (int iter = 0; iter < 200000; ++iter) {
    const Eigen::VectorXd y = to_equilibrium(r + p);
    p = r + p - y;
    const Eigen::VectorXd next = (y + q).cwiseMax(kFloor);
    q = y + q - next;
    const double change = (next - r).cwiseAbs().maxCoeff();
    r = next;
    if (change < 1e-13 && (scaled * r - load).norm() < 1e-12 * (1.0 + load.norm())) break;
  }
  r = to_equilibrium(r);
  const Eigen::VectorXd t = target.cwiseProduct(r);

  const double residual = (a * t - load).norm();
  if (!(residual <= 1e-9 * (1.0 + load.norm() + target.norm()))) return false;
  // Alternating projections end marginally outside the box; accept a small
  // shortfall against the floor.
  if (r.minCoeff() < 0.8 * kFloor) return false;

  for (int c = 0; c < nc; ++c) {
    auto& cable = s.cables[c];
    cable.rest_length = length[c] - t[c] / cable.stiffness_k;
    cable.min_length = std::min(cable.min_length, cable.rest_length);
    cable.max_length = std::max(cable.max_length, cable.rest_length);
  }
  return true;
}

StructureDef build_elbow_joint() { return make_elbow(); }
StructureDef build_tetrahedrons_arm() { return make_tetrahedrons_arm(); }
StructureDef build_saddle_arm() { return make_saddle_arm(); }

std::vector<std::string> builtin_names() { return {"elbow", "tetra-arm", "saddle-arm"}; }

BuiltinModel builtin_model(std::string_view name) {
  BuiltinModel m;
  m.name = std::string(name);
  m.end_effector = at("forearm", "tip");
  m.elbow = elbow_angle("head");
  if (name == "elbow") {
    m.structure = build_elbow_joint();
    m.elbow = elbow_angle("top");
    m.dofs = elbow_dofs(false, "top");
    return m;
  }
  if (name == "tetra-arm") {
    m.structure = build_tetrahedrons_arm();
    m.components = tetra_components();
    m.measured_full_mass = kTetraFullMass;
    m.dofs.push_back({"shoulder-pitch", {"pitch_front"}, "pitch_back",
                      angle_measure("Shoulder Pitch", {at("humerus", "head"), at("shoulder", "t1"), at("humerus", "crotch")})});
    m.dofs.push_back({"shoulder-lift", {"lift_1", "lift_2", "lift_3"}, std::nullopt,
                      travel_measure("Shoulder Lift", at("humerus", "head"), {0.0, 0.0, 1.0})});
    for (auto& dof : elbow_dofs(true, "head")) m.dofs.push_back(dof);
    return m;
  }
  if (name == "saddle-arm") {
    m.structure = build_saddle_arm();
    m.components = saddle_components();
    m.measured_full_mass = kSaddleFullMass;
    m.dofs.push_back({"shoulder-pitch", {"pitch_front"}, "pitch_back",
                      angle_measure("Shoulder Pitch", {at("humerus", "head"), at("saddle", "top"), at("humerus", "crotch")})});
    m.dofs.push_back({"shoulder-yaw", {"swivel_a"}, "swivel_b",
                      heading_measure("Shoulder Yaw", at("humerus", "head"), at("humerus", "pitch_f"), {0.0, 0.0, 1.0})});
    for (auto& dof : elbow_dofs(true, "head")) m.dofs.push_back(dof);
    return m;
  }
  throw std::invalid_argument("unknown built-in model '" + std::string(name) + "' (expected elbow, tetra-arm or saddle-arm)");
}

const DofGroup* find_dof(const BuiltinModel& model, std::string_view preset) {
  for (const auto& d : model.dofs)
    if (d.preset == preset) return &d;
  return nullptr;
}

}  // namespace tensegrity
