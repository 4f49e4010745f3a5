#include "tensegrity/lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace tensegrity {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;
constexpr double kDegenerateMarkerSegment = 1e-9;

int require_marker(const TrajectoryRecord& traj, const NodeRef& m) {
  const int i = traj.marker_index(m);
  if (i < 0) throw std::invalid_argument("marker " + m.str() + " is not in the trajectory");
  return i;
}

/// Removes 360-degree jumps between consecutive values.
void unwrap_degrees(std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    while (v[i] - v[i - 1] > 180.0) v[i] -= 360.0;
    while (v[i] - v[i - 1] < -180.0) v[i] += 360.0;
  }
}

/// Orthonormal in-plane basis for a plane normal.
std::pair<Vec3, Vec3> plane_basis(const Vec3& normal) {
  const Vec3 n = normal.normalized();
  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = (seed - seed.dot(n) * n).normalized();
  return {e1, n.cross(e1)};
}

}  // namespace

int TrajectoryRecord::marker_index(const NodeRef& marker) const {
  for (std::size_t i = 0; i < markers.size(); ++i)
    if (markers[i] == marker) return static_cast<int>(i);
  return -1;
}

TrajectoryRecord track(const StructureDef& s, const WorldState& initial, const ControllerProgram& program,
                       const std::vector<NodeRef>& markers, double duration, double sample_period,
                       const SimConfig& config, WorldState* final_state) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw std::invalid_argument("duration must be >= 0");
  if (!(sample_period > 0.0) || !std::isfinite(sample_period)) throw std::invalid_argument("sample period must be > 0");
  const double steps_exact = sample_period / config.dt;
  const long steps_per_sample = std::lround(steps_exact);
  if (steps_per_sample < 1 || std::abs(steps_exact - steps_per_sample) > 1e-6 * steps_exact)
    throw std::invalid_argument("sample period must be a whole multiple of dt");
  const double samples_exact = duration / sample_period;
  const long intervals = std::lround(samples_exact);
  if (std::abs(samples_exact - intervals) > 1e-6 * std::max(1.0, samples_exact))
    throw std::invalid_argument("duration must be a whole multiple of the sample period");
  if (const auto problems = validate_program(program, s); !problems.empty())
    throw std::invalid_argument("invalid controller program: " + problems.front());

  Simulator sim(s, config);
  std::vector<std::pair<int, int>> marker_nodes;
  for (const auto& m : markers) {
    const int b = s.body_index(m.body);
    const int n = b < 0 ? -1 : s.bodies[b].node_index(m.node);
    if (n < 0) throw std::invalid_argument("marker " + m.str() + " does not resolve");
    marker_nodes.push_back({b, n});
  }

  TrajectoryRecord out;
  out.sample_period = sample_period;
  out.markers = markers;
  if (sim.residual(initial) > kSettleTolerance)
    out.warnings.push_back("initial state is not settled (residual velocity above tolerance)");

  WorldState w = initial;
  const double t0 = w.time;
  std::vector<double> targets = w.commanded_lengths;
  const bool watch_contact = !config.obstacles.empty();

  auto sample = [&](long k) {
    TrajectorySample smp;
    smp.t = k * sample_period;
    for (const auto& [b, n] : marker_nodes) smp.positions.push_back(sim.node_position(w, b, n));
    out.samples.push_back(std::move(smp));
  };
  auto note_contact = [&]() {
    if (!watch_contact || !sim.in_contact(w)) return;
    const double t = w.time - t0;
    if (!out.contact_interval) out.contact_interval = std::pair{t, t};
    else out.contact_interval->second = t;
  };

  out.samples.reserve(intervals + 1);
  note_contact();
  sample(0);
  for (long k = 1; k <= intervals; ++k) {
    for (long j = 0; j < steps_per_sample; ++j) {
      const long step_index = (k - 1) * steps_per_sample + j;
      // Targets are evaluated on the step grid, not accumulated time.
      for (const auto& [id, value] : targets_at(program, step_index * config.dt))
        targets[sim.active_slot(id)] = value;
      sim.step(w, targets);
      note_contact();
    }
    sample(k);
  }
  if (final_state) *final_state = std::move(w);
  return out;
}

std::vector<double> joint_angle(const TrajectoryRecord& traj, const NodeRef& pivot, const NodeRef& proximal,
                                const NodeRef& distal) {
  const int ip = require_marker(traj, pivot), ia = require_marker(traj, proximal), ib = require_marker(traj, distal);
  std::vector<double> out;
  out.reserve(traj.samples.size());
  for (const auto& smp : traj.samples) {
    const Vec3 a = smp.positions[ia] - smp.positions[ip];
    const Vec3 b = smp.positions[ib] - smp.positions[ip];
    if (a.norm() < kDegenerateMarkerSegment || b.norm() < kDegenerateMarkerSegment)
      throw std::invalid_argument("joint angle segment is degenerate at t=" + std::to_string(smp.t));
    const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
    out.push_back(std::acos(c) * kRadToDeg);
  }
  return out;
}

std::vector<double> joint_angle_unwrapped(const TrajectoryRecord& traj, const NodeRef& pivot,
                                          const NodeRef& proximal, const NodeRef& distal, const Vec3& plane_normal) {
  const int ip = require_marker(traj, pivot), ia = require_marker(traj, proximal), ib = require_marker(traj, distal);
  const Vec3 n = plane_normal.normalized();
  std::vector<double> out;
  out.reserve(traj.samples.size());
  for (const auto& smp : traj.samples) {
    const Vec3 a = smp.positions[ia] - smp.positions[ip];
    const Vec3 b = smp.positions[ib] - smp.positions[ip];
    if (a.norm() < kDegenerateMarkerSegment || b.norm() < kDegenerateMarkerSegment)
      throw std::invalid_argument("joint angle segment is degenerate at t=" + std::to_string(smp.t));
    double deg = std::atan2(n.dot(a.cross(b)), a.dot(b)) * kRadToDeg;
    if (out.empty() && deg < 0.0) deg += 360.0;
    out.push_back(deg);
  }
  unwrap_degrees(out);
  return out;
}

std::vector<double> heading_angle(const TrajectoryRecord& traj, const NodeRef& pivot, const NodeRef& marker,
                                  const Vec3& plane_normal) {
  const int ip = require_marker(traj, pivot), im = require_marker(traj, marker);
  const auto [e1, e2] = plane_basis(plane_normal);
  std::vector<double> out;
  out.reserve(traj.samples.size());
  double ref = 0.0;
  for (const auto& smp : traj.samples) {
    const Vec3 d = smp.positions[im] - smp.positions[ip];
    const double x = d.dot(e1), y = d.dot(e2);
    if (std::hypot(x, y) < kDegenerateMarkerSegment)
      throw std::invalid_argument("heading marker lies on the pivot axis at t=" + std::to_string(smp.t));
    const double deg = std::atan2(y, x) * kRadToDeg;
    if (out.empty()) ref = deg;
    out.push_back(deg - ref);
  }
  unwrap_degrees(out);
  return out;
}

std::vector<double> travel(const TrajectoryRecord& traj, const NodeRef& marker, const Vec3& axis) {
  const int im = require_marker(traj, marker);
  const Vec3 u = axis.normalized();
  std::vector<double> out;
  out.reserve(traj.samples.size());
  for (const auto& smp : traj.samples) out.push_back((smp.positions[im] - traj.samples.front().positions[im]).dot(u));
  return out;
}

RangeOfMotionReport range_of_motion(std::string motion, const std::vector<double>& times,
                                    const std::vector<double>& values, bool angular) {
  if (values.empty()) throw std::invalid_argument("range of motion needs a nonempty series");
  if (times.size() != values.size()) throw std::invalid_argument("times and values differ in length");
  RangeOfMotionReport r;
  r.motion = std::move(motion);
  r.angular = angular;
  r.discarded = static_cast<std::size_t>(std::floor(kTransientFraction * values.size()));
  if (r.discarded >= values.size()) r.discarded = values.size() - 1;
  for (std::size_t i = 0; i < values.size(); ++i) r.series.emplace_back(times[i], values[i]);
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(r.discarded);
  const auto [lo, hi] = std::minmax_element(first, values.end());
  r.min = *lo;
  r.max = *hi;
  r.sweep = r.max - r.min;
  return r;
}

RangeOfMotionReport measure_motion(const TrajectoryRecord& traj, const MotionMeasure& measure) {
  std::vector<double> times;
  for (const auto& smp : traj.samples) times.push_back(smp.t);
  switch (measure.kind) {
    case MotionMeasure::Kind::joint_angle: {
      const auto& m = measure.angle;
      return range_of_motion(measure.name, times,
                             joint_angle_unwrapped(traj, m.pivot, m.proximal, m.distal, m.plane_normal), true);
    }
    case MotionMeasure::Kind::travel:
      return range_of_motion(measure.name, times, travel(traj, measure.travel.marker, measure.travel.axis), false);
    case MotionMeasure::Kind::heading: {
      const auto& m = measure.heading;
      return range_of_motion(measure.name, times, heading_angle(traj, m.pivot, m.marker, m.plane_normal), true);
    }
  }
  throw std::logic_error("unhandled motion measure");
}

StructureDef perturb(const StructureDef& s, std::uint64_t seed, double magnitude) {
  if (!(magnitude >= 0.0 && magnitude < 0.2)) throw std::invalid_argument("perturbation magnitude must be in [0, 0.2)");
  if (magnitude == 0.0) return s;
  StructureDef out = s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& c : out.cables) {
    if (c.active()) continue;
    c.rest_length *= 1.0 + u(rng) * magnitude;
    c.stiffness_k *= 1.0 + u(rng) * magnitude;
    c.min_length = std::min(c.min_length, c.rest_length);
    c.max_length = std::max(c.max_length, c.rest_length);
  }
  return out;
}

SweepStats sweep_stats(const std::vector<double>& sweeps) {
  SweepStats st;
  if (sweeps.empty()) return st;
  // Running mean, so identical sweeps give exactly zero spread.
  double count = 0.0, ss = 0.0;
  for (double v : sweeps) {
    count += 1.0;
    const double delta = v - st.mean;
    st.mean += delta / count;
    ss += delta * (v - st.mean);
  }
  st.std_dev = std::sqrt(ss / sweeps.size());
  st.sample_std_dev = sweeps.size() > 1 ? std::sqrt(ss / (sweeps.size() - 1)) : 0.0;
  return st;
}

RepeatabilityReport repeatability(const StructureDef& s, const ControllerProgram& program,
                                  const MotionMeasure& measure, const std::vector<std::uint64_t>& seeds,
                                  double magnitude, const SimConfig& config, const ExperimentTiming& timing) {
  if (seeds.size() < 2) throw std::invalid_argument("repeatability needs at least two runs");
  if (!(magnitude >= 0.0 && magnitude < 0.2)) throw std::invalid_argument("perturbation magnitude must be in [0, 0.2)");
  if (const auto problems = validate_program(program, s); !problems.empty())
    throw std::invalid_argument("invalid controller program: " + problems.front());

  RepeatabilityReport report;
  report.motion = measure.name;
  report.angular = measure.angular();
  report.magnitude = magnitude;
  report.runs.resize(seeds.size());

  auto run_one = [&](std::size_t i) {
    RepeatabilityRun& run = report.runs[i];
    run.seed = seeds[i];
    try {
      const StructureDef ps = perturb(s, seeds[i], magnitude);
      Simulator sim(ps, config);
      const auto settled = sim.settle(initial_state(ps), timing.settle_tol, timing.settle_max_time);
      run.converged = settled.converged;
      const auto traj = track(ps, settled.state, program, measure.markers(), timing.duration, timing.sample_period, config);
      run.sweep = measure_motion(traj, measure).sweep;
      run.completed = true;
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(seeds.size(), std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < seeds.size(); i += workers) run_one(i);
    });
  for (auto& t : pool) t.join();

  std::vector<double> sweeps;
  for (const auto& run : report.runs) {
    if (run.completed) sweeps.push_back(run.sweep);
    else report.flagged = true;
  }
  const auto st = sweep_stats(sweeps);
  report.mean = st.mean;
  report.std_dev = st.std_dev;
  report.sample_std_dev = st.sample_std_dev;
  return report;
}

ComplianceReport compliance_experiment(const StructureDef& s, const WorldState& initial,
                                       const ControllerProgram& program, const std::vector<Obstacle>& obstacles,
                                       const std::vector<NodeRef>& markers, double duration, double sample_period,
                                       const SimConfig& config) {
  if (markers.empty()) throw std::invalid_argument("compliance experiment needs at least one marker");
  if (obstacles.empty()) throw std::invalid_argument("compliance experiment needs an obstacle");
  ComplianceReport r;
  r.free_trajectory = track(s, initial, program, markers, duration, sample_period, config);
  SimConfig obstructed = config;
  obstructed.obstacles.insert(obstructed.obstacles.end(), obstacles.begin(), obstacles.end());
  r.obstructed_trajectory = track(s, initial, program, markers, duration, sample_period, obstructed);
  r.contact_interval = r.obstructed_trajectory.contact_interval;

  const auto& a = r.free_trajectory.samples;
  const auto& b = r.obstructed_trajectory.samples;
  std::vector<double> deviation(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t m = 0; m < markers.size(); ++m)
      deviation[i] = std::max(deviation[i], (a[i].positions[m] - b[i].positions[m]).norm());
  r.max_deviation = deviation.empty() ? 0.0 : *std::max_element(deviation.begin(), deviation.end());
  const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(kRecoveryFraction * a.size())));
  double sum = 0.0;
  for (std::size_t i = a.size() - tail; i < a.size(); ++i) sum += deviation[i];
  r.recovery_error = sum / tail;
  r.recovered = r.recovery_error <= 0.1 * r.max_deviation;
  return r;
}

double convex_hull_area(std::vector<std::pair<double, double>> pts, std::vector<std::pair<double, double>>* hull_out) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto cross = [](const auto& o, const auto& a, const auto& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> hull;
  if (pts.size() >= 3) {
    hull.resize(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
      hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
      while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
      hull[k++] = pts[i];
    }
    hull.resize(k - 1);
  } else {
    hull = pts;
  }
  double area = 0.0;
  if (hull.size() >= 3) {
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const auto& p = hull[i];
      const auto& q = hull[(i + 1) % hull.size()];
      area += p.first * q.second - q.first * p.second;
    }
    area = 0.5 * std::abs(area);
  }
  if (hull_out) *hull_out = std::move(hull);
  return area;
}

WorkspaceReport workspace_summary(const std::vector<Vec3>& points, const PlaneSpec& plane, const Vec3& pivot) {
  const auto [e1, e2] = plane_basis(plane.normal);
  WorkspaceReport r;
  r.samples = points.size();
  std::vector<std::pair<double, double>> projected;
  projected.reserve(points.size());
  for (const auto& p : points) projected.emplace_back((p - plane.origin).dot(e1), (p - plane.origin).dot(e2));
  r.area = convex_hull_area(projected, &r.hull);

  const double px = (pivot - plane.origin).dot(e1), py = (pivot - plane.origin).dot(e2);
  std::vector<double> angles;
  for (const auto& [x, y] : projected)
    if (std::hypot(x - px, y - py) > kDegenerateMarkerSegment) angles.push_back(std::atan2(y - py, x - px) * kRadToDeg);
  unwrap_degrees(angles);
  if (!angles.empty()) {
    const auto [lo, hi] = std::minmax_element(angles.begin(), angles.end());
    r.angular_extent = std::min(360.0, *hi - *lo);
  }
  return r;
}

WorkspaceReport workspace_summary(const TrajectoryRecord& traj, const NodeRef& marker, const PlaneSpec& plane,
                                  const Vec3& pivot) {
  const int im = require_marker(traj, marker);
  std::vector<Vec3> pts;
  pts.reserve(traj.samples.size());
  for (const auto& smp : traj.samples) pts.push_back(smp.positions[im]);
  return workspace_summary(pts, plane, pivot);
}

ControllerProgram dof_program(const StructureDef& s, const WorldState& world, const DofGroup& dof,
                              double amplitude_fraction, double period) {
  Simulator sim(s, SimConfig{});
  auto length_of = [&](const std::string& id) {
    const int slot = sim.active_slot(id);
    if (slot < 0) throw std::invalid_argument("preset " + dof.preset + " names unknown active cable " + id);
    return world.commanded_lengths[slot];
  };
  ControllerProgram p;
  for (const auto& id : dof.cables) {
    const double len = length_of(id);
    p.channels.push_back({id, len, amplitude_fraction * len, period, 0.0});
  }
  if (dof.antagonist)
    p.pairs.push_back({dof.cables.front(), *dof.antagonist, length_of(dof.cables.front()) + length_of(*dof.antagonist)});
  return p;
}

PlaneSpec dof_plane(const StructureDef& s, const WorldState& world, const DofGroup& dof, Vec3* pivot) {
  return measure_plane(s, world, dof.measure, pivot);
}

PlaneSpec measure_plane(const StructureDef& s, const WorldState& world, const MotionMeasure& m, Vec3* pivot) {
  auto where = [&](const NodeRef& ref) {
    const int b = s.body_index(ref.body);
    if (b < 0) throw std::invalid_argument("unknown body " + ref.body);
    return world_node_position(s.bodies[b], world.body_states[b], ref.node);
  };
  PlaneSpec plane;
  switch (m.kind) {
    case MotionMeasure::Kind::joint_angle:
      plane.origin = where(m.angle.pivot);
      plane.normal = m.angle.plane_normal.normalized();
      break;
    case MotionMeasure::Kind::heading:
      plane.origin = where(m.heading.pivot);
      plane.normal = m.heading.plane_normal.normalized();
      break;
    case MotionMeasure::Kind::travel: {
      plane.origin = where(m.travel.marker);
      const Vec3 axis = m.travel.axis.normalized();
      Vec3 n = axis.cross(Vec3::UnitX());
      if (n.norm() < 1e-6) n = axis.cross(Vec3::UnitY());
      plane.normal = n.normalized();
      break;
    }
  }
  if (pivot) *pivot = plane.origin;
  return plane;
}

namespace {

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.emplace_back(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double spec_number(const std::string& field, std::string_view spec) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size() || !std::isfinite(v))
    throw std::invalid_argument("bad number '" + field + "' in '" + std::string(spec) + "'");
  return v;
}

Vec3 spec_vec(const std::vector<std::string>& f, std::size_t at, std::string_view spec) {
  return {spec_number(f[at], spec), spec_number(f[at + 1], spec), spec_number(f[at + 2], spec)};
}

Vec3 spec_direction(const std::vector<std::string>& f, std::size_t at, std::string_view spec) {
  const Vec3 v = spec_vec(f, at, spec);
  if (v.norm() < 1e-12) throw std::invalid_argument("zero direction in '" + std::string(spec) + "'");
  return v.normalized();
}

}  // namespace

NodeRef parse_node_ref(std::string_view text) {
  const std::size_t dot = text.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size() ||
      text.find('.', dot + 1) != std::string_view::npos)
    throw std::invalid_argument("expected body.node, got '" + std::string(text) + "'");
  return {std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
}

Obstacle parse_obstacle(std::string_view spec) {
  const std::size_t colon = spec.find(':');
  const std::string_view kind = spec.substr(0, colon);
  if (colon == std::string_view::npos || (kind != "sphere" && kind != "halfspace"))
    throw std::invalid_argument("obstacle must be sphere:cx,cy,cz,r or halfspace:nx,ny,nz,offset, got '" +
                                std::string(spec) + "'");
  const auto f = split_commas(spec.substr(colon + 1));
  if (f.size() != 4) throw std::invalid_argument("obstacle '" + std::string(spec) + "' needs four numbers");
  Obstacle o;
  if (kind == "sphere") {
    const double r = spec_number(f[3], spec);
    if (!(r > 0.0)) throw std::invalid_argument("sphere radius must be > 0 in '" + std::string(spec) + "'");
    o.shape = Sphere{spec_vec(f, 0, spec), r};
  } else {
    o.shape = Halfspace{spec_direction(f, 0, spec), spec_number(f[3], spec)};
  }
  return o;
}

MotionMeasure parse_measure(std::string_view spec) {
  const std::size_t colon = spec.find(':');
  const std::string_view kind = spec.substr(0, colon);
  if (colon == std::string_view::npos) throw std::invalid_argument("measure '" + std::string(spec) + "' has no kind");
  const auto f = split_commas(spec.substr(colon + 1));
  MotionMeasure m;
  m.name = std::string(spec);
  if (kind == "angle") {
    if (f.size() != 3 && f.size() != 6)
      throw std::invalid_argument("expected angle:pivot,proximal,distal[,nx,ny,nz], got '" + std::string(spec) + "'");
    m.kind = MotionMeasure::Kind::joint_angle;
    m.angle = {parse_node_ref(f[0]), parse_node_ref(f[1]), parse_node_ref(f[2])};
    if (f.size() == 6) m.angle.plane_normal = spec_direction(f, 3, spec);
  } else if (kind == "travel") {
    if (f.size() != 4) throw std::invalid_argument("expected travel:marker,ax,ay,az, got '" + std::string(spec) + "'");
    m.kind = MotionMeasure::Kind::travel;
    m.travel = {parse_node_ref(f[0]), spec_direction(f, 1, spec)};
  } else if (kind == "heading") {
    if (f.size() != 5)
      throw std::invalid_argument("expected heading:pivot,marker,nx,ny,nz, got '" + std::string(spec) + "'");
    m.kind = MotionMeasure::Kind::heading;
    m.heading = {parse_node_ref(f[0]), parse_node_ref(f[1]), spec_direction(f, 2, spec)};
  } else {
    throw std::invalid_argument("unknown measure kind '" + std::string(kind) + "' (expected angle, travel or heading)");
  }
  return m;
}

}  // namespace tensegrity
