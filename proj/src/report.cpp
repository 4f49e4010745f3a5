#include "tensegrity/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "tensegrity/topology_io.hpp"

namespace tensegrity {

namespace {

std::string yes_no(bool v) { return v ? "yes" : "no"; }

std::string unit_of(bool angular) { return angular ? "deg" : "m"; }

void render(const std::vector<DocNode>& nodes, int depth, std::string& out) {
  for (const auto& n : nodes) {
    out.append(2 * depth, ' ');
    out += n.key;
    out += ':';
    if (!n.value.empty()) {
      out += ' ';
      out += n.value;
    }
    out += '\n';
    render(n.children, depth + 1, out);
  }
}

double parse_double(const std::string& text, const std::string& what) {
  std::istringstream is(text);
  double v = 0.0;
  std::string rest;
  if (!(is >> v) || (is >> rest)) throw std::invalid_argument(what + ": expected a number, got '" + text + "'");
  return v;
}

std::vector<double> parse_doubles(const std::string& text, std::size_t count, const std::string& what) {
  std::istringstream is(text);
  std::vector<double> out;
  double v = 0.0;
  while (is >> v) out.push_back(v);
  if (!is.eof() || out.size() != count)
    throw std::invalid_argument(what + ": expected " + std::to_string(count) + " numbers, got '" + text + "'");
  return out;
}

Vec3 parse_vec(const DocNode& n, std::string_view key, const std::string& where) {
  const auto v = parse_doubles(n.at(key), 3, where + "." + std::string(key));
  return {v[0], v[1], v[2]};
}

}  // namespace

const char* library_version() { return TENSEGRITY_VERSION; }

DocNode& DocNode::add(std::string k, std::string v) {
  children.push_back({std::move(k), std::move(v), {}});
  return children.back();
}

const DocNode* DocNode::find(std::string_view k) const {
  for (const auto& c : children)
    if (c.key == k) return &c;
  return nullptr;
}

const std::string& DocNode::at(std::string_view k) const {
  const DocNode* n = find(k);
  if (!n) throw std::invalid_argument("missing key '" + std::string(k) + "' in '" + key + "'");
  return n->value;
}

std::string render_document(const DocNode& root) {
  std::string out;
  render(root.children, 0, out);
  return out;
}

DocNode parse_document(std::string_view text) {
  DocNode root;
  std::vector<DocNode*> stack{&root};
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(' ') == std::string_view::npos) continue;
    const std::size_t indent = line.find_first_not_of(' ');
    const auto fail = [&](const std::string& why) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + why);
    };
    if (indent % 2 != 0) fail("indentation must be a multiple of two spaces");
    const std::size_t depth = indent / 2;
    if (depth + 1 > stack.size()) fail("indented deeper than its section");
    stack.resize(depth + 1);
    const std::string_view body = line.substr(indent);
    const std::size_t colon = body.find(':');
    if (colon == std::string_view::npos || colon == 0) fail("expected 'key: value'");
    std::string_view value = body.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    DocNode& n = stack.back()->add(std::string(body.substr(0, colon)), std::string(value));
    stack.push_back(&n);
  }
  return root;
}

std::string format_vec(const Vec3& v) {
  return format_real(v.x()) + " " + format_real(v.y()) + " " + format_real(v.z());
}

std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DocNode range_of_motion_document(const RangeOfMotionReport& r) {
  DocNode doc{"range_of_motion", {}, {}};
  doc.add("motion", r.motion);
  doc.add("unit", unit_of(r.angular));
  doc.add("transient_discard_fraction", format_real(kTransientFraction));
  doc.add("discarded_samples", std::to_string(r.discarded));
  doc.add("samples", std::to_string(r.series.size()));
  doc.add("min", format_real(r.min));
  doc.add("max", format_real(r.max));
  doc.add("sweep", format_real(r.sweep));
  return doc;
}

DocNode repeatability_document(const RepeatabilityReport& r) {
  DocNode doc{"repeatability", {}, {}};
  doc.add("motion", r.motion);
  doc.add("unit", unit_of(r.angular));
  doc.add("noise", format_real(r.magnitude));
  doc.add("transient_discard_fraction", format_real(kTransientFraction));
  for (const auto& run : r.runs) {
    DocNode& n = doc.add("run", std::to_string(run.seed));
    n.add("completed", yes_no(run.completed));
    n.add("settled", yes_no(run.converged));
    if (run.completed) n.add("sweep", format_real(run.sweep));
    if (!run.error.empty()) n.add("error", run.error);
  }
  doc.add("mean", format_real(r.mean));
  doc.add("std_dev", format_real(r.std_dev));
  doc.add("sample_std_dev", format_real(r.sample_std_dev));
  doc.add("flagged", yes_no(r.flagged));
  return doc;
}

DocNode compliance_document(const ComplianceReport& r) {
  DocNode doc{"compliance", {}, {}};
  doc.add("max_deviation", format_real(r.max_deviation));
  if (r.contact_interval) {
    doc.add("contact", "yes");
    doc.add("contact_start", format_real(r.contact_interval->first));
    doc.add("contact_end", format_real(r.contact_interval->second));
  } else {
    doc.add("contact", "no");
    doc.add("note", "obstacle never touched the structure");
  }
  doc.add("recovery_window_fraction", format_real(kRecoveryFraction));
  doc.add("recovery_error", format_real(r.recovery_error));
  doc.add("recovered", yes_no(r.recovered));
  return doc;
}

DocNode workspace_document(const WorkspaceReport& r, const PlaneSpec& plane, const Vec3& pivot) {
  DocNode doc{"workspace", {}, {}};
  doc.add("plane_origin", format_vec(plane.origin));
  doc.add("plane_normal", format_vec(plane.normal));
  doc.add("pivot", format_vec(pivot));
  doc.add("samples", std::to_string(r.samples));
  doc.add("area", format_real(r.area));
  doc.add("angular_extent", format_real(r.angular_extent));
  doc.add("hull_vertices", std::to_string(r.hull.size()));
  return doc;
}

DocNode state_document(const StructureDef& s, const WorldState& w, const SettleInfo& info) {
  if (w.body_states.size() != s.bodies.size()) throw std::invalid_argument("state does not match structure");
  DocNode doc{"state", {}, {}};
  doc.add("structure", s.name);
  doc.add("time", format_exact(w.time));
  doc.add("converged", yes_no(info.converged));
  doc.add("residual", format_exact(info.residual));
  const auto exact_vec = [](const Vec3& v) {
    return format_exact(v.x()) + " " + format_exact(v.y()) + " " + format_exact(v.z());
  };
  for (std::size_t b = 0; b < s.bodies.size(); ++b) {
    const BodyState& st = w.body_states[b];
    DocNode& n = doc.add("body", s.bodies[b].name);
    n.add("position", exact_vec(st.position));
    const Quat& q = st.orientation;
    n.add("orientation", format_exact(q.w()) + " " + format_exact(q.x()) + " " + format_exact(q.y()) + " " +
                             format_exact(q.z()));
    n.add("linear_velocity", exact_vec(st.linear_velocity));
    n.add("angular_velocity", exact_vec(st.angular_velocity));
  }
  const auto active = s.active_cable_indices();
  int slot = 0;
  for (std::size_t c = 0; c < s.cables.size(); ++c) {
    const CableReading r = read_cable(s.cables[c], s, w);
    DocNode& n = doc.add("cable", s.cables[c].id);
    n.add("length", format_exact(r.length));
    n.add("tension", format_exact(r.tension));
    if (slot < static_cast<int>(active.size()) && active[slot] == static_cast<int>(c)) {
      n.add("commanded_length", format_exact(w.commanded_lengths[slot]));
      n.add("commanded_rate", format_exact(w.commanded_rates[slot]));
      ++slot;
    }
  }
  return doc;
}

WorldState state_from_document(const StructureDef& s, const DocNode& doc) {
  const DocNode* st = doc.key == "state" ? &doc : doc.find("state");
  if (!st) throw std::invalid_argument("no 'state' section");
  if (st->at("structure") != s.name)
    throw std::invalid_argument("state is for structure '" + st->at("structure") + "', not '" + s.name + "'");
  WorldState w;
  w.time = parse_double(st->at("time"), "time");
  w.body_states.resize(s.bodies.size());
  std::vector<bool> seen(s.bodies.size(), false);
  const auto active = s.active_cable_indices();
  w.commanded_lengths.assign(active.size(), 0.0);
  w.commanded_rates.assign(active.size(), 0.0);
  std::vector<bool> commanded(active.size(), false);
  for (const auto& n : st->children) {
    if (n.key == "body") {
      const int b = s.body_index(n.value);
      if (b < 0) throw std::invalid_argument("unknown body '" + n.value + "'");
      if (seen[b]) throw std::invalid_argument("body '" + n.value + "' listed twice");
      seen[b] = true;
      BodyState& bs = w.body_states[b];
      bs.position = parse_vec(n, "position", n.value);
      const auto q = parse_doubles(n.at("orientation"), 4, n.value + ".orientation");
      bs.orientation = Quat(q[0], q[1], q[2], q[3]);
      if (std::abs(bs.orientation.norm() - 1.0) > 1e-9)
        throw std::invalid_argument(n.value + ".orientation is not a unit quaternion");
      bs.linear_velocity = parse_vec(n, "linear_velocity", n.value);
      bs.angular_velocity = parse_vec(n, "angular_velocity", n.value);
    } else if (n.key == "cable") {
      const int c = s.cable_index(n.value);
      if (c < 0) throw std::invalid_argument("unknown cable '" + n.value + "'");
      if (!s.cables[c].active()) continue;
      int slot = 0;
      while (active[slot] != c) ++slot;
      w.commanded_lengths[slot] = parse_double(n.at("commanded_length"), n.value + ".commanded_length");
      w.commanded_rates[slot] = parse_double(n.at("commanded_rate"), n.value + ".commanded_rate");
      commanded[slot] = true;
    }
  }
  for (std::size_t b = 0; b < seen.size(); ++b)
    if (!seen[b]) throw std::invalid_argument("body '" + s.bodies[b].name + "' missing from state");
  for (std::size_t k = 0; k < commanded.size(); ++k)
    if (!commanded[k]) throw std::invalid_argument("active cable '" + s.cables[active[k]].id + "' missing from state");
  return w;
}

DocNode manifest_document(const RunManifest& m) {
  DocNode doc{"manifest", {}, {}};
  doc.add("command", m.command);
  doc.add("version", m.version);
  DocNode& inputs = doc.add("inputs");
  for (const auto& in : m.inputs) inputs.add("file", in);
  DocNode& config = doc.add("config");
  for (const auto& [k, v] : m.config) config.add(k, v);
  DocNode& outputs = doc.add("outputs");
  for (const auto& out : m.outputs) outputs.add("file", out);
  return doc;
}

std::string trajectory_csv(const TrajectoryRecord& traj) {
  std::string out = "t";
  for (const auto& m : traj.markers) {
    const std::string name = m.str();
    out += "," + name + "_x," + name + "_y," + name + "_z";
  }
  out += '\n';
  char buf[40];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out += buf;
  };
  for (const auto& sample : traj.samples) {
    put(sample.t);
    for (const auto& p : sample.positions)
      for (int i = 0; i < 3; ++i) {
        out += ',';
        put(p[i]);
      }
    out += '\n';
  }
  return out;
}

}  // namespace tensegrity
