#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tensegrity/dynamics.hpp"
#include "tensegrity/lab.hpp"
#include "tensegrity/model.hpp"

namespace tensegrity {

const char* library_version();

/// Node of a structured text document. Rendered as "key: value" lines; a
/// node with children is a section whose children are indented two spaces.
struct DocNode {
  std::string key;
  std::string value;
  std::vector<DocNode> children;

  DocNode& add(std::string key, std::string value = {});
  /// First child with the key, or nullptr.
  const DocNode* find(std::string_view key) const;
  /// Value of the first child with the key. Throws std::invalid_argument when absent.
  const std::string& at(std::string_view key) const;
};

/// Renders the children of `root`; the root's own key and value are not emitted.
std::string render_document(const DocNode& root);

/// Inverse of render_document. Throws std::invalid_argument naming the line on
/// malformed indentation or a line without "key:".
DocNode parse_document(std::string_view text);

std::string format_vec(const Vec3& v);
/// Round-trip exact (17 significant digits).
std::string format_exact(double v);

DocNode range_of_motion_document(const RangeOfMotionReport& r);
DocNode repeatability_document(const RepeatabilityReport& r);
DocNode compliance_document(const ComplianceReport& r);
DocNode workspace_document(const WorkspaceReport& r, const PlaneSpec& plane, const Vec3& pivot);

struct SettleInfo {
  bool converged = false;
  double residual = 0.0;
};

/// Per-body pose and velocities and per-cable lengths, tensions and commands,
/// all at full precision so state_from_document reproduces the world exactly.
DocNode state_document(const StructureDef& s, const WorldState& w, const SettleInfo& info);

/// Throws std::invalid_argument when the document does not describe `s`.
WorldState state_from_document(const StructureDef& s, const DocNode& doc);

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> config;
  std::string version = library_version();
  std::vector<std::string> outputs;
};

DocNode manifest_document(const RunManifest& m);

/// Header `t,<marker>_x,<marker>_y,<marker>_z,...` then one row per sample,
/// nine significant digits, LF line endings.
std::string trajectory_csv(const TrajectoryRecord& traj);

}  // namespace tensegrity
