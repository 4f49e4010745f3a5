#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tensegrity/control.hpp"
#include "tensegrity/model.hpp"

namespace tensegrity {

struct SourceSpan {
  int line = 1;
  int column = 1;
};

enum class ParseErrorKind { lex, syntax, reference, range, duplicate };

const char* to_string(ParseErrorKind kind);

struct ParseError {
  SourceSpan span;
  std::string message;
  ParseErrorKind kind = ParseErrorKind::syntax;

  /// "line:column: kind: message"
  std::string str() const;
};

struct StructureParse {
  std::optional<StructureDef> structure;
  std::vector<ParseError> errors;

  bool ok() const { return structure.has_value(); }
};

/// Parses the line-oriented structure format. Every error found in the pass
/// is reported; a successful result has no validate_structure violations.
StructureParse parse_structure(std::string_view text);

/// Renders a structure in the same format, bodies then cables in definition
/// order, LF line endings. Throws std::invalid_argument for invalid input.
std::string serialize_structure(const StructureDef& s);

struct ProgramParse {
  std::optional<ControllerProgram> program;
  std::vector<ParseError> errors;

  bool ok() const { return program.has_value(); }
};

/// Parses a controller file (`sine`, `pair` and `hold` lines). Cable names
/// are checked against a structure separately by validate_program.
ProgramParse parse_program(std::string_view text);

std::string serialize_program(const ControllerProgram& program);

/// Nine significant digits, widened only when that would not reproduce the
/// value to 1e-9 relative.
std::string format_real(double v);

}  // namespace tensegrity
