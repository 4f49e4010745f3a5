#include "tensegrity/topology_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tensegrity {

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::lex:
      return "lex";
    case ParseErrorKind::syntax:
      return "syntax";
    case ParseErrorKind::reference:
      return "reference";
    case ParseErrorKind::range:
      return "range";
    case ParseErrorKind::duplicate:
      return "duplicate";
  }
  return "unknown";
}

std::string ParseError::str() const {
  return std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + to_string(kind) + ": " + message;
}

std::string format_real(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  for (int digits = 9; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    const double back = std::strtod(buf, nullptr);
    if (std::abs(back - v) <= 1e-9 * std::abs(v) * 0.5 || digits == 17) break;
  }
  return buf;
}

namespace {

struct Token {
  std::string text;
  int column = 1;
};

struct Line {
  int number = 1;
  std::vector<Token> tokens;
};

bool name_char(char c, bool first) {
  if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_') return true;
  return !first && ((c >= '0' && c <= '9') || c == '-');
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!name_char(s[i], i == 0)) return false;
  return true;
}

/// Shared lexical layer: comments, whitespace-separated tokens, byte checks.
class Lexer {
 public:
  explicit Lexer(std::vector<ParseError>& errors) : errors_(errors) {}

  std::vector<Line> split(std::string_view text) {
    std::vector<Line> lines;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view raw = text.substr(pos, end - pos);
      ++number;
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
      Line line{number, {}};
      tokenize(raw, line);
      if (!line.tokens.empty()) lines.push_back(std::move(line));
      if (end == text.size()) break;
      pos = end + 1;
    }
    return lines;
  }

 private:
  void tokenize(std::string_view raw, Line& line) {
    std::size_t i = 0;
    while (i < raw.size()) {
      const char c = raw[i];
      if (c == '#') return;
      if (c == ' ' || c == '\t') {
        ++i;
        continue;
      }
      const std::size_t start = i;
      std::string text;
      bool bad = false;
      while (i < raw.size() && raw[i] != ' ' && raw[i] != '\t' && raw[i] != '#') {
        const auto u = static_cast<unsigned char>(raw[i]);
        if (u < 0x21 || u > 0x7e) {
          if (!bad)
            errors_.push_back({{line.number, static_cast<int>(i) + 1}, "unexpected byte outside a comment", ParseErrorKind::lex});
          bad = true;
        }
        text.push_back(raw[i]);
        ++i;
      }
      if (!bad) line.tokens.push_back({std::move(text), static_cast<int>(start) + 1});
    }
  }

  std::vector<ParseError>& errors_;
};

/// Per-line helpers that record errors against a token's position.
class LineReader {
 public:
  LineReader(const Line& line, std::vector<ParseError>& errors) : line_(line), errors_(errors) {}

  void error(const Token& t, ParseErrorKind kind, std::string message) const {
    errors_.push_back({{line_.number, t.column}, std::move(message), kind});
  }
  void error(ParseErrorKind kind, std::string message) const { error(line_.tokens.front(), kind, std::move(message)); }

  std::optional<double> number(const Token& t) const {
    const char* begin = t.text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (t.text.empty() || end != begin + t.text.size() || !std::isfinite(v)) {
      error(t, ParseErrorKind::lex, "invalid number '" + t.text + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::string> name(const Token& t, const char* what) const {
    if (!valid_name(t.text)) {
      error(t, ParseErrorKind::lex, std::string("invalid ") + what + " '" + t.text + "'");
      return std::nullopt;
    }
    return t.text;
  }

  /// Parses key=value tokens from `first` on. Unknown or repeated keys and
  /// missing required keys are errors; returns the value tokens by key.
  std::optional<std::map<std::string, Token>> keyed(std::size_t first, const std::vector<std::string>& required,
                                                    const std::vector<std::string>& optional_keys) const {
    std::map<std::string, Token> out;
    bool ok = true;
    for (std::size_t i = first; i < line_.tokens.size(); ++i) {
      const auto& t = line_.tokens[i];
      const auto eq = t.text.find('=');
      if (eq == std::string::npos) {
        error(t, ParseErrorKind::syntax, "expected key=value, got '" + t.text + "'");
        ok = false;
        continue;
      }
      const std::string key = t.text.substr(0, eq);
      const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                         std::find(optional_keys.begin(), optional_keys.end(), key) != optional_keys.end();
      if (!known) {
        error(t, ParseErrorKind::syntax, "unknown key '" + key + "'");
        ok = false;
        continue;
      }
      if (out.count(key)) {
        error(t, ParseErrorKind::duplicate, "key '" + key + "' given twice");
        ok = false;
        continue;
      }
      out[key] = Token{t.text.substr(eq + 1), t.column + static_cast<int>(eq) + 1};
    }
    for (const auto& key : required)
      if (!out.count(key)) {
        error(ParseErrorKind::syntax, "missing " + key + "=");
        ok = false;
      }
    if (!ok) return std::nullopt;
    return out;
  }

  /// Splits "<body>.<node>".
  std::optional<NodeRef> node_ref(const Token& t) const {
    const auto dot = t.text.find('.');
    if (dot == std::string::npos || !valid_name(t.text.substr(0, dot)) || !valid_name(t.text.substr(dot + 1))) {
      error(t, ParseErrorKind::lex, "expected <body>.<node>, got '" + t.text + "'");
      return std::nullopt;
    }
    return NodeRef{t.text.substr(0, dot), t.text.substr(dot + 1)};
  }

  const Line& line() const { return line_; }

 private:
  const Line& line_;
  std::vector<ParseError>& errors_;
};

void sort_errors(std::vector<ParseError>& errors) {
  std::stable_sort(errors.begin(), errors.end(), [](const ParseError& a, const ParseError& b) {
    return a.span.line != b.span.line ? a.span.line < b.span.line : a.span.column < b.span.column;
  });
}

struct BodyInfo {
  SourceSpan span;
  std::map<std::string, SourceSpan> nodes;
};

struct CableInfo {
  SourceSpan span;
  std::optional<SourceSpan> route;
  std::vector<Token> route_tokens;
  int route_line = 0;
  std::optional<SourceSpan> actuator;
};

class StructureParser {
 public:
  StructureParse run(std::string_view text) {
    Lexer lexer(errors_);
    const auto lines = lexer.split(text);
    for (const auto& line : lines) dispatch(line);
    finish();
    StructureParse out;
    sort_errors(errors_);
    out.errors = std::move(errors_);
    if (out.errors.empty()) out.structure = std::move(s_);
    return out;
  }

 private:
  enum class Parent { none, body, cable };

  void dispatch(const Line& line) {
    LineReader r(line, errors_);
    const auto& head = line.tokens.front().text;
    if (head == "structure") return structure_line(r);
    if (head == "gravity") return gravity_line(r);
    if (head == "body") return body_line(r);
    if (head == "node") return node_line(r);
    if (head == "rod") return rod_line(r);
    if (head == "cable") return cable_line(r);
    if (head == "route") return route_line(r);
    if (head == "actuator") return actuator_line(r);
    r.error(ParseErrorKind::syntax, "unknown directive '" + head + "'");
  }

  SourceSpan span_of(const LineReader& r) const { return {r.line().number, r.line().tokens.front().column}; }

  void structure_line(const LineReader& r) {
    const auto& t = r.line().tokens;
    if (structure_span_) {
      r.error(ParseErrorKind::duplicate, "structure declared twice");
      return;
    }
    structure_span_ = span_of(r);
    if (t.size() != 2) return r.error(ParseErrorKind::syntax, "expected: structure <name>");
    if (auto n = r.name(t[1], "structure name")) s_.name = *n;
  }

  void gravity_line(const LineReader& r) {
    const auto& t = r.line().tokens;
    if (gravity_span_) {
      r.error(ParseErrorKind::duplicate, "gravity declared twice");
      return;
    }
    gravity_span_ = span_of(r);
    if (t.size() != 4) return r.error(ParseErrorKind::syntax, "expected: gravity <gx> <gy> <gz>");
    for (int i = 0; i < 3; ++i)
      if (auto v = r.number(t[i + 1])) s_.gravity[i] = *v;
  }

  void body_line(const LineReader& r) {
    const auto& t = r.line().tokens;
    parent_ = Parent::none;
    if (t.size() < 3 || t.size() > 4) return r.error(ParseErrorKind::syntax, "expected: body <name> mass=<kg> [fixed]");
    auto name = r.name(t[1], "body name");
    bool fixed = false;
    if (t.size() == 4) {
      if (t[3].text != "fixed") return r.error(t[3], ParseErrorKind::syntax, "expected 'fixed', got '" + t[3].text + "'");
      fixed = true;
    }
    if (!name) return;
    const auto& mass_tok = t[2];
    if (mass_tok.text.rfind("mass=", 0) != 0)
      return r.error(mass_tok, ParseErrorKind::syntax, "expected mass=<kg>, got '" + mass_tok.text + "'");
    const Token value{mass_tok.text.substr(5), mass_tok.column + 5};
    auto mass = r.number(value);
    if (bodies_.count(*name)) {
      r.error(t[1], ParseErrorKind::duplicate, "body '" + *name + "' already defined");
      return;
    }
    if (!mass) return;
    if (fixed ? *mass < 0.0 : !(*mass > 0.0))
      r.error(value, ParseErrorKind::range, fixed ? "mass must be >= 0" : "mass must be > 0 for a free body");
    RigidBodySpec b;
    b.name = *name;
    b.mass = *mass;
    b.fixed = fixed;
    s_.bodies.push_back(std::move(b));
    bodies_[*name].span = span_of(r);
    parent_ = Parent::body;
  }

  RigidBodySpec* current_body(const LineReader& r, const char* what) {
    if (parent_ != Parent::body) {
      r.error(ParseErrorKind::syntax, std::string(what) + " must follow a body line");
      return nullptr;
    }
    return &s_.bodies.back();
  }

  void node_line(const LineReader& r) {
    const auto& t = r.line().tokens;
    auto* body = current_body(r, "node");
    if (!body) return;
    if (t.size() != 5) return r.error(ParseErrorKind::syntax, "expected: node <id> <x> <y> <z>");
    auto id = r.name(t[1], "node id");
    Vec3 p;
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      auto v = r.number(t[i + 2]);
      if (v) p[i] = *v;
      else ok = false;
    }
    if (!id) return;
    auto& info = bodies_[body->name];
    if (info.nodes.count(*id)) return r.error(t[1], ParseErrorKind::duplicate, "node '" + *id + "' already defined on " + body->name);
    info.nodes[*id] = span_of(r);
    if (ok) body->nodes.push_back({*id, p});
  }

  void rod_line(const LineReader& r) {
    const auto& t = r.line().tokens;
    auto* body = current_body(r, "rod");
    if (!body) return;
    if (t.size() != 4) return r.error(ParseErrorKind::syntax, "expected: rod <nodeA> <nodeB> mass=<kg>");
    auto a = r.name(t[1], "node id");
    auto b = r.name(t[2], "node id");
    auto kv = r.keyed(3, {"mass"}, {});
    if (!a || !b || !kv) return;
    const auto& info = bodies_[body->name];
    bool ok = true;
    for (std::size_t i : {1u, 2u})
      if (!info.nodes.count(t[i].text)) {
        r.error(t[i], ParseErrorKind::reference, "body " + body->name + " has no node '" + t[i].text + "'");
        ok = false;
      }
    if (*a == *b) {
      r.error(t[2], ParseErrorKind::range, "rod endpoints must differ");
      ok = false;
    }
    const Token& mt = kv->at("mass");
    auto mass = r.number(mt);
    if (!mass) return;
    if (!(*mass > 0.0)) {
      r.error(mt, ParseErrorKind::range, "rod mass must be > 0");
      ok = false;
    }
    if (ok) body->rods.push_back({*a, *b, *mass});
  }

  void cable_line(const LineReader& r) {
    const auto& t = r.line().tokens;
    parent_ = Parent::none;
    if (t.size() < 2) return r.error(ParseErrorKind::syntax, "expected: cable <id> kind=... k=... b=... rest=... min=... max=...");
    auto id = r.name(t[1], "cable id");
    auto kv = r.keyed(2, {"kind", "k", "b", "rest", "min", "max"}, {});
    if (!id || !kv) return;
    if (cables_.count(*id)) return r.error(t[1], ParseErrorKind::duplicate, "cable '" + *id + "' already defined");
    CableSpec c;
    c.id = *id;
    const Token& kind = kv->at("kind");
    bool ok = true;
    if (kind.text == "active") c.kind = CableKind::active;
    else if (kind.text == "passive") c.kind = CableKind::passive;
    else {
      r.error(kind, ParseErrorKind::syntax, "kind must be active or passive");
      ok = false;
    }
    auto get = [&](const char* key, double& dst) {
      auto v = r.number(kv->at(key));
      if (v) dst = *v;
      else ok = false;
    };
    get("k", c.stiffness_k);
    get("b", c.damping_b);
    get("rest", c.rest_length);
    get("min", c.min_length);
    get("max", c.max_length);
    if (!ok) return;
    if (!(c.stiffness_k > 0.0)) r.error(kv->at("k"), ParseErrorKind::range, "k must be > 0");
    if (!(c.damping_b >= 0.0)) r.error(kv->at("b"), ParseErrorKind::range, "b must be >= 0");
    if (!(c.min_length > 0.0)) r.error(kv->at("min"), ParseErrorKind::range, "min must be > 0");
    if (!(c.rest_length > 0.0)) r.error(kv->at("rest"), ParseErrorKind::range, "rest must be > 0");
    if (c.min_length > c.rest_length || c.rest_length > c.max_length)
      r.error(kv->at("rest"), ParseErrorKind::range, "requires min <= rest <= max");
    s_.cables.push_back(std::move(c));
    cables_[*id].span = span_of(r);
    parent_ = Parent::cable;
  }

  CableSpec* current_cable(const LineReader& r, const char* what) {
    if (parent_ != Parent::cable) {
      r.error(ParseErrorKind::syntax, std::string(what) + " must follow a cable line");
      return nullptr;
    }
    return &s_.cables.back();
  }

  void route_line(const LineReader& r) {
    const auto& t = r.line().tokens;
    auto* cable = current_cable(r, "route");
    if (!cable) return;
    auto& info = cables_[cable->id];
    if (info.route) return r.error(ParseErrorKind::duplicate, "cable " + cable->id + " already has a route");
    info.route = span_of(r);
    if (t.size() < 3) return r.error(ParseErrorKind::syntax, "route needs at least two <body>.<node> entries");
    bool ok = true;
    std::vector<NodeRef> refs;
    for (std::size_t i = 1; i < t.size(); ++i) {
      auto ref = r.node_ref(t[i]);
      if (!ref) {
        ok = false;
        continue;
      }
      if (!refs.empty() && refs.back() == *ref) {
        r.error(t[i], ParseErrorKind::range, "consecutive route entries must differ");
        ok = false;
      }
      refs.push_back(*ref);
    }
    info.route_tokens.assign(t.begin() + 1, t.end());
    info.route_line = r.line().number;
    if (ok) cable->route = std::move(refs);
  }

  void actuator_line(const LineReader& r) {
    auto* cable = current_cable(r, "actuator");
    if (!cable) return;
    auto& info = cables_[cable->id];
    if (info.actuator) return r.error(ParseErrorKind::duplicate, "cable " + cable->id + " already has an actuator");
    info.actuator = span_of(r);
    if (!cable->active()) return r.error(ParseErrorKind::syntax, "actuator is only allowed on active cables");
    auto kv = r.keyed(1, {"vmax", "amax"}, {});
    if (!kv) return;
    auto vmax = r.number(kv->at("vmax"));
    auto amax = r.number(kv->at("amax"));
    if (!vmax || !amax) return;
    if (!(*vmax > 0.0)) r.error(kv->at("vmax"), ParseErrorKind::range, "vmax must be > 0");
    if (!(*amax > 0.0)) r.error(kv->at("amax"), ParseErrorKind::range, "amax must be > 0");
    cable->actuator = ActuatorSpec{*vmax, *amax};
  }

  void finish() {
    if (!structure_span_) errors_.push_back({{1, 1}, "missing 'structure <name>' line", ParseErrorKind::syntax});

    // Route references resolve only once every body is known.
    for (auto& c : s_.cables) {
      const auto& info = cables_[c.id];
      if (!info.route) {
        errors_.push_back({info.span, "cable " + c.id + " has no route", ParseErrorKind::syntax});
        continue;
      }
      for (std::size_t i = 0; i < info.route_tokens.size(); ++i) {
        const auto& tok = info.route_tokens[i];
        const auto dot = tok.text.find('.');
        if (dot == std::string::npos) continue;
        const std::string body = tok.text.substr(0, dot), node = tok.text.substr(dot + 1);
        auto it = bodies_.find(body);
        if (it == bodies_.end())
          errors_.push_back({{info.route_line, tok.column}, "unknown body '" + body + "'", ParseErrorKind::reference});
        else if (!it->second.nodes.count(node))
          errors_.push_back({{info.route_line, tok.column}, "body " + body + " has no node '" + node + "'", ParseErrorKind::reference});
      }
      if (c.active() && !info.actuator)
        errors_.push_back({info.span, "active cable " + c.id + " requires an actuator line", ParseErrorKind::syntax});
    }
    if (!errors_.empty()) return;

    for (auto& b : s_.bodies) {
      if (b.nodes.empty()) {
        errors_.push_back({bodies_[b.name].span, "body " + b.name + " has no nodes", ParseErrorKind::syntax});
        continue;
      }
      try {
        derive_mass_properties(b);
      } catch (const std::invalid_argument& e) {
        errors_.push_back({bodies_[b.name].span, "body " + b.name + ": " + e.what(), ParseErrorKind::range});
      }
    }
    if (!errors_.empty()) return;

    // Anything the line rules did not catch is reported against the element.
    for (const auto& v : validate_structure(s_)) errors_.push_back({span_for(v.element), v.str(), ParseErrorKind::range});
  }

  SourceSpan span_for(const std::string& element) const {
    std::istringstream in(element);
    std::string kind, name;
    in >> kind >> name;
    if (kind == "body") {
      auto it = bodies_.find(name);
      if (it != bodies_.end()) return it->second.span;
    } else if (kind == "cable") {
      auto it = cables_.find(name);
      if (it != cables_.end()) return it->second.span;
    } else if (kind == "gravity" || kind == "structure") {
      if (gravity_span_) return *gravity_span_;
      if (structure_span_) return *structure_span_;
    }
    return {1, 1};
  }

  StructureDef s_;
  std::vector<ParseError> errors_;
  Parent parent_ = Parent::none;
  std::optional<SourceSpan> structure_span_, gravity_span_;
  std::map<std::string, BodyInfo> bodies_;
  std::map<std::string, CableInfo> cables_;
};

}  // namespace

StructureParse parse_structure(std::string_view text) { return StructureParser{}.run(text); }

std::string serialize_structure(const StructureDef& s) {
  const auto violations = validate_structure(s);
  if (!violations.empty()) throw std::invalid_argument("cannot serialize invalid structure: " + violations.front().str());
  std::ostringstream os;
  const auto r = [](double v) { return format_real(v); };
  os << "structure " << s.name << '\n';
  os << "gravity " << r(s.gravity.x()) << ' ' << r(s.gravity.y()) << ' ' << r(s.gravity.z()) << '\n';
  for (const auto& b : s.bodies) {
    os << '\n' << "body " << b.name << " mass=" << r(b.mass) << (b.fixed ? " fixed" : "") << '\n';
    for (const auto& n : b.nodes)
      os << "  node " << n.id << ' ' << r(n.local_position.x()) << ' ' << r(n.local_position.y()) << ' '
         << r(n.local_position.z()) << '\n';
    for (const auto& rod : b.rods) os << "  rod " << rod.node_a << ' ' << rod.node_b << " mass=" << r(rod.mass) << '\n';
  }
  for (const auto& c : s.cables) {
    os << '\n'
       << "cable " << c.id << " kind=" << (c.active() ? "active" : "passive") << " k=" << r(c.stiffness_k)
       << " b=" << r(c.damping_b) << " rest=" << r(c.rest_length) << " min=" << r(c.min_length)
       << " max=" << r(c.max_length) << '\n';
    os << "  route";
    for (const auto& ref : c.route) os << ' ' << ref.str();
    os << '\n';
    if (c.actuator) os << "  actuator vmax=" << r(c.actuator->target_velocity) << " amax=" << r(c.actuator->max_accel) << '\n';
  }
  return os.str();
}

ProgramParse parse_program(std::string_view text) {
  std::vector<ParseError> errors;
  Lexer lexer(errors);
  const auto lines = lexer.split(text);
  ControllerProgram program;
  for (const auto& line : lines) {
    LineReader r(line, errors);
    const auto& t = line.tokens;
    const auto& head = t.front().text;
    auto numbers = [&](const std::map<std::string, Token>& kv, const std::vector<std::string>& keys,
                       std::vector<double>& out) {
      bool ok = true;
      for (const auto& k : keys) {
        auto it = kv.find(k);
        if (it == kv.end()) {
          out.push_back(0.0);
          continue;
        }
        auto v = r.number(it->second);
        out.push_back(v.value_or(0.0));
        ok = ok && v.has_value();
      }
      return ok;
    };
    if (head == "sine") {
      if (t.size() < 2) {
        r.error(ParseErrorKind::syntax, "expected: sine <cable> center=<m> amp=<m> period=<s> [phase=<rad>]");
        continue;
      }
      auto id = r.name(t[1], "cable id");
      auto kv = r.keyed(2, {"center", "amp", "period"}, {"phase"});
      if (!id || !kv) continue;
      std::vector<double> v;
      if (!numbers(*kv, {"center", "amp", "period", "phase"}, v)) continue;
      if (!(v[2] > 0.0)) {
        r.error(kv->at("period"), ParseErrorKind::range, "period must be > 0");
        continue;
      }
      program.channels.push_back({*id, v[0], v[1], v[2], v[3]});
    } else if (head == "pair") {
      if (t.size() < 3) {
        r.error(ParseErrorKind::syntax, "expected: pair <a> <b> total=<m>");
        continue;
      }
      auto a = r.name(t[1], "cable id");
      auto b = r.name(t[2], "cable id");
      auto kv = r.keyed(3, {"total"}, {});
      if (!a || !b || !kv) continue;
      std::vector<double> v;
      if (!numbers(*kv, {"total"}, v)) continue;
      if (!(v[0] > 0.0)) {
        r.error(kv->at("total"), ParseErrorKind::range, "total must be > 0");
        continue;
      }
      program.pairs.push_back({*a, *b, v[0]});
    } else if (head == "hold") {
      if (t.size() < 2) {
        r.error(ParseErrorKind::syntax, "expected: hold <cable> len=<m>");
        continue;
      }
      auto id = r.name(t[1], "cable id");
      auto kv = r.keyed(2, {"len"}, {});
      if (!id || !kv) continue;
      std::vector<double> v;
      if (!numbers(*kv, {"len"}, v)) continue;
      if (!(v[0] > 0.0)) {
        r.error(kv->at("len"), ParseErrorKind::range, "len must be > 0");
        continue;
      }
      if (program.holds.count(*id)) {
        r.error(t[1], ParseErrorKind::duplicate, "cable " + *id + " already held");
        continue;
      }
      program.holds[*id] = v[0];
    } else {
      r.error(ParseErrorKind::syntax, "unknown directive '" + head + "'");
    }
  }
  ProgramParse out;
  sort_errors(errors);
  out.errors = std::move(errors);
  if (out.errors.empty()) out.program = std::move(program);
  return out;
}

std::string serialize_program(const ControllerProgram& program) {
  std::ostringstream os;
  for (const auto& c : program.channels)
    os << "sine " << c.cable_id << " center=" << format_real(c.center) << " amp=" << format_real(c.amplitude)
       << " period=" << format_real(c.period) << " phase=" << format_real(c.phase) << '\n';
  for (const auto& p : program.pairs)
    os << "pair " << p.cable_a << ' ' << p.cable_b << " total=" << format_real(p.total_length) << '\n';
  for (const auto& [id, len] : program.holds) os << "hold " << id << " len=" << format_real(len) << '\n';
  return os.str();
}

}  // namespace tensegrity
