#include "frag/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "frag/errors.hpp"
#include "frag/exponent.hpp"

namespace frag {
namespace {

[[noreturn]] void parse_fail(int line, int col, const std::string& msg) {
  throw Error(Errc::parse_error,
              "parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                  ": " + msg,
              line, col);
}

[[noreturn]] void value_fail(const ConfigValue& v, const std::string& key,
                             const std::string& msg) {
  throw Error(Errc::validation_error, "key '" + key + "': " + msg, v.line, v.column);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ConfigDoc document() {
    ConfigDoc doc;
    for (;;) {
      skip_blank();
      if (eof()) break;
      const int key_line = line_, key_col = col_;
      std::string key = parse_key();
      skip_spaces();
      if (eof() || peek() != '=') parse_fail(line_, col_, "expected '=' after key '" + key + "'");
      advance();
      skip_spaces();
      ConfigValue value = parse_value(false);
      skip_spaces();
      if (!eof() && peek() == '#') skip_to_eol();
      if (!eof() && peek() != '\n') {
        parse_fail(line_, col_, "unexpected trailing text after value");
      }
      if (doc.count(key)) parse_fail(key_line, key_col, "duplicate key '" + key + "'");
      doc.emplace(std::move(key), std::move(value));
    }
    return doc;
  }

  ConfigValue single_value() {
    skip_blank();
    if (eof()) parse_fail(line_, col_, "expected a value");
    ConfigValue v = parse_value(false);
    skip_blank();
    if (!eof()) parse_fail(line_, col_, "unexpected trailing text after value");
    return v;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }

  void skip_to_eol() {
    while (!eof() && peek() != '\n') advance();
  }

  // Blank space between statements: whitespace, newlines, comments.
  void skip_blank() {
    for (;;) {
      skip_spaces();
      if (eof()) return;
      if (peek() == '#') {
        skip_to_eol();
        continue;
      }
      if (peek() == '\n') {
        advance();
        continue;
      }
      return;
    }
  }

  static bool is_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  std::string parse_key() {
    if (!std::isalpha(static_cast<unsigned char>(peek())) && peek() != '_') {
      parse_fail(line_, col_, "expected a key");
    }
    std::string key;
    while (!eof() && is_key_char(peek())) {
      key.push_back(peek());
      advance();
    }
    return key;
  }

  // inside_list allows newlines around elements.
  ConfigValue parse_value(bool inside_list) {
    if (inside_list) skip_blank();
    if (eof()) parse_fail(line_, col_, "expected a value");
    ConfigValue v;
    v.line = line_;
    v.column = col_;
    if (peek() == '[') {
      advance();
      v.kind = ConfigValue::Kind::list;
      skip_blank();
      if (!eof() && peek() == ']') {
        advance();
        return v;
      }
      for (;;) {
        v.items.push_back(parse_value(true));
        skip_blank();
        if (eof()) parse_fail(line_, col_, "unterminated list");
        if (peek() == ',') {
          advance();
          continue;
        }
        if (peek() == ']') {
          advance();
          return v;
        }
        parse_fail(line_, col_, "expected ',' or ']' in list");
      }
    }
    if (peek() == '"') {
      advance();
      while (!eof() && peek() != '"' && peek() != '\n') {
        v.token.push_back(peek());
        advance();
      }
      if (eof() || peek() != '"') parse_fail(v.line, v.column, "unterminated string");
      advance();
      return v;
    }
    while (!eof()) {
      const char c = peek();
      if (c == ',' || c == ']' || c == '#' || c == '\n') break;
      v.token.push_back(c);
      advance();
    }
    while (!v.token.empty() && (v.token.back() == ' ' || v.token.back() == '\t' ||
                                v.token.back() == '\r')) {
      v.token.pop_back();
    }
    if (v.token.empty()) parse_fail(v.line, v.column, "expected a value");
    return v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double ConfigValue::as_double(const std::string& key) const {
  if (kind != Kind::scalar) value_fail(*this, key, "expected a number, found a list");
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + token.size() || token.empty()) {
    value_fail(*this, key, "expected a number, found '" + token + "'");
  }
  return v;
}

std::uint64_t ConfigValue::as_u64(const std::string& key) const {
  if (kind != Kind::scalar) value_fail(*this, key, "expected an integer, found a list");
  if (token.empty() || token[0] == '-' ||
      !std::all_of(token.begin(), token.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    value_fail(*this, key, "expected a nonnegative integer, found '" + token + "'");
  }
  errno = 0;
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(token.c_str(), &end, 10);
  if (errno == ERANGE) value_fail(*this, key, "integer out of range");
  return v;
}

std::int64_t ConfigValue::as_i64(const std::string& key) const {
  if (kind != Kind::scalar) value_fail(*this, key, "expected an integer, found a list");
  errno = 0;
  char* end = nullptr;
  const std::int64_t v = std::strtoll(token.c_str(), &end, 10);
  if (token.empty() || end != token.c_str() + token.size() || errno == ERANGE) {
    value_fail(*this, key, "expected an integer, found '" + token + "'");
  }
  return v;
}

bool ConfigValue::as_bool(const std::string& key) const {
  if (kind == Kind::scalar) {
    if (token == "true" || token == "1") return true;
    if (token == "false" || token == "0") return false;
  }
  value_fail(*this, key, "expected true or false");
}

const std::string& ConfigValue::as_string(const std::string& key) const {
  if (kind != Kind::scalar) value_fail(*this, key, "expected a string, found a list");
  return token;
}

const std::vector<ConfigValue>& ConfigValue::as_list(const std::string& key) const {
  if (kind != Kind::list) value_fail(*this, key, "expected a list");
  return items;
}

ConfigDoc parse_config_document(std::string_view text) { return Parser(text).document(); }

ConfigValue parse_config_value(std::string_view text) { return Parser(text).single_value(); }

namespace {

// Pulls keys out of the document, remembering which were consumed so
// leftovers can be rejected.
class KeyReader {
 public:
  explicit KeyReader(const ConfigDoc& doc) : doc_(doc) {}

  const ConfigValue* find(const std::string& key) {
    consumed_.insert(key);
    const auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &it->second;
  }

  const ConfigValue& require(const std::string& key) {
    const ConfigValue* v = find(key);
    if (!v) {
      throw Error(Errc::validation_error, "missing required key '" + key + "'");
    }
    return *v;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : doc_) {
      if (!consumed_.count(key)) {
        throw Error(Errc::validation_error, "unknown configuration key '" + key + "'",
                    value.line, value.column);
      }
    }
  }

 private:
  const ConfigDoc& doc_;
  std::set<std::string> consumed_;
};

std::vector<double> double_list(const ConfigValue& v, const std::string& key) {
  std::vector<double> out;
  if (v.kind == ConfigValue::Kind::scalar) {
    out.push_back(v.as_double(key));
    return out;
  }
  for (const ConfigValue& item : v.items) out.push_back(item.as_double(key));
  return out;
}

std::string render_list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_g17(v[i]);
  }
  return out + "]";
}

std::shared_ptr<DislocationMeasure> build_measure(KeyReader& keys, RunConfig& cfg) {
  const std::string& type = keys.require("measure.type").as_string("measure.type");
  if (const ConfigValue* v = keys.find("measure.p_lower")) {
    cfg.p_lower = v->as_double("measure.p_lower");
    if (!(cfg.p_lower > -1.0 && cfg.p_lower <= 0.0)) {
      value_fail(*v, "measure.p_lower", "lower index override must lie in (-1, 0]");
    }
  }
  if (type == "discrete") {
    const ConfigValue& atoms_value = keys.require("measure.atoms");
    const auto& atoms = atoms_value.as_list("measure.atoms");
    if (atoms.empty()) value_fail(atoms_value, "measure.atoms", "needs at least one atom");
    std::vector<std::pair<double, std::vector<double>>> built;
    for (const ConfigValue& atom : atoms) {
      const auto& pair = atom.as_list("measure.atoms");
      if (pair.size() != 2) {
        value_fail(atom, "measure.atoms", "each atom is [rate, [s1, s2, ...]]");
      }
      const double rate = pair[0].as_double("measure.atoms");
      std::vector<double> terms;
      for (const ConfigValue& t : pair[1].as_list("measure.atoms")) {
        terms.push_back(t.as_double("measure.atoms"));
      }
      built.emplace_back(rate, std::move(terms));
    }
    try {
      return catalog::from_atoms(std::move(built));
    } catch (const Error& e) {
      throw Error(Errc::validation_error,
                  std::string("key 'measure.atoms': ") + e.what() + " (" +
                      errc_name(e.code()) + ")",
                  atoms_value.line, atoms_value.column);
    }
  }
  if (type == "binary_density") {
    const ConfigValue& density = keys.require("measure.density");
    const std::string& name = density.as_string("measure.density");
    if (name != "uniform") {
      value_fail(density, "measure.density", "unknown density '" + name + "' (supported: uniform)");
    }
    const ConfigValue& eps_value = keys.require("measure.epsilon");
    const double eps = eps_value.as_double("measure.epsilon");
    if (!(eps > 0.0 && eps < 0.5)) {
      value_fail(eps_value, "measure.epsilon", "truncation epsilon must lie in (0, 1/2)");
    }
    cfg.echo.emplace_back("measure.density", name);
    cfg.echo.emplace_back("measure.epsilon", fmt_g17(eps));
    return truncate(catalog::uniform_binary(), eps);
  }
  value_fail(keys.require("measure.type"), "measure.type",
             "expected 'discrete' or 'binary_density'");
}

std::vector<TestFunction> build_test_functions(KeyReader& keys, RunConfig& cfg) {
  std::string type = "library";
  if (const ConfigValue* v = keys.find("f.type")) type = v->as_string("f.type");
  const ConfigValue* lo_v = keys.find("f.lo");
  const ConfigValue* hi_v = keys.find("f.hi");
  const ConfigValue* coeffs_v = keys.find("f.coeffs");
  cfg.echo.emplace_back("f.type", type);

  if (type == "library") return TestFunction::default_library();
  if (type == "one") return {TestFunction::one()};
  if (type == "identity") return {TestFunction::identity()};
  if (type == "indicator") {
    const double lo = lo_v ? lo_v->as_double("f.lo") : 0.5;
    const double hi = hi_v ? hi_v->as_double("f.hi") : 1.0;
    try {
      std::vector<TestFunction> out{TestFunction::indicator(lo, hi)};
      cfg.echo.emplace_back("f.lo", fmt_g17(lo));
      cfg.echo.emplace_back("f.hi", fmt_g17(hi));
      return out;
    } catch (const Error& e) {
      throw Error(Errc::validation_error, std::string("key 'f.lo/f.hi': ") + e.what());
    }
  }
  if (type == "poly") {
    if (!coeffs_v) throw Error(Errc::validation_error, "missing required key 'f.coeffs'");
    std::vector<double> coeffs = double_list(*coeffs_v, "f.coeffs");
    try {
      std::vector<TestFunction> out{TestFunction::polynomial(coeffs)};
      cfg.echo.emplace_back("f.coeffs", render_list(coeffs));
      return out;
    } catch (const Error& e) {
      value_fail(*coeffs_v, "f.coeffs", e.what());
    }
  }
  throw Error(Errc::validation_error,
              "key 'f.type': expected one of library, one, identity, indicator, poly");
}

}  // namespace

RunConfig build_run_config(const ConfigDoc& doc) {
  KeyReader keys(doc);
  RunConfig cfg;
  cfg.p_lower = kDefaultPLower;

  cfg.measure = build_measure(keys, cfg);
  cfg.measure_discrete = cfg.measure->is_discrete();
  {
    // Echo the measure in canonical form (atoms normalized and sorted).
    std::string type = cfg.measure_discrete ? "discrete" : "binary_density";
    cfg.echo.emplace_back("measure.type", type);
    if (cfg.measure_discrete) {
      std::string atoms = "[";
      bool first_atom = true;
      for (const auto& atom : cfg.measure->atoms()) {
        if (!first_atom) atoms += ", ";
        first_atom = false;
        atoms += "[" + fmt_g17(atom.rate) + ", [";
        for (std::size_t i = 0; i < atom.partition.size(); ++i) {
          if (i) atoms += ", ";
          atoms += fmt_g17(atom.partition.term(i));
        }
        atoms += "]]";
      }
      cfg.echo.emplace_back("measure.atoms", atoms + "]");
    }
    cfg.echo.emplace_back("measure.p_lower", fmt_g17(cfg.p_lower));
  }

  if (const ConfigValue* v = keys.find("run.seed")) cfg.seed = v->as_u64("run.seed");
  if (const ConfigValue* v = keys.find("run.replicas")) {
    const std::uint64_t r = v->as_u64("run.replicas");
    if (r < 1 || r > 0xffffffffull) value_fail(*v, "run.replicas", "must be in [1, 2^32)");
    cfg.replicas = static_cast<std::uint32_t>(r);
  }
  if (const ConfigValue* v = keys.find("run.budget")) {
    cfg.budget = v->as_u64("run.budget");
    if (cfg.budget < 1) value_fail(*v, "run.budget", "must be positive");
  }
  if (const ConfigValue* v = keys.find("run.threads")) {
    const std::int64_t t = v->as_i64("run.threads");
    if (t < 0 || t > 4096) value_fail(*v, "run.threads", "must be in [0, 4096]");
    cfg.threads = static_cast<int>(t);
  }
  if (const ConfigValue* v = keys.find("run.out")) cfg.out = v->as_string("run.out");
  if (const ConfigValue* v = keys.find("run.format")) {
    const std::string& f = v->as_string("run.format");
    if (f == "csv") {
      cfg.format = OutputFormat::csv;
    } else if (f == "json") {
      cfg.format = OutputFormat::json;
    } else {
      value_fail(*v, "run.format", "expected 'csv' or 'json'");
    }
  }

  if (const ConfigValue* v = keys.find("line.eta")) {
    cfg.eta = v->as_double("line.eta");
    if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) {
      value_fail(*v, "line.eta", "must be positive and finite");
    }
  }
  if (const ConfigValue* v = keys.find("line.genealogy")) {
    cfg.genealogy = v->as_bool("line.genealogy");
  }
  if (const ConfigValue* v = keys.find("line.alpha")) {
    cfg.alpha = v->as_double("line.alpha");
    if (!std::isfinite(cfg.alpha)) value_fail(*v, "line.alpha", "must be finite");
  }

  cfg.eta_schedule = {0.0625, 0.015625, 0.00390625, 0.0009765625, 0.000244140625,
                      6.103515625e-05, 1.52587890625e-05};
  if (const ConfigValue* v = keys.find("slln.eta_schedule")) {
    cfg.eta_schedule = double_list(*v, "slln.eta_schedule");
    if (cfg.eta_schedule.empty()) value_fail(*v, "slln.eta_schedule", "must not be empty");
    for (std::size_t i = 0; i < cfg.eta_schedule.size(); ++i) {
      if (!(cfg.eta_schedule[i] > 0.0 && cfg.eta_schedule[i] <= 1.0)) {
        value_fail(*v, "slln.eta_schedule", "entries must lie in (0, 1]");
      }
      if (i > 0 && !(cfg.eta_schedule[i] < cfg.eta_schedule[i - 1])) {
        value_fail(*v, "slln.eta_schedule", "must be strictly decreasing");
      }
    }
  }

  if (const ConfigValue* v = keys.find("sim.t")) {
    cfg.horizon = v->as_double("sim.t");
    if (!(cfg.horizon >= 0.0) || !std::isfinite(cfg.horizon)) {
      value_fail(*v, "sim.t", "must be nonnegative and finite");
    }
  }
  if (const ConfigValue* v = keys.find("sim.floor")) {
    cfg.floor_mass = v->as_double("sim.floor");
    if (!(cfg.floor_mass >= 0.0 && cfg.floor_mass < 1.0)) {
      value_fail(*v, "sim.floor", "must lie in [0, 1)");
    }
  }
  if (const ConfigValue* v = keys.find("sim.p")) {
    cfg.sim_tilt = v->as_double("sim.p");
    cfg.has_sim_tilt = true;
    if (!(cfg.sim_tilt > cfg.p_lower)) {
      value_fail(*v, "sim.p", "tilt must exceed the lower index");
    }
  }

  cfg.phi_grid = {0.0, 0.5, 1.0, 1.5, 2.0};
  if (const ConfigValue* v = keys.find("phi.grid")) {
    cfg.phi_grid = double_list(*v, "phi.grid");
    if (cfg.phi_grid.empty()) value_fail(*v, "phi.grid", "must not be empty");
  }
  if (const ConfigValue* v = keys.find("phi.p")) {
    cfg.phi_grid = {v->as_double("phi.p")};
  }
  for (double p : cfg.phi_grid) {
    if (!(p > cfg.p_lower)) {
      throw Error(Errc::validation_error,
                  "key 'phi.grid': entries must exceed the lower index " + fmt_g17(cfg.p_lower));
    }
  }

  cfg.x_grid = {std::log(1e4)};
  if (const ConfigValue* v = keys.find("overshoot.x")) {
    cfg.x_grid = double_list(*v, "overshoot.x");
    if (cfg.x_grid.empty()) value_fail(*v, "overshoot.x", "must not be empty");
    for (double x : cfg.x_grid) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        value_fail(*v, "overshoot.x", "levels must be nonnegative and finite");
      }
    }
  }
  if (const ConfigValue* v = keys.find("overshoot.samples")) {
    cfg.samples = v->as_u64("overshoot.samples");
    if (cfg.samples < 2) value_fail(*v, "overshoot.samples", "need at least two samples");
  }
  if (const ConfigValue* v = keys.find("overshoot.renewal_check")) {
    cfg.renewal_check = v->as_bool("overshoot.renewal_check");
  }
  if (const ConfigValue* v = keys.find("overshoot.p")) {
    cfg.overshoot_tilt = v->as_double("overshoot.p");
    cfg.has_overshoot_tilt = true;
    if (!(cfg.overshoot_tilt > cfg.p_lower)) {
      value_fail(*v, "overshoot.p", "tilt must exceed the lower index");
    }
  }

  if (const ConfigValue* v = keys.find("m21.lines")) {
    cfg.m21_lines = v->as_u64("m21.lines");
    if (cfg.m21_lines < 2) value_fail(*v, "m21.lines", "need at least two lines");
  }
  if (const ConfigValue* v = keys.find("m21.samples")) {
    cfg.m21_samples = v->as_u64("m21.samples");
    if (cfg.m21_samples < 2) value_fail(*v, "m21.samples", "need at least two samples");
  }

  cfg.fns = build_test_functions(keys, cfg);

  keys.reject_unknown();

  cfg.echo.emplace_back("run.seed", std::to_string(cfg.seed));
  cfg.echo.emplace_back("run.replicas", std::to_string(cfg.replicas));
  cfg.echo.emplace_back("run.budget", std::to_string(cfg.budget));
  cfg.echo.emplace_back("run.threads", std::to_string(cfg.threads));
  cfg.echo.emplace_back("run.out", cfg.out);
  cfg.echo.emplace_back("run.format", cfg.format == OutputFormat::csv ? "csv" : "json");
  cfg.echo.emplace_back("line.eta", fmt_g17(cfg.eta));
  cfg.echo.emplace_back("line.genealogy", cfg.genealogy ? "true" : "false");
  cfg.echo.emplace_back("line.alpha", fmt_g17(cfg.alpha));
  cfg.echo.emplace_back("slln.eta_schedule", render_list(cfg.eta_schedule));
  cfg.echo.emplace_back("sim.t", fmt_g17(cfg.horizon));
  cfg.echo.emplace_back("sim.floor", fmt_g17(cfg.floor_mass));
  if (cfg.has_sim_tilt) cfg.echo.emplace_back("sim.p", fmt_g17(cfg.sim_tilt));
  cfg.echo.emplace_back("phi.grid", render_list(cfg.phi_grid));
  cfg.echo.emplace_back("overshoot.x", render_list(cfg.x_grid));
  cfg.echo.emplace_back("overshoot.samples", std::to_string(cfg.samples));
  cfg.echo.emplace_back("overshoot.renewal_check", cfg.renewal_check ? "true" : "false");
  if (cfg.has_overshoot_tilt) cfg.echo.emplace_back("overshoot.p", fmt_g17(cfg.overshoot_tilt));
  cfg.echo.emplace_back("m21.lines", std::to_string(cfg.m21_lines));
  cfg.echo.emplace_back("m21.samples", std::to_string(cfg.m21_samples));

  std::sort(cfg.echo.begin(), cfg.echo.end());
  return cfg;
}

RunConfig parse_config(std::string_view text) {
  return build_run_config(parse_config_document(text));
}

}  // namespace frag
