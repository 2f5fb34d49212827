#include "nwidth/config.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "nwidth/buslaev.hpp"
#include "nwidth/error.hpp"

namespace nwidth {

namespace {

const std::vector<std::pair<Command, std::string>>& command_table() {
  static const std::vector<std::pair<Command, std::string>> t{
      {Command::widths, "widths"},           {Command::iterate, "iterate"},
      {Command::kernel_test, "kernel-test"}, {Command::oracle_compare, "oracle-compare"},
      {Command::asymptotics, "asymptotics"}, {Command::admissibility, "admissibility"}};
  return t;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorKind::parse, "config key '" + key + "' = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(d)) bad(key, value, "not a finite number");
    return d;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad(key, value, "not a number");
  }
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long long i = std::stoll(value, &used);
    if (used != value.size()) bad(key, value, "not an integer");
    return i;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad(key, value, "not an integer");
  }
}

int int_in(const std::string& key, const std::string& value, long long lo, long long hi) {
  const long long i = to_int(key, value);
  if (i < lo || i > hi) bad(key, value, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(i);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s{
      {"command", [](RunConfig& c, const std::string&, const std::string& v) { c.command = parse_command(v); }},
      {"r", [](RunConfig& c, const std::string& k, const std::string& v) { c.r = int_in(k, v, 2, 12); }},
      {"k", [](RunConfig& c, const std::string& k, const std::string& v) { c.k = int_in(k, v, 1, 11); }},
      {"p", [](RunConfig& c, const std::string& k, const std::string& v) { c.p = to_double(k, v); }},
      {"q", [](RunConfig& c, const std::string& k, const std::string& v) { c.q = to_double(k, v); }},
      {"n_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_max = int_in(k, v, 0, 200); }},
      {"level", [](RunConfig& c, const std::string& k, const std::string& v) { c.level = int_in(k, v, 0, 200); }},
      {"grid_panels",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.grid_panels = int_in(k, v, 1, 100000); }},
      {"points_per_panel",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.points_per_panel = int_in(k, v, 2, 32); }},
      {"a", [](RunConfig& c, const std::string& k, const std::string& v) { c.a = to_double(k, v); }},
      {"b", [](RunConfig& c, const std::string& k, const std::string& v) { c.b = to_double(k, v); }},
      {"grading", [](RunConfig& c, const std::string&, const std::string& v) { c.grading = parse_grading(v); }},
      {"grade_depth", [](RunConfig& c, const std::string& k, const std::string& v) { c.grade_depth = to_double(k, v); }},
      {"tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.tol = to_double(k, v); }},
      {"bracket_tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.bracket_tol = to_double(k, v); }},
      {"max_sweeps",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.max_sweeps = int_in(k, v, 1, 10000000); }},
      {"max_restarts",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.max_restarts = int_in(k, v, 0, 1000); }},
      {"multistart", [](RunConfig& c, const std::string& k, const std::string& v) { c.multistart = int_in(k, v, 1, 100); }},
      {"init",
       [](RunConfig& c, const std::string&, const std::string& v) {
         parse_init_strategy(v);
         c.init = v;
       }},
      {"seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_int(k, v);
         if (s < 0) bad(k, v, "must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"g",
       [](RunConfig& c, const std::string&, const std::string& v) {
         if (v != "random") WeightSpec::parse(v);
         c.g = v;
       }},
      {"v",
       [](RunConfig& c, const std::string&, const std::string& v) {
         if (v != "random") WeightSpec::parse(v);
         c.v = v;
       }},
      {"eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.eps = to_double(k, v); }},
      {"kernel_cases",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.kernel_cases = int_in(k, v, 1, 1000000); }},
      {"out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }},
      {"format",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "csv") c.format = Format::csv;
         else if (v == "json") c.format = Format::json;
         else bad(k, v, "must be csv or json");
       }},
  };
  return s;
}

void apply(RunConfig& c, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw Error(ErrorKind::parse, "unknown config key '" + key + "'");
  it->second(c, key, value);
}

void validate(const RunConfig& c) {
  if (c.k > c.r - 1) throw Error(ErrorKind::parse, "config: k must lie in [1, r-1]");
  if (!(c.p > 1) || !(c.q > 1)) throw Error(ErrorKind::parse, "config: p and q must exceed 1");
  if (c.q > c.p) throw Error(ErrorKind::parse, "config: requires q <= p");
  if (!(c.a < c.b)) throw Error(ErrorKind::parse, "config: need a < b");
  if (!(c.tol > 0 && c.tol < 1)) throw Error(ErrorKind::parse, "config: tol must lie in (0, 1)");
  if (!(c.bracket_tol > 0 && c.bracket_tol < 1)) throw Error(ErrorKind::parse, "config: bracket_tol must lie in (0, 1)");
  if (!(c.grade_depth > 0)) throw Error(ErrorKind::parse, "config: grade_depth must be positive");
  if (!(c.eps > 0)) throw Error(ErrorKind::parse, "config: eps must be positive");
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [c, s] : command_table()) n.push_back(s);
    return n;
  }();
  return names;
}

Command parse_command(const std::string& s) {
  for (const auto& [c, name] : command_table())
    if (name == s) return c;
  std::string list;
  for (const auto& n : command_names()) list += (list.empty() ? "" : ", ") + n;
  throw Error(ErrorKind::parse, (s.empty() ? std::string("empty command") : "unknown command '" + s + "'") +
                                    "; available commands: " + list);
}

const char* to_string(Command c) {
  for (const auto& [cmd, name] : command_table())
    if (cmd == c) return name.c_str();
  return "";
}

RunConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::parse, "config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::parse, "config line " + std::to_string(lineno) + ": empty key");
    apply(c, key, value);
  }
  for (const auto& [k, v] : overrides) apply(c, k, v);
  validate(c);
  return c;
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "command=" << to_string(c.command) << "\nr=" << c.r << "\nk=" << c.k << "\np=" << c.p << "\nq=" << c.q
     << "\nn_max=" << c.n_max << "\nlevel=" << c.level << "\ngrid_panels=" << c.grid_panels
     << "\npoints_per_panel=" << c.points_per_panel << "\na=" << c.a << "\nb=" << c.b
     << "\ngrading=" << to_string(c.grading) << "\ngrade_depth=" << c.grade_depth << "\ntol=" << c.tol
     << "\nbracket_tol=" << c.bracket_tol << "\nmax_sweeps=" << c.max_sweeps << "\nmax_restarts=" << c.max_restarts
     << "\nmultistart=" << c.multistart << "\ninit=" << c.init << "\nseed=" << c.seed << "\ng=" << c.g
     << "\nv=" << c.v << "\neps=" << c.eps << "\nkernel_cases=" << c.kernel_cases
     << "\nformat=" << (c.format == Format::csv ? "csv" : "json") << '\n';
  if (!c.out.empty()) os << "out=" << c.out << '\n';
  return os.str();
}

}  // namespace nwidth
