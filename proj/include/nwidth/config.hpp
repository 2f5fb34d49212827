#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "nwidth/grid.hpp"
#include "nwidth/weights.hpp"

namespace nwidth {

enum class Command { widths, iterate, kernel_test, oracle_compare, asymptotics, admissibility };

const std::vector<std::string>& command_names();
Command parse_command(const std::string& s);
const char* to_string(Command c);

enum class Format { csv, json };

struct RunConfig {
  Command command = Command::widths;
  int r = 2;
  int k = 1;
  double p = 2;
  double q = 2;
  int n_max = 3;
  int level = 1;  // iterate
  int grid_panels = 64;
  int points_per_panel = 8;
  double a = 0;
  double b = 1;
  Grading grading = Grading::uniform;
  double grade_depth = 23;
  double tol = 1e-8;
  double bracket_tol = 1e-6;
  int max_sweeps = 500;
  int max_restarts = 50;
  int multistart = 1;
  std::string init = "continuation";
  std::uint64_t seed = 42;
  std::string g = "const:1";  // "random" draws a smooth weight from the seed
  std::string v = "const:1";
  double eps = 1e-3;       // admissibility
  int kernel_cases = 200;  // kernel-test, per (r, k)
  std::string out;
  Format format = Format::csv;
};

// key=value lines, '#' starts a comment. Overrides are applied after the
// text, with the same keys.
RunConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides = {});

// Echo of all keys, in the config file syntax.
std::string to_config_text(const RunConfig& c);

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 verification failed, 3 computation error
  std::string data;   // CSV or JSON body
  std::string summary;
};

RunOutcome run(const RunConfig& c);

}  // namespace nwidth
