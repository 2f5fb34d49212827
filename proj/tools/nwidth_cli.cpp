#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nwidth/config.hpp"
#include "nwidth/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral numbers and n-widths of weighted Sobolev classes"};
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);

  std::string command, out, format;
  int r = 0, k = 0, n_max = -1, panels = 0;
  double p = 0, q = 0, tol = 0;
  long long seed = -1;
  app.add_option("--command", command, "widths | iterate | kernel-test | oracle-compare | asymptotics | admissibility");
  app.add_option("--r", r, "smoothness order");
  app.add_option("--k", k, "split index, 1 <= k <= r-1");
  app.add_option("--p", p, "exponent of the class");
  app.add_option("--q", q, "exponent of the target space");
  app.add_option("--n-max", n_max, "largest level");
  app.add_option("--grid-panels", panels, "number of grid panels");
  app.add_option("--tol", tol, "relative tolerance on theta");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "output path; the summary goes to <out>.summary.json");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--set", sets, "extra key=value overrides");
  CLI11_PARSE(app, argc, argv);

  auto put = [&](const char* key, const std::string& value) { overrides[key] = value; };
  auto put_num = [&](const char* key, double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    overrides[key] = os.str();
  };
  if (app.count("--command")) put("command", command);
  if (app.count("--r")) put("r", std::to_string(r));
  if (app.count("--k")) put("k", std::to_string(k));
  if (app.count("--p")) put_num("p", p);
  if (app.count("--q")) put_num("q", q);
  if (app.count("--n-max")) put("n_max", std::to_string(n_max));
  if (app.count("--grid-panels")) put("grid_panels", std::to_string(panels));
  if (app.count("--tol")) put_num("tol", tol);
  if (app.count("--seed")) put("seed", std::to_string(seed));
  if (app.count("--out")) put("out", out);
  if (app.count("--format")) put("format", format);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "--set expects key=value, got '" << s << "'\n";
      return 2;
    }
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }

  std::string text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }

  nwidth::RunConfig cfg;
  try {
    cfg = nwidth::parse_config(text, overrides);
  } catch (const nwidth::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    nlohmann::json j{{"status", "error"}, {"exit_code", 2}, {"error", {{"kind", "parse"}, {"message", e.what()}}}};
    const std::string summary = j.dump(2) + "\n";
    auto it = overrides.find("out");
    if (it != overrides.end() && !it->second.empty()) std::ofstream(it->second + ".summary.json") << summary;
    else std::cerr << summary;
    return 2;
  }

  const auto result = nwidth::run(cfg);
  if (cfg.out.empty()) {
    std::cout << result.data;
    std::cerr << result.summary;
  } else {
    std::ofstream(cfg.out) << result.data;
    std::ofstream(cfg.out + ".summary.json") << result.summary;
  }
  return result.exit_code;
}
