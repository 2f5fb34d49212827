#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "nwidth/admissibility.hpp"
#include "nwidth/asymptotics.hpp"
#include "nwidth/buslaev.hpp"
#include "nwidth/config.hpp"
#include "nwidth/kernel_properties.hpp"

namespace nwidth {

namespace {

using nlohmann::json;

struct Context {
  RunConfig cfg;
  ExponentSet e;
  GridPtr<double> grid;
  WeightSpec g_spec, v_spec;
  GridFunction<double> g, v;
  SolveOptions opt;
};

WeightSpec weight_from(const std::string& s, std::mt19937_64& rng, double a, double b) {
  if (s == "random") return WeightSpec::random_smooth(rng, a, b);
  return WeightSpec::parse(s);
}

Context make_context(const RunConfig& c) {
  const auto e = ExponentSet::make(c.r, c.k, c.p, c.q);
  auto grid = Grid<double>::make(c.a, c.b, c.grid_panels, c.points_per_panel, c.grading, c.grade_depth);
  std::mt19937_64 rng(c.seed);
  auto gs = weight_from(c.g, rng, c.a, c.b);
  auto vs = weight_from(c.v, rng, c.a, c.b);
  auto g = gs.sample(grid);
  auto v = vs.sample(grid);
  SolveOptions o;
  o.tol = c.tol;
  o.bracket_tol = c.bracket_tol;
  o.max_sweeps = c.max_sweeps;
  o.max_restarts = c.max_restarts;
  o.multistart = c.multistart;
  o.seed = c.seed;
  o.init = parse_init_strategy(c.init);
  return {c, e, grid, gs, vs, g, v, o};
}

json diagnostics_json(const Diagnostics& d) {
  return {{"sweeps", d.sweeps},
          {"phases", d.phases},
          {"outer_iterations", d.outer_iterations},
          {"restarts", d.restarts},
          {"max_bracket_violation", d.max_bracket_violation},
          {"bracket_width", d.bracket_width},
          {"theta_change", d.theta_change},
          {"stationarity", d.stationarity}};
}

json verify_json(const VerifyReport& r) {
  return {{"residual_x", r.residual_x},         {"residual_y", r.residual_y},
          {"normalization", r.normalization},   {"sign_changes_x", r.sign_changes_x},
          {"sign_changes_y", r.sign_changes_y}, {"alternation", r.alternation},
          {"passed", r.passed}};
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// CSV body from rows of already formatted cells; JSON body as an array of
// objects keyed by the header.
std::string table(const RunConfig& c, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
  if (c.format == Format::json) {
    json arr = json::array();
    for (const auto& row : rows) {
      json o;
      for (size_t i = 0; i < header.size(); ++i) {
        char* end = nullptr;
        const double d = std::strtod(row[i].c_str(), &end);
        if (!row[i].empty() && end && *end == '\0') o[header[i]] = d;
        else o[header[i]] = row[i];
      }
      arr.push_back(o);
    }
    return arr.dump(2) + "\n";
  }
  std::ostringstream os;
  for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

int run_widths(const Context& x, json& results, std::string& data) {
  const auto w = compute_widths(x.cfg.n_max, x.e, x.g, x.v, x.opt);
  std::vector<std::vector<std::string>> rows;
  json levels = json::array();
  bool verified = w.strictly_decreasing;
  for (const auto& l : w.levels) {
    rows.push_back({std::to_string(l.n), num(l.theta), num(l.width), num(l.verify.residual_x),
                    num(l.verify.residual_y), std::to_string(l.verify.sign_changes_x)});
    levels.push_back({{"n", l.n},
                      {"theta", l.theta},
                      {"width", l.width},
                      {"xi", l.xi},
                      {"eta", l.eta},
                      {"verify", verify_json(l.verify)},
                      {"diagnostics", diagnostics_json(l.diag)}});
    verified = verified && l.verify.passed;
  }
  data = table(x.cfg, {"n", "theta", "width", "residual_x", "residual_y", "sign_changes"}, rows);
  results["levels"] = levels;
  results["strictly_decreasing"] = w.strictly_decreasing;
  json failed = json::array();
  if (!w.strictly_decreasing) failed.push_back("strict decrease of widths");
  for (const auto& l : w.levels)
    if (!l.verify.passed) failed.push_back("verification of level " + std::to_string(l.n));
  if (!failed.empty()) results["failed_invariants"] = failed;
  if (w.failure) {
    results["failure"] = {{"kind", to_string(w.failure_kind)}, {"message", *w.failure}};
    return 3;
  }
  return verified ? 0 : 1;
}

int run_iterate(const Context& x, json& results, std::string& data) {
  auto o = x.opt;
  o.record_trace = true;
  const auto t = solve_level(x.cfg.level, x.e, x.g, x.v, o);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : t.trace)
    rows.push_back({std::to_string(r.phase), std::to_string(r.sweep), num(r.theta), num(r.bracket_lo),
                    num(r.bracket_hi), std::to_string(r.sign_changes)});
  data = table(x.cfg, {"phase", "sweep", "theta", "bracket_lo", "bracket_hi", "sign_changes"}, rows);
  const auto rep = verify_triple(t, x.e, x.g, x.v);
  results = {{"n", t.n},
             {"theta", t.theta},
             {"width", 1 / t.theta},
             {"xi", t.xi},
             {"eta", t.eta},
             {"verify", verify_json(rep)},
             {"diagnostics", diagnostics_json(t.diag)}};
  return rep.passed ? 0 : 1;
}

int run_kernel_test(const Context& x, json& results, std::string& data) {
  const auto tallies = run_kernel_properties(x.cfg.kernel_cases, x.cfg.seed);
  std::vector<std::vector<std::string>> rows;
  int failed = 0;
  json names = json::array();
  for (const auto& t : tallies) {
    if (t.passed != t.cases) names.push_back(t.property + " r=" + std::to_string(t.r) + " k=" + std::to_string(t.k));
    rows.push_back({t.property, std::to_string(t.r), std::to_string(t.k), std::to_string(t.cases),
                    std::to_string(t.passed), std::to_string(t.cases - t.passed), num(t.worst)});
    failed += t.cases - t.passed;
  }
  data = table(x.cfg, {"property", "r", "k", "cases", "passed", "failed", "worst"}, rows);
  results["failed"] = failed;
  if (failed) results["failed_invariants"] = names;
  return failed ? 1 : 0;
}

int run_oracle_compare(const Context& x, json& results, std::string& data) {
  const auto w = compute_widths(x.cfg.n_max, x.e, x.g, x.v, x.opt);
  const auto s = svd_oracle(x.e, x.g, x.v);
  std::vector<std::vector<std::string>> rows;
  double worst = 0;
  for (const auto& l : w.levels) {
    const double ti = 1 / l.theta;
    const double sigma = l.n < s.size() ? s[l.n] : NAN;
    const double gap = std::abs(ti - sigma) / sigma;
    worst = std::max(worst, gap);
    rows.push_back({std::to_string(l.n), num(ti), num(sigma), num(gap)});
  }
  data = table(x.cfg, {"n", "theta_inv", "sigma", "rel_gap"}, rows);
  results["max_rel_gap"] = worst;
  if (!(worst <= 1e-3)) results["failed_invariants"] = {"relative gap to singular values above 1e-3"};
  results["g"] = x.g_spec.to_string();
  results["v"] = x.v_spec.to_string();
  if (w.failure) {
    results["failure"] = {{"kind", to_string(w.failure_kind)}, {"message", *w.failure}};
    return 3;
  }
  return worst <= 1e-3 ? 0 : 1;
}

int run_asymptotics(const Context& x, json& results, std::string& data) {
  const auto w = compute_widths(x.cfg.n_max, x.e, x.g, x.v, x.opt);
  std::vector<Level> lv;
  for (const auto& l : w.levels) lv.push_back({l.n, l.theta});
  const auto gv = kappa_norm(x.g_spec, x.v_spec, x.e, x.cfg.a, x.cfg.b);
  std::optional<RegimeInfo> regime;
  if (x.g_spec.kind() == WeightSpec::Kind::power_log && x.v_spec.kind() == WeightSpec::Kind::power_log)
    regime = classify_regime(x.g_spec.power_log_params(), x.v_spec.power_log_params(), x.e);
  const auto rep = asymptotic_report(lv, x.e, gv);
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < rep.n.size(); ++i) {
    const int n = rep.n[i];
    std::string pred;
    if (regime && (regime->regime != Regime::critical_plain || n >= 2)) pred = num(predict_order(n, *regime, x.e));
    rows.push_back({std::to_string(n), num(lv[i + (lv.size() - rep.n.size())].theta), num(rep.scaled[i]), pred});
  }
  data = table(x.cfg, {"n", "theta", "scaled", "predicted_order"}, rows);
  results = {{"slope", rep.slope},
             {"fit_from", rep.fit_from},
             {"fit_to", rep.fit_to},
             {"finite_positive", rep.finite_positive},
             {"stabilizing", rep.stabilizing},
             {"kappa_norm_finite", gv.finite},
             {"kappa_norm", gv.finite ? json(gv.value) : json(nullptr)}};
  if (regime) results["regime"] = to_string(regime->regime);
  if (rep.lambda) results["lambda"] = *rep.lambda;
  if (rep.predicted_limit) results["predicted_limit"] = *rep.predicted_limit;
  if (w.failure) {
    results["failure"] = {{"kind", to_string(w.failure_kind)}, {"message", *w.failure}};
    return 3;
  }
  return 0;
}

int run_admissibility(const Context& x, json& results, std::string& data) {
  const auto rep = check_admissibility(x.e, x.g_spec, x.v_spec, x.cfg.a, x.cfg.b, x.cfg.eps);
  const auto gv = kappa_norm(x.g_spec, x.v_spec, x.e, x.cfg.a, x.cfg.b);
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : rep.conditions) rows.push_back({"\"" + c.name + "\"", num(c.norm), c.finite ? "1" : "0"});
  rows.push_back({"\"gv in L_kappa\"", num(gv.value), gv.finite ? "1" : "0"});
  data = table(x.cfg, {"condition", "norm", "finite"}, rows);
  json failed = json::array();
  for (const auto& c : rep.conditions)
    if (!c.finite) failed.push_back(c.name);
  results = {{"admissible", rep.admissible}, {"kappa_norm_finite", gv.finite}, {"failed_invariants", failed}};
  return rep.admissible ? 0 : 1;
}

}  // namespace

RunOutcome run(const RunConfig& c) {
  json summary;
  summary["command"] = to_string(c.command);
  summary["config"] = to_config_text(c);
  json results = json::object();
  RunOutcome out;
  try {
    const auto ctx = make_context(c);
    switch (c.command) {
      case Command::widths: out.exit_code = run_widths(ctx, results, out.data); break;
      case Command::iterate: out.exit_code = run_iterate(ctx, results, out.data); break;
      case Command::kernel_test: out.exit_code = run_kernel_test(ctx, results, out.data); break;
      case Command::oracle_compare: out.exit_code = run_oracle_compare(ctx, results, out.data); break;
      case Command::asymptotics: out.exit_code = run_asymptotics(ctx, results, out.data); break;
      case Command::admissibility: out.exit_code = run_admissibility(ctx, results, out.data); break;
    }
  } catch (const Error& e) {
    out.exit_code = e.kind() == ErrorKind::parse ? 2 : 3;
    summary["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
  }
  summary["results"] = results;
  summary["exit_code"] = out.exit_code;
  summary["status"] = out.exit_code == 0 ? "ok" : out.exit_code == 1 ? "verification_failed" : "error";
  out.summary = summary.dump(2) + "\n";
  return out;
}

}  // namespace nwidth
