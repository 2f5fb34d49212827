#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nwidth/exponents.hpp"
#include "nwidth/weights.hpp"

namespace nwidth {

struct AdmissibilityCondition {
  std::string name;
  double norm = 0;
  bool finite = false;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityCondition> conditions;
  bool admissible = false;
};

// The four integrability conditions on (g, v) over [a, b], each on the
// interval that stays eps away from the opposite end.
inline AdmissibilityReport check_admissibility(const ExponentSet& e, const WeightSpec& g, const WeightSpec& v,
                                               double a, double b, double eps) {
  if (!(eps > 0) || !(eps < (b - a) / 2))
    throw Error(ErrorKind::invalid_argument, "admissibility: eps must lie in (0, (b-a)/2)");
  AdmissibilityReport report;
  auto add = [&](std::string name, auto f, double lo, double hi, double power) {
    auto I = improper_integral([&](double s) { return std::pow(std::abs(f(s)), power); }, lo, hi);
    report.conditions.push_back({std::move(name), I.finite ? std::pow(I.value, 1 / power) : I.value, I.finite});
  };
  add("(s-a)^(r-k) g in L_p' on (a, b-eps]", [&](double s) { return std::pow(s - a, e.r - e.k) * g(s); }, a,
      b - eps, e.p_dual);
  add("g in L_p' on [a+eps, b)", [&](double s) { return g(s); }, a + eps, b, e.p_dual);
  add("(s-a)^k v in L_q on (a, b-eps]", [&](double s) { return std::pow(s - a, e.k) * v(s); }, a, b - eps, e.q);
  add("v in L_q on [a+eps, b)", [&](double s) { return v(s); }, a + eps, b, e.q);
  report.admissible = true;
  for (const auto& c : report.conditions) report.admissible = report.admissible && c.finite;
  return report;
}

}  // namespace nwidth
