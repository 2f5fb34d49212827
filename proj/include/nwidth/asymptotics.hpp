#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "nwidth/error.hpp"
#include "nwidth/exponents.hpp"
#include "nwidth/grid.hpp"
#include "nwidth/weights.hpp"

namespace nwidth {

// Samples the pair (g, v) after checking the hypotheses of the
// slowly-varying asymptotics: matched powers, the window for beta_v and a
// positive log excess.
template <typename Scalar = double>
std::pair<GridFunction<Scalar>, GridFunction<Scalar>> make_weights(const PowerLogWeight& gw,
                                                                   const PowerLogWeight& vw,
                                                                   const ExponentSet& e,
                                                                   const GridPtr<Scalar>& grid) {
  const double target = e.r + 1 / e.q - 1 / e.p;
  if (std::abs(gw.beta + vw.beta - target) > 1e-12)
    throw Error(ErrorKind::hypothesis, "beta_g + beta_v must equal r + 1/q - 1/p");
  const double lo = 1 / e.q + e.k - 1, hi = 1 / e.q + e.k;
  if (!(vw.beta > lo && vw.beta < hi))
    throw Error(ErrorKind::hypothesis, "beta_v must lie in (1/q + k - 1, 1/q + k)");
  if (!(gw.alpha + vw.alpha > std::max(0.0, 1 / e.q - 1 / e.p)))
    throw Error(ErrorKind::hypothesis, "alpha_g + alpha_v must exceed (1/q - 1/p)_+");
  if (grid->a() < 0 || double(grid->b()) > std::exp(-1.0) * (1 + 1e-12))
    throw Error(ErrorKind::hypothesis, "power-log weights need a grid inside [0, 1/e]");
  auto g = WeightSpec::power_log(gw).sample(grid);
  auto v = WeightSpec::power_log(vw).sample(grid);
  return {std::move(g), std::move(v)};
}

struct KappaNorm {
  bool finite = false;
  double value = 0;
};

// ||g v||_{L_kappa} by quadrature on the grid of the samples.
template <typename Scalar>
KappaNorm kappa_norm(const GridFunction<Scalar>& g, const GridFunction<Scalar>& v, const ExponentSet& e) {
  const auto gv = (g * v).values();
  const auto& w = g.grid()->weights();
  double s = 0;
  for (Eigen::Index i = 0; i < gv.size(); ++i) s += double(w[i]) * std::pow(std::abs(double(gv[i])), e.kappa);
  const double value = std::pow(s, 1 / e.kappa);
  return {std::isfinite(value), value};
}

// ||g v||_{L_kappa} on (a, b) with divergence detection at the ends.
inline KappaNorm kappa_norm(const WeightSpec& g, const WeightSpec& v, const ExponentSet& e, double a, double b) {
  auto I = improper_integral([&](double s) { return std::pow(std::abs(g(s) * v(s)), e.kappa); }, a, b);
  if (!I.finite) return {false, I.value};
  return {true, std::pow(I.value, 1 / e.kappa)};
}

enum class Regime { super, critical_plain, sub };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::super: return "super";
    case Regime::critical_plain: return "critical_plain";
    case Regime::sub: return "sub";
  }
  return "";
}

struct RegimeInfo {
  Regime regime = Regime::super;
  double alpha = 0;     // alpha_g + alpha_v
  double gamma = 0;     // total exponent of rho
  double boundary = 0;  // r + 1/q - 1/p
};

inline RegimeInfo classify_regime(double alpha, double gamma, const ExponentSet& e) {
  RegimeInfo info{Regime::super, alpha, gamma, e.r + 1 / e.q - 1 / e.p};
  if (std::abs(alpha - info.boundary) <= 1e-12) {
    if (gamma != 0) throw Error(ErrorKind::unsupported, "boundary regime unsupported");
    info.regime = Regime::critical_plain;
  } else {
    info.regime = alpha > info.boundary ? Regime::super : Regime::sub;
  }
  return info;
}

inline RegimeInfo classify_regime(const PowerLogWeight& g, const PowerLogWeight& v, const ExponentSet& e) {
  return classify_regime(g.alpha + v.alpha, g.gamma + v.gamma, e);
}

// Order of theta_n up to a constant factor.
inline double predict_order(int n, const RegimeInfo& info, const ExponentSet& e) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "predict_order: n must be positive");
  switch (info.regime) {
    case Regime::super: return std::pow(double(n), e.r);
    case Regime::critical_plain:
      if (n < 2) throw Error(ErrorKind::invalid_argument, "predict_order: critical order needs n >= 2");
      return std::pow(double(n), e.r) * std::pow(std::log(double(n)), -info.boundary);
    case Regime::sub:
      return std::pow(double(n), info.alpha - 1 / e.q + 1 / e.p) /
             std::pow(1 + std::log(double(n)), info.gamma);
  }
  return 0;
}

// Constant of the periodic problem on the unit period.
inline double lambda_rqp(int r, double p, double q) {
  if (p != 2 || q != 2) throw Error(ErrorKind::unsupported, "lambda_rqp is only available for p = q = 2");
  return std::pow(2 * std::numbers::pi, r);
}

struct Level {
  int n = 0;
  double theta = 0;
};

// Least-squares slope of log theta against log n over n in [n_lo, n_hi].
inline double loglog_slope(const std::vector<Level>& levels, int n_lo, int n_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& l : levels) {
    if (l.n < std::max(n_lo, 1) || l.n > n_hi) continue;
    const double x = std::log(double(l.n)), y = std::log(l.theta);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw Error(ErrorKind::insufficient_data, "slope needs at least two levels with n >= 1");
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct AsymptoticReport {
  double slope = 0;
  int fit_from = 0;
  int fit_to = 0;
  std::vector<int> n;
  std::vector<double> scaled;  // n^r / theta_n
  bool finite_positive = false;
  bool stabilizing = false;
  std::optional<double> lambda;
  std::optional<double> predicted_limit;  // ||gv||_kappa / lambda
};

inline AsymptoticReport asymptotic_report(std::vector<Level> levels, const ExponentSet& e,
                                          std::optional<KappaNorm> gv = std::nullopt) {
  std::erase_if(levels, [](const Level& l) { return l.n < 1; });
  std::sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) { return a.n < b.n; });
  if (levels.size() < 4) throw Error(ErrorKind::insufficient_data, "asymptotic report needs at least 4 levels with n >= 1");
  AsymptoticReport rep;
  const size_t half = levels.size() / 2;
  rep.fit_from = levels[half].n;
  rep.fit_to = levels.back().n;
  rep.slope = loglog_slope(levels, rep.fit_from, rep.fit_to);
  rep.finite_positive = true;
  for (const auto& l : levels) {
    rep.n.push_back(l.n);
    rep.scaled.push_back(std::pow(double(l.n), e.r) / l.theta);
    rep.finite_positive = rep.finite_positive && std::isfinite(rep.scaled.back()) && rep.scaled.back() > 0;
  }
  // Successive changes over the fitted half shrink in magnitude.
  rep.stabilizing = rep.finite_positive;
  for (size_t i = half + 2; i < rep.scaled.size(); ++i) {
    const double d1 = std::abs(rep.scaled[i] - rep.scaled[i - 1]);
    const double d0 = std::abs(rep.scaled[i - 1] - rep.scaled[i - 2]);
    rep.stabilizing = rep.stabilizing && d1 <= d0 * (1 + 1e-9);
  }
  if (e.is_hilbert()) {
    rep.lambda = lambda_rqp(e.r, e.p, e.q);
    if (gv && gv->finite) rep.predicted_limit = gv->value / *rep.lambda;
  }
  return rep;
}

}  // namespace nwidth
