#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "nwidth/error.hpp"
#include "nwidth/exponents.hpp"
#include "nwidth/grid.hpp"
#include "nwidth/kernels.hpp"
#include "nwidth/rl_operators.hpp"

namespace nwidth {

enum class InitStrategy { continuation, mass_quantiles, equispaced, perturbed };

inline const char* to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::continuation: return "continuation";
    case InitStrategy::mass_quantiles: return "mass_quantiles";
    case InitStrategy::equispaced: return "equispaced";
    case InitStrategy::perturbed: return "perturbed";
  }
  return "";
}

inline InitStrategy parse_init_strategy(const std::string& s) {
  if (s == "continuation") return InitStrategy::continuation;
  if (s == "mass_quantiles") return InitStrategy::mass_quantiles;
  if (s == "equispaced") return InitStrategy::equispaced;
  if (s == "perturbed") return InitStrategy::perturbed;
  throw Error(ErrorKind::parse, "unknown init strategy '" + s + "'");
}

struct SolveOptions {
  double tol = 1e-8;                  // relative change of theta between sweeps
  double bracket_tol = 1e-6;          // relative width of the norm bracket
  double inner_tol = 1e-11;           // relative change of phi between sweeps
  double stationarity_tol = 1e-10;    // scaled node multipliers, target
  double accept_stationarity = 1e-7;  // scaled node multipliers, accepted
  double sign_tol = 1e-8;
  int max_sweeps = 500;
  int max_outer = 100;
  int max_restarts = 50;
  int multistart = 1;
  std::uint64_t seed = 42;
  InitStrategy init = InitStrategy::continuation;
  bool record_trace = false;
};

struct TraceRecord {
  int phase = 0;
  int sweep = 0;
  double theta = 0;
  double bracket_lo = 0;
  double bracket_hi = 0;
  int sign_changes = 0;
};

struct Diagnostics {
  long sweeps = 0;
  int phases = 0;
  int outer_iterations = 0;
  int restarts = 0;
  double max_bracket_violation = 0;  // relative to the upper bracket
  double bracket_width = 0;          // relative, last sweep of the accepted phase
  double theta_change = 0;           // relative, last sweep of the accepted phase
  double stationarity = 0;
  bool converged = false;
};

template <typename Scalar = double>
struct SpectralTriple {
  int n = 0;
  Scalar theta = 0;
  GridFunction<Scalar> x;
  GridFunction<Scalar> y;
  GridFunction<Scalar> phi;  // (g y)_(p'), so x = I_k Itilde_(r-k)(g phi)
  std::vector<Scalar> xi;    // sign changes of x
  std::vector<Scalar> eta;   // sign changes of y
  int sign_changes_x = -1;   // -1: identically zero
  int sign_changes_y = -1;
  Diagnostics diag;
  std::vector<TraceRecord> trace;
};

template <typename Scalar = double>
struct IterationState {
  int m = 0;
  GridFunction<Scalar> x;
  GridFunction<Scalar> y;
  GridFunction<Scalar> phi;
  Scalar theta = 0;
  Scalar bracket_lo = 0;
  Scalar bracket_hi = 0;
};

// +1 on (a, xi_1), alternating across the nodes.
template <typename Scalar>
GridFunction<Scalar> init_u(const GridPtr<Scalar>& grid, const std::vector<Scalar>& nodes) {
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (!(nodes[i] > grid->a() && nodes[i] < grid->b()))
      throw Error(ErrorKind::invalid_argument, "init_u: node outside (a, b)");
    if (i && !(nodes[i] > nodes[i - 1])) throw Error(ErrorKind::invalid_argument, "init_u: nodes not increasing");
  }
  return GridFunction<Scalar>::sample(grid, [&](Scalar t) {
    const auto c = std::upper_bound(nodes.begin(), nodes.end(), t) - nodes.begin();
    return c % 2 ? Scalar(-1) : Scalar(1);
  });
}

namespace detail {

template <typename Scalar>
class Engine {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Phase {
    Scalar theta = 0;
    Vec x, y, phi, lam_scaled;
    Scalar lo = 0, hi = 0, dtheta = 0;
    bool converged = false;
  };

  Engine(const ExponentSet& e, const GridFunction<Scalar>& g, const GridFunction<Scalar>& v, const SolveOptions& o)
      : e_(e), grid_(g.grid()), g_(g.values()), v_(v.values()), opt_(o) {
    if (v.grid() != grid_) throw Error(ErrorKind::structural, "weights live on different grids");
    if (!(g_.minCoeff() > 0) || !(v_.minCoeff() > 0))
      throw Error(ErrorKind::invalid_argument, "weights must be positive on the grid");
    pd_ = Scalar(e.p_dual);
    p_ = Scalar(e.p);
    q_ = Scalar(e.q);
    norm_factor_ = Scalar(factorial(e.k - 1) * factorial(e.r - e.k - 1));
  }

  const GridPtr<Scalar>& grid() const { return grid_; }
  const Vec& v() const { return v_; }
  const std::vector<Scalar>& nodes() const { return xi_; }
  Scalar q() const { return q_; }

  Vec x_of(const Vec& phi) const { return composite(*grid_, e_.r, e_.k, &g_, static_cast<const Vec*>(nullptr), phi); }

  Vec Y_of(const Vec& x) const {
    const Vec vx = v_.cwiseProduct(x);
    return composite(*grid_, e_.r, e_.r - e_.k, &v_, static_cast<const Vec*>(nullptr), duality_map(vx, q_));
  }

  Scalar norm(const Vec& f, Scalar p) const { return lp_norm<Scalar>(grid_->weights(), f, p); }

  void set_nodes(const std::vector<Scalar>& xi) {
    xi_ = xi;
    const auto n = static_cast<Eigen::Index>(xi.size());
    const auto& t = grid_->nodes();
    h_.resize(t.size(), n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < t.size(); ++j) h_(j, i) = kernel_H<Scalar>(xi[i], t[j], e_.r, e_.k, grid_->a()) / norm_factor_;
    l_ = g_.asDiagonal() * h_;
    lnorm_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) lnorm_[i] = norm(Vec(l_.col(i)), pd_);
    if (n) {
      wl_ = grid_->weights().asDiagonal() * l_;
      normal_.compute(Mat(l_.transpose() * wl_));
    }
  }

  // argmin_lam int |w - sum lam_i l_i|^p'
  Vec solve_multipliers(const Vec& w, Vec lam) const {
    const auto n = l_.cols();
    if (n == 0) return lam;
    const auto& W = grid_->weights();
    auto F = [&](const Vec& l) {
      const Vec res = w - l_ * l;
      const Scalar m = res.cwiseAbs().maxCoeff();
      if (m == 0) return Scalar(0);
      Scalar s = 0;
      for (Eigen::Index i = 0; i < res.size(); ++i) s += W[i] * std::pow(std::abs(res[i]) / m, pd_);
      return std::pow(m, pd_) * s;
    };
    const Vec ls = normal_.solve(Vec(wl_.transpose() * w));
    if (pd_ == 2) return ls;
    // the warm start may belong to a differently scaled w; keep the better one
    Scalar f = F(lam);
    if (const Scalar fls = F(ls); !(f <= fls)) {
      lam = ls;
      f = fls;
    }
    for (int it = 0; it < 200; ++it) {
      const Vec res = w - l_ * lam;
      const Scalar rmax = res.cwiseAbs().maxCoeff();
      if (rmax == 0) break;
      Vec d1(res.size()), d2(res.size());
      for (Eigen::Index i = 0; i < res.size(); ++i) {
        const Scalar a = std::max(std::abs(res[i]), Scalar(1e-12) * rmax);
        d1[i] = W[i] * std::copysign(std::pow(std::abs(res[i]), pd_ - 1), res[i]);
        d2[i] = W[i] * std::pow(a, pd_ - 2);
      }
      const Vec grad = -pd_ * (l_.transpose() * d1);
      // first-order condition int (res)_(p') l_i = 0, relative to its Hoelder bound
      const Scalar rn = std::pow(res.cwiseAbs().maxCoeff(), pd_ - 1);
      bool stationary = true;
      for (Eigen::Index i = 0; i < n; ++i)
        stationary = stationary && std::abs(grad[i]) <= Scalar(1e-13) * pd_ * rn * l_.col(i).cwiseAbs().maxCoeff();
      if (stationary) break;
      const Mat hess = pd_ * (pd_ - 1) * (l_.transpose() * d2.asDiagonal() * l_);
      Vec d = -hess.ldlt().solve(grad);
      if (!d.allFinite()) break;
      Scalar s = 1;
      const Scalar slope = grad.dot(d);
      Scalar fn = f;
      // near the minimum F stops resolving the decrease; then accept steps
      // that shrink the gradient without raising F beyond round-off
      const Scalar gmax = grad.cwiseAbs().maxCoeff();
      auto gradient_at = [&](const Vec& l) {
        const Vec r = w - l_ * l;
        return Vec(l_.transpose() * (W.cwiseProduct(duality_map(r, pd_))));
      };
      while (s > Scalar(1e-12)) {
        const Vec trial = lam + s * d;
        fn = F(trial);
        if (fn <= f + Scalar(1e-4) * s * slope) break;
        if (fn <= f * (1 + Scalar(1e-13)) && pd_ * gradient_at(trial).cwiseAbs().maxCoeff() < gmax / 2) break;
        s /= 2;
      }
      if (s <= Scalar(1e-12)) break;
      lam += s * d;
      f = fn;
    }
    return lam;
  }

  Vec u_pattern() const {
    const auto& t = grid_->nodes();
    Vec u(t.size());
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      const auto c = std::upper_bound(xi_.begin(), xi_.end(), t[j]) - xi_.begin();
      u[j] = c % 2 ? Scalar(-1) : Scalar(1);
    }
    return u;
  }

  // Iteration restricted to {phi : x(xi_i) = 0}, started from the projection
  // of phi_start.
  Phase run_phase(const Vec& phi_start, Diagnostics& diag, std::vector<TraceRecord>* trace) {
    const int phase_id = diag.phases++;
    const auto n = l_.cols();
    const Vec w0 = duality_map(phi_start, p_);
    Vec lam = Vec::Zero(n);
    Vec phi;
    if (n) {
      lam = solve_multipliers(w0, lam);
      phi = duality_map(Vec(w0 - l_ * lam), pd_);
    } else {
      phi = phi_start;
    }
    const Scalar phin = norm(phi, p_);
    if (!(phin > 0) || !std::isfinite(double(phin)))
      throw Error(ErrorKind::invalid_argument, "start function vanishes on the constraint set");
    phi /= phin;
    Vec x = x_of(phi);

    Phase out;
    Scalar theta_prev = std::numeric_limits<Scalar>::quiet_NaN();
    Scalar dphi_prev = std::numeric_limits<Scalar>::infinity();
    Vec res;
    Scalar nr = 0;
    for (int m = 1; m <= opt_.max_sweeps; ++m) {
      const Vec Y = Y_of(x);
      const Vec w = g_.cwiseProduct(Y);
      lam = solve_multipliers(w, lam);
      res = n ? Vec(w - l_ * lam) : w;
      nr = norm(res, pd_);
      if (!(nr > 0) || !std::isfinite(double(nr)))
        throw Error(ErrorKind::nonfinite, "operator output vanished or is not finite");
      const Scalar theta = std::pow(nr, -1 / q_);
      const Scalar tq = 1 / nr;
      Vec y = n ? Vec(tq * (Y - h_ * lam)) : Vec(tq * Y);
      Vec phi_next = duality_map(Vec(tq * res), pd_);
      const Scalar dphi = (phi_next - phi).cwiseAbs().maxCoeff() / phi_next.cwiseAbs().maxCoeff();
      Vec x_next = x_of(phi_next);
      const Scalar lo = norm(Vec(v_.cwiseProduct(x)), q_);
      const Scalar hi = norm(Vec(v_.cwiseProduct(x_next)), q_);
      const Scalar inv = 1 / theta;
      const Scalar viol = std::max({Scalar(0), lo - inv, inv - hi}) / hi;
      diag.max_bracket_violation = std::max(diag.max_bracket_violation, double(viol));
      ++diag.sweeps;
      if (trace) {
        const auto sc = count_sign_changes(x_next, opt_.sign_tol);
        trace->push_back({phase_id, m, double(theta), double(lo), double(hi), sc ? *sc : -1});
      }
      x = std::move(x_next);
      phi = std::move(phi_next);
      out.y = std::move(y);
      out.theta = theta;
      out.lo = lo;
      out.hi = hi;
      out.dtheta = std::isnan(double(theta_prev)) ? Scalar(1) : std::abs(theta - theta_prev) / theta;
      theta_prev = theta;
      // remaining error of a linearly contracting iteration: dphi rho / (1 - rho)
      const Scalar rho = std::min(dphi / dphi_prev, Scalar(0.999));
      dphi_prev = dphi;
      const Scalar err = rho > 0 ? dphi * rho / (1 - rho) : dphi;
      if (m >= 3 && err <= opt_.inner_tol && out.dtheta <= opt_.tol && (hi - lo) <= opt_.bracket_tol * hi) {
        out.converged = true;
        break;
      }
    }
    const Vec u = u_pattern();
    const Scalar orient = grid_->weights().dot(Vec(u.cwiseProduct(v_).cwiseProduct(x)));
    const Scalar s = orient < 0 ? Scalar(-1) : Scalar(1);
    out.x = s * x;
    out.y *= s;
    out.phi = s * phi;
    out.lam_scaled = Vec(n);
    for (Eigen::Index i = 0; i < n; ++i) out.lam_scaled[i] = s * lam[i] * lnorm_[i] / nr;
    return out;
  }

 private:
  ExponentSet e_;
  GridPtr<Scalar> grid_;
  Vec g_, v_;
  SolveOptions opt_;
  Scalar p_ = 2, q_ = 2, pd_ = 2, norm_factor_ = 1;
  std::vector<Scalar> xi_;
  Mat h_, l_, wl_;
  Vec lnorm_;
  Eigen::LDLT<Mat> normal_;
};

template <typename Scalar>
bool strictly_inside(const std::vector<Scalar>& z, Scalar lo, Scalar hi) {
  for (size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] > (i ? z[i - 1] : lo))) return false;
  }
  return z.empty() || z.back() < hi;
}

template <typename Scalar>
std::vector<Scalar> from_parameters(const Grid<Scalar>& grid, const std::vector<Scalar>& z) {
  std::vector<Scalar> t(z.size());
  for (size_t i = 0; i < z.size(); ++i) t[i] = grid.from_parameter(z[i]);
  return t;
}

template <typename Scalar>
struct LevelOutcome {
  std::optional<SpectralTriple<Scalar>> triple;
  ErrorKind failure = ErrorKind::no_convergence;
  std::string message;
};

// Outer Newton on node positions: drives the scaled multipliers of the
// constraints x(xi_i) = 0 to zero while never letting theta decrease.
template <typename Scalar>
LevelOutcome<Scalar> solve_from_nodes(Engine<Scalar>& eng, int n, std::vector<Scalar> xi, const SolveOptions& opt,
                                      Diagnostics& diag) {
  using Vec = typename Engine<Scalar>::Vec;
  const auto& grid = *eng.grid();
  const Scalar zlo = grid.to_parameter(grid.nodes()[0]);
  const Scalar zhi = grid.to_parameter(grid.nodes()[grid.size() - 1]);
  std::vector<TraceRecord> trace;
  std::vector<TraceRecord>* tp = opt.record_trace ? &trace : nullptr;
  LevelOutcome<Scalar> out;

  if (static_cast<int>(xi.size()) != n) throw Error(ErrorKind::structural, "initial nodes do not match the level");
  std::vector<Scalar> z(n);
  for (int i = 0; i < n; ++i) z[i] = grid.to_parameter(xi[i]);
  if (!strictly_inside(z, zlo, zhi)) throw Error(ErrorKind::invalid_argument, "initial nodes not strictly inside the grid");

  eng.set_nodes(xi);
  auto P = eng.run_phase(init_u(eng.grid(), xi).values(), diag, tp);
  Scalar stat = n ? P.lam_scaled.cwiseAbs().maxCoeff() : Scalar(0);
  // below the acceptance level the multipliers stall at the inner-solve noise;
  // keep the best iterate and stop once it stops improving
  auto best_z = z;
  auto best_P = P;
  Scalar best_stat = stat;
  int stalled = 0;
  const Scalar h = Scalar(1e-6);
  for (int it = 0; it < opt.max_outer && n > 0 && stat > opt.stationarity_tol; ++it) {
    ++diag.outer_iterations;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> J(n, n);
    for (int j = 0; j < n; ++j) {
      auto zj = z;
      zj[j] += h;
      eng.set_nodes(from_parameters(grid, zj));
      const auto Pj = eng.run_phase(P.phi, diag, nullptr);
      J.col(j) = (Pj.lam_scaled - P.lam_scaled) / h;
    }
    Vec d = -J.partialPivLu().solve(P.lam_scaled);
    std::vector<Scalar> gap(n);
    for (int i = 0; i < n; ++i) {
      const Scalar left = z[i] - (i ? z[i - 1] : zlo);
      const Scalar right = (i + 1 < n ? z[i + 1] : zhi) - z[i];
      gap[i] = std::min(left, right);
    }
    bool accepted = false;
    std::vector<Scalar> z_new;
    typename Engine<Scalar>::Phase P_new;
    auto attempt = [&](const Vec& dir, Scalar s, Scalar accept_factor) {
      z_new = z;
      for (int i = 0; i < n; ++i) z_new[i] += s * dir[i];
      if (!strictly_inside(z_new, zlo, zhi)) return false;
      eng.set_nodes(from_parameters(grid, z_new));
      P_new = eng.run_phase(P.phi, diag, tp);
      return P_new.theta >= P.theta * accept_factor;
    };
    if (d.allFinite()) {
      for (int i = 0; i < n; ++i) d[i] = std::clamp(d[i], -gap[i] / 2, gap[i] / 2);
      for (Scalar s = 1; s > Scalar(1e-4) && !accepted; s /= 2) accepted = attempt(d, s, 1 - Scalar(1e-12));
    }
    if (!accepted) {
      // d theta / d xi_i has the sign of lam_i x'(xi_i); x'(xi_i) alternates
      // starting negative since the first lobe is positive.
      Vec dir(n);
      for (int i = 0; i < n; ++i) {
        const Scalar sx = i % 2 ? Scalar(1) : Scalar(-1);
        dir[i] = (P.lam_scaled[i] * sx > 0 ? 1 : -1) * gap[i];
      }
      for (Scalar s = Scalar(0.25); s > Scalar(1e-6) && !accepted; s /= 2) accepted = attempt(dir, s, 1);
    }
    if (!accepted) break;
    z = z_new;
    P = P_new;
    stat = P.lam_scaled.cwiseAbs().maxCoeff();
    if (stat < best_stat) {
      best_z = z;
      best_P = P;
      best_stat = stat;
      stalled = 0;
    } else if (best_stat <= opt.accept_stationarity && ++stalled >= 3) {
      break;
    }
  }
  if (best_stat < stat) {
    z = best_z;
    P = best_P;
    stat = best_stat;
  }
  xi = from_parameters(grid, z);
  eng.set_nodes(xi);
  diag.stationarity = double(stat);
  diag.bracket_width = double((P.hi - P.lo) / P.hi);
  diag.theta_change = double(P.dtheta);

  const auto gp = eng.grid();
  SpectralTriple<Scalar> t{n, P.theta, GridFunction<Scalar>(gp, P.x), GridFunction<Scalar>(gp, P.y),
                           GridFunction<Scalar>(gp, P.phi)};
  t.xi = sign_change_points(t.x, opt.sign_tol);
  t.eta = sign_change_points(t.y, opt.sign_tol);
  const auto sx = count_sign_changes(t.x, opt.sign_tol);
  const auto sy = count_sign_changes(t.y, opt.sign_tol);
  t.sign_changes_x = sx ? *sx : -1;
  t.sign_changes_y = sy ? *sy : -1;
  t.trace = std::move(trace);
  if (!P.converged || stat > opt.accept_stationarity) {
    out.failure = ErrorKind::no_convergence;
    out.message = "level " + std::to_string(n) + ": iteration did not converge (stationarity " +
                  std::to_string(double(stat)) + ")";
    return out;
  }
  if (t.sign_changes_x != n || t.sign_changes_y != n) {
    out.failure = ErrorKind::level_collapse;
    out.message = "level " + std::to_string(n) + ": converged to " + std::to_string(t.sign_changes_x) +
                  " sign changes";
    return out;
  }
  diag.converged = true;
  t.diag = diag;
  out.triple = std::move(t);
  return out;
}

// Mass centroids of |v x|^q over the lobes of a level n-1 solution, in the
// node coordinate of the grid.
template <typename Scalar>
std::vector<Scalar> lobe_centroids(const SpectralTriple<Scalar>& prev, const Engine<Scalar>& eng, Scalar q) {
  const auto& grid = *eng.grid();
  const auto& t = grid.nodes();
  const auto& W = grid.weights();
  std::vector<Scalar> cuts = prev.xi;
  const int lobes = static_cast<int>(cuts.size()) + 1;
  std::vector<Scalar> mass(lobes, 0), moment(lobes, 0);
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    const int l = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), t[j]) - cuts.begin());
    const Scalar m = W[j] * std::pow(std::abs(eng.v()[j] * prev.x[j]), q);
    mass[l] += m;
    moment[l] += m * grid.to_parameter(t[j]);
  }
  std::vector<Scalar> out(lobes);
  for (int l = 0; l < lobes; ++l) {
    if (!(mass[l] > 0)) throw Error(ErrorKind::level_collapse, "empty lobe in the previous level");
    out[l] = grid.from_parameter(moment[l] / mass[l]);
  }
  return out;
}

template <typename Scalar>
std::vector<Scalar> mass_quantiles(const SpectralTriple<Scalar>& level0, const Engine<Scalar>& eng, Scalar q, int n) {
  const auto& grid = *eng.grid();
  const auto& t = grid.nodes();
  const auto& W = grid.weights();
  std::vector<Scalar> cum(t.size());
  Scalar s = 0;
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    s += W[j] * std::pow(std::abs(eng.v()[j] * level0.x[j]), q);
    cum[j] = s;
  }
  std::vector<Scalar> out;
  for (int i = 1; i <= n; ++i) {
    const Scalar target = s * i / (n + 1);
    const auto j = std::lower_bound(cum.begin(), cum.end(), target) - cum.begin();
    out.push_back(t[std::clamp<Eigen::Index>(j, 0, t.size() - 1)]);
  }
  for (int i = 1; i < n; ++i)
    if (!(out[i] > out[i - 1])) throw Error(ErrorKind::invalid_argument, "mass quantiles coincide; refine the grid");
  return out;
}

template <typename Scalar>
std::vector<Scalar> equispaced_nodes(const Grid<Scalar>& grid, int n) {
  const Scalar lo = grid.to_parameter(grid.nodes()[0]);
  const Scalar hi = grid.to_parameter(grid.nodes()[grid.size() - 1]);
  std::vector<Scalar> out;
  for (int i = 1; i <= n; ++i) out.push_back(grid.from_parameter(lo + (hi - lo) * i / (n + 1)));
  return out;
}

template <typename Scalar>
std::vector<Scalar> perturb_nodes(const Grid<Scalar>& grid, const std::vector<Scalar>& xi, std::mt19937_64& rng,
                                  Scalar amplitude) {
  const int n = static_cast<int>(xi.size());
  const Scalar lo = grid.to_parameter(grid.nodes()[0]);
  const Scalar hi = grid.to_parameter(grid.nodes()[grid.size() - 1]);
  std::vector<Scalar> z(n);
  for (int i = 0; i < n; ++i) z[i] = grid.to_parameter(xi[i]);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Scalar> out = z;
  for (int i = 0; i < n; ++i) {
    const Scalar left = z[i] - (i ? z[i - 1] : lo);
    const Scalar right = (i + 1 < n ? z[i + 1] : hi) - z[i];
    out[i] = z[i] + amplitude * Scalar(u(rng)) * std::min(left, right);
  }
  return from_parameters(grid, out);
}

// One level with the restart policy: the given start, then perturbations of
// it and the alternative starts, until the level is found.
template <typename Scalar>
SpectralTriple<Scalar> solve_with_restarts(Engine<Scalar>& eng, int n, const std::vector<Scalar>& start,
                                           const std::optional<SpectralTriple<Scalar>>& level0, const SolveOptions& opt) {
  Diagnostics diag;
  std::mt19937_64 rng(opt.seed + 7919ULL * std::uint64_t(n));
  LevelOutcome<Scalar> last;
  for (int attempt = 0; attempt <= opt.max_restarts; ++attempt) {
    std::vector<Scalar> nodes;
    try {
      if (attempt == 0 || n == 0) nodes = start;
      else if (attempt == 1) nodes = equispaced_nodes(*eng.grid(), n);
      else if (attempt == 2 && level0) nodes = mass_quantiles(*level0, eng, eng.q(), n);
      else nodes = perturb_nodes(*eng.grid(), start, rng, Scalar(0.4));
      diag.restarts = attempt;
      last = solve_from_nodes(eng, n, nodes, opt, diag);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::structural || e.kind() == ErrorKind::nonfinite) throw;
      last.triple.reset();
      last.failure = e.kind();
      last.message = e.what();
    }
    if (last.triple) return std::move(*last.triple);
    if (n == 0) break;
  }
  throw Error(last.failure, last.message + " after " + std::to_string(opt.max_restarts) + " restarts");
}

}  // namespace detail

// Start of the plain iteration from u (normalised in L_p).
template <typename Scalar>
IterationState<Scalar> start_iteration(const GridFunction<Scalar>& u, const ExponentSet& e,
                                       const GridFunction<Scalar>& g, const GridFunction<Scalar>& v) {
  SolveOptions o;
  detail::Engine<Scalar> eng(e, g, v, o);
  const Scalar nu = lp_norm(u, Scalar(e.p));
  if (!(nu > 0)) throw Error(ErrorKind::invalid_argument, "start function is zero");
  auto phi = (1 / nu) * u;
  GridFunction<Scalar> x(u.grid(), eng.x_of(phi.values()));
  return {0, x, GridFunction<Scalar>::constant(u.grid(), 0), phi, 0, 0, 0};
}

// x_m -> (theta_m, y_(m+1), x_(m+1)) for the unconstrained system.
template <typename Scalar>
IterationState<Scalar> buslaev_step(const IterationState<Scalar>& s, const ExponentSet& e,
                                    const GridFunction<Scalar>& g, const GridFunction<Scalar>& v) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  SolveOptions o;
  detail::Engine<Scalar> eng(e, g, v, o);
  const Scalar q = Scalar(e.q), pd = Scalar(e.p_dual);
  const Vec Y = eng.Y_of(s.x.values());
  const Vec w = g.values().cwiseProduct(Y);
  const Scalar nr = eng.norm(w, pd);
  if (!(nr > 0) || !std::isfinite(double(nr))) throw Error(ErrorKind::nonfinite, "operator output vanished");
  const Scalar theta = std::pow(nr, -1 / q);
  const Vec y = Y / nr;
  const Vec phi = detail::duality_map(Vec(w / nr), pd);
  const Vec x = eng.x_of(phi);
  const auto& grid = s.x.grid();
  IterationState<Scalar> out{s.m + 1, GridFunction<Scalar>(grid, x), GridFunction<Scalar>(grid, y),
                             GridFunction<Scalar>(grid, phi), theta,
                             eng.norm(Vec(v.values().cwiseProduct(s.x.values())), q),
                             eng.norm(Vec(v.values().cwiseProduct(x)), q)};
  return out;
}

// Spectral triple of level n. Without explicit nodes the start comes from
// opt.init.
template <typename Scalar>
SpectralTriple<Scalar> solve_level(int n, const ExponentSet& e, const GridFunction<Scalar>& g,
                                   const GridFunction<Scalar>& v, const SolveOptions& opt = {},
                                   std::optional<std::vector<Scalar>> nodes = std::nullopt) {
  if (n < 0) throw Error(ErrorKind::invalid_argument, "level must be non-negative");
  detail::Engine<Scalar> eng(e, g, v, opt);
  const Scalar q = Scalar(e.q);
  SolveOptions quiet = opt;
  quiet.record_trace = false;
  const std::optional<SpectralTriple<Scalar>> none;
  const std::vector<Scalar> empty;
  if (nodes) return detail::solve_with_restarts(eng, n, *nodes, none, opt);
  if (n == 0) return detail::solve_with_restarts(eng, 0, empty, none, opt);
  auto level0 = detail::solve_with_restarts(eng, 0, empty, none, quiet);
  std::vector<Scalar> start;
  switch (opt.init) {
    case InitStrategy::equispaced: start = detail::equispaced_nodes(*eng.grid(), n); break;
    case InitStrategy::mass_quantiles: start = detail::mass_quantiles(level0, eng, q, n); break;
    case InitStrategy::continuation:
    case InitStrategy::perturbed: {
      auto prev = level0;
      for (int j = 1; j < n; ++j)
        prev = detail::solve_with_restarts(eng, j, detail::lobe_centroids(prev, eng, q), std::optional(level0), quiet);
      start = detail::lobe_centroids(prev, eng, q);
      if (opt.init == InitStrategy::perturbed) {
        std::mt19937_64 rng(opt.seed);
        start = detail::perturb_nodes(*eng.grid(), start, rng, Scalar(0.4));
      }
      break;
    }
  }
  return detail::solve_with_restarts(eng, n, start, std::optional(level0), opt);
}

struct VerifyReport {
  double residual_x = 0;
  double residual_y = 0;
  double normalization = 0;
  int sign_changes_x = -1;
  int sign_changes_y = -1;
  bool alternation = false;
  bool passed = false;
};

// Residuals of the integral system at a triple, relative to ||x||_{q,v} and
// ||g y||_{p'}.
template <typename Scalar>
VerifyReport verify_triple(const SpectralTriple<Scalar>& t, const ExponentSet& e, const GridFunction<Scalar>& g,
                           const GridFunction<Scalar>& v, double sign_tol = 1e-8) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  detail::require_same_grid(t.x, g);
  detail::require_same_grid(t.y, v);
  SolveOptions o;
  detail::Engine<Scalar> eng(e, g, v, o);
  const Scalar q = Scalar(e.q), pd = Scalar(e.p_dual);
  const Vec gy = g.values().cwiseProduct(t.y.values());
  const Vec x_rhs = eng.x_of(detail::duality_map(gy, pd));
  const Vec y_rhs = std::pow(t.theta, q) * eng.Y_of(t.x.values());
  VerifyReport r;
  const Scalar xn = eng.norm(Vec(v.values().cwiseProduct(t.x.values())), q);
  const Scalar yn = eng.norm(gy, pd);
  r.residual_x = double(eng.norm(Vec(v.values().cwiseProduct(t.x.values() - x_rhs)), q) / xn);
  r.residual_y = double(eng.norm(Vec(g.values().cwiseProduct(t.y.values() - y_rhs)), pd) / yn);
  r.normalization = std::abs(double(yn) - 1);
  const auto sx = count_sign_changes(t.x, sign_tol);
  const auto sy = count_sign_changes(t.y, sign_tol);
  r.sign_changes_x = sx ? *sx : -1;
  r.sign_changes_y = sy ? *sy : -1;
  if (r.sign_changes_x == t.n && r.sign_changes_y == t.n) {
    NodeConfig c;
    for (auto s : sign_change_points(t.x, sign_tol)) c.xi.push_back(double(s));
    for (auto s : sign_change_points(t.y, sign_tol)) c.eta.push_back(double(s));
    c.r = e.r;
    c.k = e.k;
    c.a = double(g.grid()->a());
    c.b = double(g.grid()->b());
    r.alternation = check_alternation(c);
  }
  r.passed = r.residual_x <= 1e-5 && r.residual_y <= 1e-5 && r.normalization <= 1e-8 && r.alternation;
  return r;
}

struct LevelResult {
  int n = 0;
  double theta = 0;
  double width = 0;
  VerifyReport verify;
  std::vector<double> xi, eta;
  Diagnostics diag;
};

struct WidthsResult {
  std::vector<LevelResult> levels;
  bool strictly_decreasing = true;
  std::optional<std::string> failure;
  ErrorKind failure_kind = ErrorKind::no_convergence;
};

// Levels 0..n_max, each started from the lobe centroids of the previous one.
// With multistart > 1 the alternative starts are also tried and the largest
// theta kept (relevant for p != q). Stops at the first failing level.
template <typename Scalar>
WidthsResult compute_widths(int n_max, const ExponentSet& e, const GridFunction<Scalar>& g,
                            const GridFunction<Scalar>& v, const SolveOptions& opt = {},
                            const std::function<void(const LevelResult&)>& on_level = {}) {
  if (n_max < 0) throw Error(ErrorKind::invalid_argument, "n_max must be non-negative");
  detail::Engine<Scalar> eng(e, g, v, opt);
  const Scalar q = Scalar(e.q);
  WidthsResult out;
  std::optional<SpectralTriple<Scalar>> prev, level0;
  for (int n = 0; n <= n_max; ++n) {
    try {
      std::vector<Scalar> start = n ? detail::lobe_centroids(*prev, eng, q) : std::vector<Scalar>{};
      auto t = detail::solve_with_restarts(eng, n, start, level0, opt);
      for (int s = 1; s < opt.multistart && n > 0; ++s) {
        std::mt19937_64 rng(opt.seed + 104729ULL * std::uint64_t(s));
        std::vector<Scalar> alt = s == 1 && level0 ? detail::mass_quantiles(*level0, eng, q, n)
                                                   : detail::perturb_nodes(*eng.grid(), start, rng, Scalar(0.4));
        try {
          auto t2 = detail::solve_with_restarts(eng, n, alt, level0, opt);
          if (t2.theta > t.theta) t = std::move(t2);
        } catch (const Error&) {
        }
      }
      LevelResult lr;
      lr.n = n;
      lr.theta = double(t.theta);
      lr.width = 1 / lr.theta;
      lr.verify = verify_triple(t, e, g, v, opt.sign_tol);
      for (auto s : t.xi) lr.xi.push_back(double(s));
      for (auto s : t.eta) lr.eta.push_back(double(s));
      lr.diag = t.diag;
      if (!out.levels.empty() && !(lr.width < out.levels.back().width)) out.strictly_decreasing = false;
      if (on_level) on_level(lr);
      out.levels.push_back(std::move(lr));
      if (n == 0) level0 = t;
      prev = std::move(t);
    } catch (const Error& err) {
      out.failure = err.what();
      out.failure_kind = err.kind();
      break;
    }
  }
  return out;
}

// Singular values of the discretised operator, descending. Only meaningful
// for p = q = 2, where they equal 1/theta_n.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> svd_oracle(const ExponentSet& e, const GridFunction<Scalar>& g,
                                                    const GridFunction<Scalar>& v) {
  if (!e.is_hilbert()) throw Error(ErrorKind::unsupported, "singular values only match widths for p = q = 2");
  const auto m = operator_matrix(e, g, v);
  Eigen::BDCSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(m);
  return svd.singularValues();
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << "phase,sweep,theta,bracket_lo,bracket_hi,sign_changes\n";
  os.precision(17);
  for (const auto& t : trace)
    os << t.phase << ',' << t.sweep << ',' << t.theta << ',' << t.bracket_lo << ',' << t.bracket_hi << ','
       << t.sign_changes << '\n';
}

}  // namespace nwidth
