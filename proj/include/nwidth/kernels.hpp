#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "nwidth/error.hpp"
#include "nwidth/grid.hpp"

namespace nwidth {

inline double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double binomial(int n, int j) {
  double c = 1;
  for (int i = 1; i <= j; ++i) c = c * (n - j + i) / i;
  return c;
}

// H(t, tau) = int_a^min(t,tau) (t-s)^(k-1) (tau-s)^(r-k-1) ds. Expanded around
// the nearer end so every term is non-negative.
template <typename Scalar = double>
Scalar kernel_H(Scalar t, Scalar tau, int r, int k, Scalar a = Scalar(0)) {
  const Scalar m = std::min(t, tau) - a;
  if (!(m > 0)) return Scalar(0);
  const Scalar d = std::abs(t - tau);
  const int f = t <= tau ? k - 1 : r - k - 1;
  const int e = t <= tau ? r - k - 1 : k - 1;
  Scalar s = 0;
  for (int j = 0; j <= e; ++j)
    s += Scalar(binomial(e, j)) * std::pow(d, Scalar(e - j)) * std::pow(m, Scalar(j + f + 1)) / Scalar(j + f + 1);
  return s;
}

template <typename Scalar>
Scalar truncated_power(Scalar x, int l) {
  if (l == 0) return x >= 0 ? Scalar(1) : Scalar(0);
  return x > 0 ? std::pow(x, Scalar(l)) : Scalar(0);
}

// det [(mu_j - nu_i)_+^(l-1)]
template <typename Scalar = double>
Scalar kernel_K_l(const std::vector<Scalar>& mu, const std::vector<Scalar>& nu, int l) {
  if (mu.size() != nu.size()) throw Error(ErrorKind::structural, "kernel_K_l: length mismatch");
  if (l < 1) throw Error(ErrorKind::invalid_argument, "kernel_K_l: l must be positive");
  const auto n = static_cast<Eigen::Index>(mu.size());
  if (n == 0) return Scalar(1);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = truncated_power(mu[j] - nu[i], l - 1);
  return m.partialPivLu().determinant();
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> kernel_H_matrix(const std::vector<Scalar>& mu,
                                                                      const std::vector<Scalar>& nu, int r, int k,
                                                                      Scalar a = Scalar(0)) {
  const auto n = static_cast<Eigen::Index>(mu.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = kernel_H(mu[i], nu[j], r, k, a);
  return m;
}

// J! det [H(mu_i, nu_j)]
template <typename Scalar = double>
Scalar kernel_K_rk(const std::vector<Scalar>& mu, const std::vector<Scalar>& nu, int r, int k,
                   Scalar a = Scalar(0)) {
  if (mu.size() != nu.size()) throw Error(ErrorKind::structural, "kernel_K_rk: length mismatch");
  if (mu.empty()) return Scalar(1);
  return Scalar(factorial(static_cast<int>(mu.size()))) *
         kernel_H_matrix(mu, nu, r, k, a).partialPivLu().determinant();
}

// Zeros xi of x and eta of y for one level.
struct NodeConfig {
  std::vector<double> xi;
  std::vector<double> eta;
  int r = 2;
  int k = 1;
  double a = 0;
  double b = 1;

  int m() const { return static_cast<int>(xi.size()); }
};

// eta_{j+k-r} < xi_j < eta_{j+k} with eta_0 = a, eta_{m+1} = b; indices
// beyond that range impose nothing.
inline bool check_alternation(const NodeConfig& c) {
  const int m = c.m();
  if (static_cast<int>(c.eta.size()) != m) return false;
  auto eta = [&](int i) { return i == 0 ? c.a : i == m + 1 ? c.b : c.eta[i - 1]; };
  for (int j = 1; j <= m; ++j) {
    const double x = c.xi[j - 1];
    const int lo = j + c.k - c.r, hi = j + c.k;
    if (lo >= 0 && !(eta(lo) < x)) return false;
    if (hi <= m + 1 && !(x < eta(hi))) return false;
  }
  return true;
}

inline void validate_nodes(const NodeConfig& c) {
  if (c.xi.size() != c.eta.size()) throw Error(ErrorKind::structural, "node config: xi and eta differ in length");
  if (c.r < 2 || c.k < 1 || c.k > c.r - 1) throw Error(ErrorKind::invalid_argument, "node config: bad (r, k)");
  for (const auto* v : {&c.xi, &c.eta})
    for (size_t i = 0; i < v->size(); ++i) {
      if (!((*v)[i] > c.a && (*v)[i] < c.b)) throw Error(ErrorKind::invalid_argument, "node config: node outside (a, b)");
      if (i && !((*v)[i] > (*v)[i - 1])) throw Error(ErrorKind::invalid_argument, "node config: nodes not increasing");
    }
}

// G(t, tau) = det of H bordered by the node rows and columns, over
// C (k-1)! (r-k-1)!, C = det H(xi_i, eta_j). Determinants and solves run in
// long double: for clustered nodes H is ill-conditioned and the exact zeros
// of G at the nodes are otherwise lost to cancellation.
class KernelCache {
 public:
  using Real = long double;
  using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

  explicit KernelCache(NodeConfig cfg) : cfg_(std::move(cfg)) {
    validate_nodes(cfg_);
    if (!check_alternation(cfg_)) throw Error(ErrorKind::invalid_argument, "kernel cache: nodes do not alternate");
    norm_factor_ = factorial(cfg_.k - 1) * factorial(cfg_.r - cfg_.k - 1);
    const int m = cfg_.m();
    xi_.assign(cfg_.xi.begin(), cfg_.xi.end());
    eta_.assign(cfg_.eta.begin(), cfg_.eta.end());
    hl_ = kernel_H_matrix<Real>(xi_, eta_, cfg_.r, cfg_.k, Real(cfg_.a));
    h_ = hl_.cast<double>();
    c_ = m == 0 ? Real(1) : hl_.partialPivLu().determinant();
    if (m > 0) {
      RealMatrix scaled = hl_;
      for (int i = 0; i < m; ++i) scaled.row(i) /= scaled.row(i).cwiseAbs().maxCoeff();
      const double rcond = double(scaled.partialPivLu().rcond());
      if (!(c_ > 0) || !(rcond > 1e3 * std::numeric_limits<double>::epsilon()))
        throw Error(ErrorKind::singular, "kernel cache: node determinant is not positive");
      // A(j, i) = H(xi_i, eta_j)
      lu_.compute(RealMatrix(hl_.transpose()));
    }
  }

  const NodeConfig& config() const { return cfg_; }
  const Eigen::MatrixXd& H_matrix() const { return h_; }
  const RealMatrix& H_matrix_extended() const { return hl_; }
  double C() const { return double(c_); }
  Real C_extended() const { return c_; }
  double norm_factor() const { return norm_factor_; }

  // z(t) with A z = (H(t, eta_j))_j; reused for every tau at fixed t.
  RealVector row_coefficients(double t) const {
    const int m = cfg_.m();
    RealVector c(m);
    for (int j = 0; j < m; ++j) c[j] = kernel_H<Real>(t, eta_[j], cfg_.r, cfg_.k, Real(cfg_.a));
    return m ? RealVector(lu_.solve(c)) : c;
  }

  // Schur-complement form of the bordered determinant ratio.
  double G(double t, double tau, const RealVector& z) const {
    Real s = kernel_H<Real>(t, tau, cfg_.r, cfg_.k, Real(cfg_.a));
    for (int i = 0; i < cfg_.m(); ++i) s -= kernel_H<Real>(xi_[i], tau, cfg_.r, cfg_.k, Real(cfg_.a)) * z[i];
    return double(s / norm_factor_);
  }

  double G(double t, double tau) const { return G(t, tau, row_coefficients(t)); }

 private:
  NodeConfig cfg_;
  std::vector<Real> xi_, eta_;
  RealMatrix hl_;
  Eigen::MatrixXd h_;
  Real c_ = 1;
  double norm_factor_ = 1;
  Eigen::PartialPivLU<RealMatrix> lu_;
};

// Bordered determinant evaluated directly.
inline double kernel_G(double t, double tau, const KernelCache& cache) {
  using Real = KernelCache::Real;
  const auto& c = cache.config();
  const int m = c.m();
  const Real a = c.a;
  KernelCache::RealMatrix b(m + 1, m + 1);
  b(0, 0) = kernel_H<Real>(t, tau, c.r, c.k, a);
  for (int i = 0; i < m; ++i) b(0, i + 1) = kernel_H<Real>(c.xi[i], tau, c.r, c.k, a);
  for (int j = 0; j < m; ++j) {
    b(j + 1, 0) = kernel_H<Real>(t, c.eta[j], c.r, c.k, a);
    for (int i = 0; i < m; ++i) b(j + 1, i + 1) = cache.H_matrix_extended()(i, j);
  }
  return double(b.partialPivLu().determinant() / (cache.C_extended() * cache.norm_factor()));
}

struct Projection {
  GridFunction<double> f;         // I_k Itilde_(r-k)(g phi)
  GridFunction<double> q_part;    // int G(., tau) g phi dtau
  GridFunction<double> p_part;    // f - q_part
  Eigen::VectorXd coefficients;   // p_part = sum_j c_j H(., eta_j)
};

// Splits f = I_k Itilde_(r-k)(g phi) into its G-part and its component in
// span H(., eta_j). Quadrature is split at the kinks tau = t and tau = xi_i.
inline Projection projection_PL(const GridFunction<double>& phi, const GridFunction<double>& g,
                                const KernelCache& cache) {
  const auto& grid = phi.grid();
  if (g.grid() != grid) throw Error(ErrorKind::structural, "projection: grids differ");
  const auto& c = cache.config();
  const int m = c.m();
  const int n = grid->points_per_panel();
  const auto& rule = grid->rule();
  const auto& edges = grid->edges();
  const Eigen::VectorXd gphi = g.values().cwiseProduct(phi.values());

  Eigen::VectorXd f = gphi;
  for (int i = 0; i < c.r - c.k; ++i) f = grid->upper_integral(f);
  for (int i = 0; i < c.k; ++i) f = grid->lower_integral(f);

  std::vector<char> xi_panel(grid->panels(), 0);
  for (double x : c.xi) xi_panel[grid->panel_of(x)] = 1;

  auto split_panel = [&](int p, double t, const KernelCache::RealVector& z) {
    std::vector<double> cuts{edges[p], edges[p + 1]};
    if (t > edges[p] && t < edges[p + 1]) cuts.push_back(t);
    for (double x : c.xi)
      if (x > edges[p] && x < edges[p + 1]) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    const auto seg = gphi.segment(p * n, n);
    const double h = edges[p + 1] - edges[p];
    double s = 0;
    for (size_t q = 0; q + 1 < cuts.size(); ++q) {
      const double half = (cuts[q + 1] - cuts[q]) / 2;
      for (int i = 0; i < n; ++i) {
        const double tau = cuts[q] + half * (rule.gauss.nodes[i] + 1);
        s += half * rule.gauss.weights[i] * cache.G(t, tau, z) * rule.interpolate(seg, 2 * (tau - edges[p]) / h - 1);
      }
    }
    return s;
  };

  Eigen::VectorXd q(grid->size());
  const auto& x = grid->nodes();
  const auto& w = grid->weights();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double t = x[i];
    const auto z = cache.row_coefficients(t);
    const int tp = grid->panel_of(t);
    double s = 0;
    for (int p = 0; p < grid->panels(); ++p) {
      if (p == tp || xi_panel[p]) {
        s += split_panel(p, t, z);
        continue;
      }
      for (int j = p * n; j < (p + 1) * n; ++j) s += w[j] * cache.G(t, x[j], z) * gphi[j];
    }
    q[i] = s;
  }

  Eigen::VectorXd coeff(m);
  if (m) {
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) rhs[i] = grid->interpolate(f, c.xi[i]);
    coeff = cache.H_matrix().partialPivLu().solve(rhs);
  }
  GridFunction<double> fg(grid, f);
  GridFunction<double> qg(grid, q);
  GridFunction<double> pg(grid, f - q);
  return {fg, qg, pg, coeff};
}

}  // namespace nwidth
