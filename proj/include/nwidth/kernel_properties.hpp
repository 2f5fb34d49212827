#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nwidth/kernels.hpp"
#include "nwidth/quadrature.hpp"

namespace nwidth {

// Sorted mu, nu in (0, 1) with nu_{j+k-r} < mu_j < nu_{j+k}.
inline bool random_alternating(std::mt19937_64& rng, int J, int r, int k, std::vector<double>& mu,
                               std::vector<double>& nu) {
  std::uniform_real_distribution<double> u(0, 1);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    nu.resize(J);
    for (auto& x : nu) x = u(rng);
    std::sort(nu.begin(), nu.end());
    if (std::adjacent_find(nu.begin(), nu.end()) != nu.end()) continue;
    mu.assign(J, 0);
    bool ok = true;
    for (int j = 1; j <= J && ok; ++j) {
      double lo = j > 1 ? mu[j - 2] : 0.0;
      if (j + k - r >= 1) lo = std::max(lo, nu[j + k - r - 1]);
      const double hi = j + k <= J ? nu[j + k - 1] : 1.0;
      if (!(lo < hi)) {
        ok = false;
        break;
      }
      mu[j - 1] = lo + (hi - lo) * (0.05 + 0.9 * u(rng));
    }
    if (ok) return true;
  }
  return false;
}

inline bool alternates(const std::vector<double>& mu, const std::vector<double>& nu, int r, int k) {
  NodeConfig c{mu, nu, r, k, 0.0, 1.0};
  return check_alternation(c);
}

// int over [0,1]^J of K_k(mu, alpha) K_(r-k)(nu, alpha), J <= 2, on cells cut
// at every mu and nu so the integrand is a polynomial on each cell.
inline double kernel_K_rk_quadrature(const std::vector<double>& mu, const std::vector<double>& nu, int r, int k) {
  const int J = static_cast<int>(mu.size());
  if (J > 2) throw Error(ErrorKind::unsupported, "brute-force quadrature only for J <= 2");
  if (J == 0) return 1;
  std::vector<double> cuts{0.0, 1.0};
  cuts.insert(cuts.end(), mu.begin(), mu.end());
  cuts.insert(cuts.end(), nu.begin(), nu.end());
  std::sort(cuts.begin(), cuts.end());
  const auto rule = gauss_legendre<double>(std::max(r, 2));
  std::vector<double> pts, wts;
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double h = (cuts[c + 1] - cuts[c]) / 2;
    if (h <= 0) continue;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      pts.push_back(cuts[c] + h * (rule.nodes[i] + 1));
      wts.push_back(h * rule.weights[i]);
    }
  }
  double s = 0;
  if (J == 1) {
    for (size_t i = 0; i < pts.size(); ++i)
      s += wts[i] * kernel_K_l(mu, {pts[i]}, k) * kernel_K_l(nu, {pts[i]}, r - k);
    return s;
  }
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = 0; j < pts.size(); ++j) {
      const std::vector<double> al{pts[i], pts[j]};
      s += wts[i] * wts[j] * kernel_K_l(mu, al, k) * kernel_K_l(nu, al, r - k);
    }
  return s;
}

struct PropertyTally {
  std::string property;
  int r = 0;
  int k = 0;
  int cases = 0;
  int passed = 0;
  double worst = 0;  // worst normalised defect seen
};

inline std::vector<PropertyTally> run_kernel_properties(int cases, std::uint64_t seed) {
  const std::vector<std::pair<int, int>> rk{{2, 1}, {3, 1}, {3, 2}, {4, 2}};
  std::vector<PropertyTally> out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 6), small(1, 4), tiny(1, 2);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto [r, k] : rk) {
    PropertyTally pos{"positivity_alternating", r, k}, nonneg{"nonnegative_sorted", r, k},
        vanish{"g_vanishing", r, k}, schur{"g_schur_agreement", r, k}, integral{"determinant_integral", r, k};
    for (int c = 0; c < cases; ++c) {
      std::vector<double> mu, nu;
      if (random_alternating(rng, dim(rng), r, k, mu, nu)) {
        ++pos.cases;
        const double K = kernel_K_rk(mu, nu, r, k);
        if (K > 0) ++pos.passed;
        else pos.worst = std::max(pos.worst, -K);
      }

      const int J = dim(rng);
      mu.resize(J);
      nu.resize(J);
      for (auto& x : mu) x = u(rng);
      for (auto& x : nu) x = u(rng);
      std::sort(mu.begin(), mu.end());
      std::sort(nu.begin(), nu.end());
      {
        const auto H = kernel_H_matrix(mu, nu, r, k);
        double scale = factorial(J);
        for (int i = 0; i < J; ++i) scale *= std::max(H.row(i).cwiseAbs().maxCoeff(), 1e-300);
        const double K = kernel_K_rk(mu, nu, r, k);
        ++nonneg.cases;
        const double defect = std::max(0.0, -K / scale);
        if (defect <= 1e-12) ++nonneg.passed;
        nonneg.worst = std::max(nonneg.worst, defect);
      }

      if (random_alternating(rng, small(rng), r, k, mu, nu)) {
        NodeConfig cfg{mu, nu, r, k, 0.0, 1.0};
        try {
          KernelCache cache(cfg);
          std::vector<double> ts;
          for (int i = 0; i < 24; ++i) ts.push_back((i + 0.5) / 24);
          double gmax = 0, zero_max = 0, gap = 0;
          for (double t : ts)
            for (double tau : ts) {
              const double gb = kernel_G(t, tau, cache);
              gmax = std::max(gmax, std::abs(gb));
              gap = std::max(gap, std::abs(gb - cache.G(t, tau)));
            }
          for (double x : mu)
            for (double tau : ts) zero_max = std::max(zero_max, std::abs(kernel_G(x, tau, cache)));
          for (double y : nu)
            for (double t : ts) zero_max = std::max(zero_max, std::abs(kernel_G(t, y, cache)));
          ++vanish.cases;
          ++schur.cases;
          const double vd = zero_max / gmax, sd = gap / gmax;
          if (vd <= 1e-12) ++vanish.passed;
          if (sd <= 1e-10) ++schur.passed;
          vanish.worst = std::max(vanish.worst, vd);
          schur.worst = std::max(schur.worst, sd);
        } catch (const Error&) {
          ++vanish.cases;
          ++schur.cases;
          vanish.worst = schur.worst = 1;
        }
      }

      const int Jq = tiny(rng);
      mu.resize(Jq);
      nu.resize(Jq);
      for (auto& x : mu) x = u(rng);
      for (auto& x : nu) x = u(rng);
      std::sort(mu.begin(), mu.end());
      std::sort(nu.begin(), nu.end());
      {
        const auto H = kernel_H_matrix(mu, nu, r, k);
        double scale = factorial(Jq);
        for (int i = 0; i < Jq; ++i) scale *= std::max(H.row(i).cwiseAbs().maxCoeff(), 1e-300);
        const double d = std::abs(kernel_K_rk(mu, nu, r, k) - kernel_K_rk_quadrature(mu, nu, r, k)) / scale;
        ++integral.cases;
        if (d <= 1e-6) ++integral.passed;
        integral.worst = std::max(integral.worst, d);
      }
    }
    for (auto* t : {&pos, &nonneg, &vanish, &schur, &integral}) out.push_back(*t);
  }
  return out;
}

}  // namespace nwidth
