#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "nwidth/error.hpp"

namespace nwidth {

template <typename Scalar = double>
struct GaussRule {
  std::vector<Scalar> nodes;    // ascending, in (-1, 1)
  std::vector<Scalar> weights;
};

template <typename Scalar = double>
GaussRule<Scalar> gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "gauss_legendre: n < 1");
  GaussRule<Scalar> rule;
  rule.nodes.assign(n, Scalar(0));
  rule.weights.assign(n, Scalar(0));
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  auto legendre = [n](Scalar x, Scalar& pn, Scalar& pn1) {
    Scalar p0 = 1, p1 = x;
    for (int j = 2; j <= n; ++j) {
      Scalar p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    pn = p1;
    pn1 = (n == 1) ? Scalar(1) : p0;
  };

  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar pn, pn1;
    for (int it = 0; it < 100; ++it) {
      legendre(x, pn, pn1);
      Scalar dp = n * (x * pn - pn1) / (x * x - 1);
      Scalar dx = pn / dp;
      x -= dx;
      if (std::abs(dx) <= 2 * eps) break;
    }
    legendre(x, pn, pn1);
    Scalar dp = n * (x * pn - pn1) / (x * x - 1);
    Scalar w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0;
  return rule;
}

// Gauss rule on one reference panel [-1, 1] together with the matrices that
// integrate the node interpolant from -1 (lower) or up to 1 (upper).
template <typename Scalar = double>
struct PanelRule {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  GaussRule<Scalar> gauss;
  std::vector<Scalar> bary;
  Matrix lower;  // lower(i, j) = int_{-1}^{x_i} l_j
  Matrix upper;  // upper(i, j) = int_{x_i}^{1} l_j

  explicit PanelRule(int n) : gauss(gauss_legendre<Scalar>(n)) {
    const auto& x = gauss.nodes;
    bary.assign(n, Scalar(1));
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m)
        if (m != j) bary[j] /= (x[j] - x[m]);

    lower.resize(n, n);
    upper.resize(n, n);
    std::vector<Scalar> basis_values(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        lower(i, j) = 0;
        upper(i, j) = 0;
      }
      const Scalar lo_half = (x[i] + 1) / 2;
      const Scalar up_half = (1 - x[i]) / 2;
      for (int m = 0; m < n; ++m) {
        basis(-1 + lo_half * (x[m] + 1), basis_values);
        for (int j = 0; j < n; ++j) lower(i, j) += lo_half * gauss.weights[m] * basis_values[j];
        basis(x[i] + up_half * (x[m] + 1), basis_values);
        for (int j = 0; j < n; ++j) upper(i, j) += up_half * gauss.weights[m] * basis_values[j];
      }
    }
  }

  int size() const { return static_cast<int>(gauss.nodes.size()); }

  // Values of all Lagrange basis polynomials at s.
  void basis(Scalar s, std::vector<Scalar>& out) const {
    const int n = size();
    out.assign(n, Scalar(0));
    Scalar denom = 0;
    for (int j = 0; j < n; ++j) {
      Scalar d = s - gauss.nodes[j];
      if (d == 0) {
        out.assign(n, Scalar(0));
        out[j] = 1;
        return;
      }
      out[j] = bary[j] / d;
      denom += out[j];
    }
    for (auto& v : out) v /= denom;
  }

  template <typename Values>
  Scalar interpolate(const Values& values, Scalar s) const {
    const int n = size();
    Scalar num = 0, denom = 0;
    for (int j = 0; j < n; ++j) {
      Scalar d = s - gauss.nodes[j];
      if (d == 0) return values[j];
      Scalar c = bary[j] / d;
      num += c * values[j];
      denom += c;
    }
    return num / denom;
  }
};

}  // namespace nwidth
