#pragma once

#include <iomanip>
#include <optional>
#include <ostream>

#include <Eigen/Dense>

#include "nwidth/error.hpp"
#include "nwidth/exponents.hpp"
#include "nwidth/grid.hpp"

namespace nwidth {

enum class Anchor { lower, upper };

// I_{m,u,w,a} (lower anchor) or its mirror anchored at b. Empty weights mean 1.
template <typename Scalar = double>
struct RLSpec {
  int order = 1;
  std::optional<GridFunction<Scalar>> inner;
  std::optional<GridFunction<Scalar>> outer;
  Anchor anchor = Anchor::lower;
};

namespace detail {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// m-fold repeated integration equals the (t-s)^(m-1)/(m-1)! kernel (Cauchy);
// the discrete lower and upper sweeps are exact adjoints in the quadrature
// inner product.
template <typename Scalar>
Vec<Scalar> repeated_lower(const Grid<Scalar>& grid, Vec<Scalar> f, int m) {
  for (int i = 0; i < m; ++i) f = grid.lower_integral(f);
  return f;
}

template <typename Scalar>
Vec<Scalar> repeated_upper(const Grid<Scalar>& grid, Vec<Scalar> f, int m) {
  for (int i = 0; i < m; ++i) f = grid.upper_integral(f);
  return f;
}

// w * L^k U^(r-k) (g * phi); null weights mean 1.
template <typename Scalar>
Vec<Scalar> composite(const Grid<Scalar>& grid, int r, int k, const Vec<Scalar>* g,
                      const Vec<Scalar>* w, const Vec<Scalar>& phi) {
  Vec<Scalar> f = g ? Vec<Scalar>(g->cwiseProduct(phi)) : phi;
  f = repeated_lower(grid, repeated_upper(grid, std::move(f), r - k), k);
  if (w) f = f.cwiseProduct(*w);
  return f;
}

template <typename Scalar>
void require_grid(const GridFunction<Scalar>& f, const GridPtr<Scalar>& grid) {
  if (f.grid() != grid) throw Error(ErrorKind::structural, "grid functions live on different grids");
}

template <typename Scalar>
GridFunction<Scalar> finite_or_throw(const GridPtr<Scalar>& grid, Vec<Scalar> v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorKind::nonfinite, std::string(what) + ": non-integrable product");
  return {grid, std::move(v)};
}

}  // namespace detail

template <typename Scalar>
GridFunction<Scalar> rl_apply(const RLSpec<Scalar>& spec, const GridFunction<Scalar>& psi) {
  if (spec.order < 1) throw Error(ErrorKind::invalid_argument, "RL order must be at least 1");
  const auto& grid = psi.grid();
  detail::Vec<Scalar> f = psi.values();
  if (spec.inner) {
    detail::require_grid(*spec.inner, grid);
    f = f.cwiseProduct(spec.inner->values());
  }
  f = spec.anchor == Anchor::lower ? detail::repeated_lower(*grid, std::move(f), spec.order)
                                   : detail::repeated_upper(*grid, std::move(f), spec.order);
  if (spec.outer) {
    detail::require_grid(*spec.outer, grid);
    f = f.cwiseProduct(spec.outer->values());
  }
  return detail::finite_or_throw(grid, std::move(f), "rl operator");
}

template <typename Scalar>
GridFunction<Scalar> rl_lower(const RLSpec<Scalar>& spec, const GridFunction<Scalar>& psi) {
  if (spec.anchor != Anchor::lower) throw Error(ErrorKind::invalid_argument, "rl_lower needs a lower anchor");
  return rl_apply(spec, psi);
}

template <typename Scalar>
GridFunction<Scalar> rl_upper(const RLSpec<Scalar>& spec, const GridFunction<Scalar>& psi) {
  if (spec.anchor != Anchor::upper) throw Error(ErrorKind::invalid_argument, "rl_upper needs an upper anchor");
  return rl_apply(spec, psi);
}

// w * I_k Itilde_(r-k) (g * phi)
template <typename Scalar>
GridFunction<Scalar> composite_op(int r, int k, const GridFunction<Scalar>& g,
                                  const GridFunction<Scalar>& w, const GridFunction<Scalar>& phi) {
  if (r < 1 || k < 0 || k > r) throw Error(ErrorKind::invalid_argument, "composite_op: bad (r, k)");
  const auto& grid = phi.grid();
  detail::require_grid(g, grid);
  detail::require_grid(w, grid);
  return detail::finite_or_throw(
      grid, detail::composite(*grid, r, k, &g.values(), &w.values(), phi.values()), "composite_op");
}

template <typename Scalar>
GridFunction<Scalar> composite_op(const ExponentSet& e, const GridFunction<Scalar>& g,
                                  const GridFunction<Scalar>& w, const GridFunction<Scalar>& phi) {
  return composite_op(e.r, e.k, g, w, phi);
}

// W^(1/2) diag(v) L^k U^(r-k) diag(g) W^(-1/2). Its singular values are the
// singular values of phi -> v * I_k Itilde_(r-k)(g phi) on L_2.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> operator_matrix(
    int r, int k, const GridFunction<Scalar>& g, const GridFunction<Scalar>& v) {
  const auto& grid = g.grid();
  detail::require_grid(v, grid);
  const auto n = grid->size();
  const detail::Vec<Scalar> sw = grid->weights().cwiseSqrt();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
  detail::Vec<Scalar> e = detail::Vec<Scalar>::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1 / sw[j];
    m.col(j) = sw.cwiseProduct(detail::composite(*grid, r, k, &g.values(), &v.values(), e));
    e[j] = 0;
  }
  if (!m.allFinite()) throw Error(ErrorKind::nonfinite, "operator_matrix: non-finite entries");
  return m;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> operator_matrix(
    const ExponentSet& e, const GridFunction<Scalar>& g, const GridFunction<Scalar>& v) {
  return operator_matrix(e.r, e.k, g, v);
}

// "rows cols" then row-major values.
template <typename Derived>
void write_matrix(std::ostream& os, const Eigen::MatrixBase<Derived>& m) {
  os << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << double(m(i, j));
    os << '\n';
  }
}

}  // namespace nwidth
