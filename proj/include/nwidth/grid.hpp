#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nwidth/error.hpp"
#include "nwidth/quadrature.hpp"

namespace nwidth {

enum class Grading { uniform, geometric_a, geometric_both };

inline const char* to_string(Grading g) {
  switch (g) {
    case Grading::uniform: return "uniform";
    case Grading::geometric_a: return "geometric_a";
    case Grading::geometric_both: return "geometric_both";
  }
  return "uniform";
}

inline Grading parse_grading(const std::string& s) {
  if (s == "uniform") return Grading::uniform;
  if (s == "geometric_a") return Grading::geometric_a;
  if (s == "geometric_both") return Grading::geometric_both;
  throw Error(ErrorKind::parse, "unknown grading '" + s + "'");
}

// Composite Gauss-Legendre grid on [a, b]. Immutable, shared by the grid
// functions sampled on it.
template <typename Scalar = double>
class Grid {
  struct Token {};

 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // depth: the innermost panel next to a graded end has relative width
  // exp(-depth).
  static std::shared_ptr<const Grid> make(Scalar a, Scalar b, int panels,
                                          int points_per_panel = 8,
                                          Grading grading = Grading::uniform,
                                          Scalar depth = Scalar(23)) {
    if (!(a < b) || !std::isfinite(double(a)) || !std::isfinite(double(b)))
      throw Error(ErrorKind::invalid_argument, "grid: need finite a < b");
    if (points_per_panel < 2 || points_per_panel > 32)
      throw Error(ErrorKind::invalid_argument, "grid: points per panel must lie in [2, 32]");
    const int min_panels = grading == Grading::uniform ? 1 : grading == Grading::geometric_a ? 2 : 4;
    if (panels < min_panels)
      throw Error(ErrorKind::invalid_argument, "grid: too few panels for the grading");
    if (grading != Grading::uniform && !(depth > 0))
      throw Error(ErrorKind::invalid_argument, "grid: grading depth must be positive");
    return std::make_shared<const Grid>(Token{}, a, b, panels, points_per_panel, grading, depth);
  }

  Grid(Token, Scalar a, Scalar b, int panels, int ppp, Grading grading, Scalar depth)
      : a_(a), b_(b), grading_(grading), depth_(depth), rule_(ppp) {
    switch (grading) {
      case Grading::uniform:
        for (int i = 0; i <= panels; ++i) edges_.push_back(a + (b - a) * Scalar(i) / Scalar(panels));
        break;
      case Grading::geometric_a:
        edges_ = graded_edges(a, b, panels, depth);
        break;
      case Grading::geometric_both: {
        const Scalar c = (a + b) / 2;
        const int left = (panels + 1) / 2;
        const int right = panels - left;
        edges_ = graded_edges(a, c, left, depth);
        auto mirrored = graded_edges(Scalar(0), c - a, right, depth);
        for (int i = right - 1; i >= 0; --i) edges_.push_back(b - mirrored[i]);
        break;
      }
    }
    edges_.front() = a;
    edges_.back() = b;

    const int n = ppp;
    const int p = static_cast<int>(edges_.size()) - 1;
    nodes_.resize(p * n);
    weights_.resize(p * n);
    for (int j = 0; j < p; ++j) {
      const Scalar half = (edges_[j + 1] - edges_[j]) / 2;
      for (int i = 0; i < n; ++i) {
        nodes_[j * n + i] = edges_[j] + half * (rule_.gauss.nodes[i] + 1);
        weights_[j * n + i] = half * rule_.gauss.weights[i];
      }
    }
    for (Eigen::Index i = 0; i < nodes_.size(); ++i) {
      const Scalar prev = i == 0 ? a : nodes_[i - 1];
      if (!(nodes_[i] > prev) || !(nodes_[i] < b) || !(weights_[i] > 0))
        throw Error(ErrorKind::invalid_argument,
                    "grid: nodes not strictly increasing (grading too deep for this interval)");
    }
  }

  Scalar a() const { return a_; }
  Scalar b() const { return b_; }
  Grading grading() const { return grading_; }
  Scalar depth() const { return depth_; }
  int panels() const { return static_cast<int>(edges_.size()) - 1; }
  int points_per_panel() const { return rule_.size(); }
  Eigen::Index size() const { return nodes_.size(); }
  const Vector& nodes() const { return nodes_; }
  const Vector& weights() const { return weights_; }
  const std::vector<Scalar>& edges() const { return edges_; }
  const PanelRule<Scalar>& rule() const { return rule_; }

  int panel_of(Scalar t) const {
    auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
    int j = static_cast<int>(it - edges_.begin()) - 1;
    return std::clamp(j, 0, panels() - 1);
  }

  // Node values of t -> int_a^t f.
  Vector lower_integral(const Vector& f) const {
    const int n = points_per_panel();
    Vector out(f.size());
    Scalar acc = 0;
    for (int j = 0; j < panels(); ++j) {
      const Scalar half = (edges_[j + 1] - edges_[j]) / 2;
      auto seg = f.segment(j * n, n);
      out.segment(j * n, n) = (half * (rule_.lower * seg)).array() + acc;
      acc += weights_.segment(j * n, n).dot(seg);
    }
    return out;
  }

  // Node values of t -> int_t^b f.
  Vector upper_integral(const Vector& f) const {
    const int n = points_per_panel();
    Vector out(f.size());
    Scalar acc = 0;
    for (int j = panels() - 1; j >= 0; --j) {
      const Scalar half = (edges_[j + 1] - edges_[j]) / 2;
      auto seg = f.segment(j * n, n);
      out.segment(j * n, n) = (half * (rule_.upper * seg)).array() + acc;
      acc += weights_.segment(j * n, n).dot(seg);
    }
    return out;
  }

  // Panel-polynomial interpolant of node values at t.
  Scalar interpolate(const Vector& f, Scalar t) const {
    const int j = panel_of(t);
    const int n = points_per_panel();
    const Scalar s = 2 * (t - edges_[j]) / (edges_[j + 1] - edges_[j]) - 1;
    return rule_.interpolate(f.segment(j * n, n), s);
  }

  // Coordinate in which node positions are moved: affine for uniform grids,
  // logarithmic toward graded ends.
  Scalar to_parameter(Scalar t) const {
    switch (grading_) {
      case Grading::uniform: return (t - a_) / (b_ - a_);
      case Grading::geometric_a: return std::log((t - a_) / (b_ - a_));
      case Grading::geometric_both: return std::log((t - a_) / (b_ - t));
    }
    return t;
  }

  Scalar from_parameter(Scalar s) const {
    switch (grading_) {
      case Grading::uniform: return a_ + (b_ - a_) * s;
      case Grading::geometric_a: return a_ + (b_ - a_) * std::exp(s);
      case Grading::geometric_both: {
        const Scalar e = std::exp(-std::abs(s));
        return s >= 0 ? (a_ * e + b_) / (1 + e) : (a_ + b_ * e) / (1 + e);
      }
    }
    return s;
  }

 private:
  static std::vector<Scalar> graded_edges(Scalar a, Scalar b, int panels, Scalar depth) {
    std::vector<Scalar> e{a};
    for (int i = 1; i <= panels; ++i) {
      const Scalar s = depth * Scalar(panels - i) / Scalar(panels - 1);
      e.push_back(a + (b - a) * std::exp(-s));
    }
    e.back() = b;
    return e;
  }

  Scalar a_, b_;
  Grading grading_;
  Scalar depth_;
  PanelRule<Scalar> rule_;
  std::vector<Scalar> edges_;
  Vector nodes_, weights_;
};

template <typename Scalar = double>
using GridPtr = std::shared_ptr<const Grid<Scalar>>;

// Node values of a function on a fixed grid.
template <typename Scalar = double>
class GridFunction {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GridFunction(GridPtr<Scalar> grid, Vector values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw Error(ErrorKind::structural, "grid function without grid");
    if (values_.size() != grid_->size())
      throw Error(ErrorKind::structural, "grid function length does not match its grid");
    if (!values_.allFinite()) throw Error(ErrorKind::nonfinite, "grid function has non-finite values");
  }

  static GridFunction constant(GridPtr<Scalar> grid, Scalar c) {
    Vector v = Vector::Constant(grid->size(), c);
    return GridFunction(std::move(grid), std::move(v));
  }

  template <typename F>
  static GridFunction sample(GridPtr<Scalar> grid, F&& f) {
    Vector v(grid->size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f(grid->nodes()[i]);
    return GridFunction(std::move(grid), std::move(v));
  }

  const GridPtr<Scalar>& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  Scalar operator[](Eigen::Index i) const { return values_[i]; }
  Scalar at(Scalar t) const { return grid_->interpolate(values_, t); }

 private:
  GridPtr<Scalar> grid_;
  Vector values_;
};

namespace detail {
template <typename Scalar>
void require_same_grid(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g) {
  if (f.grid() != g.grid())
    throw Error(ErrorKind::structural, "grid functions live on different grids");
}
}  // namespace detail

template <typename Scalar>
GridFunction<Scalar> operator+(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g) {
  detail::require_same_grid(f, g);
  return {f.grid(), f.values() + g.values()};
}

template <typename Scalar>
GridFunction<Scalar> operator-(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g) {
  detail::require_same_grid(f, g);
  return {f.grid(), f.values() - g.values()};
}

template <typename Scalar>
GridFunction<Scalar> operator-(const GridFunction<Scalar>& f) {
  return {f.grid(), -f.values()};
}

// Pointwise product.
template <typename Scalar>
GridFunction<Scalar> operator*(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g) {
  detail::require_same_grid(f, g);
  return {f.grid(), f.values().cwiseProduct(g.values())};
}

template <typename Scalar>
GridFunction<Scalar> operator*(Scalar c, const GridFunction<Scalar>& f) {
  return {f.grid(), c * f.values()};
}

template <typename Scalar>
GridFunction<Scalar> operator*(const GridFunction<Scalar>& f, Scalar c) {
  return c * f;
}

template <typename Scalar>
Scalar integrate(const GridFunction<Scalar>& f) {
  return f.grid()->weights().dot(f.values());
}

template <typename Scalar>
Scalar max_abs(const GridFunction<Scalar>& f) {
  return f.values().cwiseAbs().maxCoeff();
}

namespace detail {
template <typename Scalar, typename Vec>
Scalar lp_norm(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights, const Vec& f, Scalar p) {
  const Scalar m = f.cwiseAbs().maxCoeff();
  if (m == 0) return 0;
  if (p == 2) return m * std::sqrt(weights.dot((f / m).cwiseAbs2()));
  Scalar s = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += weights[i] * std::pow(std::abs(f[i]) / m, p);
  return m * std::pow(s, 1 / p);
}

// h -> |h|^(sigma-1) sgn h
template <typename Vec>
Vec duality_map(const Vec& h, typename Vec::Scalar sigma) {
  if (sigma == 2) return h;
  Vec out(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const auto a = std::abs(h[i]);
    out[i] = a == 0 ? 0 : std::copysign(std::pow(a, sigma - 1), h[i]);
  }
  return out;
}
}  // namespace detail

template <typename Scalar>
Scalar lp_norm(const GridFunction<Scalar>& f, Scalar p) {
  if (!(p > 1)) throw Error(ErrorKind::invalid_argument, "lp_norm: p must exceed 1");
  return detail::lp_norm<Scalar>(f.grid()->weights(), f.values(), p);
}

// (int |w f|^p)^(1/p)
template <typename Scalar>
Scalar weighted_lp_norm(const GridFunction<Scalar>& f, const GridFunction<Scalar>& w, Scalar p) {
  detail::require_same_grid(f, w);
  if (!(p > 1)) throw Error(ErrorKind::invalid_argument, "weighted_lp_norm: p must exceed 1");
  return detail::lp_norm<Scalar>(f.grid()->weights(), Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(f.values().cwiseProduct(w.values())), p);
}

template <typename Scalar>
GridFunction<Scalar> duality_map(const GridFunction<Scalar>& h, Scalar sigma) {
  if (!(sigma > 1)) throw Error(ErrorKind::invalid_argument, "duality_map: sigma must exceed 1");
  return {h.grid(), detail::duality_map(h.values(), sigma)};
}

// Sign changes after zeroing values below tol * max|f|. Empty when f is
// identically zero.
template <typename Vec>
std::optional<int> count_sign_changes(const Vec& f, double tol) {
  using Scalar = typename Vec::Scalar;
  const Scalar m = f.cwiseAbs().maxCoeff();
  if (!(m > 0)) return std::nullopt;
  const Scalar threshold = Scalar(tol) * m;
  int count = 0, last = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (std::abs(f[i]) < threshold) continue;
    const int s = f[i] > 0 ? 1 : -1;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

template <typename Scalar>
std::optional<int> count_sign_changes(const GridFunction<Scalar>& f, double tol) {
  return count_sign_changes(f.values(), tol);
}

namespace detail {
template <typename Scalar>
std::vector<Scalar> sign_change_points(const Grid<Scalar>& grid,
                                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& f,
                                       double tol) {
  std::vector<Scalar> out;
  const Scalar m = f.cwiseAbs().maxCoeff();
  if (!(m > 0)) return out;
  const Scalar threshold = Scalar(tol) * m;
  Eigen::Index last = -1;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (std::abs(f[i]) < threshold) continue;
    if (last >= 0 && (f[i] > 0) != (f[last] > 0)) {
      Scalar lo = grid.nodes()[last], hi = grid.nodes()[i];
      const bool lo_positive = f[last] > 0;
      for (int it = 0; it < 200 && hi - lo > 0; ++it) {
        const Scalar mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        if ((grid.interpolate(f, mid) > 0) == lo_positive) lo = mid;
        else hi = mid;
      }
      out.push_back(lo + (hi - lo) / 2);
    }
    last = i;
  }
  return out;
}
}  // namespace detail

// Locations of the sign changes counted by count_sign_changes, refined on
// the panel interpolant.
template <typename Scalar>
std::vector<Scalar> sign_change_points(const GridFunction<Scalar>& f, double tol) {
  return detail::sign_change_points(*f.grid(), f.values(), tol);
}

// Linear interpolation of f onto another grid; constant extrapolation.
template <typename Scalar>
GridFunction<Scalar> resample_linear(const GridFunction<Scalar>& f, const GridPtr<Scalar>& target) {
  const auto& x = f.grid()->nodes();
  const auto& y = f.values();
  return GridFunction<Scalar>::sample(target, [&](Scalar t) {
    if (t <= x[0]) return y[0];
    if (t >= x[x.size() - 1]) return y[y.size() - 1];
    const auto it = std::upper_bound(x.data(), x.data() + x.size(), t);
    const Eigen::Index j = it - x.data();
    const Scalar s = (t - x[j - 1]) / (x[j] - x[j - 1]);
    return (1 - s) * y[j - 1] + s * y[j];
  });
}

}  // namespace nwidth
