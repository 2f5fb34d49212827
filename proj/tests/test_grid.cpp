#include <cmath>
#include <random>

#include "doctest.h"
#include "nwidth/grid.hpp"
#include "oracles.hpp"

using namespace nwidth;

namespace {

GridPtr<double> unit(int panels = 64, Grading g = Grading::uniform) { return Grid<>::make(0.0, 1.0, panels, 8, g); }

// sum of a few random sines; smooth, generic sign pattern
GridFunction<double> random_trig(const GridPtr<double>& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-1, 1), freq(0.5, 9), ph(0, 6.283);
  double a[4], w[4], p[4];
  for (int i = 0; i < 4; ++i) a[i] = amp(rng), w[i] = freq(rng), p[i] = ph(rng);
  return GridFunction<double>::sample(grid, [&](double t) {
    double s = 0;
    for (int i = 0; i < 4; ++i) s += a[i] * std::sin(w[i] * t + p[i]);
    return s;
  });
}

}  // namespace

TEST_SUITE("grid") {
  TEST_CASE("gauss-legendre rules integrate polynomials of degree 2n-1 exactly") {
    for (int n : {1, 2, 5, 8, 16}) {
      const auto rule = gauss_legendre<double>(n);
      for (int d = 0; d <= 2 * n - 1; ++d) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], d);
        const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-14));
      }
    }
    const auto r5 = gauss_legendre<double>(5);
    for (int i = 0; i < 5; ++i) {
      CHECK(r5.nodes[i] == doctest::Approx(oracle::gl5_x[i]).epsilon(1e-15));
      CHECK(r5.weights[i] == doctest::Approx(oracle::gl5_w[i]).epsilon(1e-15));
    }
  }

  TEST_CASE("grid nodes are interior and increasing, weights positive and sum to b - a") {
    for (auto g : {Grading::uniform, Grading::geometric_a, Grading::geometric_both}) {
      for (auto [a, b] : {std::pair{0.0, 1.0}, std::pair{-2.0, 3.5}, std::pair{0.0, std::exp(-1.0)}}) {
        const auto grid = Grid<>::make(a, b, 40, 8, g, 30);
        const auto& x = grid->nodes();
        const auto& w = grid->weights();
        CHECK(x[0] > a);
        CHECK(x[x.size() - 1] < b);
        for (Eigen::Index i = 1; i < x.size(); ++i) CHECK(x[i] > x[i - 1]);
        CHECK(w.minCoeff() > 0);
        CHECK(w.sum() == doctest::Approx(b - a).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("graded grid reaches the requested depth") {
    const auto grid = Grid<>::make(0.0, 1.0, 30, 8, Grading::geometric_a, 40);
    CHECK(grid->edges()[1] == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
    const auto both = Grid<>::make(0.0, 1.0, 30, 8, Grading::geometric_both, 20);
    CHECK(both->edges()[1] < 1e-6);
    CHECK(1 - both->edges()[both->edges().size() - 2] < 1e-6);
  }

  TEST_CASE("grid construction errors") {
    CHECK_THROWS_AS(Grid<>::make(1.0, 0.0, 8), Error);
    CHECK_THROWS_AS(Grid<>::make(0.0, 1.0, 0), Error);
    CHECK_THROWS_AS(Grid<>::make(0.0, 1.0, 8, 1), Error);
    CHECK_THROWS_AS(Grid<>::make(0.0, 1.0, 8, 8, Grading::geometric_a, -1.0), Error);
    CHECK(parse_grading("geometric_a") == Grading::geometric_a);
    CHECK_THROWS_AS(parse_grading("log"), Error);
  }

  TEST_CASE("integrate: examples") {
    const auto grid = unit();
    CHECK(integrate(GridFunction<double>::constant(grid, 1.0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(integrate(GridFunction<double>::sample(grid, [](double t) { return t; })) ==
          doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(integrate(GridFunction<double>::sample(grid, [](double t) { return t * t * t; })) - 0.25) <=
          1e-12);
  }

  TEST_CASE("grid function invariants") {
    const auto grid = unit(4);
    const auto other = unit(4);
    CHECK_THROWS_WITH_AS(GridFunction<double>(grid, Eigen::VectorXd::Zero(3)),
                         "grid function length does not match its grid", Error);
    Eigen::VectorXd bad = Eigen::VectorXd::Zero(grid->size());
    bad[2] = std::nan("");
    try {
      GridFunction<double> f(grid, bad);
      FAIL("non-finite values accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::nonfinite);
    }
    const auto f = GridFunction<double>::constant(grid, 1.0);
    const auto g = GridFunction<double>::constant(other, 1.0);
    try {
      (void)(f + g);
      FAIL("grids mixed");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::structural);
    }
  }

  TEST_CASE("weighted_lp_norm: examples") {
    const auto grid = unit();
    const auto one = GridFunction<double>::constant(grid, 1.0);
    const auto id = GridFunction<double>::sample(grid, [](double t) { return t; });
    CHECK(weighted_lp_norm(one, one, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(weighted_lp_norm(id, one, 2.0) == doctest::Approx(1 / std::sqrt(3.0)).epsilon(1e-13));
    CHECK(weighted_lp_norm(one, id, 2.0) == doctest::Approx(1 / std::sqrt(3.0)).epsilon(1e-13));
    // int t^3 = 1/4
    CHECK(lp_norm(id, 3.0) == doctest::Approx(std::pow(0.25, 1 / 3.0)).epsilon(1e-13));
  }

  TEST_CASE("duality_map: examples") {
    const auto grid = unit(1);
    auto at0 = [&](double c, double sigma) { return duality_map(GridFunction<double>::constant(grid, c), sigma)[0]; };
    CHECK(at0(2, 3) == doctest::Approx(4));
    CHECK(at0(-0.5, 2) == doctest::Approx(-0.5));
    CHECK(at0(0, 1.7) == 0);
    CHECK(at0(-2, 3) == doctest::Approx(-4));
    CHECK_THROWS_AS(at0(1, 1.0), Error);
  }

  TEST_CASE("count_sign_changes: examples") {
    const auto grid = Grid<>::make(0.0, 1.0, 128);
    const auto s = GridFunction<double>::sample(grid, [](double t) { return std::sin(2.5 * oracle::pi * t); });
    CHECK(count_sign_changes(s, 1e-8) == 2);
    const auto z = sign_change_points(s, 1e-8);
    REQUIRE(z.size() == 2);
    CHECK(z[0] == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(z[1] == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(count_sign_changes(GridFunction<double>::constant(grid, 1.0), 1e-8) == 0);
    CHECK(count_sign_changes(GridFunction<double>::sample(grid, [](double t) { return t - 0.5; }), 1e-8) == 1);
    CHECK_FALSE(count_sign_changes(GridFunction<double>::constant(grid, 0.0), 1e-8).has_value());
  }

  TEST_CASE("panel integrals and interpolation are exact for polynomials") {
    const auto grid = Grid<>::make(0.0, 2.0, 7, 8, Grading::geometric_a, 6);
    const auto f = GridFunction<double>::sample(grid, [](double t) { return t * t * t - t; });
    const Eigen::VectorXd lo = grid->lower_integral(f.values());
    const Eigen::VectorXd up = grid->upper_integral(f.values());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double t = grid->nodes()[i];
      const double F = t * t * t * t / 4 - t * t / 2;
      CHECK(lo[i] == doctest::Approx(F).epsilon(1e-13).scale(1));
      CHECK(up[i] == doctest::Approx(2.0 - F).epsilon(1e-13).scale(1));
    }
    for (double t : {0.0, 1e-5, 0.3, 1.234, 2.0})
      CHECK(f.at(t) == doctest::Approx(t * t * t - t).epsilon(1e-13).scale(1));
  }

  TEST_CASE("node parameter round trip") {
    for (auto g : {Grading::uniform, Grading::geometric_a, Grading::geometric_both}) {
      const auto grid = Grid<>::make(0.5, 2.0, 12, 8, g, 20);
      for (double t : {0.5 + 1e-7, 0.8, 1.25, 1.9, 2.0 - 1e-6})
        CHECK(grid->from_parameter(grid->to_parameter(t)) == doctest::Approx(t).epsilon(1e-12));
    }
  }

  TEST_CASE("property: duality maps with dual exponents are inverse") {
    std::mt19937_64 rng(101);
    const auto grid = unit(16);
    for (int c = 0; c < 50; ++c) {
      const auto f = random_trig(grid, rng);
      for (double p : {1.5, 2.0, 3.0}) {
        const double pd = p / (p - 1);
        const auto back = duality_map(duality_map(f, p), pd);
        for (Eigen::Index i = 0; i < f.size(); ++i)
          CHECK(std::abs(back[i] - f[i]) <= 1e-10 * std::max(std::abs(f[i]), 1e-300));
      }
    }
  }

  TEST_CASE("property: weighted norm equals the plain norm of the product") {
    std::mt19937_64 rng(102);
    const auto grid = unit(16);
    for (int c = 0; c < 50; ++c) {
      const auto f = random_trig(grid, rng);
      const auto w = random_trig(grid, rng);
      for (double p : {1.3, 2.0, 4.0}) CHECK(weighted_lp_norm(f, w, p) == lp_norm(w * f, p));
    }
  }

  TEST_CASE("property: sign changes ignore positive scaling and negation") {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> scale(1e-6, 1e6);
    const auto grid = unit(64);
    for (int c = 0; c < 100; ++c) {
      const auto f = random_trig(grid, rng);
      const auto n = count_sign_changes(f, 1e-8);
      CHECK(count_sign_changes(scale(rng) * f, 1e-8) == n);
      CHECK(count_sign_changes(-f, 1e-8) == n);
    }
  }

  TEST_CASE("property: integrate is linear") {
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> u(-3, 3);
    const auto grid = unit(32, Grading::geometric_both);
    for (int c = 0; c < 100; ++c) {
      const auto f = random_trig(grid, rng);
      const auto g = random_trig(grid, rng);
      const double al = u(rng), be = u(rng);
      const double lhs = integrate(al * f + be * g);
      const double rhs = al * integrate(f) + be * integrate(g);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * (1 + std::abs(al) + std::abs(be)));
    }
  }
}
