#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "nwidth/rl_operators.hpp"
#include "oracles.hpp"

using namespace nwidth;

namespace {

using GF = GridFunction<double>;

GridPtr<double> unit(int panels = 32) { return Grid<>::make(0.0, 1.0, panels); }

GF poly(const GridPtr<double>& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(-1, 1);
  const double a0 = c(rng), a1 = c(rng), a2 = c(rng), a3 = c(rng), w = 1 + 4 * std::abs(c(rng));
  return GF::sample(grid, [=](double t) { return a0 + a1 * t + a2 * t * t + a3 * std::cos(w * t); });
}

GF positive(const GridPtr<double>& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(0.2, 2);
  const double a = c(rng), b = c(rng), w = 3 * c(rng);
  return GF::sample(grid, [=](double t) { return a + b * std::sin(w * t) * std::sin(w * t); });
}

}  // namespace

TEST_SUITE("rl_operators") {
  TEST_CASE("rl_lower and rl_upper: examples") {
    const auto grid = unit();
    const auto one = GF::constant(grid, 1.0);
    const auto id = GF::sample(grid, [](double t) { return t; });
    for (double t : {0.1, 0.5, 0.93}) {
      CHECK(rl_lower(RLSpec<double>{1}, one).at(t) == doctest::Approx(t).epsilon(1e-13));
      CHECK(rl_lower(RLSpec<double>{2}, one).at(t) == doctest::Approx(t * t / 2).epsilon(1e-13));
      CHECK(rl_lower(RLSpec<double>{3}, one).at(t) == doctest::Approx(t * t * t / 6).epsilon(1e-13));
      CHECK(rl_lower(RLSpec<double>{1, id}, one).at(t) == doctest::Approx(t * t / 2).epsilon(1e-13));
      CHECK(rl_lower(RLSpec<double>{1, std::nullopt, 2.0 * one}, one).at(t) == doctest::Approx(2 * t).epsilon(1e-13));
      RLSpec<double> up{1};
      up.anchor = Anchor::upper;
      CHECK(rl_upper(up, one).at(t) == doctest::Approx(1 - t).epsilon(1e-13));
      up.order = 2;
      CHECK(rl_upper(up, one).at(t) == doctest::Approx((1 - t) * (1 - t) / 2).epsilon(1e-13));
    }
    CHECK_THROWS_AS(rl_lower(RLSpec<double>{0}, one), Error);
    RLSpec<double> up{1};
    up.anchor = Anchor::upper;
    CHECK_THROWS_AS(rl_lower(up, one), Error);
  }

  TEST_CASE("composite_op: examples") {
    const auto grid = unit();
    const auto one = GF::constant(grid, 1.0);
    const auto zero = GF::constant(grid, 0.0);
    CHECK(composite_op(2, 1, one, one, one).at(1.0) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(composite_op(3, 1, one, one, one).at(1.0) == doctest::Approx(1.0 / 6).epsilon(1e-13));
    CHECK(composite_op(3, 2, one, one, one).at(1.0) == doctest::Approx(1.0 / 3).epsilon(1e-13));
    CHECK(max_abs(composite_op(2, 1, one, zero, one)) == 0);
    CHECK(max_abs(composite_op(2, 1, zero, one, one)) == 0);
    for (double t : {0.2, 0.7})
      CHECK(composite_op(2, 1, one, one, one).at(t) == doctest::Approx(t - t * t / 2).epsilon(1e-13));
    CHECK_THROWS_AS(composite_op(2, 3, one, one, one), Error);
  }

  TEST_CASE("composite_op rejects non-integrable products") {
    const auto grid = unit(4);
    Eigen::VectorXd big = Eigen::VectorXd::Constant(grid->size(), 1e308);
    const GF g(grid, big);
    const auto one = GF::constant(grid, 1.0);
    try {
      (void)composite_op(2, 1, g, 10.0 * one, 10.0 * one);
      FAIL("overflow not reported");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::nonfinite);
    }
  }

  TEST_CASE("operator_matrix: top singular value of the base case") {
    const auto grid = unit(64);
    REQUIRE(grid->size() == 512);
    const auto one = GF::constant(grid, 1.0);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(operator_matrix(2, 1, one, one));
    const auto s = svd.singularValues();
    for (int n = 0; n < 4; ++n) CHECK(s[n] == doctest::Approx(1 / oracle::base_theta(n)).epsilon(1e-10));
  }

  TEST_CASE("operator_matrix: zero weight gives the zero matrix") {
    const auto grid = unit(4);
    const auto one = GF::constant(grid, 1.0);
    const auto zero = GF::constant(grid, 0.0);
    CHECK(operator_matrix(2, 1, one, zero).cwiseAbs().maxCoeff() == 0);
  }

  TEST_CASE("write_matrix: format") {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4.5, -5, 0;
    std::ostringstream os;
    write_matrix(os, m);
    CHECK(os.str() == "2 3\n1 2 3\n4.5 -5 0\n");
  }

  TEST_CASE("property: swapping g and v with k -> r-k keeps the singular values") {
    std::mt19937_64 rng(201);
    const auto grid = unit(12);
    for (int c = 0; c < 12; ++c) {
      const auto g = positive(grid, rng), v = positive(grid, rng);
      for (auto [r, k] : {std::pair{2, 1}, std::pair{3, 1}, std::pair{4, 3}}) {
        Eigen::BDCSVD<Eigen::MatrixXd> a(operator_matrix(r, k, g, v)), b(operator_matrix(r, r - k, v, g));
        for (int n = 0; n < 6; ++n)
          CHECK(std::abs(a.singularValues()[n] - b.singularValues()[n]) <= 1e-8 * a.singularValues()[0]);
      }
    }
  }

  TEST_CASE("property: the dual composite is the adjoint") {
    std::mt19937_64 rng(202);
    const auto grid = Grid<>::make(0.0, 1.0, 16, 8, Grading::geometric_both, 10);
    for (int c = 0; c < 100; ++c) {
      const auto g = positive(grid, rng), w = positive(grid, rng);
      const auto phi = poly(grid, rng), psi = poly(grid, rng);
      for (auto [r, k] : {std::pair{2, 1}, std::pair{3, 2}, std::pair{4, 1}}) {
        const double lhs = integrate(composite_op(r, k, g, w, phi) * psi);
        const double rhs = integrate(phi * composite_op(r, r - k, w, g, psi));
        const double scale = max_abs(g) * max_abs(w) * max_abs(phi) * max_abs(psi);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
      }
    }
  }

  TEST_CASE("property: composite_op is linear in phi") {
    std::mt19937_64 rng(203);
    std::uniform_real_distribution<double> u(-2, 2);
    const auto grid = unit(16);
    for (int c = 0; c < 100; ++c) {
      const auto g = positive(grid, rng), w = positive(grid, rng);
      const auto f = poly(grid, rng), h = poly(grid, rng);
      const double al = u(rng), be = u(rng);
      const auto lhs = composite_op(3, 1, g, w, al * f + be * h);
      const auto rhs = al * composite_op(3, 1, g, w, f) + be * composite_op(3, 1, g, w, h);
      CHECK(max_abs(lhs - rhs) <= 1e-12 * (1 + max_abs(lhs)));
    }
  }

  TEST_CASE("property: x vanishes to order k at a and y to order r-k at b") {
    std::mt19937_64 rng(204);
    const auto grid = Grid<>::make(0.0, 1.0, 24, 8, Grading::geometric_both, 12);
    for (int c = 0; c < 50; ++c) {
      const auto g = positive(grid, rng), w = positive(grid, rng), phi = positive(grid, rng);
      for (auto [r, k] : {std::pair{2, 1}, std::pair{4, 2}, std::pair{3, 2}}) {
        const auto x = composite_op(r, k, g, w, phi);
        CHECK(std::abs(x.at(0.0)) <= 1e-14 * max_abs(x));
        // x(t) / t^k tends to a finite non-zero limit
        const double r1 = x.at(1e-4) / std::pow(1e-4, k), r2 = x.at(1e-5) / std::pow(1e-5, k);
        CHECK(r1 == doctest::Approx(r2).epsilon(1e-3));
        RLSpec<double> up{r - k, g};
        up.anchor = Anchor::upper;
        const auto u = rl_upper(up, phi);
        CHECK(std::abs(u.at(1.0)) <= 1e-14 * max_abs(u));
        const double s1 = u.at(1 - 1e-4) / std::pow(1e-4, r - k), s2 = u.at(1 - 1e-5) / std::pow(1e-5, r - k);
        CHECK(s1 == doctest::Approx(s2).epsilon(1e-3));
      }
    }
  }
}
