#include <cmath>
#include <random>

#include "doctest.h"
#include "nwidth/buslaev.hpp"
#include "nwidth/kernel_properties.hpp"
#include "nwidth/kernels.hpp"
#include "oracles.hpp"

using namespace nwidth;

TEST_SUITE("kernels") {
  TEST_CASE("kernel_H: examples") {
    CHECK(kernel_H(0.3, 0.7, 2, 1) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(kernel_H(0.5, 1.0, 3, 1) == doctest::Approx(0.375).epsilon(1e-15));
    for (auto [r, k] : {std::pair{2, 1}, std::pair{3, 2}, std::pair{5, 2}}) CHECK(kernel_H(0.0, 0.6, r, k) == 0);
  }

  TEST_CASE("kernel_H agrees with quadrature of its integral") {
    std::mt19937_64 rng(301);
    std::uniform_real_distribution<double> u(0, 1);
    for (int c = 0; c < 200; ++c) {
      const double t = u(rng), tau = u(rng);
      for (auto [r, k] : {std::pair{2, 1}, std::pair{3, 1}, std::pair{3, 2}, std::pair{4, 2}, std::pair{6, 1}}) {
        const double ref = oracle::H(t, tau, r, k);
        CHECK(std::abs(kernel_H(t, tau, r, k) - ref) <= 1e-14);
      }
    }
  }

  TEST_CASE("kernel_K_l: examples") {
    CHECK(kernel_K_l<double>({0.5}, {0.3}, 1) == 1);
    CHECK(kernel_K_l<double>({0.2}, {0.3}, 1) == 0);
    CHECK(kernel_K_l<double>({0.4, 0.8}, {0.2, 0.6}, 2) == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(oracle::K_l({0.4, 0.8}, {0.2, 0.6}, 2) == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(kernel_K_l<double>({}, {}, 3) == 1);
    CHECK_THROWS_AS(kernel_K_l<double>({0.1}, {}, 2), Error);
  }

  TEST_CASE("kernel_K_rk: examples") {
    CHECK(kernel_K_rk<double>({0.4}, {0.6}, 2, 1) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(kernel_K_rk<double>({}, {}, 3, 1) == 1);
    CHECK(kernel_K_rk<double>({0.3, 0.7}, {0.2, 0.8}, 2, 1) == doctest::Approx(0.16).epsilon(1e-14));
    CHECK(oracle::K_rk_brute({0.4}, {0.6}, 2, 1) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(oracle::K_rk_brute({0.3, 0.7}, {0.2, 0.8}, 2, 1) == doctest::Approx(0.16).epsilon(1e-12));
  }

  TEST_CASE("property: determinant form equals the integral over the cube") {
    std::mt19937_64 rng(302);
    std::uniform_real_distribution<double> u(0, 1);
    for (int c = 0; c < 60; ++c) {
      const int J = 1 + c % 2;
      std::vector<double> mu(J), nu(J);
      for (auto& x : mu) x = u(rng);
      for (auto& x : nu) x = u(rng);
      std::sort(mu.begin(), mu.end());
      std::sort(nu.begin(), nu.end());
      for (auto [r, k] : {std::pair{2, 1}, std::pair{3, 1}, std::pair{3, 2}, std::pair{4, 2}}) {
        const double det = kernel_K_rk(mu, nu, r, k);
        const double ref = oracle::K_rk_brute(mu, nu, r, k);
        CHECK(std::abs(det - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
      }
    }
  }

  TEST_CASE("property: positive on alternating configurations, non-negative on sorted ones") {
    for (const auto& t : run_kernel_properties(200, 303)) {
      INFO(t.property << " r=" << t.r << " k=" << t.k << " worst=" << t.worst);
      CHECK(t.cases > 0);
      CHECK(t.passed == t.cases);
    }
  }

  TEST_CASE("check_alternation: examples") {
    CHECK(check_alternation({{0.5}, {0.4}, 2, 1}));
    CHECK(check_alternation({{0.3, 0.6}, {0.4, 0.5}, 2, 1}));
    // coincident nodes satisfy the strict rule after clamping
    CHECK(check_alternation({{0.3}, {0.3}, 2, 1}));
    CHECK_FALSE(check_alternation({{0.5, 0.6}, {0.1, 0.2}, 2, 1}));
    CHECK_FALSE(check_alternation({{0.3}, {}, 2, 1}));
  }

  TEST_CASE("kernel cache rejects bad configurations") {
    CHECK_THROWS_AS(KernelCache({{0.5, 0.6}, {0.1, 0.2}, 2, 1}), Error);
    CHECK_THROWS_AS(KernelCache({{1.5}, {0.2}, 2, 1}), Error);
    CHECK_THROWS_AS(KernelCache({{0.6, 0.5}, {0.4, 0.7}, 2, 1}), Error);
    CHECK_THROWS_AS(KernelCache({{0.5}, {0.4}, 2, 2}), Error);
  }

  TEST_CASE("kernel_G: empty configuration reduces to H") {
    const KernelCache c2({{}, {}, 2, 1});
    const KernelCache c4({{}, {}, 4, 2});
    for (double t : {0.1, 0.45, 0.9})
      for (double tau : {0.2, 0.45, 0.7}) {
        CHECK(kernel_G(t, tau, c2) == doctest::Approx(std::min(t, tau)).epsilon(1e-14));
        CHECK(c2.G(t, tau) == doctest::Approx(std::min(t, tau)).epsilon(1e-14));
        CHECK(kernel_G(t, tau, c4) == doctest::Approx(oracle::H(t, tau, 4, 2)).epsilon(1e-12));
      }
  }

  TEST_CASE("kernel_G vanishes on the node rows and columns") {
    const KernelCache c({{0.3, 0.6}, {0.4, 0.5}, 2, 1});
    CHECK(c.C() == doctest::Approx(0.3 * 0.5 - 0.3 * 0.4).epsilon(1e-14));
    double gmax = 0;
    for (int i = 1; i < 50; ++i)
      for (int j = 1; j < 50; ++j) gmax = std::max(gmax, std::abs(kernel_G(i / 50.0, j / 50.0, c)));
    for (int j = 1; j < 50; ++j) {
      for (double x : {0.3, 0.6}) CHECK(std::abs(kernel_G(x, j / 50.0, c)) <= 1e-12 * gmax);
      for (double y : {0.4, 0.5}) CHECK(std::abs(kernel_G(j / 50.0, y, c)) <= 1e-12 * gmax);
    }
  }

  TEST_CASE("projection: empty configuration reproduces f") {
    const auto grid = Grid<>::make(0.0, 1.0, 16);
    const auto phi = GridFunction<double>::sample(grid, [](double t) { return std::cos(3 * t); });
    const auto g = GridFunction<double>::constant(grid, 1.0);
    const auto pr = projection_PL(phi, g, KernelCache({{}, {}, 2, 1}));
    CHECK(max_abs(pr.p_part) <= 1e-12 * max_abs(pr.f));
    CHECK(pr.coefficients.size() == 0);
  }

  TEST_CASE("projection: remainder lies in the span of H(., eta)") {
    const auto grid = Grid<>::make(0.0, 1.0, 32);
    const auto one = GridFunction<double>::constant(grid, 1.0);
    const auto pr = projection_PL(one, one, KernelCache({{0.5}, {0.4}, 2, 1}));
    // least-squares fit of p_part by c * min(t, 0.4)
    const auto basis = GridFunction<double>::sample(grid, [](double t) { return std::min(t, 0.4); });
    const double c = integrate(pr.p_part * basis) / integrate(basis * basis);
    CHECK(max_abs(pr.p_part - c * basis) <= 1e-8);
    CHECK(pr.coefficients[0] == doctest::Approx(c).epsilon(1e-8));
    // f(t) = t - t^2/2, G-part vanishes at xi
    CHECK(std::abs(pr.q_part.at(0.5)) <= 1e-10);
    CHECK(pr.f.at(0.5) == doctest::Approx(0.375).epsilon(1e-13));
  }

  TEST_CASE("projection coefficients vanish on a converged triple") {
    const auto grid = Grid<>::make(0.0, 1.0, 64);
    const auto one = GridFunction<double>::constant(grid, 1.0);
    const auto e = ExponentSet::make(2, 1, 2, 2);
    const auto t = solve_level(2, e, one, one);
    const KernelCache cache({t.xi, t.eta, 2, 1});
    const auto pr = projection_PL(t.phi, one, cache);
    CHECK(pr.coefficients.cwiseAbs().maxCoeff() <= 1e-6 * max_abs(t.x));
    CHECK(max_abs(pr.f - pr.q_part) <= 1e-5 * max_abs(t.x));
  }
}
