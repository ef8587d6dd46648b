#include <doctest.h>

#include <cmath>
#include <vector>

#include "asepkpz/errors.hpp"
#include "asepkpz/green_identities.hpp"
#include "asepkpz/rng.hpp"
#include "asepkpz/robin_kernel.hpp"
#include "oracles.hpp"

using namespace asepkpz;

namespace {

// Frozen from oracle::f_from_dense_green(100, 0.99, 0.99).
constexpr double kF00 = 0.99666666666665549, kF01 = -0.0033333333333445125;
// Frozen from oracle::c_star_simpson(8, 7/8, 7/8, 64, 4, 40000).
constexpr double kCStar8 = 0.654884208126;

}  // namespace

TEST_CASE("oracle freeze: dense Green and F") {
  CHECK(oracle::dense_green(1, 0.0, 0.0)(0, 0) == doctest::Approx(4.0 / 3).epsilon(1e-15));
  const Eigen::MatrixXd f = oracle::f_from_dense_green(100, 0.99, 0.99);
  CHECK(f(0, 0) == doctest::Approx(kF00).epsilon(1e-12));
  CHECK(f(0, 1) == doctest::Approx(kF01).epsilon(1e-9));
  CHECK(oracle::c_star_simpson(8, 0.875, 0.875, 64.0, 4, 20000) == doctest::Approx(kCStar8).epsilon(1e-10));
}

TEST_CASE("green matrix: N = 1 hand inverse, symmetry, residual") {
  const GreenMatrix g1 = green_matrix(1, 0.0, 0.0);
  CHECK(std::abs(g1.values(0, 0) - 4.0 / 3) <= 1e-14);
  CHECK(std::abs(g1.values(0, 1) - 2.0 / 3) <= 1e-14);
  Rng rng(12);
  for (int rep = 0; rep < 5; ++rep) {
    const double ma = rng.uniform(), mb = rng.uniform();
    const GreenMatrix g = green_matrix(64, ma, mb);
    CHECK((g.values - g.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * g.values.cwiseAbs().maxCoeff());
    CHECK(green_residual(g) <= 1e-10);
    const Eigen::MatrixXd dense = oracle::dense_green(64, ma, mb);
    CHECK((g.values - dense).cwiseAbs().maxCoeff() <= 1e-10 * dense.cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(green_matrix(8, 1.0, 1.0), NumericalError);
}

TEST_CASE("green corner closed form against the dense inverse") {
  CHECK(green_corner_closed_form(1, 0.0, 0.0) == doctest::Approx(4.0 / 3).epsilon(1e-15));
  Rng rng(99);
  for (int n : {1, 8, 64, 200}) {
    for (int rep = 0; rep < 20; ++rep) {
      const double ma = rng.uniform(), mb = rng.uniform();
      const double dense = oracle::dense_green(n, ma, mb)(0, 0);
      INFO("N = " << n << ", mu = " << ma << ", " << mb);
      CHECK(std::abs(green_corner_closed_form(n, ma, mb) - dense) <= 1e-10 * std::max(1.0, std::abs(dense)));
    }
  }
  CHECK_THROWS_AS(green_corner_closed_form(4, 1.0, 1.0), NumericalError);
}

TEST_CASE("green corner: half-line limit of the interval formula") {
  const double eps = 1.0 / 16, A = 1.0;
  const double mu = 1.0 - eps * A;
  CHECK(green_corner_halfline(mu) == doctest::Approx(2.0 / (eps * A)).epsilon(1e-14));
  // relative gap is 1 / ((N + 1)(1 - mu) + 1), so N times it converges to 1 / (1 - mu)
  for (int n : {1000, 100000, 10000000}) {
    const double rel = 1.0 - green_corner_closed_form(n, mu, 0.0) / green_corner_halfline(mu);
    CHECK(rel > 0.0);
    CHECK(std::abs(rel * (n + 1) * (1.0 - mu) - 1.0) <= 20.0 / (n * (1.0 - mu)));
  }
}

TEST_CASE("F matrix: structure, dense-Green route, closed form") {
  const int n = 100;
  const double mu = 1.0 - 1.0 / n;
  const FMatrix f = f_matrix(solve_interval_spectrum(n, mu, mu));
  CHECK(f.diag_spread <= 1e-9);
  CHECK(f.offdiag_spread <= 1e-9);
  CHECK(std::abs(f.diag_minus_off - 1.0) <= 1e-9);
  CHECK(f.route_gap <= 1e-9);
  CHECK((f.values - oracle::f_from_dense_green(n, mu, mu)).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(std::abs(f.values(0, 0) - kF00) <= 1e-9);
  const double eps = 1.0 / n;
  CHECK(std::abs(f.values(0, 0) - (3.0 - eps) / 3.0) <= 1e-9);
  CHECK(std::abs(f.c - eps / 3) <= 1e-9);
  CHECK(f_gradient_structure_error(f) <= 1e-9);
}

TEST_CASE("c: closed form, F extraction, and zero when one side is Neumann") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 4 + static_cast<int>(rng.index(60));
    const double ma = 0.5 + 0.5 * rng.uniform(), mb = 0.5 + 0.5 * rng.uniform();
    const FMatrix f = f_matrix(solve_interval_spectrum(n, ma, mb));
    CHECK(std::abs(f.c - key_identity_c_closed_form(n, ma, mb)) <= 1e-8);
    CHECK(std::abs(f.c - (1.0 - f.values(0, 0))) <= 1e-8);
    CHECK(f.c >= 0.0);
  }
  CHECK(key_identity_c_closed_form(20, 1.0, 0.7) == 0.0);
  CHECK(key_identity_c_closed_form(20, 0.7, 1.0) == 0.0);
  const FMatrix half = f_matrix(solve_interval_spectrum(20, 1.0, 0.7));
  CHECK(std::abs(half.c) <= 1e-9);
}

TEST_CASE("c is O(eps): c N stays bounded") {
  double prev = 0.0;
  for (int n : {16, 64, 256}) {
    const double cn = key_identity_c_closed_form(n, 1.0 - 2.0 / n, 1.0 - 0.5 / n) * n;
    CHECK(cn < 1.0);
    if (prev > 0.0) CHECK(std::abs(cn - prev) <= 0.1 * prev);
    prev = cn;
  }
}

TEST_CASE("key identity: spectral and quadrature routes, N = 100, A = B = 1") {
  const int n = 100;
  const double mu = 1.0 - 1.0 / n;
  const SpectralData spec = solve_interval_spectrum(n, mu, mu);
  const std::vector<std::pair<int, int>> pairs{{0, 0}, {50, 50}, {0, 1}, {10, 70}, {99, 99}};
  const auto quad = key_identity_quadrature(n, mu, mu, pairs);
  REQUIRE(quad.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [x, xb] = pairs[i];
    const KeyIdentityResult s = key_identity_spectral(spec, x, xb);
    const double expect = x == xb ? 1.0 - 0.01 / 3 : -0.01 / 3;
    INFO("pair " << x << ", " << xb);
    CHECK(std::abs(s.value - expect) <= 1e-9);
    CHECK(std::abs(quad[i].value - s.value) <= 1e-7);
    CHECK(quad[i].tail_bound < 1e-10);
  }
}

TEST_CASE("key identity: one Neumann side gives c = 0 on both routes") {
  const int n = 24;
  const SpectralData spec = solve_interval_spectrum(n, 1.0, 0.8);
  const auto quad = key_identity_quadrature(n, 1.0, 0.8, {{3, 3}, {3, 9}});
  CHECK(std::abs(key_identity_spectral(spec, 3, 3).value - 1.0) <= 1e-9);
  CHECK(std::abs(key_identity_spectral(spec, 3, 9).value) <= 1e-9);
  CHECK(std::abs(quad[0].value - 1.0) <= 1e-7);
  CHECK(std::abs(quad[1].value) <= 1e-7);
}

TEST_CASE("key identity: half line gives the indicator") {
  const double mu = 1.0 - 1.0 / 16;
  for (auto [x, xb] : {std::pair{0L, 0L}, std::pair{3L, 3L}, std::pair{0L, 1L}, std::pair{2L, 7L}}) {
    const KeyIdentityResult r = key_identity_halfline(mu, x, xb);
    INFO("pair " << x << ", " << xb);
    CHECK(std::abs(r.value - (x == xb ? 1.0 : 0.0)) <= 1e-7);
  }
  CHECK(std::abs(key_identity_halfline(1.0, 4, 4).value - 1.0) <= 1e-7);
}

TEST_CASE("c-star: dense Simpson oracle at N = 8") {
  const CStarReport r = c_star_interval(8, 0.875, 0.875, 1.0, 0.0, {4});
  REQUIRE(r.values.size() == 1);
  // the integrand has kinks, so panel Gauss-Legendre converges only algebraically here
  CHECK(std::abs(r.values[0] - kCStar8) <= 1e-8);
}

TEST_CASE("c-star: interval N = 32, A = B = 1 stays below 1") {
  std::vector<long> xs;
  for (long x = 1; x <= 31; ++x) xs.push_back(x);
  const CStarReport r = c_star_interval(32, 1.0 - 1.0 / 32, 1.0 - 1.0 / 32, 1.0, 0.0, xs);
  CHECK(r.max_value < 1.0);
  CHECK(r.max_value > 0.0);
  // exponential weight only increases the sum
  const CStarReport w = c_star_interval(32, 1.0 - 1.0 / 32, 1.0 - 1.0 / 32, 1.0, 1.0, xs);
  CHECK(w.max_value >= r.max_value);
}

TEST_CASE("c-star: Neumann half line far from the boundary matches the full line") {
  const double eps = 1.0 / 16, t_end = 1.0 / (eps * eps);
  const long x = 120;
  const CStarReport h = c_star_halfline(eps, 1.0, 1.0, 0.0, {x});
  // full-line sum by composite Simpson in t over the free kernel
  auto integrand = [](double t) {
    const long r = 80;
    const auto p = free_walk_kernel_row(t, r + 1);
    auto pk = [&](long d) { return p[static_cast<std::size_t>(std::abs(d))]; };
    double s = 0.0;
    for (long d = -r; d <= r; ++d) s += std::abs((pk(d + 1) - pk(d)) * (pk(d - 1) - pk(d)));
    return s;
  };
  const int steps = 8000;
  const double dt = t_end / steps;
  double acc = integrand(0.0) + integrand(t_end);
  for (int i = 1; i < steps; ++i) acc += (i % 2 ? 4.0 : 2.0) * integrand(i * dt);
  const double full = acc * dt / 3.0;
  CHECK(h.max_value < 1.0);
  CHECK(std::abs(h.max_value - full) <= 1e-4);
}

TEST_CASE("c-star weighted: value / eps bounded as eps decreases") {
  double lo = 1e300, hi = 0.0;
  for (int n : {16, 32, 64}) {
    const double eps = 1.0 / n;
    const double mu = 1.0 - eps;
    const CStarReport r = c_star_weighted_interval(n, mu, mu, 1.0, 0.0, {n / 4, n / 2, 3 * n / 4});
    const double ratio = r.max_value / eps;
    CHECK(std::isfinite(ratio));
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(hi / lo < 2.0);
}

TEST_CASE("summation by parts: random pairs and the constant case") {
  for (int n : {1, 5, 40}) {
    const SummationByPartsReport r = summation_by_parts_audit(n, 11, 100);
    CHECK(r.trials == 100);
    INFO(r.max_residual_0 << " " << r.max_residual_1 << " " << r.max_residual_2);
    CHECK(r.pass(1e-12));
  }
}
