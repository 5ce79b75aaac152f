#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "isodimer/errors.hpp"
#include "isodimer/gff_lab.hpp"

using namespace isodimer;
namespace {

constexpr double kPi = std::numbers::pi;

// Sum over permutations in canonical pairing order (each pairing once).
double brute_pairings(const Eigen::MatrixXd& c, int k) {
  std::vector<int> p(k);
  std::iota(p.begin(), p.end(), 0);
  double s = 0.0;
  do {
    bool canonical = true;
    for (int i = 0; i + 1 < k; i += 2) canonical = canonical && p[i] < p[i + 1];
    for (int i = 2; i + 1 < k; i += 2) canonical = canonical && p[i - 2] < p[i];
    if (!canonical) continue;
    double prod = 1.0;
    for (int i = 0; i + 1 < k; i += 2) prod *= c(p[i], p[i + 1]);
    s += prod;
  } while (std::next_permutation(p.begin(), p.end()));
  return s;
}

}  // namespace

TEST_CASE("rectangle Green's function") {
  SUBCASE("value against an independent high-precision evaluation") {
    // Computed separately with 30-digit arithmetic through the sn map.
    CHECK(rect_green(1, 1, {0.5, 0.5}, {0.5, 0.25}) ==
          doctest::Approx(-0.121639808850962194916).epsilon(1e-6));
    CHECK(rect_green(1, 1, {0.3, 0.4}, {0.7, 0.65}) ==
          doctest::Approx(-0.049226650202873569043).epsilon(1e-6));
  }
  SUBCASE("symmetry, sign and boundary values") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    for (int t = 0; t < 50; ++t) {
      Point z1{2 * u(rng), u(rng)}, z2{2 * u(rng), u(rng)};
      double g = rect_green(2, 1, z1, z2);
      CHECK(g < 0.0);
      CHECK(g == doctest::Approx(rect_green(2, 1, z2, z1)).epsilon(1e-12));
      Point m1{2 - z1.real(), z1.imag()}, m2{2 - z2.real(), z2.imag()};
      CHECK(g == doctest::Approx(rect_green(2, 1, m1, m2)).epsilon(1e-10));
      CHECK(g == doctest::Approx(rect_green_conformal(2, 1, z1, z2)).epsilon(1e-8));
    }
    CHECK(std::abs(rect_green(1, 1, {0.5, 1e-9}, {0.4, 0.6})) < 1e-8);
    CHECK(std::abs(rect_green(1, 1, {1 - 1e-9, 0.3}, {0.4, 0.6})) < 1e-8);
  }
  SUBCASE("log singularity") {
    // g(z, z + r) - log(r) / (2 pi) tends to a finite limit. Close points
    // need many terms; the series converges like exp(-n pi r).
    Point z{0.45, 0.55};
    double a = rect_green(1, 1, z, z + Point(2e-3, 0), 20000) - std::log(2e-3) / (2 * kPi);
    double b = rect_green(1, 1, z, z + Point(1e-3, 0), 20000) - std::log(1e-3) / (2 * kPi);
    CHECK(std::abs(a - b) < 1e-4);
    CHECK(rect_green(1, 1, z, z + Point(1e-3, 0), 20000) ==
          doctest::Approx(rect_green_conformal(1, 1, z, z + Point(1e-3, 0))).epsilon(1e-8));
  }
  SUBCASE("truncation") {
    SeriesValue v = rect_green_checked(1, 1, {0.3, 0.4}, {0.7, 0.6});
    CHECK(v.truncation < 1e-8);
    // At separation 0.01 the default term count is visibly short, and the
    // estimate says so.
    SeriesValue close = rect_green_checked(1, 1, {0.5, 0.5}, {0.5, 0.51});
    CHECK(close.truncation > 1e-8);
    SeriesValue more = rect_green_checked(1, 1, {0.5, 0.5}, {0.5, 0.51}, 4000);
    CHECK(more.truncation < 1e-8);
    CHECK(std::abs(more.value - rect_green_conformal(1, 1, {0.5, 0.5}, {0.5, 0.51})) < 1e-8);
  }
}

TEST_CASE("half-plane kernels") {
  auto [f0, f1] = halfplane_kernels({0, 1}, {0, 2}, 1.0);
  CHECK(std::abs(f1) < 1e-15);
  CHECK(std::abs(f0 - Complex(0, 1 / (3 * kPi))) < 1e-15);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int t = 0; t < 20; ++t) {
    Complex z1{u(rng) - 1, u(rng)}, z2{u(rng) - 1, u(rng)};
    Complex xi = std::polar(1.0, 2 * kPi * u(rng));
    auto a = halfplane_kernels(z1, z2, xi);
    auto b = halfplane_kernels(z1, z2, -xi);
    CHECK(std::abs(a.first - b.first) < 1e-12);
    CHECK(std::abs(a.second - b.second) < 1e-12);
  }
  try {
    halfplane_kernels({0, -1}, {0, 1}, 1.0);
    FAIL("expected NotUpperHalfPlane");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNotUpperHalfPlane);
  }
  CHECK_THROWS_AS(halfplane_kernels({0, 1}, {0, 1}, 1.0), Error);
}

TEST_CASE("conformal maps") {
  ContinuumDomain sq = ContinuumDomain::rectangle(1, 1);
  ContinuumDomain wide = ContinuumDomain::rectangle(2, 1);
  wide.z0 = {1.0, 0.0};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < 20; ++t) {
    Point z{u(rng), u(rng)};
    Complex w = sq.phi(z);
    CHECK(w.imag() > 0.0);
    CHECK(std::abs(sq.phi_inverse(w) - z) < 1e-9);
    // The Green's function is conformally invariant.
    Point z2{u(rng), u(rng)};
    Point t1 = conformal_transfer(sq, wide, z), t2 = conformal_transfer(sq, wide, z2);
    CHECK(wide.green(t1, t2) == doctest::Approx(sq.green(z, z2)).epsilon(1e-8));
  }
  CHECK(std::abs(sq.phi({0.5, 1e-6})) > 1e3);
}

TEST_CASE("predicted covariance and pairings") {
  ContinuumDomain sq = ContinuumDomain::rectangle(1, 1);
  CHECK(predicted_covariance(sq, {0.3, 0.4}, {0.7, 0.6}) > 0.0);
  CHECK(predicted_covariance(sq, {0.3, 0.4}, {0.7, 0.6}) ==
        doctest::Approx(-sq.green({0.3, 0.4}, {0.7, 0.6}) / kPi));

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd c(6, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j <= i; ++j) c(i, j) = c(j, i) = n(rng);
  }
  CHECK(pairing_moment(c, 2) == doctest::Approx(c(0, 1)));
  CHECK(pairing_moment(c, 3) == 0.0);
  CHECK(pairing_moment(c, 4) ==
        doctest::Approx(c(0, 1) * c(2, 3) + c(0, 2) * c(1, 3) + c(0, 3) * c(1, 2)));
  CHECK(pairing_moment(c, 6) == doctest::Approx(brute_pairings(c, 6)).epsilon(1e-12));

  for (int k : {2, 4, 6}) {
    std::vector<Complex> x;
    for (int i = 0; i < k; ++i) x.emplace_back(n(rng), n(rng));
    PairingCheck pc = pairing_det_check(x);
    CAPTURE(k);
    CHECK(std::abs(pc.det - pc.pairing_sum) < 1e-9 * std::abs(pc.pairing_sum));
  }
  try {
    pairing_det_check({1.0, 2.0, 1.0, 3.0});
    FAIL("expected CoincidentArguments");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCoincidentArguments);
  }
}

TEST_CASE("small convergence report") {
  ReportProbes probes;
  probes.points = {{0.3, 0.4}, {0.7, 0.4}, {0.4, 0.7}, {0.65, 0.65}};
  probes.pairs = {{0, 1}, {0, 2}, {1, 3}};
  probes.quads = {{0, 1, 2, 3}};
  MomentReport r = convergence_report(ContinuumDomain::rectangle(1, 1), LatticeSpec::square(),
                                      {1.0 / 8, 1.0 / 16}, probes);
  REQUIRE(r.per_delta.size() == 2);
  for (const DeltaReport& d : r.per_delta) {
    CHECK(d.pairs.size() == 3);
    CHECK(d.quads.size() == 1);
    CHECK(std::abs(d.fitted_c - 1.0) < 0.3);
    for (const PairRow& p : d.pairs) {
      CHECK(p.exact > 0.0);
      CHECK(std::abs(p.residual - (p.exact - d.fitted_c * p.predicted)) < 1e-12);
    }
    CHECK(d.shape_correlation > 0.95);
    MESSAGE("delta " << d.delta << " c " << d.fitted_c << " residual " << d.relative_residual
                     << " wick " << d.quads[0].relative_error << " shape " << d.shape_correlation
                     << " scale " << d.shape_scale);
  }
  CHECK(r.per_delta[1].relative_residual < r.per_delta[0].relative_residual);
}

TEST_CASE("Green derivative check") {
  ContinuumDomain sq = ContinuumDomain::rectangle(1, 1);
  Point c{0.5, 0.5};
  Complex dir = std::polar(0.125, 0.3);
  GreenDerivative coarse = green_derivative_check(sq, LatticeSpec::square(), 1.0 / 16, c - dir, c + dir);
  GreenDerivative fine = green_derivative_check(sq, LatticeSpec::square(), 1.0 / 32, c - dir, c + dir);
  MESSAGE("relative errors " << coarse.relative_error << " " << fine.relative_error);
  CHECK(coarse.continuum != 0.0);
  CHECK(fine.relative_error < 0.1);
}
