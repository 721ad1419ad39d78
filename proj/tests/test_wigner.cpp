#include "doctest.h"

#include <cmath>
#include <limits>

#include "cvqsim/quadrature.hpp"
#include "cvqsim/sampling.hpp"
#include "cvqsim/wigner.hpp"

#include "oracles.hpp"

using namespace cvq;

namespace {

SubtractedStateParams a9_params(double xi) {
  return SubtractedStateParams({1.056, 1.056, -0.287, 0.287}, xi);
}

// Random physical member of the symmetric loss family.
SubtractedStateParams random_params(CounterRng& rng, uint64_t& c,
                                    double xi_lo = 0.9, double xi_hi = 1.0) {
  const double vp = 0.4 + 0.55 * rng.uniform_at(c++);
  const double vm = 1.0 / vp + 0.6 * rng.uniform_at(c++);
  const double ea = 0.25 + 0.75 * rng.uniform_at(c++);
  const double eb = 0.25 + 0.75 * rng.uniform_at(c++);
  const double xi = xi_lo + (xi_hi - xi_lo) * rng.uniform_at(c++);
  return SubtractedStateParams::from_squeezing(SqueezingSpec(vp, vm),
                                               ChannelParams(ea, eb), xi);
}

}  // namespace

TEST_CASE("adaptive quadrature sanity (nodes and adaptivity)") {
  auto poly = [](double x) { return x * x * x * x * x * x * x * x * x * x; };
  CHECK(integrate_adaptive(poly, 0.0, 1.0).value ==
        doctest::Approx(1.0 / 11).epsilon(1e-13));
  auto gauss = [](double x) { return std::exp(-x * x); };
  CHECK(integrate_adaptive(gauss, -10.0, 10.0).value ==
        doctest::Approx(std::sqrt(oracle::kPi)).epsilon(1e-13));
}

TEST_CASE("Wigner function is negative at the origin for the measured CM") {
  const SubtractedStateParams params = a9_params(1.0);
  const double w0 = wigner_subtracted(params, {0.0, 0.0});
  CHECK(w0 < 0.0);
  CHECK(w0 == doctest::Approx(-0.0592119768488).epsilon(1e-9));
}

TEST_CASE("product state reduces to the thermal Gaussian") {
  // c = 0 with a thermal mode A: subtraction leaves B untouched.
  const SubtractedStateParams params({1.3, 1.2, 0.0, 0.0}, 0.7);
  const double expected = 1.0 / (2.0 * oracle::kPi * 1.2);
  CHECK(wigner_subtracted(params, {0, 0}) == doctest::Approx(expected).epsilon(1e-12));

  const SubtractedStateParams gauss_only({1.3, 1.2, 0.0, 0.0}, 0.0);
  CHECK(wigner_subtracted(gauss_only, {0, 0}) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("radial path equals the matrix bilinear path") {
  CounterRng rng{7};
  uint64_t c = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const SubtractedStateParams params = random_params(rng, c, 0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
      const PhaseSpacePoint pt{6.0 * (rng.uniform_at(c++) - 0.5),
                               6.0 * (rng.uniform_at(c++) - 0.5)};
      const double radial = wigner_subtracted(params, pt);
      const double general = wigner_subtracted_bilinear(params, pt);
      CHECK(radial == doctest::Approx(general).epsilon(1e-13));
    }
  }
}

TEST_CASE("dark-count mixture is the convex combination of the branches") {
  const SubtractedStateParams pure = a9_params(1.0);
  const SubtractedStateParams mixed = a9_params(0.9);
  const double m = mixed.m;
  for (double x : {0.0, 0.4, 1.1, 2.7}) {
    const double w1 = wigner_subtracted(pure, {x, 0.2});
    const double u = x * x + 0.04;
    const double wb = std::exp(-u / (2 * m)) / (2 * oracle::kPi * m);
    const double expected = 0.9 * w1 + 0.1 * wb;
    CHECK(wigner_subtracted(mixed, {x, 0.2}) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("normalization against an independent midpoint grid") {
  const SubtractedStateParams params = a9_params(0.98);
  auto f = [&](double x, double p) { return wigner_subtracted(params, {x, p}); };
  const double integral =
      oracle::integrate_midpoint_2d(f, 6.5 * std::sqrt(params.m), 900);
  CHECK(integral == doctest::Approx(1.0).epsilon(2e-4));
}

TEST_CASE("radial profile is normalized under the module quadrature") {
  CounterRng rng{19};
  uint64_t c = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const SubtractedStateParams params = random_params(rng, c, 0.0, 1.0);
    const RadialProfile prof = radial_profile(params);
    auto f = [&](double u) { return prof(u); };
    const double integral =
        oracle::kPi * integrate_adaptive(f, 0.0, 80.0 * params.m, 1e-12).value;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("closed-form negativity at the measured CM") {
  const NegativityResult r1 = negativity_closed_form(a9_params(1.0));
  CHECK(r1.negative_region);
  CHECK(r1.r == doctest::Approx(0.7179400017).epsilon(1e-9));
  CHECK(r1.value == doctest::Approx(0.101090422503).epsilon(1e-9));

  const NegativityResult r98 = negativity_closed_form(a9_params(0.98));
  CHECK(r98.value == doctest::Approx(0.089459851319).epsilon(1e-9));

  // No negative region when m(n-1) >= xi c^2.
  const SubtractedStateParams weak({1.5, 1.5, -0.3, 0.3}, 1.0);
  const NegativityResult r0 = negativity_closed_form(weak);
  CHECK(r0.value == 0.0);
  CHECK(!r0.negative_region);
  CHECK(r0.r > 1.0);

  // c = 0: zero with the no-negative-region flag.
  const NegativityResult rc0 =
      negativity_closed_form(SubtractedStateParams({1.3, 1.2, 0, 0}, 1.0));
  CHECK(rc0.value == 0.0);
  CHECK(!rc0.negative_region);
  CHECK(rc0.degenerate);
}

TEST_CASE("numeric negativity agrees with the closed form") {
  const NumericNegativity num = negativity_numeric(a9_params(1.0));
  CHECK(num.value == doctest::Approx(0.101090422503).epsilon(1e-6));
  CHECK(num.wigner_integral == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(num.used_radial);
  // Negative disc radius u0 = 2m(1-r).
  CHECK(num.negative_disc_radius ==
        doctest::Approx(0.771822982562).epsilon(1e-6));

  CounterRng rng{23};
  uint64_t c = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const SubtractedStateParams params = random_params(rng, c);
    const double closed = negativity_closed_form(params).value;
    const double numeric = negativity_numeric(params).value;
    CHECK(std::abs(closed - numeric) < 1e-6);
  }
}

TEST_CASE("2-D grid fallback matches the radial oracle") {
  const SubtractedStateParams params = a9_params(1.0);
  QuadratureSpec spec;
  const NumericNegativity grid = negativity_numeric_grid(params, spec);
  CHECK(grid.value == doctest::Approx(0.101090422503).epsilon(2e-4));
  CHECK(grid.wigner_integral == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(!grid.used_radial);
}

TEST_CASE("vacuum-reduced params give zero negativity") {
  const SubtractedStateParams vac({1.0, 1.0, 0.0, 0.0}, 0.0);
  CHECK(negativity_numeric(vac).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("asymmetric correlations take the general 2-D path") {
  // c1 != -c2: still physical, no radial symmetry.
  const SubtractedStateParams skew({1.056, 1.056, -0.287, 0.283}, 1.0);
  CHECK(!skew.is_radial());
  CHECK(wigner_subtracted(skew, {0.0, 0.0}) < 0.0);
  // x and p profiles now differ.
  CHECK(wigner_subtracted(skew, {1.3, 0.0}) !=
        doctest::Approx(wigner_subtracted(skew, {0.0, 1.3})).epsilon(1e-12));

  const NumericNegativity num = negativity_numeric(skew);
  CHECK(!num.used_radial);
  CHECK(num.value > 0.0);
  CHECK(num.wigner_integral == doctest::Approx(1.0).epsilon(1e-6));

  // Radial-only operations refuse the asymmetric state.
  CHECK_THROWS_AS(radial_profile(skew), std::invalid_argument);
  CHECK_THROWS_AS(marginal_pdf(skew, 0.3), std::invalid_argument);
}

TEST_CASE("discretization failure is reported, not swallowed") {
  QuadratureSpec strict;
  strict.norm_tol = 1e-18;  // unreachable: truncation alone exceeds it
  CHECK_THROWS_AS(negativity_numeric(a9_params(1.0), strict),
                  integration_error);
  QuadratureSpec coarse;
  coarse.grid_points = 21;  // far too coarse for the 1e-6 norm check
  CHECK_THROWS_AS(negativity_numeric_grid(a9_params(1.0), coarse),
                  integration_error);
}

TEST_CASE("negativity from purities equals the closed form") {
  const TwoModeCovariance a9{1.056, 1.056, -0.287, 0.287};
  const PurityTriple mu = purities(a9);
  const NegativityResult from_mu = negativity_from_purities(mu, 1.0);
  CHECK(from_mu.value == doctest::Approx(0.101090422503).epsilon(1e-9));

  // Cross-formula identity on the (0.67, 1.61) state with dark counts.
  const TwoModeCovariance cm =
      cm_from_squeezing(SqueezingSpec(0.67, 1.61), ChannelParams(0.9, 0.9));
  const double via_cm =
      negativity_closed_form(SubtractedStateParams(cm, 0.99)).value;
  const double via_mu = negativity_from_purities(purities(cm), 0.99).value;
  CHECK(via_mu == doctest::Approx(via_cm).epsilon(1e-10));

  CounterRng rng{31};
  uint64_t c = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const SubtractedStateParams params = random_params(rng, c);
    const double closed = negativity_closed_form(params).value;
    const double from_purities =
        negativity_from_purities(purities(params.covariance()), params.xi).value;
    CHECK(std::abs(closed - from_purities) <= 1e-10 * std::max(1.0, closed));
  }

  // Degenerate and inconsistent inputs.
  const NegativityResult degen = negativity_from_purities({1.0, 1.0, 1.0}, 0.9);
  CHECK(degen.value == 0.0);
  CHECK(degen.degenerate);
  CHECK_THROWS_AS(negativity_from_purities({1.0, 0.9, 0.95}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("negative region is exactly the disc u < 2m(1-r)") {
  const SubtractedStateParams params = a9_params(1.0);
  const NegativityResult closed = negativity_closed_form(params);
  const double u0 = 2.0 * params.m * (1.0 - closed.r);
  for (double frac : {0.1, 0.5, 0.9, 0.99}) {
    const double u = frac * u0;
    CHECK(wigner_subtracted(params, {std::sqrt(u), 0.0}) < 0.0);
  }
  for (double frac : {1.01, 1.5, 3.0}) {
    const double u = frac * u0;
    CHECK(wigner_subtracted(params, {std::sqrt(u), 0.0}) > 0.0);
  }

  // r >= 1: no grid point negative beyond rounding.
  const SubtractedStateParams weak({1.5, 1.5, -0.3, 0.3}, 1.0);
  const WignerGrid grid = wigner_grid(weak, {101, 101, 5.0});
  for (double w : grid.w) CHECK(w >= -1e-12);
}

TEST_CASE("Wigner function and negativity do not depend on eta_A") {
  const SqueezingSpec spec(0.74, 1.38);
  const SubtractedStateParams lo =
      SubtractedStateParams::from_squeezing(spec, ChannelParams(0.3, 0.9), 1.0);
  const SubtractedStateParams hi =
      SubtractedStateParams::from_squeezing(spec, ChannelParams(0.9, 0.9), 1.0);
  const WignerGrid grid_lo = wigner_grid(lo, {81, 81, 5.0});
  const WignerGrid grid_hi = wigner_grid(hi, {81, 81, 5.0});
  for (std::size_t i = 0; i < grid_lo.w.size(); ++i) {
    CHECK(std::abs(grid_lo.w[i] - grid_hi.w[i]) <= 1e-12);
  }
  CHECK(std::abs(negativity_closed_form(lo).value -
                 negativity_closed_form(hi).value) <= 1e-12);
}

TEST_CASE("negativity is non-increasing as xi decreases") {
  const TwoModeCovariance a9{1.056, 1.056, -0.287, 0.287};
  double prev = std::numeric_limits<double>::infinity();
  for (double xi : {1.0, 0.99, 0.95, 0.9, 0.8, 0.6, 0.4}) {
    const double n = negativity_closed_form(SubtractedStateParams(a9, xi)).value;
    CHECK(n <= prev + 1e-15);
    prev = n;
  }
}

TEST_CASE("marginal pdf: normalization, Gaussian limit, second moment") {
  const SubtractedStateParams params = a9_params(1.0);
  auto pdf = [&](double x) { return marginal_pdf(params, x); };
  const double span = 10.0 * std::sqrt(params.m);
  CHECK(integrate_adaptive(pdf, -span, span, 1e-12).value ==
        doctest::Approx(1.0).epsilon(1e-9));

  auto x2pdf = [&](double x) { return x * x * marginal_pdf(params, x); };
  CHECK(integrate_adaptive(x2pdf, -span, span, 1e-12).value ==
        doctest::Approx(2.526875).epsilon(1e-9));

  // xi = 0 collapses to the Gaussian of variance m.
  const SubtractedStateParams gauss({1.056, 1.056, -0.287, 0.287}, 0.0);
  for (double x : {0.0, 0.7, 1.9}) {
    const double expected = std::exp(-x * x / (2 * 1.056)) /
                            std::sqrt(2 * oracle::kPi * 1.056);
    CHECK(marginal_pdf(gauss, x) == doctest::Approx(expected).epsilon(1e-12));
  }

  // Non-negative everywhere on the physical family.
  CounterRng rng{37};
  uint64_t c = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const SubtractedStateParams p = random_params(rng, c, 0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
      const double x = 12.0 * (rng.uniform_at(c++) - 0.5);
      CHECK(marginal_pdf(p, x) >= 0.0);
    }
  }
}

TEST_CASE("wigner grid CSV has metadata and parses back") {
  const WignerGrid grid = wigner_grid(a9_params(0.98), {11, 11, 4.0});
  const std::string csv = wigner_grid_to_csv(grid);
  CHECK(csv.find("# grid: nx=11 ny=11") != std::string::npos);
  CHECK(csv.find("x,p,w") != std::string::npos);
  // One data line per grid point.
  std::size_t lines = 0;
  for (char ch : csv) lines += (ch == '\n');
  CHECK(lines == 2 + 11 * 11);
}

TEST_CASE("negativity report lists both routes") {
  const std::string report = negativity_report(a9_params(1.0));
  CHECK(report.find("r = ") != std::string::npos);
  CHECK(report.find("N_closed = 0.1010904225") != std::string::npos);
  CHECK(report.find("N_numeric = 0.101090") != std::string::npos);
  CHECK(report.find("negative_disc_radius = 0.7718") != std::string::npos);
}

TEST_CASE("invalid subtracted-state inputs are rejected") {
  CHECK_THROWS_AS(SubtractedStateParams({1.02, 1.02, -0.5, 0.5}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(SubtractedStateParams({1.056, 1.056, -0.287, 0.287}, 1.5),
                  std::invalid_argument);
  // Subtraction from pure vacuum A is undefined (xi > 0), fine at xi = 0.
  CHECK_THROWS_AS(SubtractedStateParams({1.0, 1.3, 0.0, 0.0}, 0.5),
                  std::invalid_argument);
  CHECK_NOTHROW(SubtractedStateParams({1.0, 1.3, 0.0, 0.0}, 0.0));
}
