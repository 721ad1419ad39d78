#include "doctest.h"

#include <cmath>
#include <complex>

#include "cvqsim/fock.hpp"
#include "cvqsim/quadrature.hpp"
#include "cvqsim/sampling.hpp"

#include "oracles.hpp"

using namespace cvq;

namespace {

SubtractedStateParams a9_params(double xi) {
  return SubtractedStateParams({1.056, 1.056, -0.287, 0.287}, xi);
}

}  // namespace

TEST_CASE("vacuum populations pin the 4pi overlap constant") {
  const SubtractedStateParams vac({1.0, 1.0, 0.0, 0.0}, 0.0);
  const FockPopulations pops = populations_from_radial_wigner(vac, 8);
  CHECK(pops.p[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t k = 1; k < pops.p.size(); ++k) {
    CHECK(std::abs(pops.p[k]) < 1e-9);
  }
  CHECK(!pops.truncation_warning);
}

TEST_CASE("thermal populations are geometric") {
  const double m = 1.054;
  const SubtractedStateParams thermal_params({1.3, m, 0.0, 0.0}, 0.0);
  const FockPopulations pops = populations_from_radial_wigner(thermal_params, 12);
  for (int k = 0; k <= 12; ++k) {
    CHECK(pops.p[static_cast<std::size_t>(k)] ==
          doctest::Approx(oracle::thermal_population(m, k)).epsilon(1e-8));
  }
}

TEST_CASE("subtracted-state populations reproduce the Wigner moment") {
  const SubtractedStateParams params = a9_params(1.0);
  const FockPopulations pops = populations_from_radial_wigner(params, 15);
  CHECK(pops.deficit < 1e-3);
  // <u> of W gives nbar = (<u> - 2)/4; frozen from the marginal's second
  // moment m + c^2/(n-1): nbar = 0.7634375.
  CHECK(pops.mean_photon_number() == doctest::Approx(0.7634375).epsilon(1e-6));
}

TEST_CASE("harsh truncation raises the flag") {
  const FockPopulations pops = populations_from_radial_wigner(a9_params(1.0), 0);
  CHECK(pops.truncation_warning);
  CHECK(pops.deficit > 0.01);
}

TEST_CASE("diagonal Wigner kernels: vacuum and single photon") {
  CHECK(fock_wigner_diagonal_kernel(0, 0.0) ==
        doctest::Approx(1.0 / (2 * oracle::kPi)).epsilon(1e-14));
  CHECK(fock_wigner_diagonal_kernel(1, 0.0) ==
        doctest::Approx(-1.0 / (2 * oracle::kPi)).epsilon(1e-14));

  const DensityMatrix vac = DensityMatrix::vacuum(6);
  for (double u : {0.0, 0.9, 2.7}) {
    const double x = std::sqrt(u);
    CHECK(wigner_from_density(vac, {x, 0.0}) ==
          doctest::Approx(std::exp(-0.5 * u) / (2 * oracle::kPi)).epsilon(1e-12));
  }
  const DensityMatrix one = DensityMatrix::fock_state(1, 6);
  CHECK(wigner_from_density(one, {0.0, 0.0}) ==
        doctest::Approx(-1.0 / (2 * oracle::kPi)).epsilon(1e-12));
}

TEST_CASE("off-diagonal Moyal terms: (|0> + |1>)/sqrt(2)") {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(4, 4);
  rho(0, 0) = rho(1, 1) = 0.5;
  rho(0, 1) = rho(1, 0) = 0.5;
  const DensityMatrix dm(rho);
  // Hand-derived: W(x,p) = e^{-u/2} (u/2 + x) / (2 pi).
  for (double x : {-1.5, -0.3, 0.0, 0.8, 2.0}) {
    for (double p : {-1.0, 0.0, 0.6}) {
      const double u = x * x + p * p;
      const double expected =
          std::exp(-0.5 * u) * (0.5 * u + x) / (2 * oracle::kPi);
      CHECK(wigner_from_density(dm, {x, p}) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("populations -> density -> Wigner round trip") {
  const SubtractedStateParams params = a9_params(0.98);
  const FockPopulations pops = populations_from_radial_wigner(params, 20);
  const DensityMatrix rho = DensityMatrix::diagonal(pops.p);
  for (double x : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    CHECK(wigner_from_density(rho, {x, 0.0}) ==
          doctest::Approx(wigner_subtracted(params, {x, 0.0})).epsilon(1e-4));
  }
}

TEST_CASE("wigner_from_density integrates to the trace") {
  const SubtractedStateParams params = a9_params(1.0);
  const DensityMatrix rho =
      DensityMatrix::diagonal(populations_from_radial_wigner(params, 15).p);
  const NumericNegativity neg = negativity_from_density(rho);
  CHECK(neg.wigner_integral == doctest::Approx(rho.trace()).epsilon(1e-6));
  CHECK(neg.value == doctest::Approx(0.101090422503).epsilon(2e-3));
}

TEST_CASE("fidelity basics") {
  const DensityMatrix vac = DensityMatrix::vacuum(8);
  const DensityMatrix one = DensityMatrix::fock_state(1, 8);
  CHECK(fidelity(vac, vac) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity(vac, one) == doctest::Approx(0.0).epsilon(1e-12));

  const DensityMatrix th = DensityMatrix::thermal(1.054, 8);
  CHECK(fidelity(th, vac) == doctest::Approx(0.973709834469).epsilon(1e-9));
  CHECK(fidelity(th, vac) == doctest::Approx(fidelity(vac, th)).epsilon(1e-12));

  CHECK_THROWS_AS(fidelity(vac, DensityMatrix::vacuum(5)),
                  std::invalid_argument);
}

TEST_CASE("fidelity of commuting diagonal states is (sum sqrt(p q))^2") {
  CounterRng rng{5};
  uint64_t c = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(6), q(6);
    double sp = 0, sq = 0;
    for (int k = 0; k < 6; ++k) {
      p[static_cast<std::size_t>(k)] = rng.uniform_at(c++);
      q[static_cast<std::size_t>(k)] = rng.uniform_at(c++);
      sp += p[static_cast<std::size_t>(k)];
      sq += q[static_cast<std::size_t>(k)];
    }
    double expected = 0.0;
    for (int k = 0; k < 6; ++k) {
      p[static_cast<std::size_t>(k)] /= sp;
      q[static_cast<std::size_t>(k)] /= sq;
      expected += std::sqrt(p[static_cast<std::size_t>(k)] *
                            q[static_cast<std::size_t>(k)]);
    }
    expected *= expected;
    CHECK(fidelity(DensityMatrix::diagonal(p), DensityMatrix::diagonal(q)) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("loss map: identity, single photon, thermal consistency") {
  const DensityMatrix one = DensityMatrix::fock_state(1, 6);
  const DensityMatrix same = apply_loss_fock(one, 1.0);
  CHECK(same.matrix()(1, 1).real() == doctest::Approx(1.0));

  const DensityMatrix lossy = apply_loss_fock(one, 0.9);
  CHECK(lossy.matrix()(0, 0).real() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(lossy.matrix()(1, 1).real() == doctest::Approx(0.9).epsilon(1e-12));

  // thermal(m) -> thermal(1 + eta(m-1)).
  const double m = 1.4, eta = 0.7;
  const DensityMatrix th = DensityMatrix::thermal(m, 40);
  const DensityMatrix th_lossy = apply_loss_fock(th, eta);
  const double m_out = 1.0 + eta * (m - 1.0);
  const auto pops = th_lossy.populations();
  for (int k = 0; k < 10; ++k) {
    CHECK(pops[static_cast<std::size_t>(k)] ==
          doctest::Approx(oracle::thermal_population(m_out, k)).epsilon(1e-8));
  }
}

TEST_CASE("loss maps compose: eta1 after eta2 equals eta1*eta2") {
  CounterRng rng{13};
  uint64_t c = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> p(8);
    double s = 0;
    for (auto& v : p) {
      v = rng.uniform_at(c++);
      s += v;
    }
    for (auto& v : p) v /= s;
    const DensityMatrix rho = DensityMatrix::diagonal(p);
    const double e1 = 0.55 + 0.4 * rng.uniform_at(c++);
    const double e2 = 0.55 + 0.4 * rng.uniform_at(c++);
    const DensityMatrix twice = apply_loss_fock(apply_loss_fock(rho, e2), e1);
    const DensityMatrix once = apply_loss_fock(rho, e1 * e2);
    CHECK((twice.matrix() - once.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(twice.trace() == doctest::Approx(rho.trace()).epsilon(1e-10));
  }
}

TEST_CASE("inverse loss undoes the loss channel on the truncated space") {
  const SubtractedStateParams params =
      SubtractedStateParams({1.056, 1.056, -0.287, 0.287}, 0.98);
  const DensityMatrix rho =
      DensityMatrix::diagonal(populations_from_radial_wigner(params, 12).p);
  const double eta = 0.9;
  const Eigen::MatrixXcd lossy = apply_loss_matrix(rho.matrix(), eta);
  const Eigen::MatrixXcd undone = apply_loss_inverse(lossy, eta);
  CHECK((undone - rho.matrix()).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXcd there =
      apply_loss_matrix(apply_loss_inverse(rho.matrix(), eta), eta);
  CHECK((there - rho.matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("loss dual is the adjoint of the loss channel") {
  // Tr(L(rho) X) == Tr(rho L^dagger(X)) for random diagonal rho / generic X.
  const DensityMatrix rho = DensityMatrix::thermal(1.3, 10);
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(10, 10);
  CounterRng rng{17};
  uint64_t c = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      x(i, j) = std::complex<double>(rng.uniform_at(c++), rng.uniform_at(c++));
    }
  }
  x = (x + x.adjoint()).eval();
  const double eta = 0.8;
  const std::complex<double> lhs =
      (apply_loss_matrix(rho.matrix(), eta) * x).trace();
  const std::complex<double> rhs = (rho.matrix() * apply_loss_dual(x, eta)).trace();
  CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("density matrix validation") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
  m(0, 0) = 1.0;
  m(0, 1) = std::complex<double>(0.1, 0.0);  // not Hermitian
  CHECK_THROWS_AS(DensityMatrix{m}, std::invalid_argument);

  Eigen::MatrixXcd neg = Eigen::MatrixXcd::Zero(3, 3);
  neg(0, 0) = 1.05;
  neg(1, 1) = -0.05;  // far below the clipping floor
  CHECK_THROWS_AS(DensityMatrix{neg}, std::invalid_argument);

  Eigen::MatrixXcd tiny = Eigen::MatrixXcd::Zero(3, 3);
  tiny(0, 0) = 1.0;
  tiny(1, 1) = -5e-11;  // clipped, trace restored
  const DensityMatrix ok(tiny);
  CHECK(ok.populations()[1] >= 0.0);

  Eigen::MatrixXcd big = Eigen::MatrixXcd::Identity(3, 3);
  CHECK_THROWS_AS(DensityMatrix{big}, std::invalid_argument);  // trace 3
}

TEST_CASE("purity of the truncated thermal state matches 1/m") {
  const double m = 1.054;
  const DensityMatrix th = DensityMatrix::thermal(m, 25);
  const double purity = (th.matrix() * th.matrix()).trace().real();
  CHECK(purity == doctest::Approx(1.0 / m).epsilon(1e-8));
}

TEST_CASE("density matrix text round trip") {
  const SubtractedStateParams params = a9_params(0.98);
  const DensityMatrix rho =
      DensityMatrix::diagonal(populations_from_radial_wigner(params, 10).p);
  const DensityMatrix back = density_from_text(density_to_text(rho));
  CHECK((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-11);
  CHECK_THROWS_AS(density_from_text(std::string("rows 3\n")),
                  std::invalid_argument);
}

TEST_CASE("populations CSV") {
  const std::string csv = populations_to_csv({0.5, 0.25, 0.25});
  CHECK(csv == "k,p\n0,0.5\n1,0.25\n2,0.25\n");
}
