#include "cvqsim/metrology.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "cvqsim/io_util.hpp"

namespace cvq {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Pairs with eigenvalue mass below this floor are skipped in the QFI sum
// (0/0 guard on rank-deficient states).
constexpr double kEigenSumFloor = 1e-12;
// Excess below this is numerical noise, not metrological advantage.
constexpr double kQfiZeroTol = 1e-12;

using Complex = std::complex<double>;

struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
};

EigenSystem decompose(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix());
  return {es.eigenvalues().cwiseMax(0.0), es.eigenvectors()};
}

// Generator g = x_phase / sqrt(2) in the eigenbasis of rho; x_phase has the
// tridiagonal elements <k-1| x_phase |k> = sqrt(k) e^{-i phase}.
Eigen::MatrixXcd generator_in_eigenbasis(const EigenSystem& sys, double phase) {
  const int dim = static_cast<int>(sys.values.size());
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(dim, dim);
  const Complex lower = std::polar(1.0 / std::sqrt(2.0), -phase);
  for (int k = 1; k < dim; ++k) {
    g(k - 1, k) = lower * std::sqrt(static_cast<double>(k));
    g(k, k - 1) = std::conj(g(k - 1, k));
  }
  return sys.vectors.adjoint() * g * sys.vectors;
}

double qfi_from_eigensystem(const EigenSystem& sys, double phase) {
  const Eigen::MatrixXcd g = generator_in_eigenbasis(sys, phase);
  const int dim = static_cast<int>(sys.values.size());
  double f = 0.0;
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < dim; ++k) {
      const double sum = sys.values(j) + sys.values(k);
      if (sum <= kEigenSumFloor) continue;
      const double diff = sys.values(j) - sys.values(k);
      f += diff * diff / sum * std::norm(g(j, k));
    }
  }
  return 2.0 * f;
}

}  // namespace

double qfi_quadrature(const DensityMatrix& rho, double phase) {
  return qfi_from_eigensystem(decompose(rho), phase);
}

QfiReport metrological_power(const DensityMatrix& rho) {
  const EigenSystem sys = decompose(rho);

  constexpr int kGrid = 64;
  double best_f = -1.0, best_phase = 0.0;
  double min_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double phase = kPi * i / kGrid;
    const double f = qfi_from_eigensystem(sys, phase);
    min_f = std::min(min_f, f);
    if (f > best_f) {
      best_f = f;
      best_phase = phase;
    }
  }

  QfiReport report;
  report.phase_independent = (best_f - min_f) <= 1e-10 * std::max(1.0, best_f);
  if (report.phase_independent) {
    report.f_max = qfi_from_eigensystem(sys, 0.0);
    report.optimal_phase = 0.0;
  } else {
    // Golden-section refinement around the best grid point.
    const double step = kPi / kGrid;
    double a = best_phase - step, b = best_phase + step;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = qfi_from_eigensystem(sys, x1);
    double f2 = qfi_from_eigensystem(sys, x2);
    for (int it = 0; it < 60 && (b - a) > 1e-10; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = qfi_from_eigensystem(sys, x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = qfi_from_eigensystem(sys, x1);
      }
    }
    double phase = 0.5 * (a + b);
    if (phase < 0.0) phase += kPi;
    if (phase >= kPi) phase -= kPi;
    const double f_refined = qfi_from_eigensystem(sys, phase);
    if (f_refined >= best_f) {
      best_f = f_refined;
      best_phase = phase;
    }
    report.f_max = best_f;
    report.optimal_phase = best_phase;
  }

  const double excess = report.f_max - 2.0;
  report.metrological_power = excess > kQfiZeroTol ? 0.25 * excess : 0.0;
  return report;
}

std::string qfi_report_to_text(const QfiReport& report) {
  std::ostringstream out;
  out << "f_max = " << format_number(report.f_max) << "\n";
  out << "optimal_phase = " << format_number(report.optimal_phase) << "\n";
  out << "metrological_power = " << format_number(report.metrological_power)
      << "\n";
  out << "phase_independent = " << (report.phase_independent ? "true" : "false")
      << "\n";
  return out.str();
}

}  // namespace cvq
