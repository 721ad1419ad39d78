#pragma once

#include <string>

#include "cvqsim/fock.hpp"

namespace cvq {

struct QfiReport {
  double f_max = 0.0;
  double optimal_phase = 0.0;
  /// M(rho) = max{F_max - 2, 0} / 4; zero exactly when the excess over the
  /// vacuum baseline is below numerical noise (1e-12).
  double metrological_power = 0.0;
  /// Set when F is phase-independent (number-diagonal states).
  bool phase_independent = false;
};

/// Quantum Fisher information for displacements generated by the quadrature
/// at `phase`, normalized so the vacuum gives exactly 2 (generator with
/// vacuum variance 1/2):
///   F = 2 sum_{j,k} (l_j - l_k)^2 / (l_j + l_k) |<j| g |k>|^2.
double qfi_quadrature(const DensityMatrix& rho, double phase);

/// F maximized over phases in [0, pi): a 64-point grid followed by
/// golden-section refinement; ties resolve to the smallest phase.
QfiReport metrological_power(const DensityMatrix& rho);

/// Key-value text serialization of a report.
std::string qfi_report_to_text(const QfiReport& report);

}  // namespace cvq
