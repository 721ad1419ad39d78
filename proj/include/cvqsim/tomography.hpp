#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "cvqsim/fock.hpp"
#include "cvqsim/sampling.hpp"

namespace cvq {

struct MleOptions {
  int n_max = 15;
  int max_iterations = 2000;
  /// Relative log-likelihood change that counts as converged.
  double tolerance = 1e-9;
  /// When set, measurement operators are smeared by this detection
  /// efficiency (binomial mixing), so the reconstruction refers to the state
  /// *before* the detector loss.
  std::optional<double> detection_efficiency;
};

/// Covariance-matrix estimate from joint two-mode records. Diagonal entries
/// are sample variances; the cross terms use the difference-variance
/// identity Cov(x_A x_B) = [Var x_A + Var x_B - Var(x_A - x_B)]/2. Standard
/// errors come from 20 contiguous batches.
struct CmEstimate {
  double var_xa = 0, var_pa = 0, var_xb = 0, var_pb = 0;
  double cov_xx = 0, cov_pp = 0;
  double se_var_xa = 0, se_var_pa = 0, se_var_xb = 0, se_var_pb = 0;
  double se_cov_xx = 0, se_cov_pp = 0;

  TwoModeCovariance covariance() const {
    return {0.5 * (var_xa + var_pa), 0.5 * (var_xb + var_pb), cov_xx, cov_pp};
  }
  double max_standard_error() const;
};

/// Throws std::invalid_argument for fewer than 100 samples.
CmEstimate estimate_cm(std::span<const TwoModeSample> samples);

/// Number-basis quadrature wavefunctions psi_k(x) for the phase-0 quadrature,
/// computed with the normalized Hermite recurrence (no overflow up to high
/// n_max). In this convention <x^2> = 1 on |0>.
void quadrature_wavefunctions(double x, int n_max, std::span<double> out);

/// Vacuum second moment computed from psi_0 by quadrature; equals 1 in the
/// unit-vacuum convention. Asserted at workspace construction (convention
/// lock).
double quadrature_vacuum_second_moment();

/// Precomputed per-record measurement data for the iterative reconstruction,
/// grouped by homodyne phase.
struct MleWorkspace {
  struct PhaseGroup {
    double phase = 0.0;
    Eigen::MatrixXd h;  // one row of wavefunction values per record
  };
  int dim = 0;
  std::size_t record_count = 0;
  std::optional<double> detection_efficiency;
  std::vector<PhaseGroup> groups;
};

MleWorkspace build_mle_workspace(std::span<const QuadratureRecord> records,
                                 int n_max,
                                 std::optional<double> detection_efficiency = {});

struct MleStepResult {
  /// R = (1/N) sum_i E_i / Tr(rho E_i), the expectation-maximization operator.
  Eigen::MatrixXcd r_op;
  /// Log-likelihood of the *input* state.
  double log_likelihood = 0.0;
};

/// One R-operator evaluation; `parallel` switches between the OpenMP kernel
/// and its serial twin (identical blocked accumulation order, bit-equal).
MleStepResult mle_step(const MleWorkspace& ws, const Eigen::MatrixXcd& rho,
                       bool parallel = true);

/// Plain per-record reference implementation (complex projectors, in-order
/// summation); kept for validating the grouped kernel.
MleStepResult mle_step_reference(const MleWorkspace& ws,
                                 const Eigen::MatrixXcd& rho);

double mle_log_likelihood(const MleWorkspace& ws, const Eigen::MatrixXcd& rho,
                          bool parallel = true);

struct MleResult {
  DensityMatrix rho;
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
  /// Log-likelihood of each iterate; non-decreasing (the update is diluted
  /// whenever a full step would overshoot).
  std::vector<double> ll_trace;
};

/// Iterative maximum-likelihood reconstruction (R rho R fixed point) from
/// bin-free homodyne records. Returns the result even when the iteration
/// limit is reached (converged = false).
MleResult mle_reconstruct(std::span<const QuadratureRecord> records,
                          const MleOptions& opts = {});

}  // namespace cvq
