#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "cvqsim/wigner.hpp"

namespace cvq {

/// Truncated number-basis density matrix of a single mode. Construction
/// enforces hermiticity (to 1e-12), trace in (0, 1 + 1e-9], and eigenvalues
/// >= -1e-10; eigenvalues in (-1e-10, 0) are clipped to zero and the trace is
/// restored. The missing trace (truncation) is reported, not hidden.
class DensityMatrix {
 public:
  explicit DensityMatrix(Eigen::MatrixXcd rho);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return mat_; }
  double trace() const;
  double trace_deficit() const { return deficit_; }
  std::vector<double> populations() const;

  static DensityMatrix vacuum(int dim);
  static DensityMatrix fock_state(int k, int dim);
  static DensityMatrix diagonal(const std::vector<double>& pops);
  /// Truncated thermal state with quadrature variance `variance` (>= 1).
  static DensityMatrix thermal(double variance, int dim);

 private:
  Eigen::MatrixXcd mat_;
  double deficit_ = 0.0;
};

struct FockPopulations {
  std::vector<double> p;
  /// 1 - sum(p): probability weight lost to truncation.
  double deficit = 0.0;
  /// Set when sum(p) < 0.99, i.e. the truncation is too harsh.
  bool truncation_warning = false;

  double mean_photon_number() const;
};

/// Diagonal Wigner kernel of |k><k|: ((-1)^k / 2pi) e^{-u/2} L_k(u) with
/// u = x^2 + p^2 in the unit-vacuum convention.
double fock_wigner_diagonal_kernel(int k, double u);

/// Fock populations of a radially symmetric state via the phase-space overlap
/// p_k = 4pi int W W_kk dx dp (the 4pi constant is pinned by the vacuum
/// self-test: vacuum input must give p_0 = 1).
FockPopulations populations_from_radial_wigner(
    const SubtractedStateParams& params, int n_max);

/// Wigner function of an arbitrary truncated density matrix at a point
/// (Moyal kernels; real-valued for Hermitian input).
double wigner_from_density(const DensityMatrix& rho, PhaseSpacePoint pt);

WignerGrid wigner_grid_from_density(const DensityMatrix& rho,
                                    const WignerGridSpec& spec = {},
                                    bool parallel = true);

/// Negativity (int |W| - int W) of the state's Wigner function on a Simpson
/// grid; the normalization check compares against the matrix trace.
NumericNegativity negativity_from_density(const DensityMatrix& rho,
                                          const QuadratureSpec& spec = {},
                                          bool parallel = true);

/// Uhlmann fidelity F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Pure-loss (binomial) channel with transmission eta on the Fock ladder;
/// trace-preserving on the truncated space, identity at eta = 1.
DensityMatrix apply_loss_fock(const DensityMatrix& rho, double eta);

/// Loss channel acting on a raw matrix (no density-matrix validation);
/// the workhorse behind apply_loss_fock and the loss-adjusted tomography.
Eigen::MatrixXcd apply_loss_matrix(const Eigen::MatrixXcd& rho, double eta);

/// Heisenberg-picture adjoint of the loss channel, used to smear measurement
/// operators by a detection efficiency.
Eigen::MatrixXcd apply_loss_dual(const Eigen::MatrixXcd& op, double eta);

/// Inverse of apply_loss_matrix on the truncated space (back substitution
/// along the photon-number diagonals). Undoes detector loss on a
/// reconstructed state; the result is not guaranteed positive for noisy
/// input, so the raw matrix is returned.
Eigen::MatrixXcd apply_loss_inverse(const Eigen::MatrixXcd& rho, double eta);

/// Text format: "dim N" header, then row-major "re im" pairs.
std::string density_to_text(const DensityMatrix& rho);
DensityMatrix density_from_text(std::istream& in);
DensityMatrix density_from_text(const std::string& text);

std::string populations_to_csv(const std::vector<double>& pops);

}  // namespace cvq
