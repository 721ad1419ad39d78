#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>

namespace cvq {

// Quadrature convention used throughout the library: x = a^dag + a,
// p = i(a^dag - a), so the vacuum has unit variance and a physical
// covariance matrix has symplectic eigenvalues >= 1.
inline constexpr const char* kCmConvention = "vacuum-variance=1";
inline constexpr double kPhysicalityTol = 1e-9;

/// Correlated variances V+/V- of the two-mode squeezed resource,
/// V+- = Var(x_A +- x_B)/2 in the unit-vacuum convention.
struct SqueezingSpec {
  double v_plus;
  double v_minus;

  /// Throws std::invalid_argument unless both variances are positive and
  /// v_plus * v_minus >= 1 (uncertainty bound; equality for a pure resource).
  SqueezingSpec(double vp, double vm);

  /// Builds the spec from squeezing/antisqueezing levels in dB.
  static SqueezingSpec from_db(double db_plus, double db_minus);
};

/// Transmission efficiencies of the two lossy channels, each in (0, 1].
struct ChannelParams {
  double eta_a;
  double eta_b;

  ChannelParams(double ea, double eb);
};

/// Two-mode covariance matrix of the standard form
///   [ n 0 c1 0 ; 0 n 0 c2 ; c1 0 m 0 ; 0 c2 0 m ]
/// in mode order (x_A, p_A, x_B, p_B). The resource family produced by
/// cm_from_squeezing has c1 = -c2, but both correlations are kept so that
/// measured matrices breaking the symmetry remain representable.
struct TwoModeCovariance {
  double n = 1.0;
  double m = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double det_a() const { return n * n; }
  double det_b() const { return m * m; }
  double det_full() const { return (n * m - c1 * c1) * (n * m - c2 * c2); }

  /// Symplectic eigenvalues {nu_minus, nu_plus}; both are >= 1 for a
  /// physical state (the vacuum gives exactly {1, 1}).
  std::array<double, 2> symplectic_eigenvalues() const;
  bool is_physical(double tol = kPhysicalityTol) const;

  /// Row-major 4x4 matrix in mode order (x_A, p_A, x_B, p_B).
  std::array<double, 16> to_matrix() const;
};

struct PurityTriple {
  double mu_a;
  double mu_b;
  double mu_ab;
};

/// Covariance matrix of the lossy two-mode squeezed state:
///   n = eta_A (V+ + V-)/2 + (1 - eta_A)
///   m = eta_B (V+ + V-)/2 + (1 - eta_B)
///   c1 = -c2 = -sqrt(eta_A eta_B) (V- - V+)/2
TwoModeCovariance cm_from_squeezing(const SqueezingSpec& spec,
                                    const ChannelParams& ch);

/// dB <-> variance conversion, V = 10^(dB/10).
double db_to_variance(double db);
double variance_to_db(double variance);

/// Local and global purities mu_X = 1/sqrt(det sigma_X).
/// Throws std::invalid_argument for a non-physical matrix.
PurityTriple purities(const TwoModeCovariance& cm);

/// Gaussian steerability G^{B->A} = max{0, (1/2) ln(det sigma_B / det sigma_AB)}.
double steerability_b_to_a(const TwoModeCovariance& cm);

/// Unclamped (signed) value of (1/2) ln(det sigma_B / det sigma_AB); used for
/// threshold root-finding where the sign matters.
double steerability_b_to_a_raw(const TwoModeCovariance& cm);

/// Critical Bob-channel efficiency where m(n-1) = xi c^2, i.e.
///   eta_B* = (s - 1) / (xi q^2 - (s - 1)^2),  s = (V+ + V-)/2, q = (V- - V+)/2.
/// Independent of eta_A. xi = 1 gives the steering threshold; xi < 1 the
/// (dark-count adjusted) negativity threshold. Returns nullopt when no
/// threshold exists in (0, 1].
std::optional<double> steering_threshold_eta_b(const SqueezingSpec& spec,
                                               double xi);

/// Text serialization: one header line with the convention string, then the
/// 4x4 matrix as whitespace-separated reals, row-major.
std::string cm_to_text(const TwoModeCovariance& cm);
TwoModeCovariance cm_from_text(std::istream& in);
TwoModeCovariance cm_from_text(const std::string& text);

}  // namespace cvq
