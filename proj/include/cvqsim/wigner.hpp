#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "cvqsim/gaussian.hpp"

namespace cvq {

/// State of Bob's mode after a heralded single-photon subtraction on Alice's
/// mode, including the dark-count admixture: W = xi W^{A-} + (1 - xi) W_B.
/// xi is the fraction of heralding clicks that are genuine subtraction events.
struct SubtractedStateParams {
  double n;
  double m;
  double c1;
  double c2;
  double xi;

  /// Validates physicality of the underlying covariance matrix and
  /// xi in (0, 1] (xi = 0 is accepted and reduces to the Gaussian state).
  SubtractedStateParams(const TwoModeCovariance& cm, double xi);

  static SubtractedStateParams from_squeezing(const SqueezingSpec& spec,
                                              const ChannelParams& ch,
                                              double xi);

  /// Effective squared correlation c1 * (-c2); equals c^2 for the c1 = -c2
  /// family the experiment produces.
  double c_sq() const { return -c1 * c2; }

  /// True when c1 = -c2, i.e. the conditional Wigner function is radially
  /// symmetric and the fast radial paths apply.
  bool is_radial() const;

  TwoModeCovariance covariance() const { return {n, m, c1, c2}; }
};

struct PhaseSpacePoint {
  double x;
  double p;
};

/// Reduced radial form W(u) = e^{-u/(2 width)} (quad_coeff u + const_coeff)
/// with u = x^2 + p^2; normalization constants are folded into the
/// coefficients so that the integral over the plane is 1.
struct RadialProfile {
  double quad_coeff;
  double const_coeff;
  double width;

  double operator()(double u) const {
    return std::exp(-u / (2.0 * width)) * (quad_coeff * u + const_coeff);
  }
};

/// Radial profile of the dark-count-mixed subtracted state. Requires
/// radially symmetric params.
RadialProfile radial_profile(const SubtractedStateParams& params);

/// Wigner function of the conditional (mixed) state at a phase-space point.
double wigner_subtracted(const SubtractedStateParams& params,
                         PhaseSpacePoint pt);

/// Same function evaluated through the full 2x2 matrix bilinear form
/// (Schur complement route); works for c1 != -c2 and is the reference the
/// radial optimization is verified against.
double wigner_subtracted_bilinear(const SubtractedStateParams& params,
                                  PhaseSpacePoint pt);

struct NegativityResult {
  double value = 0.0;
  /// r = m(n-1)/(xi c^2); the Wigner function has a negative region iff r < 1.
  double r = 0.0;
  bool negative_region = false;
  /// Set when the inputs describe a correlation-free (vacuum-like) state for
  /// which subtraction statistics are degenerate.
  bool degenerate = false;
};

/// Closed-form negativity (doubled volume of the negative part):
/// N = 2 c^2 xi e^{m(n-1)/(c^2 xi) - 1} / (m(n-1)) - 2 for r < 1, else 0.
/// The r >= 1 clamp is not spelled out by the printed formula but follows
/// from the sign of the quadratic bracket in the Wigner function; see the
/// module notes in the README.
NegativityResult negativity_closed_form(const SubtractedStateParams& params);

/// Same quantity evaluated from the purities of the initial Gaussian state
/// (an independent algebraic route). Throws std::invalid_argument for
/// inconsistent inputs (mu_a = 1 with correlations present).
NegativityResult negativity_from_purities(const PurityTriple& p, double xi);

struct QuadratureSpec {
  /// Radial integration runs over u in [0, u_max_factor * m]; values below
  /// 40 are clamped up to 40.
  double u_max_factor = 40.0;
  double rel_tol = 1e-10;
  /// Integral-of-W sanity bound; exceeding it raises integration_error.
  double norm_tol = 1e-6;
  /// Fallback 2-D grid (general c1 != -c2 states): points per axis (odd) over
  /// [-half_width_sigmas sqrt(m), +half_width_sigmas sqrt(m)]^2.
  int grid_points = 601;
  double grid_half_width_sigmas = 6.0;
};

struct NumericNegativity {
  double value = 0.0;
  /// The quadrature's own estimate of the total integral of W (should be 1).
  double wigner_integral = 0.0;
  /// Radius of the negative disc (radial states; NaN when none or non-radial).
  double negative_disc_radius = 0.0;
  bool used_radial = true;
};

/// Negativity by direct numerical integration, N = int |W| - int W.
/// Radial states use adaptive Gauss-Kronrod quadrature on u with the
/// negative disc located by bisection; general states fall back to a 2-D
/// Simpson grid. Throws integration_error if the computed int W deviates
/// from 1 by more than norm_tol.
NumericNegativity negativity_numeric(const SubtractedStateParams& params,
                                     const QuadratureSpec& spec = {});

/// 2-D Simpson-grid route, exposed for the general-state path and for
/// benchmarking; `parallel` selects the OpenMP kernel or its serial twin.
NumericNegativity negativity_numeric_grid(const SubtractedStateParams& params,
                                          const QuadratureSpec& spec = {},
                                          bool parallel = true);

/// Homodyne marginal P(x) = int W(x, p) dp of the mixed subtracted state.
/// Phase-independent for radial states.
double marginal_pdf(const SubtractedStateParams& params, double x);

struct WignerGridSpec {
  int nx = 201;
  int ny = 201;
  /// Half-width of the grid in units of sqrt(m).
  double half_width_sigmas = 5.0;
};

struct WignerGrid {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0, dx = 0.0;
  double p0 = 0.0, dp = 0.0;
  std::vector<double> w;  // row-major, w[j * nx + i] at (x_i, p_j)

  double x_at(int i) const { return x0 + dx * i; }
  double p_at(int j) const { return p0 + dp * j; }
  double at(int i, int j) const {
    return w[static_cast<std::size_t>(j) * nx + i];
  }
};

WignerGrid wigner_grid(const SubtractedStateParams& params,
                       const WignerGridSpec& spec = {});
WignerGrid wigner_grid_serial(const SubtractedStateParams& params,
                              const WignerGridSpec& spec = {});

/// CSV with a `# grid:` metadata comment line and columns x,p,w.
std::string wigner_grid_to_csv(const WignerGrid& grid);

/// Key-value text record {r, N_closed, N_numeric, negative_disc_radius}.
std::string negativity_report(const SubtractedStateParams& params,
                              const QuadratureSpec& spec = {});

}  // namespace cvq
