#include "cvqsim/wigner.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cvqsim/io_util.hpp"
#include "cvqsim/parallel.hpp"
#include "cvqsim/quadrature.hpp"

namespace cvq {

namespace {

constexpr double kPi = 3.14159265358979323846;

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

SubtractedStateParams::SubtractedStateParams(const TwoModeCovariance& cm,
                                             double xi_)
    : n(cm.n), m(cm.m), c1(cm.c1), c2(cm.c2), xi(xi_) {
  if (!cm.is_physical()) {
    throw std::invalid_argument(
        "SubtractedStateParams: covariance matrix is not physical");
  }
  if (!(xi >= 0.0) || xi > 1.0) {
    throw std::invalid_argument("SubtractedStateParams: xi must be in [0,1]");
  }
  if (xi > 0.0 && c_sq() != 0.0 && !(n > 1.0)) {
    // c != 0 forces n > 1 for physical states; equality can only be reached
    // through the tolerance of the physicality test.
    throw std::invalid_argument(
        "SubtractedStateParams: correlations require n > 1");
  }
  if (xi > 0.0 && c1 == 0.0 && c2 == 0.0 && n <= 1.0) {
    throw std::invalid_argument(
        "SubtractedStateParams: photon subtraction from a pure vacuum mode A "
        "is undefined; use xi = 0 for the plain Gaussian state");
  }
}

SubtractedStateParams SubtractedStateParams::from_squeezing(
    const SqueezingSpec& spec, const ChannelParams& ch, double xi) {
  return SubtractedStateParams(cm_from_squeezing(spec, ch), xi);
}

bool SubtractedStateParams::is_radial() const {
  const double scale = std::max({1.0, std::abs(c1), std::abs(c2)});
  return std::abs(c1 + c2) <= 1e-12 * scale;
}

RadialProfile radial_profile(const SubtractedStateParams& params) {
  if (!params.is_radial()) {
    throw std::invalid_argument(
        "radial_profile: state is not radially symmetric (c1 != -c2)");
  }
  const double m = params.m;
  const double csq_xi = params.xi * params.c_sq();
  if (csq_xi == 0.0) {
    return {0.0, 1.0 / (2.0 * kPi * m), m};
  }
  const double n1 = params.n - 1.0;
  const double norm = 4.0 * kPi * m * m * m * n1;
  return {csq_xi / norm, (2.0 * m * m * n1 - 2.0 * csq_xi * m) / norm, m};
}

double wigner_subtracted(const SubtractedStateParams& params,
                         PhaseSpacePoint pt) {
  if (params.is_radial()) {
    return radial_profile(params)(pt.x * pt.x + pt.p * pt.p);
  }
  return wigner_subtracted_bilinear(params, pt);
}

double wigner_subtracted_bilinear(const SubtractedStateParams& params,
                                  PhaseSpacePoint pt) {
  const double n = params.n, m = params.m, c1 = params.c1, c2 = params.c2;
  const double u = pt.x * pt.x + pt.p * pt.p;
  const double gauss = std::exp(-u / (2.0 * m)) / (2.0 * kPi * m);
  const double tr_a_minus_2 = 2.0 * (n - 1.0);
  double w_sub;
  if (tr_a_minus_2 <= 0.0 || (c1 == 0.0 && c2 == 0.0 && params.xi == 0.0)) {
    // Degenerate pure-A limit (only reachable with c1 = c2 = 0): the
    // conditional state equals the unconditioned Gaussian.
    w_sub = gauss;
  } else {
    // beta^T sigma_B^-T gamma^T gamma sigma_B^-1 beta + Tr(V_{A|B}) - 2 with
    // sigma_B = m I and gamma = diag(c1, c2).
    const double bilinear =
        (c1 * c1 * pt.x * pt.x + c2 * c2 * pt.p * pt.p) / (m * m);
    const double tr_schur = 2.0 * n - (c1 * c1 + c2 * c2) / m;
    w_sub = gauss * (bilinear + tr_schur - 2.0) / tr_a_minus_2;
  }
  return params.xi * w_sub + (1.0 - params.xi) * gauss;
}

NegativityResult negativity_closed_form(const SubtractedStateParams& params) {
  NegativityResult res;
  const double csq_xi = params.xi * params.c_sq();
  if (csq_xi <= 0.0) {
    res.r = std::numeric_limits<double>::infinity();
    res.degenerate = (params.c_sq() == 0.0);
    return res;
  }
  const double mn1 = params.m * (params.n - 1.0);
  res.r = mn1 / csq_xi;
  if (res.r >= 1.0) {
    return res;
  }
  res.value = 2.0 * csq_xi * std::exp(mn1 / csq_xi - 1.0) / mn1 - 2.0;
  res.negative_region = true;
  return res;
}

NegativityResult negativity_from_purities(const PurityTriple& p, double xi) {
  for (double mu : {p.mu_a, p.mu_b, p.mu_ab}) {
    if (!(mu > 0.0) || mu > 1.0 + 1e-12) {
      throw std::invalid_argument(
          "negativity_from_purities: purities must be in (0,1]");
    }
  }
  if (!(xi >= 0.0) || xi > 1.0) {
    throw std::invalid_argument("negativity_from_purities: xi must be in [0,1]");
  }
  NegativityResult res;
  const double prod = p.mu_a * p.mu_b;
  if (std::abs(1.0 - p.mu_a) <= 1e-12) {
    if (std::abs(p.mu_ab - prod) <= 1e-12) {
      res.r = std::numeric_limits<double>::infinity();
      res.degenerate = true;
      return res;
    }
    throw std::invalid_argument(
        "negativity_from_purities: mu_a = 1 is inconsistent with nonzero "
        "correlations (mu_ab != mu_a mu_b)");
  }
  const double denom = xi * (p.mu_ab - prod);
  if (denom <= 0.0) {
    res.r = std::numeric_limits<double>::infinity();
    res.degenerate = (denom == 0.0);
    return res;
  }
  res.r = (p.mu_ab - p.mu_a * p.mu_ab) / denom;
  if (res.r >= 1.0) {
    return res;
  }
  res.value = 2.0 * xi * (prod - p.mu_ab) * std::exp(res.r - 1.0) /
                  ((p.mu_a - 1.0) * p.mu_ab) -
              2.0;
  res.negative_region = true;
  return res;
}

namespace {

// Locates the (single) sign change of the radial Wigner function. Only uses
// function evaluations so the numeric route stays independent of the
// closed-form sign analysis.
double find_radial_root(const SubtractedStateParams& params, double u_max) {
  auto w = [&](double u) {
    return wigner_subtracted(params, {std::sqrt(u), 0.0});
  };
  double lo = 0.0, hi = u_max;
  if (!(w(lo) < 0.0)) return 0.0;
  if (!(w(hi) > 0.0)) {
    throw integration_error(
        "negativity_numeric: no sign change found inside the integration "
        "domain");
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-16 * u_max; ++it) {
    const double mid = 0.5 * (lo + hi);
    (w(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

NumericNegativity radial_negativity(const SubtractedStateParams& params,
                                    const QuadratureSpec& spec) {
  const double m = params.m;
  const double u_max = std::max(40.0, spec.u_max_factor) * m;
  auto w = [&](double u) {
    return wigner_subtracted(params, {std::sqrt(u), 0.0});
  };

  NumericNegativity out;
  const double u0 = find_radial_root(params, u_max);
  double neg_part = 0.0;
  double pos_part;
  if (u0 > 0.0) {
    neg_part = integrate_adaptive(w, 0.0, u0, spec.rel_tol).value;
    pos_part = integrate_adaptive(w, u0, u_max, spec.rel_tol).value;
    out.negative_disc_radius = std::sqrt(u0);
  } else {
    pos_part = integrate_adaptive(w, 0.0, u_max, spec.rel_tol).value;
    out.negative_disc_radius = quiet_nan();
  }
  // dx dp = pi du for radial integrands.
  out.wigner_integral = kPi * (neg_part + pos_part);
  out.value = -2.0 * kPi * neg_part;
  out.used_radial = true;
  if (std::abs(out.wigner_integral - 1.0) > spec.norm_tol) {
    throw integration_error(
        "negativity_numeric: Wigner integral deviates from 1 beyond norm_tol "
        "(discretization failure)");
  }
  return out;
}

}  // namespace

NumericNegativity negativity_numeric_grid(const SubtractedStateParams& params,
                                          const QuadratureSpec& spec,
                                          bool parallel) {
  const int npts = (spec.grid_points % 2 == 0) ? spec.grid_points + 1
                                               : spec.grid_points;
  if (npts < 5) {
    throw std::invalid_argument("negativity_numeric_grid: grid too small");
  }
  const double half = spec.grid_half_width_sigmas * std::sqrt(params.m);
  const double h = 2.0 * half / (npts - 1);
  auto simpson_w = [&](int i) -> double {
    if (i == 0 || i == npts - 1) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(npts) * npts;
  auto weighted = [&](std::ptrdiff_t idx, bool absolute) {
    const int i = static_cast<int>(idx % npts);
    const int j = static_cast<int>(idx / npts);
    const double x = -half + h * i;
    const double p = -half + h * j;
    const double w = wigner_subtracted(params, {x, p});
    return simpson_w(i) * simpson_w(j) * (absolute ? std::abs(w) : w);
  };
  auto f_plain = [&](std::ptrdiff_t idx) { return weighted(idx, false); };
  auto f_abs = [&](std::ptrdiff_t idx) { return weighted(idx, true); };

  const double cell = (h / 3.0) * (h / 3.0);
  NumericNegativity out;
  if (parallel) {
    out.wigner_integral = cell * blocked_sum(total, f_plain);
    out.value = cell * blocked_sum(total, f_abs) - out.wigner_integral;
  } else {
    out.wigner_integral = cell * blocked_sum_serial(total, f_plain);
    out.value = cell * blocked_sum_serial(total, f_abs) - out.wigner_integral;
  }
  out.negative_disc_radius = quiet_nan();
  out.used_radial = false;
  if (std::abs(out.wigner_integral - 1.0) > spec.norm_tol) {
    throw integration_error(
        "negativity_numeric_grid: Wigner integral deviates from 1 beyond "
        "norm_tol (discretization failure)");
  }
  return out;
}

NumericNegativity negativity_numeric(const SubtractedStateParams& params,
                                     const QuadratureSpec& spec) {
  if (params.is_radial()) {
    return radial_negativity(params, spec);
  }
  return negativity_numeric_grid(params, spec);
}

double marginal_pdf(const SubtractedStateParams& params, double x) {
  if (!params.is_radial()) {
    throw std::invalid_argument(
        "marginal_pdf: only radially symmetric states are supported");
  }
  const double m = params.m;
  const double gauss =
      std::exp(-x * x / (2.0 * m)) / std::sqrt(2.0 * kPi * m);
  const double csq_xi = params.xi * params.c_sq();
  if (csq_xi == 0.0) {
    return gauss;
  }
  const double n1 = params.n - 1.0;
  const double denom = 2.0 * m * m * n1;
  return gauss * (csq_xi * x * x + denom - csq_xi * m) / denom;
}

namespace {

WignerGrid make_grid(const SubtractedStateParams& params,
                     const WignerGridSpec& spec, bool parallel) {
  if (spec.nx < 2 || spec.ny < 2) {
    throw std::invalid_argument("wigner_grid: need at least a 2x2 grid");
  }
  WignerGrid g;
  g.nx = spec.nx;
  g.ny = spec.ny;
  const double half = spec.half_width_sigmas * std::sqrt(params.m);
  g.x0 = -half;
  g.p0 = -half;
  g.dx = 2.0 * half / (spec.nx - 1);
  g.dp = 2.0 * half / (spec.ny - 1);
  g.w.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  auto fill_row = [&](std::ptrdiff_t j) {
    const double p = g.p_at(static_cast<int>(j));
    double* row = g.w.data() + static_cast<std::size_t>(j) * g.nx;
    for (int i = 0; i < g.nx; ++i) {
      row[i] = wigner_subtracted(params, {g.x_at(i), p});
    }
  };
  if (parallel) {
    parallel_for(g.ny, fill_row);
  } else {
    serial_for(g.ny, fill_row);
  }
  return g;
}

}  // namespace

WignerGrid wigner_grid(const SubtractedStateParams& params,
                       const WignerGridSpec& spec) {
  return make_grid(params, spec, true);
}

WignerGrid wigner_grid_serial(const SubtractedStateParams& params,
                              const WignerGridSpec& spec) {
  return make_grid(params, spec, false);
}

std::string wigner_grid_to_csv(const WignerGrid& grid) {
  std::ostringstream out;
  out << "# grid: nx=" << grid.nx << " ny=" << grid.ny
      << " x0=" << format_number(grid.x0) << " dx=" << format_number(grid.dx)
      << " p0=" << format_number(grid.p0) << " dp=" << format_number(grid.dp)
      << " convention=" << kCmConvention << "\n";
  out << "x,p,w\n";
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      out << format_number(grid.x_at(i)) << ',' << format_number(grid.p_at(j))
          << ',' << format_number(grid.at(i, j)) << "\n";
    }
  }
  return out.str();
}

std::string negativity_report(const SubtractedStateParams& params,
                              const QuadratureSpec& spec) {
  const NegativityResult closed = negativity_closed_form(params);
  const NumericNegativity numeric = negativity_numeric(params, spec);
  std::ostringstream out;
  out << "r = " << format_number(closed.r) << "\n";
  out << "N_closed = " << format_number(closed.value) << "\n";
  out << "N_numeric = " << format_number(numeric.value) << "\n";
  out << "negative_disc_radius = " << format_number(numeric.negative_disc_radius)
      << "\n";
  return out.str();
}

}  // namespace cvq
