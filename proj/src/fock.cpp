#include "cvqsim/fock.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cvqsim/io_util.hpp"
#include "cvqsim/parallel.hpp"
#include "cvqsim/quadrature.hpp"

namespace cvq {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHermitianTol = 1e-12;
constexpr double kEigenvalueFloor = -1e-10;

using Complex = std::complex<double>;

}  // namespace

DensityMatrix::DensityMatrix(Eigen::MatrixXcd rho) : mat_(std::move(rho)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() < 1) {
    throw std::invalid_argument("DensityMatrix: matrix must be square");
  }
  const double scale = std::max(1.0, mat_.cwiseAbs().maxCoeff());
  const double herm_err = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
  if (herm_err > kHermitianTol * scale) {
    throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
  }
  mat_ = 0.5 * (mat_ + mat_.adjoint().eval());

  const double tr = mat_.trace().real();
  if (!(tr > 0.0) || tr > 1.0 + 1e-9) {
    throw std::invalid_argument("DensityMatrix: trace must be in (0, 1]");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat_);
  const auto& vals = es.eigenvalues();
  if (vals.minCoeff() < kEigenvalueFloor) {
    throw std::invalid_argument(
        "DensityMatrix: eigenvalue below -1e-10 (not positive semidefinite)");
  }
  if (vals.minCoeff() < 0.0) {
    Eigen::VectorXd clipped = vals.cwiseMax(0.0);
    const double clipped_tr = clipped.sum();
    if (clipped_tr > 0.0) clipped *= tr / clipped_tr;
    mat_ = es.eigenvectors() * clipped.asDiagonal() *
           es.eigenvectors().adjoint();
    mat_ = 0.5 * (mat_ + mat_.adjoint().eval());
  }
  deficit_ = std::max(0.0, 1.0 - mat_.trace().real());
}

double DensityMatrix::trace() const { return mat_.trace().real(); }

std::vector<double> DensityMatrix::populations() const {
  std::vector<double> p(static_cast<std::size_t>(dim()));
  for (int k = 0; k < dim(); ++k) p[static_cast<std::size_t>(k)] = mat_(k, k).real();
  return p;
}

DensityMatrix DensityMatrix::vacuum(int dim) { return fock_state(0, dim); }

DensityMatrix DensityMatrix::fock_state(int k, int dim) {
  if (dim < 1 || k < 0 || k >= dim) {
    throw std::invalid_argument("fock_state: need 0 <= k < dim");
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  rho(k, k) = 1.0;
  return DensityMatrix(rho);
}

DensityMatrix DensityMatrix::diagonal(const std::vector<double>& pops) {
  if (pops.empty()) {
    throw std::invalid_argument("DensityMatrix::diagonal: empty populations");
  }
  const int dim = static_cast<int>(pops.size());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) rho(k, k) = pops[static_cast<std::size_t>(k)];
  return DensityMatrix(rho);
}

DensityMatrix DensityMatrix::thermal(double variance, int dim) {
  if (!(variance >= 1.0)) {
    throw std::invalid_argument("thermal: variance must be >= 1");
  }
  std::vector<double> pops(static_cast<std::size_t>(dim));
  const double t = (variance - 1.0) / (variance + 1.0);
  double pk = 2.0 / (variance + 1.0);
  for (int k = 0; k < dim; ++k) {
    pops[static_cast<std::size_t>(k)] = pk;
    pk *= t;
  }
  return diagonal(pops);
}

double FockPopulations::mean_photon_number() const {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += static_cast<double>(k) * p[k];
  return s;
}

namespace {

// L_k(u) by the three-term recurrence.
double laguerre(int k, double u) {
  if (k == 0) return 1.0;
  double lm1 = 1.0, l = 1.0 - u;
  for (int j = 1; j < k; ++j) {
    const double lp1 = ((2.0 * j + 1.0 - u) * l - j * lm1) / (j + 1.0);
    lm1 = l;
    l = lp1;
  }
  return l;
}

}  // namespace

double fock_wigner_diagonal_kernel(int k, double u) {
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign / (2.0 * kPi) * std::exp(-0.5 * u) * laguerre(k, u);
}

FockPopulations populations_from_radial_wigner(
    const SubtractedStateParams& params, int n_max) {
  if (n_max < 0) {
    throw std::invalid_argument("populations_from_radial_wigner: n_max >= 0");
  }
  if (!params.is_radial()) {
    throw std::invalid_argument(
        "populations_from_radial_wigner: state is not radially symmetric");
  }
  // The overlap integrand decays like e^{-u/(2m)}; populations near the
  // truncation edge sit at 1e-9 and below, so the cutoff must be generous.
  const double u_max = 80.0 * std::max(1.0, params.m);
  FockPopulations out;
  out.p.resize(static_cast<std::size_t>(n_max) + 1);
  for (int k = 0; k <= n_max; ++k) {
    // p_k = 4pi int W W_kk dx dp = 4pi^2 int_0^inf W(u) W_kk(u) du.
    auto f = [&](double u) {
      return wigner_subtracted(params, {std::sqrt(u), 0.0}) *
             fock_wigner_diagonal_kernel(k, u);
    };
    const double integral = integrate_adaptive(f, 0.0, u_max, 1e-11).value;
    double pk = 4.0 * kPi * kPi * integral;
    if (pk < 0.0) {
      if (pk < -1e-8) {
        throw integration_error(
            "populations_from_radial_wigner: strongly negative population");
      }
      pk = 0.0;
    }
    out.p[static_cast<std::size_t>(k)] = pk;
  }
  double sum = 0.0;
  for (double v : out.p) sum += v;
  if (sum > 1.0) {
    // Quadrature noise can push the total marginally above one.
    for (double& v : out.p) v /= sum;
    sum = 1.0;
  }
  out.deficit = 1.0 - sum;
  out.truncation_warning = sum < 0.99;
  return out;
}

namespace {

// Moyal kernel of |hi><lo| (hi >= lo) at a point, in the unit-vacuum
// convention:
//   (1/2pi) (-1)^lo sqrt(lo!/hi!) (x - i p)^{hi-lo} e^{-u/2} L_lo^{hi-lo}(u).
Complex moyal_kernel(int hi, int lo, double x, double p) {
  const int d = hi - lo;
  const double u = x * x + p * p;
  // Generalized Laguerre L_lo^d by recurrence.
  double l = 1.0;
  if (lo >= 1) {
    double lm1 = 1.0;
    l = 1.0 + d - u;
    for (int j = 1; j < lo; ++j) {
      const double lp1 = ((2.0 * j + 1.0 + d - u) * l - (j + d) * lm1) / (j + 1.0);
      lm1 = l;
      l = lp1;
    }
  }
  double ratio = 1.0;  // sqrt(lo!/hi!)
  for (int j = lo + 1; j <= hi; ++j) ratio /= std::sqrt(static_cast<double>(j));
  const double sign = (lo % 2 == 0) ? 1.0 : -1.0;
  const Complex amp = std::pow(Complex(x, -p), d);
  return sign / (2.0 * kPi) * ratio * amp * std::exp(-0.5 * u) * l;
}

}  // namespace

double wigner_from_density(const DensityMatrix& rho, PhaseSpacePoint pt) {
  const auto& mat = rho.matrix();
  const int dim = rho.dim();
  double w = 0.0;
  for (int k = 0; k < dim; ++k) {
    w += mat(k, k).real() * fock_wigner_diagonal_kernel(k, pt.x * pt.x + pt.p * pt.p);
  }
  for (int lo = 0; lo < dim; ++lo) {
    for (int hi = lo + 1; hi < dim; ++hi) {
      // rho_{hi,lo} K_{|hi><lo|} + h.c.
      const Complex contrib = mat(hi, lo) * moyal_kernel(hi, lo, pt.x, pt.p);
      w += 2.0 * contrib.real();
    }
  }
  return w;
}

WignerGrid wigner_grid_from_density(const DensityMatrix& rho,
                                    const WignerGridSpec& spec, bool parallel) {
  if (spec.nx < 2 || spec.ny < 2) {
    throw std::invalid_argument("wigner_grid_from_density: grid too small");
  }
  std::vector<double> pops = rho.populations();
  double nbar = 0.0;
  for (std::size_t k = 0; k < pops.size(); ++k) nbar += static_cast<double>(k) * pops[k];
  const double sigma = std::sqrt(1.0 + 2.0 * nbar);

  WignerGrid g;
  g.nx = spec.nx;
  g.ny = spec.ny;
  const double half = spec.half_width_sigmas * sigma;
  g.x0 = -half;
  g.p0 = -half;
  g.dx = 2.0 * half / (spec.nx - 1);
  g.dp = 2.0 * half / (spec.ny - 1);
  g.w.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  auto fill_row = [&](std::ptrdiff_t j) {
    const double p = g.p_at(static_cast<int>(j));
    double* row = g.w.data() + static_cast<std::size_t>(j) * g.nx;
    for (int i = 0; i < g.nx; ++i) {
      row[i] = wigner_from_density(rho, {g.x_at(i), p});
    }
  };
  if (parallel) {
    parallel_for(g.ny, fill_row);
  } else {
    serial_for(g.ny, fill_row);
  }
  return g;
}

NumericNegativity negativity_from_density(const DensityMatrix& rho,
                                          const QuadratureSpec& spec,
                                          bool parallel) {
  const int npts = (spec.grid_points % 2 == 0) ? spec.grid_points + 1
                                               : spec.grid_points;
  std::vector<double> pops = rho.populations();
  double nbar = 0.0;
  for (std::size_t k = 0; k < pops.size(); ++k) nbar += static_cast<double>(k) * pops[k];
  const double half = spec.grid_half_width_sigmas * std::sqrt(1.0 + 2.0 * nbar);
  const double h = 2.0 * half / (npts - 1);
  auto simpson_w = [&](int i) -> double {
    if (i == 0 || i == npts - 1) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(npts) * npts;
  auto weighted = [&](std::ptrdiff_t idx, bool absolute) {
    const int i = static_cast<int>(idx % npts);
    const int j = static_cast<int>(idx / npts);
    const double w = wigner_from_density(rho, {-half + h * i, -half + h * j});
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
  out.negative_disc_radius = std::numeric_limits<double>::quiet_NaN();
  out.used_radial = false;
  if (std::abs(out.wigner_integral - rho.trace()) > spec.norm_tol) {
    throw integration_error(
        "negativity_from_density: Wigner integral deviates from the trace "
        "beyond norm_tol");
  }
  return out;
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw std::invalid_argument("fidelity: dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix());
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd sqrt_rho = es.eigenvectors() *
                                    vals.cwiseSqrt().asDiagonal() *
                                    es.eigenvectors().adjoint();
  const Eigen::MatrixXcd middle = sqrt_rho * sigma.matrix() * sqrt_rho;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es2(
      0.5 * (middle + middle.adjoint()));
  double sum = 0.0;
  for (int i = 0; i < es2.eigenvalues().size(); ++i) {
    sum += std::sqrt(std::max(0.0, es2.eigenvalues()[i]));
  }
  return sum * sum;
}

namespace {

// c_{n,j} = sqrt(C(n,j) eta^{n-j} (1-eta)^j): amplitude for losing j photons
// out of n. Callers handle eta = 1 as the identity, so eta < 1 here.
Eigen::MatrixXd loss_amplitudes(int dim, double eta) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) {
    for (int j = 0; j <= n; ++j) {
      const double log_choose = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) -
                                std::lgamma(n - j + 1.0);
      const double log_term =
          log_choose + (n - j) * std::log(eta) + j * std::log1p(-eta);
      c(n, j) = std::exp(0.5 * log_term);
    }
  }
  return c;
}

}  // namespace

Eigen::MatrixXcd apply_loss_matrix(const Eigen::MatrixXcd& in, double eta) {
  if (!(eta > 0.0) || eta > 1.0) {
    throw std::invalid_argument("apply_loss_matrix: eta must be in (0,1]");
  }
  if (eta == 1.0) return in;
  const int dim = static_cast<int>(in.rows());
  const Eigen::MatrixXd c = loss_amplitudes(dim, eta);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      Complex sum = 0.0;
      for (int j = 0; a + j < dim && b + j < dim; ++j) {
        sum += c(a + j, j) * c(b + j, j) * in(a + j, b + j);
      }
      out(a, b) = sum;
    }
  }
  return out;
}

DensityMatrix apply_loss_fock(const DensityMatrix& rho, double eta) {
  if (eta == 1.0) return rho;
  return DensityMatrix(apply_loss_matrix(rho.matrix(), eta));
}

Eigen::MatrixXcd apply_loss_inverse(const Eigen::MatrixXcd& in, double eta) {
  if (!(eta > 0.0) || eta > 1.0) {
    throw std::invalid_argument("apply_loss_inverse: eta must be in (0,1]");
  }
  if (eta == 1.0) return in;
  const int dim = static_cast<int>(in.rows());
  const Eigen::MatrixXd c = loss_amplitudes(dim, eta);
  // rho'_{ab} = sum_j c_{a+j,j} c_{b+j,j} rho_{a+j,b+j}: triangular along
  // each (a-b) diagonal, solved from the high-photon end down.
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (int a = dim - 1; a >= 0; --a) {
    for (int b = dim - 1; b >= 0; --b) {
      Complex rest = 0.0;
      for (int j = 1; a + j < dim && b + j < dim; ++j) {
        rest += c(a + j, j) * c(b + j, j) * out(a + j, b + j);
      }
      out(a, b) = (in(a, b) - rest) / (c(a, 0) * c(b, 0));
    }
  }
  return out;
}

Eigen::MatrixXcd apply_loss_dual(const Eigen::MatrixXcd& op, double eta) {
  if (!(eta > 0.0) || eta > 1.0) {
    throw std::invalid_argument("apply_loss_dual: eta must be in (0,1]");
  }
  if (eta == 1.0) return op;
  const int dim = static_cast<int>(op.rows());
  const Eigen::MatrixXd c = loss_amplitudes(dim, eta);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) {
    for (int m = 0; m < dim; ++m) {
      Complex sum = 0.0;
      for (int j = 0; j <= std::min(n, m); ++j) {
        sum += c(n, j) * c(m, j) * op(n - j, m - j);
      }
      out(n, m) = sum;
    }
  }
  return out;
}

std::string density_to_text(const DensityMatrix& rho) {
  std::ostringstream out;
  out << "dim " << rho.dim() << "\n";
  const auto& mat = rho.matrix();
  for (int r = 0; r < rho.dim(); ++r) {
    for (int c = 0; c < rho.dim(); ++c) {
      out << format_number(mat(r, c).real()) << ' '
          << format_number(mat(r, c).imag());
      out << (c + 1 == rho.dim() ? "\n" : " ");
    }
  }
  return out.str();
}

DensityMatrix density_from_text(std::istream& in) {
  std::string tag;
  int dim = 0;
  if (!(in >> tag >> dim) || tag != "dim" || dim < 1) {
    throw std::invalid_argument("density_from_text: expected 'dim N' header");
  }
  Eigen::MatrixXcd mat(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im)) {
        throw std::invalid_argument("density_from_text: truncated matrix data");
      }
      mat(r, c) = Complex(re, im);
    }
  }
  return DensityMatrix(mat);
}

DensityMatrix density_from_text(const std::string& text) {
  std::istringstream in(text);
  return density_from_text(in);
}

std::string populations_to_csv(const std::vector<double>& pops) {
  std::ostringstream out;
  out << "k,p\n";
  for (std::size_t k = 0; k < pops.size(); ++k) {
    out << k << ',' << format_number(pops[k]) << "\n";
  }
  return out.str();
}

}  // namespace cvq
