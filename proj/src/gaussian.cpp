#include "cvqsim/gaussian.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cvqsim/io_util.hpp"

namespace cvq {

SqueezingSpec::SqueezingSpec(double vp, double vm) : v_plus(vp), v_minus(vm) {
  if (!(vp > 0.0) || !(vm > 0.0)) {
    throw std::invalid_argument("SqueezingSpec: variances must be positive");
  }
  if (vp * vm < 1.0 - 1e-12) {
    throw std::invalid_argument(
        "SqueezingSpec: v_plus * v_minus >= 1 violated (uncertainty bound)");
  }
}

SqueezingSpec SqueezingSpec::from_db(double db_plus, double db_minus) {
  return SqueezingSpec(db_to_variance(db_plus), db_to_variance(db_minus));
}

ChannelParams::ChannelParams(double ea, double eb) : eta_a(ea), eta_b(eb) {
  if (!(ea > 0.0) || ea > 1.0 || !(eb > 0.0) || eb > 1.0) {
    throw std::invalid_argument("ChannelParams: efficiencies must be in (0,1]");
  }
}

std::array<double, 2> TwoModeCovariance::symplectic_eigenvalues() const {
  // Standard two-mode invariants: Delta = det A + det B + 2 det C,
  // nu^2 = (Delta -+ sqrt(Delta^2 - 4 det sigma)) / 2.
  const double delta = det_a() + det_b() + 2.0 * c1 * c2;
  const double det = det_full();
  double disc = delta * delta - 4.0 * det;
  if (disc < 0.0) disc = 0.0;  // rounding guard
  const double root = std::sqrt(disc);
  const double lo = 0.5 * (delta - root);
  const double hi = 0.5 * (delta + root);
  return {std::sqrt(std::max(lo, 0.0)), std::sqrt(std::max(hi, 0.0))};
}

bool TwoModeCovariance::is_physical(double tol) const {
  if (!(n > 0.0) || !(m > 0.0)) return false;
  const auto nu = symplectic_eigenvalues();
  return nu[0] >= 1.0 - tol;
}

std::array<double, 16> TwoModeCovariance::to_matrix() const {
  return {n,  0,  c1, 0,   //
          0,  n,  0,  c2,  //
          c1, 0,  m,  0,   //
          0,  c2, 0,  m};
}

TwoModeCovariance cm_from_squeezing(const SqueezingSpec& spec,
                                    const ChannelParams& ch) {
  const double s = 0.5 * (spec.v_plus + spec.v_minus);
  const double q = 0.5 * (spec.v_minus - spec.v_plus);
  const double c = -std::sqrt(ch.eta_a * ch.eta_b) * q;
  TwoModeCovariance cm;
  cm.n = ch.eta_a * s + (1.0 - ch.eta_a);
  cm.m = ch.eta_b * s + (1.0 - ch.eta_b);
  cm.c1 = c;
  cm.c2 = -c;
  return cm;
}

double db_to_variance(double db) {
  if (!std::isfinite(db)) {
    throw std::invalid_argument("db_to_variance: non-finite input");
  }
  return std::pow(10.0, db / 10.0);
}

double variance_to_db(double variance) {
  if (!(variance > 0.0)) {
    throw std::invalid_argument("variance_to_db: variance must be positive");
  }
  return 10.0 * std::log10(variance);
}

PurityTriple purities(const TwoModeCovariance& cm) {
  if (!cm.is_physical()) {
    throw std::invalid_argument("purities: covariance matrix is not physical");
  }
  PurityTriple p;
  p.mu_a = 1.0 / std::sqrt(cm.det_a());
  p.mu_b = 1.0 / std::sqrt(cm.det_b());
  p.mu_ab = 1.0 / std::sqrt(cm.det_full());
  return p;
}

double steerability_b_to_a_raw(const TwoModeCovariance& cm) {
  if (!cm.is_physical()) {
    throw std::invalid_argument(
        "steerability_b_to_a: covariance matrix is not physical");
  }
  return 0.5 * std::log(cm.det_b() / cm.det_full());
}

double steerability_b_to_a(const TwoModeCovariance& cm) {
  return std::max(0.0, steerability_b_to_a_raw(cm));
}

std::optional<double> steering_threshold_eta_b(const SqueezingSpec& spec,
                                               double xi) {
  if (!(xi > 0.0) || xi > 1.0) {
    throw std::invalid_argument("steering_threshold_eta_b: xi must be in (0,1]");
  }
  if (!(spec.v_plus < 1.0 && spec.v_minus > 1.0)) {
    throw std::invalid_argument(
        "steering_threshold_eta_b: spec must satisfy v_plus < 1 < v_minus");
  }
  const double s1 = 0.5 * (spec.v_plus + spec.v_minus) - 1.0;
  const double q = 0.5 * (spec.v_minus - spec.v_plus);
  const double denom = xi * q * q - s1 * s1;
  if (denom <= 0.0) return std::nullopt;
  const double eta = s1 / denom;
  if (eta > 1.0) return std::nullopt;
  return eta;
}

std::string cm_to_text(const TwoModeCovariance& cm) {
  std::ostringstream out;
  out << kCmConvention << "\n";
  const auto mat = cm.to_matrix();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      out << format_number(mat[static_cast<std::size_t>(4 * r + c)]);
      out << (c == 3 ? "\n" : " ");
    }
  }
  return out.str();
}

TwoModeCovariance cm_from_text(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::invalid_argument("cm_from_text: empty input");
  }
  if (header.find(kCmConvention) == std::string::npos) {
    throw std::invalid_argument(
        "cm_from_text: missing convention header '" +
        std::string(kCmConvention) + "'");
  }
  std::array<double, 16> mat{};
  for (auto& v : mat) {
    if (!(in >> v)) {
      throw std::invalid_argument("cm_from_text: expected 16 matrix entries");
    }
  }
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  if (!near(mat[0], mat[5]) || !near(mat[10], mat[15]) ||
      !near(mat[2], mat[8]) || !near(mat[7], mat[13])) {
    throw std::invalid_argument(
        "cm_from_text: matrix is not of the standard (n,m,c1,c2) form");
  }
  TwoModeCovariance cm;
  cm.n = mat[0];
  cm.m = mat[10];
  cm.c1 = mat[2];
  cm.c2 = mat[7];
  return cm;
}

TwoModeCovariance cm_from_text(const std::string& text) {
  std::istringstream in(text);
  return cm_from_text(in);
}

}  // namespace cvq
