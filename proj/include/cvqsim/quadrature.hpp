#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cvq {

struct integration_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuadratureOutcome {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
};

namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss (QUADPACK dqk15).
inline constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kWg[4] = {0.129484966168870, 0.279705391489277,
                                  0.381830050505119, 0.417959183673469};

template <typename F>
void gk15(F& f, double a, double b, double* kronrod, double* err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double res_g = fc * kWg[3];
  double res_k = fc * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double fsum = f(c - x) + f(c + x);
    res_k += kWgk[j] * fsum;
    if (j % 2 == 1) res_g += kWg[j / 2] * fsum;
  }
  *kronrod = res_k * h;
  *err = std::abs((res_k - res_g) * h);
}

struct Interval {
  double a, b, value, error;
};

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b].
/// Splits the interval with the largest error estimate until the accumulated
/// estimate satisfies the tolerance, or throws integration_error.
template <typename F>
QuadratureOutcome integrate_adaptive(F&& f, double a, double b,
                                     double rel_tol = 1e-10,
                                     double abs_tol = 1e-14,
                                     int max_intervals = 4000) {
  QuadratureOutcome out;
  if (a == b) return out;

  std::vector<detail::Interval> segs;
  detail::Interval whole{a, b, 0.0, 0.0};
  detail::gk15(f, a, b, &whole.value, &whole.error);
  out.evaluations += 15;
  segs.push_back(whole);

  while (true) {
    double total = 0.0, err = 0.0;
    for (const auto& s : segs) {
      total += s.value;
      err += s.error;
    }
    if (err <= std::max(abs_tol, rel_tol * std::abs(total))) {
      out.value = total;
      out.error_estimate = err;
      return out;
    }
    if (static_cast<int>(segs.size()) >= max_intervals) {
      throw integration_error("adaptive quadrature failed to converge");
    }
    auto worst = std::max_element(
        segs.begin(), segs.end(),
        [](const auto& l, const auto& r) { return l.error < r.error; });
    const detail::Interval cur = *worst;
    const double mid = 0.5 * (cur.a + cur.b);
    detail::Interval left{cur.a, mid, 0.0, 0.0};
    detail::Interval right{mid, cur.b, 0.0, 0.0};
    detail::gk15(f, left.a, left.b, &left.value, &left.error);
    detail::gk15(f, right.a, right.b, &right.value, &right.error);
    out.evaluations += 30;
    *worst = left;
    segs.push_back(right);
  }
}

}  // namespace cvq
