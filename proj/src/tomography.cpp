#include "cvqsim/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "cvqsim/parallel.hpp"
#include "cvqsim/quadrature.hpp"

namespace cvq {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kProbabilityFloor = 1e-300;

using Complex = std::complex<double>;

double sample_variance(std::span<const double> xs) {
  const std::size_t n = xs.size();
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(n - 1);
}

struct CmPoint {
  double var_xa, var_pa, var_xb, var_pb, cov_xx, cov_pp;
};

CmPoint cm_point(std::span<const TwoModeSample> s) {
  const std::size_t n = s.size();
  std::vector<double> xa(n), pa(n), xb(n), pb(n), dx(n), dp(n);
  for (std::size_t i = 0; i < n; ++i) {
    xa[i] = s[i].x_a;
    pa[i] = s[i].p_a;
    xb[i] = s[i].x_b;
    pb[i] = s[i].p_b;
    dx[i] = s[i].x_a - s[i].x_b;
    dp[i] = s[i].p_a - s[i].p_b;
  }
  CmPoint p{};
  p.var_xa = sample_variance(xa);
  p.var_pa = sample_variance(pa);
  p.var_xb = sample_variance(xb);
  p.var_pb = sample_variance(pb);
  p.cov_xx = 0.5 * (p.var_xa + p.var_xb - sample_variance(dx));
  p.cov_pp = 0.5 * (p.var_pa + p.var_pb - sample_variance(dp));
  return p;
}

}  // namespace

double CmEstimate::max_standard_error() const {
  return std::max({se_var_xa, se_var_pa, se_var_xb, se_var_pb, se_cov_xx,
                   se_cov_pp});
}

CmEstimate estimate_cm(std::span<const TwoModeSample> samples) {
  if (samples.size() < 100) {
    throw std::invalid_argument(
        "estimate_cm: need at least 100 samples for batched errors");
  }
  const CmPoint full = cm_point(samples);

  constexpr int kBatches = 20;
  const std::size_t batch = samples.size() / kBatches;
  std::vector<CmPoint> pts;
  pts.reserve(kBatches);
  for (int b = 0; b < kBatches; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * batch;
    const std::size_t hi = (b + 1 == kBatches) ? samples.size() : lo + batch;
    pts.push_back(cm_point(samples.subspan(lo, hi - lo)));
  }
  auto se_of = [&](double CmPoint::* field) {
    double mean = 0.0;
    for (const auto& p : pts) mean += p.*field;
    mean /= kBatches;
    double ss = 0.0;
    for (const auto& p : pts) ss += (p.*field - mean) * (p.*field - mean);
    return std::sqrt(ss / (kBatches - 1)) / std::sqrt(double(kBatches));
  };

  CmEstimate est;
  est.var_xa = full.var_xa;
  est.var_pa = full.var_pa;
  est.var_xb = full.var_xb;
  est.var_pb = full.var_pb;
  est.cov_xx = full.cov_xx;
  est.cov_pp = full.cov_pp;
  est.se_var_xa = se_of(&CmPoint::var_xa);
  est.se_var_pa = se_of(&CmPoint::var_pa);
  est.se_var_xb = se_of(&CmPoint::var_xb);
  est.se_var_pb = se_of(&CmPoint::var_pb);
  est.se_cov_xx = se_of(&CmPoint::cov_xx);
  est.se_cov_pp = se_of(&CmPoint::cov_pp);
  return est;
}

void quadrature_wavefunctions(double x, int n_max, std::span<double> out) {
  if (static_cast<int>(out.size()) < n_max + 1) {
    throw std::invalid_argument("quadrature_wavefunctions: output too small");
  }
  // psi_k(x) = (2pi)^{-1/4} e^{-x^2/4} u_k(x/sqrt(2)) with the normalized
  // Hermite recurrence u_{k+1} = y sqrt(2/(k+1)) u_k - sqrt(k/(k+1)) u_{k-1}.
  const double pref = std::pow(2.0 * kPi, -0.25) * std::exp(-0.25 * x * x);
  const double y = x / std::sqrt(2.0);
  double u_prev = 0.0, u = 1.0;
  out[0] = pref;
  for (int k = 0; k < n_max; ++k) {
    const double u_next =
        y * std::sqrt(2.0 / (k + 1)) * u - std::sqrt(double(k) / (k + 1)) * u_prev;
    u_prev = u;
    u = u_next;
    out[static_cast<std::size_t>(k) + 1] = pref * u;
  }
}

double quadrature_vacuum_second_moment() {
  auto f = [](double x) {
    double psi0 = 0.0;
    quadrature_wavefunctions(x, 0, std::span<double>(&psi0, 1));
    return x * x * psi0 * psi0;
  };
  return integrate_adaptive(f, -16.0, 16.0, 1e-12).value;
}

MleWorkspace build_mle_workspace(std::span<const QuadratureRecord> records,
                                 int n_max,
                                 std::optional<double> detection_efficiency) {
  if (records.empty()) {
    throw std::invalid_argument("build_mle_workspace: no records");
  }
  if (n_max < 1) {
    throw std::invalid_argument("build_mle_workspace: n_max must be >= 1");
  }
  if (detection_efficiency &&
      (!(*detection_efficiency > 0.0) || *detection_efficiency > 1.0)) {
    throw std::invalid_argument(
        "build_mle_workspace: detection efficiency must be in (0,1]");
  }
  // Convention lock: the operators must reproduce unit vacuum variance.
  const double v0 = quadrature_vacuum_second_moment();
  if (std::abs(v0 - 1.0) > 1e-9) {
    throw std::logic_error(
        "build_mle_workspace: quadrature wavefunction convention broken "
        "(<x^2> on vacuum != 1)");
  }

  MleWorkspace ws;
  ws.dim = n_max + 1;
  ws.record_count = records.size();
  ws.detection_efficiency = detection_efficiency;

  std::vector<double> phases;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!std::isfinite(r.value) || !(r.phase >= 0.0) || r.phase >= kPi) {
      throw std::invalid_argument(
          "build_mle_workspace: record with invalid phase or value");
    }
    auto it = std::find(phases.begin(), phases.end(), r.phase);
    std::size_t g;
    if (it == phases.end()) {
      phases.push_back(r.phase);
      members.emplace_back();
      g = phases.size() - 1;
    } else {
      g = static_cast<std::size_t>(it - phases.begin());
    }
    members[g].push_back(i);
  }

  std::vector<double> psi(static_cast<std::size_t>(ws.dim));
  for (std::size_t g = 0; g < phases.size(); ++g) {
    MleWorkspace::PhaseGroup group;
    group.phase = phases[g];
    group.h.resize(static_cast<Eigen::Index>(members[g].size()), ws.dim);
    for (std::size_t row = 0; row < members[g].size(); ++row) {
      quadrature_wavefunctions(records[members[g][row]].value, n_max, psi);
      for (int k = 0; k < ws.dim; ++k) {
        group.h(static_cast<Eigen::Index>(row), k) = psi[static_cast<std::size_t>(k)];
      }
    }
    ws.groups.push_back(std::move(group));
  }
  return ws;
}

namespace {

// Phase factors e^{-ik theta}, k = 0..dim-1.
Eigen::VectorXcd phase_vector(double theta, int dim) {
  Eigen::VectorXcd d(dim);
  for (int k = 0; k < dim; ++k) {
    d(k) = std::polar(1.0, -theta * k);
  }
  return d;
}

// Re(conj(d_j) d_k)-rotated rho: A_{jk} = Re(e^{i(j-k)theta} rho_{jk}).
// For real h, h^T A h equals <psi| rho |psi> with psi = D h.
Eigen::MatrixXd rotated_real_part(const Eigen::MatrixXcd& rho,
                                  const Eigen::VectorXcd& d) {
  const int dim = static_cast<int>(rho.rows());
  Eigen::MatrixXd a(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < dim; ++k) {
      a(j, k) = (std::conj(d(j)) * rho(j, k) * d(k)).real();
    }
  }
  return a;
}

struct BlockTask {
  std::size_t group;
  Eigen::Index row_begin;
  Eigen::Index row_end;
};

struct BlockPartial {
  Eigen::MatrixXd s;
  double log_like = 0.0;
};

MleStepResult mle_step_impl(const MleWorkspace& ws, const Eigen::MatrixXcd& rho,
                            bool parallel, bool want_r) {
  const int dim = ws.dim;
  const Eigen::MatrixXcd rho_meas =
      ws.detection_efficiency ? apply_loss_matrix(rho, *ws.detection_efficiency)
                              : rho;

  std::vector<Eigen::VectorXcd> d_vecs;
  std::vector<Eigen::MatrixXd> a_mats;
  d_vecs.reserve(ws.groups.size());
  a_mats.reserve(ws.groups.size());
  for (const auto& g : ws.groups) {
    d_vecs.push_back(phase_vector(g.phase, dim));
    a_mats.push_back(rotated_real_part(rho_meas, d_vecs.back()));
  }

  std::vector<BlockTask> tasks;
  for (std::size_t g = 0; g < ws.groups.size(); ++g) {
    const Eigen::Index rows = ws.groups[g].h.rows();
    for (Eigen::Index lo = 0; lo < rows; lo += kReduceBlock) {
      tasks.push_back({g, lo, std::min(rows, lo + kReduceBlock)});
    }
  }
  std::vector<BlockPartial> partials(tasks.size());

  auto run_task = [&](std::ptrdiff_t t) {
    const BlockTask& task = tasks[static_cast<std::size_t>(t)];
    const auto& h = ws.groups[task.group].h;
    const auto& a = a_mats[task.group];
    const Eigen::Index rows = task.row_end - task.row_begin;
    const auto block = h.middleRows(task.row_begin, rows);
    const Eigen::MatrixXd g_mat = block * a;
    Eigen::VectorXd p = (g_mat.array() * block.array()).rowwise().sum();
    BlockPartial& out = partials[static_cast<std::size_t>(t)];
    out.log_like = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double pi = std::max(p(i), kProbabilityFloor);
      out.log_like += std::log(pi);
      p(i) = 1.0 / pi;
    }
    if (want_r) {
      out.s = block.transpose() * (p.asDiagonal() * block);
    }
  };
  if (parallel) {
    parallel_for(static_cast<std::ptrdiff_t>(tasks.size()), run_task);
  } else {
    serial_for(static_cast<std::ptrdiff_t>(tasks.size()), run_task);
  }

  MleStepResult res;
  res.log_likelihood = 0.0;
  std::vector<Eigen::MatrixXd> s_group(
      ws.groups.size(), Eigen::MatrixXd::Zero(dim, dim));
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    res.log_likelihood += partials[t].log_like;
    if (want_r) s_group[tasks[t].group] += partials[t].s;
  }
  if (want_r) {
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t g = 0; g < ws.groups.size(); ++g) {
      const auto& d = d_vecs[g];
      for (int j = 0; j < dim; ++j) {
        for (int k = 0; k < dim; ++k) {
          r(j, k) += d(j) * s_group[g](j, k) * std::conj(d(k));
        }
      }
    }
    r /= static_cast<double>(ws.record_count);
    if (ws.detection_efficiency) {
      r = apply_loss_dual(r, *ws.detection_efficiency);
    }
    res.r_op = 0.5 * (r + r.adjoint().eval());
  }
  return res;
}

}  // namespace

MleStepResult mle_step(const MleWorkspace& ws, const Eigen::MatrixXcd& rho,
                       bool parallel) {
  return mle_step_impl(ws, rho, parallel, true);
}

double mle_log_likelihood(const MleWorkspace& ws, const Eigen::MatrixXcd& rho,
                          bool parallel) {
  return mle_step_impl(ws, rho, parallel, false).log_likelihood;
}

MleStepResult mle_step_reference(const MleWorkspace& ws,
                                 const Eigen::MatrixXcd& rho) {
  const int dim = ws.dim;
  const Eigen::MatrixXcd rho_meas =
      ws.detection_efficiency ? apply_loss_matrix(rho, *ws.detection_efficiency)
                              : rho;
  MleStepResult res;
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& g : ws.groups) {
    const Eigen::VectorXcd d = phase_vector(g.phase, dim);
    for (Eigen::Index i = 0; i < g.h.rows(); ++i) {
      Eigen::VectorXcd psi(dim);
      for (int k = 0; k < dim; ++k) psi(k) = d(k) * g.h(i, k);
      const double p =
          std::max((psi.adjoint() * rho_meas * psi)(0, 0).real(),
                   kProbabilityFloor);
      res.log_likelihood += std::log(p);
      r += (psi * psi.adjoint()) / p;
    }
  }
  r /= static_cast<double>(ws.record_count);
  if (ws.detection_efficiency) {
    r = apply_loss_dual(r, *ws.detection_efficiency);
  }
  res.r_op = 0.5 * (r + r.adjoint().eval());
  return res;
}

namespace {

Eigen::MatrixXcd apply_update(const Eigen::MatrixXcd& rho,
                              const Eigen::MatrixXcd& r_op, double dilution) {
  const int dim = static_cast<int>(rho.rows());
  Eigen::MatrixXcd t = r_op;
  if (dilution < 1.0) {
    t = Eigen::MatrixXcd::Identity(dim, dim) + dilution * r_op;
  }
  Eigen::MatrixXcd next = t * rho * t;
  next = 0.5 * (next + next.adjoint().eval());
  const double tr = next.trace().real();
  if (!(tr > 0.0)) {
    throw std::runtime_error("mle_reconstruct: update produced zero trace");
  }
  return next / tr;
}

}  // namespace

MleResult mle_reconstruct(std::span<const QuadratureRecord> records,
                          const MleOptions& opts) {
  if (opts.max_iterations < 1 || !(opts.tolerance > 0.0)) {
    throw std::invalid_argument("mle_reconstruct: invalid options");
  }
  const MleWorkspace ws =
      build_mle_workspace(records, opts.n_max, opts.detection_efficiency);
  const int dim = ws.dim;

  Eigen::MatrixXcd rho =
      Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
  MleStepResult step = mle_step(ws, rho);

  std::vector<double> trace{step.log_likelihood};
  bool converged = false;
  int iterations = 0;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    Eigen::MatrixXcd rho_next = apply_update(rho, step.r_op, 1.0);
    MleStepResult next = mle_step(ws, rho_next);

    const double slack = 1e-12 * std::abs(step.log_likelihood);
    if (next.log_likelihood < step.log_likelihood - slack) {
      // The full R rho R step overshot; fall back to the diluted update
      // (I + eps R)/..., which ascends for small enough eps.
      double eps = 0.5;
      bool recovered = false;
      while (eps >= 1e-8) {
        rho_next = apply_update(rho, step.r_op, eps);
        next = mle_step(ws, rho_next);
        if (next.log_likelihood >= step.log_likelihood - slack) {
          recovered = true;
          break;
        }
        eps *= 0.5;
      }
      if (!recovered) {
        // No ascent direction left at numerical precision: treat as a fixed
        // point.
        converged = true;
        iterations = it;
        break;
      }
    }

    const double delta = next.log_likelihood - step.log_likelihood;
    rho = std::move(rho_next);
    step = std::move(next);
    trace.push_back(step.log_likelihood);
    iterations = it;
    if (std::abs(delta) <= opts.tolerance * std::abs(step.log_likelihood)) {
      converged = true;
      break;
    }
  }

  MleResult result{DensityMatrix(rho), iterations, step.log_likelihood,
                   converged, std::move(trace)};
  return result;
}

}  // namespace cvq
