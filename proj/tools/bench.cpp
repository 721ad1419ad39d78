// Benchmark comparing the OpenMP kernels against their serial references:
// Wigner grid evaluation, 2-D negativity quadrature and the MLE R-operator
// step. Reports medians over repeated runs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "CLI11.hpp"

#include "cvqsim/parallel.hpp"
#include "cvqsim/pipeline.hpp"

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx\n",
              name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cvqsim kernel benchmarks (serial reference vs OpenMP)"};
  int reps = 5;
  int grid_points = 601;
  std::size_t mle_records = 30000;
  int n_max = 15;
  app.add_option("--reps", reps, "Repetitions per kernel (median reported)");
  app.add_option("--grid", grid_points, "Grid points per axis");
  app.add_option("--records", mle_records, "Records for the MLE step");
  app.add_option("--n-max", n_max, "Fock truncation for the MLE step");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads available: %d\n", cvq::max_threads());

  const cvq::SqueezingSpec spec(0.74, 1.38);
  const cvq::ChannelParams ch(0.9, 0.9);
  const cvq::SubtractedStateParams params =
      cvq::SubtractedStateParams::from_squeezing(spec, ch, 0.98);

  {
    cvq::WignerGridSpec gspec;
    gspec.nx = gspec.ny = grid_points;
    const double serial =
        time_ms([&] { cvq::wigner_grid_serial(params, gspec); }, reps);
    const double parallel =
        time_ms([&] { cvq::wigner_grid(params, gspec); }, reps);
    report("wigner_grid", serial, parallel);
  }

  {
    cvq::QuadratureSpec qspec;
    qspec.grid_points = grid_points;
    const double serial = time_ms(
        [&] { cvq::negativity_numeric_grid(params, qspec, false); }, reps);
    const double parallel = time_ms(
        [&] { cvq::negativity_numeric_grid(params, qspec, true); }, reps);
    report("negativity_grid", serial, parallel);
  }

  {
    const auto phases = cvq::default_phases(12);
    const auto sampled =
        cvq::sample_homodyne_subtracted(params, phases, mle_records, 7);
    const auto ws = cvq::build_mle_workspace(sampled.records, n_max);
    const Eigen::MatrixXcd rho =
        Eigen::MatrixXcd::Identity(ws.dim, ws.dim) / ws.dim;
    const double serial =
        time_ms([&] { cvq::mle_step(ws, rho, false); }, reps);
    const double parallel =
        time_ms([&] { cvq::mle_step(ws, rho, true); }, reps);
    report("mle_step", serial, parallel);
  }

  {
    cvq::RunConfig config;
    config.eta_b_grid.clear();
    for (int i = 0; i <= 40; ++i) config.eta_b_grid.push_back(0.5 + 0.0125 * i);
    const double parallel = time_ms([&] { cvq::sweep_rows(config); }, reps);
    std::printf("%-24s %zu rows in %9.2f ms\n", "sweep_rows",
                config.eta_b_grid.size(), parallel);
  }

  return 0;
}
