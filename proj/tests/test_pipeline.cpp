#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cvqsim/io_util.hpp"
#include "cvqsim/pipeline.hpp"

using namespace cvq;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("cvqsim_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("xi from click rates") {
  CHECK(xi_from_rates(60.0, 3000.0) == doctest::Approx(0.98).epsilon(1e-12));
  CHECK(xi_from_rates(70.0, 7000.0) == doctest::Approx(0.99).epsilon(1e-12));
  CHECK_THROWS_AS(xi_from_rates(100.0, 50.0), std::invalid_argument);
  CHECK_THROWS_AS(xi_from_rates(-1.0, 50.0), std::invalid_argument);
}

TEST_CASE("single-point sweep equals the individual module outputs") {
  RunConfig config;
  config.v_plus = 0.74;
  config.v_minus = 1.38;
  config.eta_a_grid = {0.9};
  config.eta_b_grid = {0.9};
  config.xi = 0.98;
  const auto rows = sweep_rows(config);
  REQUIRE(rows.size() == 1);
  const SweepRow& row = rows.front();
  CHECK(row.ok);

  const TwoModeCovariance cm =
      cm_from_squeezing(SqueezingSpec(0.74, 1.38), ChannelParams(0.9, 0.9));
  CHECK(row.g == doctest::Approx(steerability_b_to_a(cm)).epsilon(1e-12));
  const SubtractedStateParams params(cm, 0.98);
  CHECK(row.n_closed ==
        doctest::Approx(negativity_closed_form(params).value).epsilon(1e-12));
  CHECK(std::abs(row.n_closed - row.n_numeric) < 1e-6);
  const PurityTriple mu = purities(cm);
  CHECK(row.mu_ab == doctest::Approx(mu.mu_ab).epsilon(1e-12));
  const double m_power =
      metrological_power(
          DensityMatrix::diagonal(populations_from_radial_wigner(params, 15).p))
          .metrological_power;
  CHECK(row.m_power == doctest::Approx(m_power).epsilon(1e-12));
}

TEST_CASE("negativity switches on at the predicted eta_B threshold") {
  RunConfig config;
  config.v_plus = 0.74;
  config.v_minus = 1.38;
  config.eta_a_grid = {0.9};
  config.eta_b_grid.clear();
  for (int i = 0; i <= 50; ++i) config.eta_b_grid.push_back(0.5 + 0.01 * i);
  config.xi = 0.98;
  config.fock_n_max = 12;
  const auto rows = sweep_rows(config);

  double first_positive = 2.0;
  double last_zero = 0.0;
  for (const auto& row : rows) {
    REQUIRE(row.ok);
    if (row.n_closed > 1e-9) {
      first_positive = std::min(first_positive, row.eta_b);
    } else {
      last_zero = std::max(last_zero, row.eta_b);
    }
  }
  // Threshold formula gives 0.6201 for these parameters.
  CHECK(first_positive >= 0.61);
  CHECK(first_positive <= 0.64);
  CHECK(last_zero < first_positive);
}

TEST_CASE("negativity column is constant along an eta_A sweep") {
  RunConfig config;
  config.eta_a_grid = {0.2, 0.4, 0.6, 0.8, 1.0};
  config.eta_b_grid = {0.9};
  config.xi = 1.0;
  const auto rows = sweep_rows(config);
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) {
    CHECK(std::abs(row.n_closed - rows.front().n_closed) <= 1e-12);
    CHECK(std::abs(row.m_power - rows.front().m_power) <= 1e-10);
  }
  // Steerability, by contrast, does grow with eta_A.
  CHECK(rows.back().g > rows.front().g);
}

TEST_CASE("sweep CSV round trip and verify") {
  RunConfig config;
  config.eta_b_grid = {0.55, 0.75, 0.95};
  config.xi = 1.0;
  const auto rows = sweep_rows(config);
  const std::string csv = sweep_csv(rows);
  std::istringstream in(csv);
  const auto parsed = sweep_rows_from_csv(in);
  REQUIRE(parsed.size() == rows.size());
  CHECK(parsed[1].n_closed == doctest::Approx(rows[1].n_closed).epsilon(1e-11));
  CHECK(verify_rows(parsed).empty());

  // Corrupt a row: verify must flag it.
  auto bad = parsed;
  bad[2].n_numeric += 1e-3;
  CHECK(!verify_rows(bad).empty());
}

TEST_CASE("run_sweep writes byte-identical outputs on reruns") {
  RunConfig config;
  config.eta_b_grid = {0.6, 0.8, 1.0};
  config.xi = 0.99;

  const auto dir1 = temp_dir("sweep1");
  const auto dir2 = temp_dir("sweep2");
  config.out_dir = dir1.string();
  const SweepOutput out1 = run_sweep(config);
  config.out_dir = dir2.string();
  const SweepOutput out2 = run_sweep(config);

  CHECK(out1.problems.empty());
  CHECK(read_file(out1.csv_path) == read_file(out2.csv_path));
  CHECK(read_file(out1.manifest_path) == read_file(out2.manifest_path));
  CHECK(read_file(out1.manifest_path).find("config_hash") != std::string::npos);
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("experiment pipeline produces consistent artifacts") {
  RunConfig config;
  config.v_plus = 0.74;
  config.v_minus = 1.38;
  config.eta_a_grid = {0.9};
  config.eta_b_grid = {0.9};
  config.xi = 0.98;
  config.samples = 6000;
  config.mle.n_max = 12;
  config.mle.tolerance = 1e-7;
  config.wigner.nx = config.wigner.ny = 41;
  const auto dir = temp_dir("pipe");
  config.out_dir = dir.string();

  const PipelineResult res = run_experiment_pipeline(config);
  CHECK(res.fidelity_vs_theory > 0.9);
  CHECK(res.theory_closed.value == doctest::Approx(0.116440384648).epsilon(1e-6));
  CHECK(std::abs(res.theory_closed.value - res.theory_numeric.value) < 1e-6);
  CHECK(res.reconstruction_wigner_origin < 0.05);  // near or below zero

  for (const std::string& name :
       {res.dataset_file, res.metadata_file, res.density_file,
        res.populations_file, res.wigner_file, res.report_file,
        res.manifest_file}) {
    CHECK(std::filesystem::exists(dir / name));
  }

  // The dataset file parses back to the requested number of records.
  std::ifstream in(dir / res.dataset_file);
  const auto records = records_from_csv(in);
  CHECK(records.size() == config.samples);

  // The stored density matrix reloads and matches the reported negativity.
  std::ifstream rho_in(dir / res.density_file);
  const DensityMatrix rho = density_from_text(rho_in);
  CHECK(rho.dim() == config.mle.n_max + 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("below the steering threshold the reconstruction stays positive") {
  RunConfig config;
  config.v_plus = 0.74;
  config.v_minus = 1.38;
  config.eta_a_grid = {0.9};
  config.eta_b_grid = {0.5};  // threshold for these variances is ~0.62
  config.xi = 0.98;
  config.samples = 6000;
  config.mle.n_max = 10;
  config.mle.tolerance = 1e-7;
  config.wigner.nx = config.wigner.ny = 21;
  const auto dir = temp_dir("below");
  config.out_dir = dir.string();

  const PipelineResult res = run_experiment_pipeline(config);
  CHECK(res.theory_closed.value == 0.0);
  CHECK(!res.theory_closed.negative_region);
  CHECK(res.reconstruction_negativity < 0.02);
  CHECK(res.reconstruction_wigner_origin > 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline reruns are byte identical") {
  RunConfig config;
  config.samples = 1500;
  config.mle.n_max = 8;
  config.mle.tolerance = 1e-6;
  config.mle.max_iterations = 300;
  config.xi = 0.98;
  config.wigner.nx = config.wigner.ny = 21;

  const auto dir1 = temp_dir("pipe1");
  const auto dir2 = temp_dir("pipe2");
  config.out_dir = dir1.string();
  run_experiment_pipeline(config);
  config.out_dir = dir2.string();
  run_experiment_pipeline(config);

  for (const char* name :
       {"records.csv", "records.meta.json", "rho.txt", "populations.csv",
        "wigner.csv", "report.json", "pipeline.manifest.json"}) {
    CHECK(read_file((dir1 / name).string()) ==
          read_file((dir2 / name).string()));
  }
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("config validation and canonical form") {
  RunConfig config;
  config.eta_b_grid = {0.5, 1.5};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.eta_b_grid = {0.5};
  config.xi = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.xi = 0.5;
  CHECK_NOTHROW(config.validate());

  // out_dir must not leak into the hashed canonical string.
  RunConfig a, b;
  a.out_dir = "/tmp/x";
  b.out_dir = "/tmp/y";
  CHECK(a.canonical_string() == b.canonical_string());
}
