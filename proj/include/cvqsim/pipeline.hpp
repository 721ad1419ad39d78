#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cvqsim/metrology.hpp"
#include "cvqsim/tomography.hpp"

namespace cvq {

/// Everything a sweep or experiment run needs; one config fully determines a
/// run (the reproducibility contract).
struct RunConfig {
  double v_plus = 0.74;
  double v_minus = 1.38;
  std::vector<double> eta_a_grid{0.9};
  std::vector<double> eta_b_grid{0.9};
  double xi = 1.0;
  std::uint64_t seed = 12345;
  std::size_t samples = 30000;
  int phase_count = 12;
  MleOptions mle;
  int fock_n_max = 15;  // truncation for populations / metrological power
  WignerGridSpec wigner;
  QuadratureSpec quadrature;
  std::string out_dir = ".";

  void validate() const;  // throws std::invalid_argument
  /// Canonical key=value rendering (out_dir excluded) used for config hashes.
  std::string canonical_string() const;
};

/// xi = 1 - R_dark / R_total; throws unless the result lands in (0, 1].
double xi_from_rates(double r_dark, double r_total);

/// One row of a parameter sweep; `ok` is false for rows whose computation
/// failed (the sweep continues past them).
struct SweepRow {
  double v_plus = 0, v_minus = 0, eta_a = 0, eta_b = 0, xi = 1;
  double g = 0;          // steerability B->A
  double n_closed = 0;   // negativity, closed form
  double n_numeric = 0;  // negativity, quadrature oracle
  double mu_a = 0, mu_b = 0, mu_ab = 0;
  double m_power = 0;  // metrological power
  bool ok = true;
  std::string error;
};

/// Computes one row per (eta_a, eta_b) grid point, in grid order
/// (eta_a-major). Rows are evaluated concurrently but emitted by index.
std::vector<SweepRow> sweep_rows(const RunConfig& config);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_rows_from_csv(std::istream& in);

/// Post-hoc cross-column consistency checks (closed vs numeric negativity,
/// steering/negativity equivalence at xi = 1). Returns human-readable
/// problems; empty means all rows pass.
std::vector<std::string> verify_rows(const std::vector<SweepRow>& rows);
std::vector<std::string> verify_sweep_csv(std::istream& in);

struct SweepOutput {
  std::vector<SweepRow> rows;
  std::string csv_path;
  std::string manifest_path;
  std::vector<std::string> problems;
};

/// Runs the sweep, writes CSV + manifest atomically into config.out_dir and
/// verifies the rows.
SweepOutput run_sweep(const RunConfig& config);

struct PipelineResult {
  // File names (relative to config.out_dir).
  std::string dataset_file;
  std::string metadata_file;
  std::string density_file;
  std::string populations_file;
  std::string wigner_file;
  std::string report_file;
  std::string manifest_file;

  double fidelity_vs_theory = 0.0;
  NegativityResult theory_closed;
  NumericNegativity theory_numeric;
  double reconstruction_negativity = 0.0;
  double reconstruction_wigner_origin = 0.0;
  QfiReport qfi;
  int mle_iterations = 0;
  bool mle_converged = false;
  double log_likelihood = 0.0;
  double trace_deficit = 0.0;
};

/// End-to-end run at the first grid point: homodyne dataset -> MLE
/// reconstruction -> Wigner grid, fidelity vs the theory state, negativity of
/// the reconstruction, metrological power. Writes all artifacts plus a JSON
/// report.
PipelineResult run_experiment_pipeline(const RunConfig& config);

/// Manifest describing a run: schema version, config hash, seed, library
/// version. Deterministic (no timestamps) so reruns are byte-identical.
std::string manifest_json(const RunConfig& config, const std::string& kind);

}  // namespace cvq
