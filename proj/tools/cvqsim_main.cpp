// Command-line front end: builds states, quantifies steering and Wigner
// negativity, generates homodyne datasets, reconstructs states and runs
// parameter sweeps. See README.md for the file formats.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cvqsim/io_util.hpp"
#include "cvqsim/pipeline.hpp"
#include "cvqsim/version.hpp"

namespace {

namespace fs = std::filesystem;
using cvq::format_number;

struct StateFlags {
  double v_plus = 0.74;
  double v_minus = 1.38;
  std::optional<double> db_plus;
  std::optional<double> db_minus;
  double eta_a = 0.9;
  double eta_b = 0.9;

  cvq::SqueezingSpec spec() const {
    if (db_plus || db_minus) {
      if (!(db_plus && db_minus)) {
        throw CLI::ValidationError("--db-plus and --db-minus come as a pair");
      }
      return cvq::SqueezingSpec::from_db(*db_plus, *db_minus);
    }
    return cvq::SqueezingSpec(v_plus, v_minus);
  }
  cvq::ChannelParams channel() const { return {eta_a, eta_b}; }
};

struct XiFlags {
  double xi = 1.0;
  std::optional<double> r_dark;
  std::optional<double> r_total;

  double value() const {
    if (r_dark || r_total) {
      if (!(r_dark && r_total)) {
        throw CLI::ValidationError("--r-dark and --r-total come as a pair");
      }
      return cvq::xi_from_rates(*r_dark, *r_total);
    }
    return xi;
  }
};

void add_state_flags(CLI::App* cmd, StateFlags* flags) {
  cmd->add_option("--v-plus", flags->v_plus, "Correlated variance V+");
  cmd->add_option("--v-minus", flags->v_minus, "Anti-correlated variance V-");
  cmd->add_option("--db-plus", flags->db_plus,
                  "Squeezing level in dB (overrides --v-plus)");
  cmd->add_option("--db-minus", flags->db_minus,
                  "Antisqueezing level in dB (overrides --v-minus)");
  cmd->add_option("--eta-a", flags->eta_a, "Alice channel transmission");
  cmd->add_option("--eta-b", flags->eta_b, "Bob channel transmission");
}

void add_xi_flags(CLI::App* cmd, XiFlags* flags) {
  cmd->add_option("--xi", flags->xi, "True-count ratio of the herald");
  cmd->add_option("--r-dark", flags->r_dark, "Dark count rate (Hz)");
  cmd->add_option("--r-total", flags->r_total, "Total click rate (Hz)");
}

std::vector<double> parse_grid(const std::string& text) {
  // Either "start:stop:step" or a comma-separated list.
  std::vector<double> grid;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    double start = 0, stop = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 ||
        !(step > 0)) {
      throw CLI::ValidationError("grid must be start:stop:step or a,b,c");
    }
    for (int i = 0;; ++i) {
      const double v = start + i * step;
      if (v > stop + 1e-12) break;
      grid.push_back(std::min(v, stop));
    }
    return grid;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    grid.push_back(std::stod(item));
  }
  if (grid.empty()) throw CLI::ValidationError("empty grid");
  return grid;
}

int run_state(const StateFlags& state, const std::string& out) {
  const cvq::TwoModeCovariance cm =
      cvq::cm_from_squeezing(state.spec(), state.channel());
  const cvq::PurityTriple mu = cvq::purities(cm);
  std::cout << cvq::cm_to_text(cm);
  std::cout << "mu_a = " << format_number(mu.mu_a) << "\n";
  std::cout << "mu_b = " << format_number(mu.mu_b) << "\n";
  std::cout << "mu_ab = " << format_number(mu.mu_ab) << "\n";
  if (!out.empty()) {
    cvq::atomic_write_file(out, cvq::cm_to_text(cm));
  }
  return 0;
}

int run_steer(const StateFlags& state, const XiFlags& xi) {
  const cvq::SqueezingSpec spec = state.spec();
  const cvq::TwoModeCovariance cm = cvq::cm_from_squeezing(spec, state.channel());
  std::cout << "G_b_to_a = " << format_number(cvq::steerability_b_to_a(cm))
            << "\n";
  std::cout << "G_b_to_a_raw = "
            << format_number(cvq::steerability_b_to_a_raw(cm)) << "\n";
  const auto threshold = cvq::steering_threshold_eta_b(spec, xi.value());
  std::cout << "eta_b_threshold = "
            << (threshold ? format_number(*threshold)
                          : std::string("none-in-(0,1]"))
            << "\n";
  return 0;
}

int run_negativity(const StateFlags& state, const XiFlags& xi) {
  const cvq::SubtractedStateParams params =
      cvq::SubtractedStateParams::from_squeezing(state.spec(), state.channel(),
                                                 xi.value());
  std::cout << cvq::negativity_report(params);
  return 0;
}

int run_wigner_grid(const StateFlags& state, const XiFlags& xi, int points,
                    double half_width, const std::string& out) {
  const cvq::SubtractedStateParams params =
      cvq::SubtractedStateParams::from_squeezing(state.spec(), state.channel(),
                                                 xi.value());
  cvq::WignerGridSpec spec;
  spec.nx = spec.ny = points;
  spec.half_width_sigmas = half_width;
  const std::string csv = cvq::wigner_grid_to_csv(cvq::wigner_grid(params, spec));
  if (out.empty()) {
    std::cout << csv;
  } else {
    cvq::atomic_write_file(out, csv);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int run_sample_cmd(const StateFlags& state, const XiFlags& xi,
                   const std::string& mode, std::size_t count,
                   std::uint64_t seed, int phase_count, const std::string& out) {
  if (mode == "two-mode") {
    const cvq::TwoModeCovariance cm =
        cvq::cm_from_squeezing(state.spec(), state.channel());
    const auto samples = cvq::sample_gaussian_two_mode(cm, count, seed);
    cvq::atomic_write_file(out, cvq::two_mode_samples_to_csv(samples));
    std::cout << "wrote " << out << " (" << samples.size() << " samples)\n";
    return 0;
  }
  if (mode != "homodyne") {
    throw CLI::ValidationError("--mode must be homodyne or two-mode");
  }
  const cvq::SubtractedStateParams params =
      cvq::SubtractedStateParams::from_squeezing(state.spec(), state.channel(),
                                                 xi.value());
  const auto phases = cvq::default_phases(phase_count);
  const auto result = cvq::sample_homodyne_subtracted(params, phases, count, seed);
  cvq::atomic_write_file(out, cvq::records_to_csv(result.records));
  cvq::atomic_write_file(out + ".meta.json",
                         cvq::dataset_metadata_json(params, phases, count, seed));
  std::cout << "wrote " << out << " (" << result.records.size()
            << " records, acceptance "
            << format_number(result.empirical_acceptance()) << ")\n";
  return 0;
}

int run_tomo(const std::string& input, const cvq::MleOptions& opts,
             const std::string& out) {
  std::ifstream in(input);
  if (!in) {
    std::cerr << "cannot open " << input << "\n";
    return 1;
  }
  const auto records = cvq::records_from_csv(in);
  const cvq::MleResult mle = cvq::mle_reconstruct(records, opts);
  if (!out.empty()) {
    cvq::atomic_write_file(out, cvq::density_to_text(mle.rho));
  } else {
    std::cout << cvq::density_to_text(mle.rho);
  }
  std::cout << "iterations = " << mle.iterations << "\n";
  std::cout << "converged = " << (mle.converged ? "true" : "false") << "\n";
  std::cout << "log_likelihood = " << format_number(mle.log_likelihood) << "\n";
  std::cout << "trace_deficit = " << format_number(mle.rho.trace_deficit())
            << "\n";
  return 0;
}

int run_estimate_cm(const std::string& input) {
  std::ifstream in(input);
  if (!in) {
    std::cerr << "cannot open " << input << "\n";
    return 1;
  }
  const auto samples = cvq::two_mode_samples_from_csv(in);
  const cvq::CmEstimate est = cvq::estimate_cm(samples);
  std::cout << cvq::cm_to_text(est.covariance());
  std::cout << "se_var_xa = " << format_number(est.se_var_xa) << "\n";
  std::cout << "se_var_pa = " << format_number(est.se_var_pa) << "\n";
  std::cout << "se_var_xb = " << format_number(est.se_var_xb) << "\n";
  std::cout << "se_var_pb = " << format_number(est.se_var_pb) << "\n";
  std::cout << "se_cov_xx = " << format_number(est.se_cov_xx) << "\n";
  std::cout << "se_cov_pp = " << format_number(est.se_cov_pp) << "\n";
  return 0;
}

int run_qfi(const std::string& rho_file, const StateFlags& state,
            const XiFlags& xi, int n_max, bool from_state) {
  std::optional<cvq::DensityMatrix> rho;
  if (!rho_file.empty()) {
    std::ifstream in(rho_file);
    if (!in) {
      std::cerr << "cannot open " << rho_file << "\n";
      return 1;
    }
    rho = cvq::density_from_text(in);
  } else if (from_state) {
    const cvq::SubtractedStateParams params =
        cvq::SubtractedStateParams::from_squeezing(state.spec(),
                                                   state.channel(), xi.value());
    rho = cvq::DensityMatrix::diagonal(
        cvq::populations_from_radial_wigner(params, n_max).p);
  } else {
    throw CLI::ValidationError("qfi needs --rho FILE or --from-state");
  }
  std::cout << cvq::qfi_report_to_text(cvq::metrological_power(*rho));
  return 0;
}

int run_sweep_cmd(cvq::RunConfig config) {
  const cvq::SweepOutput out = cvq::run_sweep(config);
  std::cout << "wrote " << out.csv_path << " (" << out.rows.size()
            << " rows)\n";
  for (const auto& p : out.problems) {
    std::cerr << "verify: " << p << "\n";
  }
  return out.problems.empty() ? 0 : 1;
}

int run_pipeline_cmd(cvq::RunConfig config) {
  const cvq::PipelineResult res = cvq::run_experiment_pipeline(config);
  std::cout << "dataset = " << res.dataset_file << "\n";
  std::cout << "density_matrix = " << res.density_file << "\n";
  std::cout << "fidelity_vs_theory = " << format_number(res.fidelity_vs_theory)
            << "\n";
  std::cout << "N_closed = " << format_number(res.theory_closed.value) << "\n";
  std::cout << "N_reconstruction = "
            << format_number(res.reconstruction_negativity) << "\n";
  std::cout << "metrological_power = "
            << format_number(res.qfi.metrological_power) << "\n";
  std::cout << "mle_iterations = " << res.mle_iterations << "\n";
  return 0;
}

int run_verify(const std::string& csv) {
  std::ifstream in(csv);
  if (!in) {
    std::cerr << "cannot open " << csv << "\n";
    return 1;
  }
  const auto problems = cvq::verify_sweep_csv(in);
  if (problems.empty()) {
    std::cout << "all rows consistent\n";
    return 0;
  }
  for (const auto& p : problems) {
    std::cerr << p << "\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cvqsim: lossy EPR states, conditional photon subtraction, Wigner "
      "negativity, homodyne tomography and quadrature metrology"};
  app.set_version_flag("--version", cvq::kLibraryVersion);
  app.set_config("--config", "",
                 "Config file (key=value with a [section] per subcommand)");
  app.require_subcommand(1);

  StateFlags state;
  XiFlags xi;
  std::string out_dir = ".";
  std::string out_file;

  auto* c_state = app.add_subcommand("state", "Covariance matrix and purities");
  add_state_flags(c_state, &state);
  c_state->add_option("--out", out_file, "Also write the CM to this file");

  auto* c_steer = app.add_subcommand("steer", "Steerability and threshold");
  add_state_flags(c_steer, &state);
  add_xi_flags(c_steer, &xi);

  auto* c_neg = app.add_subcommand("negativity", "Wigner negativity report");
  add_state_flags(c_neg, &state);
  add_xi_flags(c_neg, &xi);

  int grid_points = 201;
  double grid_half_width = 5.0;
  auto* c_grid = app.add_subcommand("wigner-grid", "Wigner function CSV");
  add_state_flags(c_grid, &state);
  add_xi_flags(c_grid, &xi);
  c_grid->add_option("--points", grid_points, "Grid points per axis");
  c_grid->add_option("--half-width", grid_half_width,
                     "Half width in units of sqrt(m)");
  c_grid->add_option("--out", out_file, "Output CSV path (stdout if empty)");

  std::string sample_mode = "homodyne";
  std::size_t sample_count = 30000;
  std::uint64_t seed = 12345;
  int phase_count = 12;
  std::string sample_out = "records.csv";
  auto* c_sample = app.add_subcommand("sample", "Generate quadrature datasets");
  add_state_flags(c_sample, &state);
  add_xi_flags(c_sample, &xi);
  c_sample->add_option("--mode", sample_mode, "homodyne or two-mode");
  c_sample->add_option("--samples", sample_count, "Number of records");
  c_sample->add_option("--seed", seed, "Generator seed");
  c_sample->add_option("--phases", phase_count, "Number of homodyne phases");
  c_sample->add_option("--out", sample_out, "Output CSV path");

  std::string tomo_input = "records.csv";
  cvq::MleOptions mle_opts;
  double detection_eff = 0.0;
  std::string tomo_out;
  bool estimate_cm_mode = false;
  auto* c_tomo = app.add_subcommand("tomo", "Reconstruction from datasets");
  c_tomo->add_option("--input", tomo_input, "Dataset CSV");
  c_tomo->add_option("--n-max", mle_opts.n_max, "Fock truncation");
  c_tomo->add_option("--max-iter", mle_opts.max_iterations, "Iteration cap");
  c_tomo->add_option("--tol", mle_opts.tolerance,
                     "Relative log-likelihood tolerance");
  c_tomo->add_option("--eta-d", detection_eff,
                     "Detection efficiency for loss-adjusted operators");
  c_tomo->add_option("--out", tomo_out, "Write the density matrix here");
  c_tomo->add_flag("--estimate-cm", estimate_cm_mode,
                   "Treat input as two-mode samples and estimate the CM");

  std::string rho_file;
  bool qfi_from_state = false;
  int qfi_n_max = 15;
  auto* c_qfi = app.add_subcommand("qfi", "Metrological power report");
  c_qfi->add_option("--rho", rho_file, "Density matrix text file");
  c_qfi->add_flag("--from-state", qfi_from_state,
                  "Use the theory state for the given flags");
  c_qfi->add_option("--n-max", qfi_n_max, "Truncation for --from-state");
  add_state_flags(c_qfi, &state);
  add_xi_flags(c_qfi, &xi);

  std::string eta_a_grid = "0.9";
  std::string eta_b_grid = "0.5:1.0:0.01";
  auto* c_sweep = app.add_subcommand("sweep", "Parameter sweep CSV + manifest");
  add_state_flags(c_sweep, &state);
  add_xi_flags(c_sweep, &xi);
  c_sweep->add_option("--eta-a-grid", eta_a_grid, "start:stop:step or list");
  c_sweep->add_option("--eta-b-grid", eta_b_grid, "start:stop:step or list");
  c_sweep->add_option("--out", out_dir, "Output directory")
      ->envname("CVQSIM_OUT");

  std::size_t pipe_samples = 30000;
  auto* c_pipe = app.add_subcommand(
      "pipeline", "Sample -> reconstruct -> analyze, with full artifacts");
  add_state_flags(c_pipe, &state);
  add_xi_flags(c_pipe, &xi);
  c_pipe->add_option("--samples", pipe_samples, "Homodyne record count");
  c_pipe->add_option("--seed", seed, "Generator seed");
  c_pipe->add_option("--phases", phase_count, "Number of homodyne phases");
  c_pipe->add_option("--n-max", mle_opts.n_max, "Fock truncation");
  c_pipe->add_option("--max-iter", mle_opts.max_iterations, "Iteration cap");
  c_pipe->add_option("--tol", mle_opts.tolerance,
                     "Relative log-likelihood tolerance");
  c_pipe->add_option("--eta-d", detection_eff,
                     "Detection efficiency for loss-adjusted operators");
  c_pipe->add_option("--out", out_dir, "Output directory")
      ->envname("CVQSIM_OUT");

  std::string verify_csv = "sweep.csv";
  auto* c_verify = app.add_subcommand("verify", "Check sweep CSV consistency");
  c_verify->add_option("--csv", verify_csv, "Sweep CSV to verify");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_state->parsed()) return run_state(state, out_file);
    if (c_steer->parsed()) return run_steer(state, xi);
    if (c_neg->parsed()) return run_negativity(state, xi);
    if (c_grid->parsed()) {
      return run_wigner_grid(state, xi, grid_points, grid_half_width, out_file);
    }
    if (c_sample->parsed()) {
      return run_sample_cmd(state, xi, sample_mode, sample_count, seed,
                            phase_count, sample_out);
    }
    if (c_tomo->parsed()) {
      if (estimate_cm_mode) return run_estimate_cm(tomo_input);
      if (detection_eff > 0.0) mle_opts.detection_efficiency = detection_eff;
      return run_tomo(tomo_input, mle_opts, tomo_out);
    }
    if (c_qfi->parsed()) {
      return run_qfi(rho_file, state, xi, qfi_n_max, qfi_from_state);
    }
    if (c_sweep->parsed() || c_pipe->parsed()) {
      cvq::RunConfig config;
      const cvq::SqueezingSpec spec = state.spec();
      config.v_plus = spec.v_plus;
      config.v_minus = spec.v_minus;
      config.xi = xi.value();
      config.seed = seed;
      config.out_dir = out_dir;
      config.phase_count = phase_count;
      if (detection_eff > 0.0) mle_opts.detection_efficiency = detection_eff;
      config.mle = mle_opts;
      if (c_sweep->parsed()) {
        config.eta_a_grid = parse_grid(eta_a_grid);
        config.eta_b_grid = parse_grid(eta_b_grid);
        return run_sweep_cmd(config);
      }
      config.eta_a_grid = {state.eta_a};
      config.eta_b_grid = {state.eta_b};
      config.samples = pipe_samples;
      return run_pipeline_cmd(config);
    }
    if (c_verify->parsed()) return run_verify(verify_csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
