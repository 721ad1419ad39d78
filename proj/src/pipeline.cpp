#include "cvqsim/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cvqsim/io_util.hpp"
#include "cvqsim/parallel.hpp"
#include "cvqsim/version.hpp"

#include "json.hpp"

namespace cvq {

namespace {

constexpr double kRowConsistencyTol = 1e-6;
constexpr double kZeroTol = 1e-9;

}  // namespace

void RunConfig::validate() const {
  SqueezingSpec spec(v_plus, v_minus);  // throws on bad variances
  (void)spec;
  if (eta_a_grid.empty() || eta_b_grid.empty()) {
    throw std::invalid_argument("RunConfig: empty efficiency grid");
  }
  for (double e : eta_a_grid) {
    if (!(e > 0.0) || e > 1.0) {
      throw std::invalid_argument("RunConfig: eta_a grid values must be in (0,1]");
    }
  }
  for (double e : eta_b_grid) {
    if (!(e > 0.0) || e > 1.0) {
      throw std::invalid_argument("RunConfig: eta_b grid values must be in (0,1]");
    }
  }
  if (!(xi > 0.0) || xi > 1.0) {
    throw std::invalid_argument("RunConfig: xi must be in (0,1]");
  }
  if (samples < 1) {
    throw std::invalid_argument("RunConfig: samples must be >= 1");
  }
  if (phase_count < 1 || fock_n_max < 1) {
    throw std::invalid_argument("RunConfig: phase_count and fock_n_max >= 1");
  }
}

std::string RunConfig::canonical_string() const {
  std::ostringstream out;
  out << "schema=" << kCsvSchemaVersion << "\n";
  out << "v_plus=" << format_number(v_plus) << "\n";
  out << "v_minus=" << format_number(v_minus) << "\n";
  out << "eta_a=";
  for (std::size_t i = 0; i < eta_a_grid.size(); ++i) {
    out << (i ? "," : "") << format_number(eta_a_grid[i]);
  }
  out << "\neta_b=";
  for (std::size_t i = 0; i < eta_b_grid.size(); ++i) {
    out << (i ? "," : "") << format_number(eta_b_grid[i]);
  }
  out << "\nxi=" << format_number(xi) << "\n";
  out << "seed=" << seed << "\n";
  out << "samples=" << samples << "\n";
  out << "phase_count=" << phase_count << "\n";
  out << "n_max=" << mle.n_max << "\n";
  out << "max_iterations=" << mle.max_iterations << "\n";
  out << "tolerance=" << format_number(mle.tolerance) << "\n";
  out << "detection_efficiency="
      << (mle.detection_efficiency ? format_number(*mle.detection_efficiency)
                                   : std::string("none"))
      << "\n";
  out << "fock_n_max=" << fock_n_max << "\n";
  out << "wigner=" << wigner.nx << "x" << wigner.ny << "@"
      << format_number(wigner.half_width_sigmas) << "\n";
  return out.str();
}

double xi_from_rates(double r_dark, double r_total) {
  if (!(r_dark >= 0.0) || !(r_total > 0.0) || r_dark >= r_total) {
    throw std::invalid_argument(
        "xi_from_rates: need 0 <= R_dark < R_total with R_total > 0");
  }
  return 1.0 - r_dark / r_total;
}

namespace {

SweepRow compute_row(const RunConfig& config, double eta_a, double eta_b) {
  SweepRow row;
  row.v_plus = config.v_plus;
  row.v_minus = config.v_minus;
  row.eta_a = eta_a;
  row.eta_b = eta_b;
  row.xi = config.xi;
  try {
    const SqueezingSpec spec(config.v_plus, config.v_minus);
    const ChannelParams ch(eta_a, eta_b);
    const TwoModeCovariance cm = cm_from_squeezing(spec, ch);
    const PurityTriple mu = purities(cm);
    row.mu_a = mu.mu_a;
    row.mu_b = mu.mu_b;
    row.mu_ab = mu.mu_ab;
    row.g = steerability_b_to_a(cm);

    const SubtractedStateParams params(cm, config.xi);
    row.n_closed = negativity_closed_form(params).value;
    row.n_numeric = negativity_numeric(params, config.quadrature).value;

    const FockPopulations pops =
        populations_from_radial_wigner(params, config.fock_n_max);
    row.m_power =
        metrological_power(DensityMatrix::diagonal(pops.p)).metrological_power;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
    row.g = row.n_closed = row.n_numeric = std::numeric_limits<double>::quiet_NaN();
    row.mu_a = row.mu_b = row.mu_ab = row.m_power = row.g;
  }
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_rows(const RunConfig& config) {
  config.validate();
  const std::size_t na = config.eta_a_grid.size();
  const std::size_t nb = config.eta_b_grid.size();
  std::vector<SweepRow> rows(na * nb);
  parallel_for(static_cast<std::ptrdiff_t>(na * nb), [&](std::ptrdiff_t idx) {
    const std::size_t ia = static_cast<std::size_t>(idx) / nb;
    const std::size_t ib = static_cast<std::size_t>(idx) % nb;
    rows[static_cast<std::size_t>(idx)] =
        compute_row(config, config.eta_a_grid[ia], config.eta_b_grid[ib]);
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "v_plus,v_minus,eta_a,eta_b,xi,G,N_closed,N_numeric,mu_a,mu_b,mu_ab,M,ok\n";
  for (const auto& r : rows) {
    out << format_number(r.v_plus) << ',' << format_number(r.v_minus) << ','
        << format_number(r.eta_a) << ',' << format_number(r.eta_b) << ','
        << format_number(r.xi) << ',' << format_number(r.g) << ','
        << format_number(r.n_closed) << ',' << format_number(r.n_numeric) << ','
        << format_number(r.mu_a) << ',' << format_number(r.mu_b) << ','
        << format_number(r.mu_ab) << ',' << format_number(r.m_power) << ','
        << (r.ok ? 1 : 0) << "\n";
  }
  return out.str();
}

std::vector<SweepRow> sweep_rows_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("v_plus,v_minus,eta_a,eta_b", 0) != 0) {
    throw std::invalid_argument("sweep_rows_from_csv: unexpected header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 13) {
      throw std::invalid_argument("sweep_rows_from_csv: malformed row: " + line);
    }
    SweepRow r;
    r.v_plus = std::stod(fields[0]);
    r.v_minus = std::stod(fields[1]);
    r.eta_a = std::stod(fields[2]);
    r.eta_b = std::stod(fields[3]);
    r.xi = std::stod(fields[4]);
    r.g = std::stod(fields[5]);
    r.n_closed = std::stod(fields[6]);
    r.n_numeric = std::stod(fields[7]);
    r.mu_a = std::stod(fields[8]);
    r.mu_b = std::stod(fields[9]);
    r.mu_ab = std::stod(fields[10]);
    r.m_power = std::stod(fields[11]);
    r.ok = fields[12] == "1";
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::string> verify_rows(const std::vector<SweepRow>& rows) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    const std::string tag = "row " + std::to_string(i);
    if (!r.ok) {
      problems.push_back(tag + ": flagged as failed (" + r.error + ")");
      continue;
    }
    if (std::abs(r.n_closed - r.n_numeric) > kRowConsistencyTol) {
      problems.push_back(tag + ": N_closed and N_numeric disagree beyond 1e-6");
    }
    if (r.xi == 1.0) {
      const bool has_negativity = r.n_closed > kZeroTol;
      const bool has_steering = r.g > kZeroTol;
      if (has_negativity && !has_steering) {
        problems.push_back(tag + ": negativity without steerability at xi=1");
      }
    }
    if (r.m_power < 0.0) {
      problems.push_back(tag + ": negative metrological power");
    }
  }
  return problems;
}

std::vector<std::string> verify_sweep_csv(std::istream& in) {
  return verify_rows(sweep_rows_from_csv(in));
}

std::string manifest_json(const RunConfig& config, const std::string& kind) {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["schema"] = kCsvSchemaVersion;
  j["library_version"] = kLibraryVersion;
  j["generator"] = kGeneratorName;
  j["config_hash"] = hex64(fnv1a64(config.canonical_string()));
  j["seed"] = config.seed;
  return j.dump(2) + "\n";
}

SweepOutput run_sweep(const RunConfig& config) {
  namespace fs = std::filesystem;
  SweepOutput out;
  out.rows = sweep_rows(config);
  const fs::path dir(config.out_dir);
  out.csv_path = (dir / "sweep.csv").string();
  out.manifest_path = (dir / "sweep.manifest.json").string();
  atomic_write_file(out.csv_path, sweep_csv(out.rows));
  atomic_write_file(out.manifest_path, manifest_json(config, "sweep"));
  out.problems = verify_rows(out.rows);
  return out;
}

PipelineResult run_experiment_pipeline(const RunConfig& config) {
  namespace fs = std::filesystem;
  config.validate();
  const double eta_a = config.eta_a_grid.front();
  const double eta_b = config.eta_b_grid.front();

  const SqueezingSpec spec(config.v_plus, config.v_minus);
  const ChannelParams ch(eta_a, eta_b);
  const SubtractedStateParams params =
      SubtractedStateParams::from_squeezing(spec, ch, config.xi);

  const std::vector<double> phases = default_phases(config.phase_count);
  const HomodyneSampleResult sampled = sample_homodyne_subtracted(
      params, phases, config.samples, config.seed);

  PipelineResult res;
  res.dataset_file = "records.csv";
  res.metadata_file = "records.meta.json";
  res.density_file = "rho.txt";
  res.populations_file = "populations.csv";
  res.wigner_file = "wigner.csv";
  res.report_file = "report.json";
  res.manifest_file = "pipeline.manifest.json";

  const fs::path dir(config.out_dir);
  atomic_write_file((dir / res.dataset_file).string(),
                    records_to_csv(sampled.records));
  atomic_write_file((dir / res.metadata_file).string(),
                    dataset_metadata_json(params, phases, config.samples,
                                          config.seed));

  const MleResult mle = mle_reconstruct(sampled.records, config.mle);
  res.mle_iterations = mle.iterations;
  res.mle_converged = mle.converged;
  res.log_likelihood = mle.log_likelihood;
  res.trace_deficit = mle.rho.trace_deficit();
  atomic_write_file((dir / res.density_file).string(), density_to_text(mle.rho));
  atomic_write_file((dir / res.populations_file).string(),
                    populations_to_csv(mle.rho.populations()));

  // Theory state at the same truncation for the fidelity comparison.
  const FockPopulations pops =
      populations_from_radial_wigner(params, config.mle.n_max);
  const DensityMatrix theory = DensityMatrix::diagonal(pops.p);
  res.fidelity_vs_theory = fidelity(mle.rho, theory);

  res.theory_closed = negativity_closed_form(params);
  res.theory_numeric = negativity_numeric(params, config.quadrature);
  res.reconstruction_negativity =
      negativity_from_density(mle.rho, config.quadrature).value;
  res.reconstruction_wigner_origin = wigner_from_density(mle.rho, {0.0, 0.0});
  res.qfi = metrological_power(mle.rho);

  atomic_write_file((dir / res.wigner_file).string(),
                    wigner_grid_to_csv(wigner_grid_from_density(mle.rho,
                                                                config.wigner)));

  nlohmann::ordered_json j;
  j["dataset"] = res.dataset_file;
  j["density_matrix"] = res.density_file;
  j["wigner_grid"] = res.wigner_file;
  j["candidates"] = sampled.candidates;
  j["analytic_acceptance"] = sampled.analytic_acceptance;
  j["mle"] = {{"iterations", res.mle_iterations},
              {"converged", res.mle_converged},
              {"log_likelihood", res.log_likelihood},
              {"trace_deficit", res.trace_deficit},
              {"n_max", config.mle.n_max},
              {"max_iterations", config.mle.max_iterations},
              {"tolerance", config.mle.tolerance},
              {"detection_efficiency",
               config.mle.detection_efficiency
                   ? nlohmann::ordered_json(*config.mle.detection_efficiency)
                   : nlohmann::ordered_json(nullptr)}};
  j["fidelity_vs_theory"] = res.fidelity_vs_theory;
  j["theory"] = {{"r", res.theory_closed.r},
                 {"N_closed", res.theory_closed.value},
                 {"N_numeric", res.theory_numeric.value}};
  j["reconstruction"] = {{"negativity", res.reconstruction_negativity},
                         {"wigner_origin", res.reconstruction_wigner_origin}};
  j["metrology"] = {{"f_max", res.qfi.f_max},
                    {"optimal_phase", res.qfi.optimal_phase},
                    {"metrological_power", res.qfi.metrological_power},
                    {"phase_independent", res.qfi.phase_independent}};
  atomic_write_file((dir / res.report_file).string(), j.dump(2) + "\n");
  atomic_write_file((dir / res.manifest_file).string(),
                    manifest_json(config, "pipeline"));
  return res;
}

}  // namespace cvq
