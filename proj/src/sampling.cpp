#include "cvqsim/sampling.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cvqsim/io_util.hpp"
#include "cvqsim/parallel.hpp"
#include "cvqsim/version.hpp"

#include "json.hpp"

namespace cvq {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

}  // namespace

void CounterRng::gaussian_pair_at(std::uint64_t counter, double* z0,
                                  double* z1) const {
  const double u1 = uniform_at(counter);
  const double u2 = uniform_at(counter + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  *z0 = r * std::cos(kTwoPi * u2);
  *z1 = r * std::sin(kTwoPi * u2);
}

double RandomStream::next_gaussian() {
  double z0 = 0.0, z1 = 0.0;
  rng_.gaussian_pair_at(next_, &z0, &z1);
  next_ += 2;
  return z0;
}

std::vector<TwoModeSample> sample_gaussian_two_mode(const TwoModeCovariance& cm,
                                                    std::size_t count,
                                                    std::uint64_t seed) {
  if (count < 1) {
    throw std::invalid_argument("sample_gaussian_two_mode: count must be >= 1");
  }
  if (!cm.is_physical()) {
    throw std::invalid_argument(
        "sample_gaussian_two_mode: covariance matrix is not physical");
  }
  // The 4x4 matrix splits into independent 2x2 blocks for (x_A, x_B) and
  // (p_A, p_B); Cholesky factors of each block drive the draws.
  const double sn = std::sqrt(cm.n);
  const double lx21 = cm.c1 / sn;
  const double lx22 = std::sqrt(std::max(0.0, cm.m - lx21 * lx21));
  const double lp21 = cm.c2 / sn;
  const double lp22 = std::sqrt(std::max(0.0, cm.m - lp21 * lp21));

  const CounterRng rng{seed};
  std::vector<TwoModeSample> out(count);
  parallel_for(static_cast<std::ptrdiff_t>(count), [&](std::ptrdiff_t i) {
    const std::uint64_t base = 4ull * static_cast<std::uint64_t>(i);
    double z0, z1, z2, z3;
    rng.gaussian_pair_at(base, &z0, &z1);
    rng.gaussian_pair_at(base + 2, &z2, &z3);
    TwoModeSample& s = out[static_cast<std::size_t>(i)];
    s.x_a = sn * z0;
    s.x_b = lx21 * z0 + lx22 * z1;
    s.p_a = sn * z2;
    s.p_b = lp21 * z2 + lp22 * z3;
  });
  return out;
}

std::vector<double> default_phases(int k) {
  if (k < 1) throw std::invalid_argument("default_phases: k must be >= 1");
  std::vector<double> phases(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    phases[static_cast<std::size_t>(j)] = kPi * j / k;
  }
  return phases;
}

namespace {

struct Envelope {
  double variance;   // envelope Gaussian variance
  double bound;      // M = sup_x P(x) / g_env(x)
};

// P(x) = g_m(x) (a x^2 + b) with a = xi c^2 / (2 m^2 (n-1)) and b = 1 - a m
// (the exact mixture decomposition of the marginal). Against a Gaussian
// envelope of variance v > m the ratio is
//   sqrt(v/m) (a t + b) e^{-t delta},  t = x^2, delta = (1/m - 1/v)/2,
// maximized at t* = 1/delta - b/a (or t = 0), which gives a closed-form M.
Envelope make_envelope(const SubtractedStateParams& params, double factor) {
  if (!(factor > 1.0)) {
    throw std::invalid_argument(
        "sample_homodyne_subtracted: envelope variance factor must be > 1");
  }
  const double m = params.m;
  const double v = factor * m;
  const double csq_xi = params.xi * params.c_sq();
  double a = 0.0, b = 1.0;
  if (csq_xi > 0.0) {
    a = csq_xi / (2.0 * m * m * (params.n - 1.0));
    b = 1.0 - a * m;
  }
  const double delta = 0.5 * (1.0 / m - 1.0 / v);
  const double prefactor = std::sqrt(v / m);
  double best = prefactor * b;  // t = 0
  if (a > 0.0) {
    const double t_star = 1.0 / delta - b / a;
    if (t_star > 0.0) {
      const double cand = prefactor * (a * t_star + b) * std::exp(-delta * t_star);
      best = std::max(best, cand);
    }
  }
  return {v, best};
}

}  // namespace

HomodyneSampleResult sample_homodyne_subtracted(
    const SubtractedStateParams& params, std::span<const double> phases,
    std::size_t count, std::uint64_t seed,
    const HomodyneSamplerOptions& opts) {
  if (phases.empty()) {
    throw std::invalid_argument("sample_homodyne_subtracted: no phases given");
  }
  for (double ph : phases) {
    if (!(ph >= 0.0) || ph >= kPi) {
      throw std::invalid_argument(
          "sample_homodyne_subtracted: phases must lie in [0, pi)");
    }
  }
  if (!params.is_radial()) {
    throw std::invalid_argument(
        "sample_homodyne_subtracted: params must be radially symmetric");
  }

  const Envelope env = make_envelope(params, opts.envelope_variance_factor);
  const double sqrt_v = std::sqrt(env.variance);
  const double env_norm = 1.0 / std::sqrt(kTwoPi * env.variance);

  // Envelope soundness: spot-check the analytic bound before drawing.
  for (int i = 0; i <= 64; ++i) {
    const double x = (i - 32) * 0.25 * sqrt_v;
    const double ceiling =
        env.bound * env_norm * std::exp(-x * x / (2.0 * env.variance));
    if (marginal_pdf(params, x) > ceiling * (1.0 + 1e-12)) {
      throw envelope_violation(
          "sample_homodyne_subtracted: envelope bound fails its "
          "construction-time check");
    }
  }

  HomodyneSampleResult out;
  out.analytic_acceptance = 1.0 / env.bound;
  out.records.reserve(count);
  RandomStream stream(seed);
  while (out.records.size() < count) {
    const double x = sqrt_v * stream.next_gaussian();
    const double u = stream.next_uniform();
    ++out.candidates;
    const double pdf = marginal_pdf(params, x);
    const double ceiling = env.bound * env_norm * std::exp(-x * x / (2.0 * env.variance));
    if (pdf > ceiling * (1.0 + 1e-12)) {
      throw envelope_violation(
          "sample_homodyne_subtracted: marginal exceeded its analytic "
          "envelope bound");
    }
    if (u * ceiling <= pdf) {
      const std::size_t i = out.records.size();
      out.records.push_back({phases[i % phases.size()], x});
    }
  }
  return out;
}

std::string records_to_csv(std::span<const QuadratureRecord> records) {
  std::ostringstream out;
  out << "phase,value\n";
  for (const auto& r : records) {
    out << format_number(r.phase) << ',' << format_number(r.value) << "\n";
  }
  return out.str();
}

std::vector<QuadratureRecord> records_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("phase,value", 0) != 0) {
    throw std::invalid_argument("records_from_csv: missing 'phase,value' header");
  }
  std::vector<QuadratureRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("records_from_csv: malformed row: " + line);
    }
    QuadratureRecord r{};
    r.phase = std::stod(line.substr(0, comma));
    r.value = std::stod(line.substr(comma + 1));
    records.push_back(r);
  }
  return records;
}

std::vector<QuadratureRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  return records_from_csv(in);
}

std::string dataset_metadata_json(const SubtractedStateParams& params,
                                  std::span<const double> phases,
                                  std::size_t count, std::uint64_t seed,
                                  const HomodyneSamplerOptions& opts) {
  nlohmann::ordered_json j;
  j["generator"] = kGeneratorName;
  j["seed"] = seed;
  j["count"] = count;
  j["params"] = {{"n", params.n},
                 {"m", params.m},
                 {"c1", params.c1},
                 {"c2", params.c2},
                 {"xi", params.xi}};
  j["phases"] = std::vector<double>(phases.begin(), phases.end());
  j["envelope_variance_factor"] = opts.envelope_variance_factor;
  j["convention"] = kCmConvention;
  return j.dump(2) + "\n";
}

std::string two_mode_samples_to_csv(std::span<const TwoModeSample> samples) {
  std::ostringstream out;
  out << "xa,pa,xb,pb\n";
  for (const auto& s : samples) {
    out << format_number(s.x_a) << ',' << format_number(s.p_a) << ','
        << format_number(s.x_b) << ',' << format_number(s.p_b) << "\n";
  }
  return out.str();
}

std::vector<TwoModeSample> two_mode_samples_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("xa,pa,xb,pb", 0) != 0) {
    throw std::invalid_argument(
        "two_mode_samples_from_csv: missing 'xa,pa,xb,pb' header");
  }
  std::vector<TwoModeSample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    TwoModeSample s{};
    char sep = 0;
    if (!(row >> s.x_a >> sep >> s.p_a >> sep >> s.x_b >> sep >> s.p_b)) {
      throw std::invalid_argument(
          "two_mode_samples_from_csv: malformed row: " + line);
    }
    samples.push_back(s);
  }
  return samples;
}

std::vector<TwoModeSample> two_mode_samples_from_csv(const std::string& text) {
  std::istringstream in(text);
  return two_mode_samples_from_csv(in);
}

}  // namespace cvq
