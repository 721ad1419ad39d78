#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqsim/wigner.hpp"

namespace cvq {

/// Counter-based 64-bit generator "cvq-splitmix64-v1": the value at counter i
/// for seed s is the SplitMix64 output of state s + (i+1) * 0x9E3779B97F4A7C15.
/// Stateless, so draws can be indexed (and parallelized) deterministically;
/// any reimplementation must match the test vectors in the sampling tests.
struct CounterRng {
  std::uint64_t seed = 0;

  std::uint64_t u64_at(std::uint64_t counter) const {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform draw in (0, 1] (never 0, so it is safe inside logs).
  double uniform_at(std::uint64_t counter) const {
    return (static_cast<double>(u64_at(counter) >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Box-Muller pair from counters (c, c+1).
  void gaussian_pair_at(std::uint64_t counter, double* z0, double* z1) const;
};

/// Sequential view over a counter stream; next_gaussian always consumes
/// exactly two counters (the sine branch of the pair is discarded) so stream
/// layouts stay platform-independent.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : rng_{seed} {}
  std::uint64_t next_u64() { return rng_.u64_at(next_++); }
  double next_uniform() { return rng_.uniform_at(next_++); }
  double next_gaussian();
  std::uint64_t consumed() const { return next_; }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

/// One simultaneous four-quadrature draw (simulation convenience; a real
/// homodyne station would measure one quadrature per mode per shot).
struct TwoModeSample {
  double x_a;
  double p_a;
  double x_b;
  double p_b;
};

/// One homodyne outcome of Bob's conditional state.
struct QuadratureRecord {
  double phase;  // in [0, pi)
  double value;
};

/// Zero-mean correlated Gaussian draws whose sample covariance converges to
/// `cm`. Sample i consumes counters 4i..4i+3, so the output is deterministic
/// for a fixed seed regardless of threading.
std::vector<TwoModeSample> sample_gaussian_two_mode(const TwoModeCovariance& cm,
                                                    std::size_t count,
                                                    std::uint64_t seed);

/// k phases equally spaced in [0, pi).
std::vector<double> default_phases(int k = 12);

struct HomodyneSampleResult {
  std::vector<QuadratureRecord> records;
  /// Number of candidate draws the rejection loop consumed.
  std::uint64_t candidates = 0;
  /// 1 / M where M = sup_x P(x)/envelope(x), computed in closed form.
  double analytic_acceptance = 0.0;

  double empirical_acceptance() const {
    return candidates ? static_cast<double>(records.size()) /
                            static_cast<double>(candidates)
                      : 0.0;
  }
};

struct HomodyneSamplerOptions {
  /// Envelope variance = factor * m; must exceed 1 for the Gaussian envelope
  /// to dominate the polynomial-times-Gaussian marginal.
  double envelope_variance_factor = 1.2;
};

/// Homodyne records of the mixed subtracted state, drawn from marginal_pdf by
/// rejection sampling against a Gaussian envelope (the marginal is
/// phase-independent by radial symmetry; phases are recorded round-robin for
/// the tomography interface). Throws envelope_violation if a candidate
/// density ever exceeds the analytic bound - that indicates a bug, not data.
HomodyneSampleResult sample_homodyne_subtracted(
    const SubtractedStateParams& params, std::span<const double> phases,
    std::size_t count, std::uint64_t seed,
    const HomodyneSamplerOptions& opts = {});

struct envelope_violation : std::logic_error {
  using std::logic_error::logic_error;
};

/// Dataset files: CSV with header `phase,value`, one record per row.
std::string records_to_csv(std::span<const QuadratureRecord> records);
std::vector<QuadratureRecord> records_from_csv(std::istream& in);
std::vector<QuadratureRecord> records_from_csv(const std::string& text);

/// Metadata sidecar (JSON) describing how a dataset was produced.
std::string dataset_metadata_json(const SubtractedStateParams& params,
                                  std::span<const double> phases,
                                  std::size_t count, std::uint64_t seed,
                                  const HomodyneSamplerOptions& opts = {});

/// Two-mode sample CSV with header `xa,pa,xb,pb`.
std::string two_mode_samples_to_csv(std::span<const TwoModeSample> samples);
std::vector<TwoModeSample> two_mode_samples_from_csv(std::istream& in);
std::vector<TwoModeSample> two_mode_samples_from_csv(const std::string& text);

}  // namespace cvq
