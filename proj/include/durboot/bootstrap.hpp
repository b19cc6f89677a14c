#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "durboot/ar_process.hpp"
#include "durboot/error.hpp"
#include "durboot/innovations.hpp"
#include "durboot/m_estimation.hpp"

namespace durboot {

enum class CenteringMode { MeanCenter, Symmetrize, None };
enum class AMode { Theoretical, Empirical };

std::string_view to_string(CenteringMode mode);
std::string_view to_string(AMode mode);
CenteringMode parse_centering_mode(std::string_view name);
AMode parse_a_mode(std::string_view name);

/// Equally weighted atoms of the residual distribution that is resampled.
struct EmpiricalDist {
  std::vector<double> atoms;
  CenteringMode centering = CenteringMode::Symmetrize;
  std::size_t source_size = 0;
};

/**
 * MeanCenter: atoms e_i - mean(e). Symmetrize: atoms +-(e_i - mean(e)), in
 * the order (c_1, -c_1, c_2, -c_2, ...), so every odd function averages to
 * exactly zero over them. None: raw residuals.
 */
EmpiricalDist residual_empirical(std::span<const double> residuals, CenteringMode mode);

/// m draws with replacement; a pure function of (dist, m, seed).
std::vector<double> resample(const EmpiricalDist& dist, std::size_t m, std::uint64_t seed);

/// Empirical counterpart of inf{x : P(|e| > x) <= 1/m}: the
/// ceil(N/m)-th largest |atom| among the N atoms.
double empirical_normalizer(const EmpiricalDist& dist, std::size_t m);

/// Extrapolates the empirical normalizer from level m to level n by a
/// power law, with the tail exponent read off two order statistics
/// (ranks k and 4k, k = ceil(N/m)). The exponent 1/alpha is clamped to
/// [0.5, 5].
double extrapolated_normalizer(const EmpiricalDist& dist, std::size_t m, std::size_t n);

/// Bootstrap path X*_t = phi1 X*_{t-1} + phi2 X*_{t-2} + e*_t with zero pre-sample.
TimeSeries bootstrap_series(Coefficients coeffs_hat, const EmpiricalDist& dist, std::size_t m, std::uint64_t seed);

/// Refits the bootstrap path and normalizes around coeffs_hat with (m, a_m).
/// Fitting errors (DegenerateDesign, NoConvergence) propagate.
NormalizedStatistic bootstrap_replicate(Coefficients coeffs_hat, const EmpiricalDist& dist, std::size_t m,
                                        const LossFunction& loss, double a_m, std::uint64_t seed,
                                        const FitOptions& fit = {});

struct BootstrapDraw {
  std::size_t rep = 0;
  NormalizedStatistic stat;
  Coefficients coeffs;  // (phi1*, phi2*)
  bool failed = false;
  std::optional<ErrorCode> failure;
};

struct BootstrapOptions {
  double gamma = 0.7;
  std::size_t replicates = 999;
  CenteringMode centering = CenteringMode::Symmetrize;
  AMode a_mode = AMode::Empirical;
  /// Innovation law for AMode::Theoretical; the series' own spec is used
  /// when this is empty.
  std::optional<InnovationSpec> spec;
  /// Index of the first replicate; replicate r uses derive_seed(seed, "replicate", r).
  std::size_t first_replicate = 0;
  unsigned threads = 1;
  bool throw_on_high_failure = true;
  FitOptions fit;
};

struct BootstrapDistribution {
  std::vector<BootstrapDraw> draws;
  std::size_t n = 0;
  std::size_t m = 0;
  double gamma = 0.0;
  double a_m = 0.0;
  /// Normalizer at the original sample size, in the same a_mode; used to map
  /// bootstrap quantiles back onto the scale of the original estimate.
  double a_n = 0.0;
  AMode a_mode = AMode::Empirical;
  CenteringMode centering = CenteringMode::Symmetrize;
  Coefficients center;
  std::size_t failure_count = 0;
  bool high_failure_rate = false;

  std::vector<double> u_values() const;
  std::vector<double> v_values() const;
};

/// m = max(3, floor(n^gamma)).
std::size_t resample_size(std::size_t n, double gamma);

/**
 * Fits the series once, builds the residual distribution and runs
 * `replicates` bootstrap replicates. Failed replicates are kept in `draws`
 * with `failed` set and are skipped by the accessors. More than 10% failures
 * throws Error{HighFailureRate} unless opts.throw_on_high_failure is false.
 * The result does not depend on opts.threads.
 */
BootstrapDistribution bootstrap_distribution(const TimeSeries& series, const LossFunction& loss,
                                             const BootstrapOptions& opts, std::uint64_t seed);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double x) const { return lower <= x && x <= upper; }
};

struct BootstrapInterval {
  Interval phi1;
  Interval phi2;
  double level = 0.95;
};

/**
 * Percentile intervals from the bootstrap law of the normalized statistic,
 * rescaled to the original sample size with (n, a_n). With beta = (1-level)/2:
 *   phi1: [phi1_hat - q_{1-beta}(u*) / (n^{1/2} a_n), phi1_hat - q_beta(u*) / (n^{1/2} a_n)]
 *   phi2: the same with d* = v* / (n^{3/2} a_n) - u* / (n^{1/2} a_n).
 * Throws Error{RejectRange} for level outside (0,1) or fewer than 20 draws.
 */
BootstrapInterval bootstrap_ci(const BootstrapDistribution& dist, double level);

/// CSV columns: rep,u_star,v_star,phi1_star,phi2_star,failed
void write_bootstrap_csv(std::ostream& out, const BootstrapDistribution& dist);
/// m, gamma, a_m, a_n, B, failure_count and quantiles of u*, v* at 0.01 ... 0.99.
void write_bootstrap_summary_json(std::ostream& out, const BootstrapDistribution& dist);

}  // namespace durboot
