#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "durboot/bootstrap.hpp"
#include "durboot/harness/config.hpp"
#include "durboot/limit_law.hpp"
#include "durboot/m_estimation.hpp"

namespace durboot {

/// Double-unit-root path driven by sample_innovations(spec, n, seed), with
/// the generating metadata attached.
TimeSeries simulate_series(const InnovationSpec& spec, std::size_t n, std::uint64_t seed);

struct FiniteSampleDraw {
  std::size_t rep = 0;
  double u = 0.0;
  double v = 0.0;
  Coefficients coeffs;
  bool failed = false;
};

struct FiniteSampleDistribution {
  std::vector<FiniteSampleDraw> draws;
  std::size_t n = 0;
  double a_n = 0.0;
  std::size_t failure_count = 0;

  std::vector<double> u_values() const;
  std::vector<double> v_values() const;
};

/// Monte Carlo law of (u, v) around (2, -1) at sample size n, normalized with
/// partial_sum_scale(spec, n). Replicate r simulates with
/// derive_seed(seed, "simulate", r).
FiniteSampleDistribution finite_sample_distribution(const InnovationSpec& spec, const LossFunction& loss,
                                                    std::size_t n, std::size_t replicates, std::uint64_t seed,
                                                    unsigned threads = 1, const FitOptions& fit = {});

/// psi moments from `draws` innovations sampled with derive_seed(seed, "moments");
/// for finite-variance specs the S-W correlation is estimated as well.
PsiMoments sampled_limit_moments(const InnovationSpec& spec, const LossFunction& loss, std::size_t draws,
                                 std::uint64_t seed);

/// The same moments by quadrature against the exact density. Available for
/// ParetoTwoSided and Gaussian; throws Error{Config} for SymmetricStable.
PsiMoments quadrature_limit_moments(const InnovationSpec& spec, const LossFunction& loss);

struct CoverageRecord {
  std::size_t rep = 0;
  Coefficients estimate;
  BootstrapInterval interval;
  bool covers_phi1 = false;
  bool covers_phi2 = false;
  bool failed = false;
};

struct CoverageResult {
  std::vector<CoverageRecord> records;
  double rate_phi1 = 0.0;
  double rate_phi2 = 0.0;
  std::size_t failures = 0;
};

/// Fraction of `reps` simulated series whose bootstrap_ci at `level` contains
/// the true (2, -1). Series i uses derive_seed(seed, "coverage-series", i),
/// its bootstrap derive_seed(seed, "coverage-bootstrap", i).
CoverageResult coverage_study(const InnovationSpec& spec, const LossFunction& loss, std::size_t n,
                              const BootstrapOptions& opts, double level, std::size_t reps, std::uint64_t seed,
                              unsigned threads = 1);

struct KsComparison {
  std::string name;
  double u = 0.0;
  double v = 0.0;
};

struct ExperimentReport {
  static constexpr int kSchema = 1;
  bool failed = false;
  std::string failure;
  std::vector<KsComparison> ks;
  std::optional<double> coverage_phi1;
  std::optional<double> coverage_phi2;
  std::size_t finite_failures = 0;
  std::size_t bootstrap_failures = 0;
  std::size_t limit_singular = 0;
  std::size_t coverage_failures = 0;
  std::size_t m = 0;
  double a_n = 0.0;
  PsiMoments limit_moments;
  std::optional<PsiMoments> quadrature_moments;
  double wall_seconds = 0.0;
  std::string config_echo;
  std::vector<std::string> files;
  std::vector<std::string> notes;
};

/**
 * Full pipeline: finite-sample Monte Carlo (R_mc), bootstrap of
 * `bootstrap_series` simulated series, limit-law draws (R_lim) with moments
 * from a moment_draws-sized innovation sample, pairwise KS distances for u
 * and v, an optional coverage study, and all CSV/ECDF outputs plus
 * report.txt in config.out_dir. CSV contents depend only on the config
 * (not on `threads`). If a stage throws, report.txt is written with
 * `status = FAILED` and the error is rethrown.
 */
ExperimentReport run_experiment(const ExperimentConfig& config);

struct NamedSample {
  std::string name;
  std::vector<double> u;
  std::vector<double> v;
};

/// Writes ecdf_<name>_u.csv / ecdf_<name>_v.csv per sample; empty samples
/// are skipped and noted in the report.
void emit_plot_data(const std::string& out_dir, const std::vector<NamedSample>& samples, ExperimentReport& report);

/// `# schema=1` header followed by `key = value` lines.
void write_report(std::ostream& out, const ExperimentReport& report);

}  // namespace durboot
