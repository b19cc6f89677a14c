#include "durboot/harness/experiment.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include "durboot/error.hpp"
#include "durboot/harness/ks.hpp"
#include "durboot/parallel.hpp"
#include "durboot/seed.hpp"

namespace durboot {

namespace fs = std::filesystem;

TimeSeries simulate_series(const InnovationSpec& spec, std::size_t n, std::uint64_t seed) {
  const InnovationVector eps = sample_innovations(spec, n, seed);
  TimeSeries series = simulate_double_unit_root(eps.values);
  series.spec = spec;
  series.seed = seed;
  return series;
}

std::vector<double> FiniteSampleDistribution::u_values() const {
  std::vector<double> out;
  for (const auto& d : draws)
    if (!d.failed) out.push_back(d.u);
  return out;
}

std::vector<double> FiniteSampleDistribution::v_values() const {
  std::vector<double> out;
  for (const auto& d : draws)
    if (!d.failed) out.push_back(d.v);
  return out;
}

FiniteSampleDistribution finite_sample_distribution(const InnovationSpec& spec, const LossFunction& loss,
                                                    std::size_t n, std::size_t replicates, std::uint64_t seed,
                                                    unsigned threads, const FitOptions& fit) {
  FiniteSampleDistribution out;
  out.n = n;
  out.a_n = partial_sum_scale(spec, n);
  out.draws.resize(replicates);
  parallel_for(replicates, threads, [&](std::size_t r) {
    FiniteSampleDraw& draw = out.draws[r];
    draw.rep = r;
    try {
      const TimeSeries series = simulate_series(spec, n, derive_seed(seed, "simulate", r));
      const EstimateResult est = fit_ar2(series, loss, fit);
      const NormalizedStatistic stat = normalized_statistic(est.coeffs, kDoubleUnitRoot, n, out.a_n);
      draw.u = stat.u;
      draw.v = stat.v;
      draw.coeffs = est.coeffs;
    } catch (const Error& err) {
      if (err.is_validation()) throw;
      draw.failed = true;
    }
  });
  for (const auto& d : out.draws) out.failure_count += d.failed ? 1 : 0;
  return out;
}

PsiMoments sampled_limit_moments(const InnovationSpec& spec, const LossFunction& loss, std::size_t draws,
                                 std::uint64_t seed) {
  const InnovationVector eps = sample_innovations(spec, draws, derive_seed(seed, "moments"));
  PsiMoments m = psi_moments(eps.values, loss);
  if (spec.finite_variance()) m.sw_correlation = psi_correlation(eps.values, loss);
  return m;
}

PsiMoments quadrature_limit_moments(const InnovationSpec& spec, const LossFunction& loss) {
  // All integrands are even, so E g(eps) = E g(|eps|).
  PsiMoments m;
  if (spec.family == Family::ParetoTwoSided) {
    // |eps| = scale * U^(-1/alpha) with U ~ U(0,1).
    boost::math::quadrature::tanh_sinh<double> integrator;
    auto magnitude = [&](double u) { return spec.scale * std::pow(u, -1.0 / spec.alpha); };
    m.sigma2 = integrator.integrate([&](double u) { const double s = loss.psi(magnitude(u)); return s * s; }, 0.0, 1.0);
    m.psiprime_mean = integrator.integrate([&](double u) { return loss.psi_prime(magnitude(u)); }, 0.0, 1.0);
    return m;
  }
  if (spec.family == Family::Gaussian) {
    boost::math::quadrature::exp_sinh<double> integrator;
    const double sigma = spec.scale;
    auto density = [&](double x) {
      return 2.0 * std::exp(-0.5 * (x / sigma) * (x / sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    m.sigma2 = integrator.integrate([&](double x) { const double s = loss.psi(x); return s * s * density(x); });
    m.psiprime_mean = integrator.integrate([&](double x) { return loss.psi_prime(x) * density(x); });
    const double cross = integrator.integrate([&](double x) { return x * loss.psi(x) * density(x); });
    m.sw_correlation = m.sigma2 > 0.0 ? cross / (sigma * std::sqrt(m.sigma2)) : 0.0;
    return m;
  }
  throw Error(ErrorCode::Config, "quadrature moments need a closed-form density (pareto or gaussian)");
}

CoverageResult coverage_study(const InnovationSpec& spec, const LossFunction& loss, std::size_t n,
                              const BootstrapOptions& opts, double level, std::size_t reps, std::uint64_t seed,
                              unsigned threads) {
  CoverageResult out;
  out.records.resize(reps);
  BootstrapOptions inner = opts;
  inner.threads = 1;
  inner.throw_on_high_failure = false;
  if (!inner.spec) inner.spec = spec;
  parallel_for(reps, threads, [&](std::size_t i) {
    CoverageRecord& rec = out.records[i];
    rec.rep = i;
    try {
      const TimeSeries series = simulate_series(spec, n, derive_seed(seed, "coverage-series", i));
      const BootstrapDistribution dist =
          bootstrap_distribution(series, loss, inner, derive_seed(seed, "coverage-bootstrap", i));
      rec.estimate = dist.center;
      rec.interval = bootstrap_ci(dist, level);
      rec.covers_phi1 = rec.interval.phi1.contains(kDoubleUnitRoot.phi1);
      rec.covers_phi2 = rec.interval.phi2.contains(kDoubleUnitRoot.phi2);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::Config) throw;
      rec.failed = true;
    }
  });
  std::size_t hits1 = 0, hits2 = 0;
  for (const auto& rec : out.records) {
    if (rec.failed) {
      ++out.failures;
      continue;
    }
    hits1 += rec.covers_phi1 ? 1 : 0;
    hits2 += rec.covers_phi2 ? 1 : 0;
  }
  const std::size_t used = reps - out.failures;
  if (used > 0) {
    out.rate_phi1 = static_cast<double>(hits1) / static_cast<double>(used);
    out.rate_phi2 = static_cast<double>(hits2) / static_cast<double>(used);
  }
  return out;
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

void write_finite_csv(std::ostream& out, const FiniteSampleDistribution& dist) {
  out << "rep,u,v,phi1_hat,phi2_hat,failed\n";
  for (const auto& d : dist.draws) {
    if (d.failed) out << fmt::format("{},nan,nan,nan,nan,1\n", d.rep);
    else out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},0\n", d.rep, d.u, d.v, d.coeffs.phi1, d.coeffs.phi2);
  }
}

void write_coverage_csv(std::ostream& out, const CoverageResult& result) {
  out << "rep,phi1_hat,phi2_hat,phi1_lower,phi1_upper,phi2_lower,phi2_upper,covers_phi1,covers_phi2,failed\n";
  for (const auto& r : result.records) {
    if (r.failed) {
      out << fmt::format("{},nan,nan,nan,nan,nan,nan,0,0,1\n", r.rep);
      continue;
    }
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},0\n", r.rep, r.estimate.phi1,
                       r.estimate.phi2, r.interval.phi1.lower, r.interval.phi1.upper, r.interval.phi2.lower,
                       r.interval.phi2.upper, r.covers_phi1 ? 1 : 0, r.covers_phi2 ? 1 : 0);
  }
}

void add_ks(ExperimentReport& report, std::string name, const std::vector<double>& ua, const std::vector<double>& va,
            const std::vector<double>& ub, const std::vector<double>& vb) {
  if (ua.empty() || ub.empty() || va.empty() || vb.empty()) {
    report.notes.push_back(fmt::format("{} skipped: empty sample", name));
    return;
  }
  report.ks.push_back({std::move(name), ks_distance(ua, ub), ks_distance(va, vb)});
}

}  // namespace

void emit_plot_data(const std::string& out_dir, const std::vector<NamedSample>& samples, ExperimentReport& report) {
  for (const auto& sample : samples) {
    if (sample.u.empty() && sample.v.empty()) {
      report.notes.push_back(fmt::format("ecdf_{} omitted: empty sample", sample.name));
      continue;
    }
    for (const auto& [coord, values] : {std::pair{"u", &sample.u}, std::pair{"v", &sample.v}}) {
      const std::string file = fmt::format("ecdf_{}_{}.csv", sample.name, coord);
      auto out = open_output(fs::path(out_dir) / file);
      write_ecdf_csv(out, ecdf_table(*values));
      report.files.push_back(file);
    }
  }
}

void write_report(std::ostream& out, const ExperimentReport& r) {
  out << fmt::format("# schema={}\n", ExperimentReport::kSchema);
  out << fmt::format("status = {}\n", r.failed ? "FAILED" : "OK");
  if (r.failed) out << fmt::format("failure = {}\n", r.failure);
  for (const auto& ks : r.ks) {
    out << fmt::format("ks_{}_u = {:.17g}\n", ks.name, ks.u);
    out << fmt::format("ks_{}_v = {:.17g}\n", ks.name, ks.v);
  }
  if (r.coverage_phi1) out << fmt::format("coverage_phi1 = {:.17g}\n", *r.coverage_phi1);
  if (r.coverage_phi2) out << fmt::format("coverage_phi2 = {:.17g}\n", *r.coverage_phi2);
  out << fmt::format("m = {}\n", r.m);
  out << fmt::format("a_n = {:.17g}\n", r.a_n);
  out << fmt::format("finite_failures = {}\n", r.finite_failures);
  out << fmt::format("bootstrap_failures = {}\n", r.bootstrap_failures);
  out << fmt::format("limit_singular = {}\n", r.limit_singular);
  out << fmt::format("coverage_failures = {}\n", r.coverage_failures);
  out << fmt::format("limit_sigma2 = {:.17g}\n", r.limit_moments.sigma2);
  out << fmt::format("limit_psiprime_mean = {:.17g}\n", r.limit_moments.psiprime_mean);
  out << fmt::format("limit_sw_correlation = {:.17g}\n", r.limit_moments.sw_correlation);
  if (r.quadrature_moments) {
    out << fmt::format("quadrature_sigma2 = {:.17g}\n", r.quadrature_moments->sigma2);
    out << fmt::format("quadrature_psiprime_mean = {:.17g}\n", r.quadrature_moments->psiprime_mean);
  }
  out << fmt::format("wall_seconds = {:.3f}\n", r.wall_seconds);
  for (const auto& f : r.files) out << fmt::format("file = {}\n", f);
  for (const auto& n : r.notes) out << fmt::format("note = {}\n", n);
  out << "# config\n";
  std::string line;
  for (char ch : r.config_echo) {
    if (ch == '\n') {
      out << "#   " << line << "\n";
      line.clear();
    } else {
      line += ch;
    }
  }
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config_echo = serialize_config(config);
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);

  auto write_file = [&](const std::string& name, auto&& writer) {
    auto out = open_output(dir / name);
    writer(out);
    report.files.push_back(name);
  };

  try {
    write_file("config.txt", [&](std::ostream& out) { out << report.config_echo; });
    const LossFunction loss = config.make_loss_function();
    const InnovationSpec& spec = config.spec;
    report.m = resample_size(config.n, config.gamma);
    report.a_n = partial_sum_scale(spec, config.n);
    if (certify_moment_condition(loss, spec) != MomentCondition::Holds) {
      report.notes.push_back(fmt::format("moment condition E psi = 0, E psi^2 < inf: {}",
                                         to_string(certify_moment_condition(loss, spec))));
    }

    // (1) finite-sample Monte Carlo
    FiniteSampleDistribution finite;
    if (config.R_mc > 0) {
      finite = finite_sample_distribution(spec, loss, config.n, config.R_mc, config.seed,
                                          config.threads);
      report.finite_failures = finite.failure_count;
      write_file("finite_sample.csv", [&](std::ostream& out) { write_finite_csv(out, finite); });
    }

    // (2) bootstrap of independently simulated series
    BootstrapOptions bopts;
    bopts.gamma = config.gamma;
    bopts.replicates = config.B;
    bopts.centering = config.centering;
    bopts.a_mode = config.a_mode;
    bopts.spec = spec;
    bopts.threads = config.threads;
    bopts.throw_on_high_failure = false;
    std::vector<double> boot_u, boot_v;
    std::vector<KsComparison> per_series;
    for (std::size_t i = 0; i < config.bootstrap_series; ++i) {
      const TimeSeries series = simulate_series(spec, config.n, derive_seed(config.seed, "bootstrap-series", i));
      const BootstrapDistribution dist =
          bootstrap_distribution(series, loss, bopts, derive_seed(config.seed, "bootstrap", i));
      report.bootstrap_failures += dist.failure_count;
      if (dist.high_failure_rate) report.notes.push_back(fmt::format("bootstrap series {}: HIGH_FAILURE_RATE", i));
      write_file(fmt::format("bootstrap_{}.csv", i), [&](std::ostream& out) { write_bootstrap_csv(out, dist); });
      write_file(fmt::format("bootstrap_{}_summary.json", i),
                 [&](std::ostream& out) { write_bootstrap_summary_json(out, dist); });
      const auto u = dist.u_values();
      const auto v = dist.v_values();
      if (!finite.draws.empty() && !u.empty())
        per_series.push_back({"", ks_distance(u, finite.u_values()), ks_distance(v, finite.v_values())});
      boot_u.insert(boot_u.end(), u.begin(), u.end());
      boot_v.insert(boot_v.end(), v.begin(), v.end());
    }

    // (3) limit law
    report.limit_moments = sampled_limit_moments(spec, loss, config.moment_draws, config.seed);
    if (config.moments_crosscheck) {
      if (spec.family == Family::SymmetricStable)
        report.notes.push_back("quadrature moments unavailable for symmetric_stable");
      else
        report.quadrature_moments = quadrature_limit_moments(spec, loss);
    }
    LimitDistribution limit;
    if (config.R_lim > 0) {
      limit = limit_distribution(spec.alpha, spec.p, report.limit_moments, config.R_lim, config.K, config.N,
                                 config.seed, config.threads);
      report.limit_singular = limit.singular_count;
      write_file("limit.csv", [&](std::ostream& out) { write_limit_csv(out, limit); });
    }

    // (4) pairwise KS
    add_ks(report, "bootstrap_vs_limit", boot_u, boot_v, limit.u_values(), limit.v_values());
    add_ks(report, "finite_vs_limit", finite.u_values(), finite.v_values(), limit.u_values(), limit.v_values());
    add_ks(report, "bootstrap_vs_finite", boot_u, boot_v, finite.u_values(), finite.v_values());
    if (!per_series.empty()) {
      KsComparison mean{"bootstrap_vs_finite_series_mean", 0.0, 0.0};
      for (const auto& k : per_series) {
        mean.u += k.u / static_cast<double>(per_series.size());
        mean.v += k.v / static_cast<double>(per_series.size());
      }
      report.ks.push_back(mean);
    }

    // (5) coverage
    if (config.coverage_reps > 0) {
      BootstrapOptions copts = bopts;
      copts.replicates = config.coverage_B;
      const CoverageResult cov = coverage_study(spec, loss, config.n, copts, config.level, config.coverage_reps,
                                                config.seed, config.threads);
      report.coverage_phi1 = cov.rate_phi1;
      report.coverage_phi2 = cov.rate_phi2;
      report.coverage_failures = cov.failures;
      write_file("coverage.csv", [&](std::ostream& out) { write_coverage_csv(out, cov); });
    }

    // (6) plot data
    emit_plot_data(config.out_dir,
                   {{"finite", finite.u_values(), finite.v_values()},
                    {"bootstrap", boot_u, boot_v},
                    {"limit", limit.u_values(), limit.v_values()}},
                   report);
  } catch (const std::exception& err) {
    report.failed = true;
    report.failure = err.what();
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    auto out = open_output(dir / "report.txt");
    write_report(out, report);
    throw;
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.files.push_back("report.txt");
  auto out = open_output(dir / "report.txt");
  write_report(out, report);
  return report;
}

}  // namespace durboot
