#include "durboot/bootstrap.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "durboot/parallel.hpp"
#include "durboot/seed.hpp"
#include "durboot/stats.hpp"

namespace durboot {

std::string_view to_string(CenteringMode mode) {
  switch (mode) {
    case CenteringMode::MeanCenter: return "mean_center";
    case CenteringMode::Symmetrize: return "symmetrize";
    case CenteringMode::None: return "none";
  }
  return "unknown";
}

std::string_view to_string(AMode mode) { return mode == AMode::Theoretical ? "theoretical" : "empirical"; }

CenteringMode parse_centering_mode(std::string_view name) {
  if (name == "mean_center" || name == "mean") return CenteringMode::MeanCenter;
  if (name == "symmetrize") return CenteringMode::Symmetrize;
  if (name == "none") return CenteringMode::None;
  throw Error(ErrorCode::Config, fmt::format("unknown centering mode '{}'", name));
}

AMode parse_a_mode(std::string_view name) {
  if (name == "theoretical") return AMode::Theoretical;
  if (name == "empirical") return AMode::Empirical;
  throw Error(ErrorCode::Config, fmt::format("unknown a_mode '{}'", name));
}

EmpiricalDist residual_empirical(std::span<const double> residuals, CenteringMode mode) {
  if (residuals.empty()) throw Error(ErrorCode::RejectRange, "residual distribution needs at least one residual");
  EmpiricalDist dist;
  dist.centering = mode;
  dist.source_size = residuals.size();
  if (mode == CenteringMode::None) {
    dist.atoms.assign(residuals.begin(), residuals.end());
    return dist;
  }
  double mean = 0.0;
  for (double e : residuals) mean += e;
  mean /= static_cast<double>(residuals.size());
  if (mode == CenteringMode::MeanCenter) {
    dist.atoms.reserve(residuals.size());
    for (double e : residuals) dist.atoms.push_back(e - mean);
  } else {
    dist.atoms.reserve(2 * residuals.size());
    for (double e : residuals) {
      dist.atoms.push_back(e - mean);
      dist.atoms.push_back(-(e - mean));
    }
  }
  return dist;
}

std::vector<double> resample(const EmpiricalDist& dist, std::size_t m, std::uint64_t seed) {
  if (dist.atoms.empty()) throw Error(ErrorCode::EmptySample, "cannot resample an empty distribution");
  if (m == 0) throw Error(ErrorCode::RejectRange, "resample size must be >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, dist.atoms.size() - 1);
  std::vector<double> out(m);
  for (auto& x : out) x = dist.atoms[pick(rng)];
  return out;
}

namespace {

// k-th largest |atom|, k counted from 1 and clamped to the sample.
double kth_largest_magnitude(const EmpiricalDist& dist, std::size_t k) {
  std::vector<double> mags(dist.atoms.size());
  std::transform(dist.atoms.begin(), dist.atoms.end(), mags.begin(), [](double x) { return std::abs(x); });
  k = std::clamp<std::size_t>(k, 1, mags.size());
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k - 1), mags.end(), std::greater<>());
  return mags[k - 1];
}

std::size_t tail_rank(std::size_t atoms, std::size_t m) { return (atoms + m - 1) / m; }

}  // namespace

double empirical_normalizer(const EmpiricalDist& dist, std::size_t m) {
  if (dist.atoms.empty()) throw Error(ErrorCode::EmptySample, "empty residual distribution");
  if (m == 0) throw Error(ErrorCode::RejectRange, "m must be >= 1");
  return kth_largest_magnitude(dist, tail_rank(dist.atoms.size(), m));
}

double extrapolated_normalizer(const EmpiricalDist& dist, std::size_t m, std::size_t n) {
  const std::size_t k1 = std::max<std::size_t>(1, tail_rank(dist.atoms.size(), m));
  const std::size_t k2 = std::min(dist.atoms.size(), 4 * k1);
  const double x1 = kth_largest_magnitude(dist, k1);
  const double x2 = kth_largest_magnitude(dist, k2);
  double inv_alpha = 0.5;
  if (k2 > k1 && x2 > 0.0 && x1 > x2)
    inv_alpha = std::log(x1 / x2) / std::log(static_cast<double>(k2) / static_cast<double>(k1));
  inv_alpha = std::clamp(inv_alpha, 0.5, 5.0);
  return x1 * std::pow(static_cast<double>(n) / static_cast<double>(m), inv_alpha);
}

TimeSeries bootstrap_series(Coefficients coeffs_hat, const EmpiricalDist& dist, std::size_t m, std::uint64_t seed) {
  if (m < 3) throw Error(ErrorCode::RejectRange, "bootstrap series needs m >= 3");
  const std::vector<double> draws = resample(dist, m, seed);
  return simulate_ar(coeffs_hat, draws);
}

namespace {

BootstrapDraw run_replicate(Coefficients coeffs_hat, const EmpiricalDist& dist, std::size_t m,
                            const LossFunction& loss, double a_m, std::uint64_t seed, const FitOptions& fit) {
  BootstrapDraw draw;
  const TimeSeries path = bootstrap_series(coeffs_hat, dist, m, seed);
  const EstimateResult est = fit_ar2(path, loss, fit);
  draw.coeffs = est.coeffs;
  draw.stat = normalized_statistic(est.coeffs, coeffs_hat, m, a_m);
  return draw;
}

}  // namespace

NormalizedStatistic bootstrap_replicate(Coefficients coeffs_hat, const EmpiricalDist& dist, std::size_t m,
                                        const LossFunction& loss, double a_m, std::uint64_t seed,
                                        const FitOptions& fit) {
  if (!(a_m > 0.0)) throw Error(ErrorCode::RejectRange, "a_m must be positive");
  return run_replicate(coeffs_hat, dist, m, loss, a_m, seed, fit).stat;
}

std::size_t resample_size(std::size_t n, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::RejectRange, fmt::format("gamma={} outside (0,1]", gamma));
  // The relative nudge keeps exact powers such as 100^1 from rounding down.
  const double raw = std::pow(static_cast<double>(n), gamma) * (1.0 + 1e-12);
  return std::max<std::size_t>(3, static_cast<std::size_t>(std::floor(raw)));
}

std::vector<double> BootstrapDistribution::u_values() const {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws)
    if (!d.failed) out.push_back(d.stat.u);
  return out;
}

std::vector<double> BootstrapDistribution::v_values() const {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws)
    if (!d.failed) out.push_back(d.stat.v);
  return out;
}

BootstrapDistribution bootstrap_distribution(const TimeSeries& series, const LossFunction& loss,
                                             const BootstrapOptions& opts, std::uint64_t seed) {
  if (opts.replicates == 0) throw Error(ErrorCode::RejectRange, "bootstrap needs at least one replicate");
  BootstrapDistribution out;
  out.n = series.size();
  out.gamma = opts.gamma;
  out.m = resample_size(out.n, opts.gamma);
  out.a_mode = opts.a_mode;
  out.centering = opts.centering;

  const EstimateResult fit = fit_ar2(series, loss, opts.fit);
  out.center = fit.coeffs;
  const EmpiricalDist dist = residual_empirical(fit.residuals, opts.centering);

  if (opts.a_mode == AMode::Theoretical) {
    const auto& spec = opts.spec ? opts.spec : series.spec;
    if (!spec) throw Error(ErrorCode::Config, "a_mode=theoretical needs an innovation spec");
    out.a_m = partial_sum_scale(*spec, out.m);
    out.a_n = partial_sum_scale(*spec, out.n);
  } else {
    out.a_m = empirical_normalizer(dist, out.m);
    out.a_n = extrapolated_normalizer(dist, out.m, out.n);
  }
  if (!(out.a_m > 0.0)) throw Error(ErrorCode::RejectRange, "bootstrap normalizer a_m is not positive");

  out.draws.resize(opts.replicates);
  parallel_for(opts.replicates, opts.threads, [&](std::size_t i) {
    const std::size_t rep = opts.first_replicate + i;
    BootstrapDraw& draw = out.draws[i];
    try {
      draw = run_replicate(out.center, dist, out.m, loss, out.a_m, derive_seed(seed, "replicate", rep), opts.fit);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DegenerateDesign && err.code() != ErrorCode::NoConvergence &&
          err.code() != ErrorCode::NonFinite)
        throw;
      draw = BootstrapDraw{};
      draw.failed = true;
      draw.failure = err.code();
    }
    draw.rep = rep;
  });

  out.failure_count = static_cast<std::size_t>(
      std::count_if(out.draws.begin(), out.draws.end(), [](const BootstrapDraw& d) { return d.failed; }));
  out.high_failure_rate = 10 * out.failure_count > opts.replicates;
  if (out.high_failure_rate && opts.throw_on_high_failure) {
    throw Error(ErrorCode::HighFailureRate,
                fmt::format("{} of {} bootstrap replicates failed", out.failure_count, opts.replicates));
  }
  return out;
}

BootstrapInterval bootstrap_ci(const BootstrapDistribution& dist, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::RejectRange, fmt::format("level={} outside (0,1)", level));
  std::vector<double> u = dist.u_values();
  std::vector<double> v = dist.v_values();
  if (u.size() < 20) throw Error(ErrorCode::RejectRange, "bootstrap_ci needs at least 20 successful draws");

  const double nd = static_cast<double>(dist.n);
  const double scale_u = std::sqrt(nd) * dist.a_n;
  const double scale_v = nd * std::sqrt(nd) * dist.a_n;
  std::vector<double> d1(u.size()), d2(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    d1[i] = u[i] / scale_u;
    d2[i] = v[i] / scale_v - u[i] / scale_u;
  }
  std::sort(d1.begin(), d1.end());
  std::sort(d2.begin(), d2.end());
  const double beta = 0.5 * (1.0 - level);
  BootstrapInterval out;
  out.level = level;
  out.phi1 = {dist.center.phi1 - quantile_sorted(d1, 1.0 - beta), dist.center.phi1 - quantile_sorted(d1, beta)};
  out.phi2 = {dist.center.phi2 - quantile_sorted(d2, 1.0 - beta), dist.center.phi2 - quantile_sorted(d2, beta)};
  return out;
}

void write_bootstrap_csv(std::ostream& out, const BootstrapDistribution& dist) {
  out << "rep,u_star,v_star,phi1_star,phi2_star,failed\n";
  for (const auto& d : dist.draws) {
    if (d.failed) {
      out << fmt::format("{},nan,nan,nan,nan,1\n", d.rep);
    } else {
      out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},0\n", d.rep, d.stat.u, d.stat.v, d.coeffs.phi1,
                         d.coeffs.phi2);
    }
  }
}

void write_bootstrap_summary_json(std::ostream& out, const BootstrapDistribution& dist) {
  static constexpr double kLevels[] = {0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99};
  nlohmann::ordered_json j;
  j["m"] = dist.m;
  j["n"] = dist.n;
  j["gamma"] = dist.gamma;
  j["a_m"] = dist.a_m;
  j["a_n"] = dist.a_n;
  j["a_mode"] = to_string(dist.a_mode);
  j["centering"] = to_string(dist.centering);
  j["B"] = dist.draws.size();
  j["failure_count"] = dist.failure_count;
  j["phi1_hat"] = dist.center.phi1;
  j["phi2_hat"] = dist.center.phi2;
  auto quantiles = [&](std::vector<double> values) {
    nlohmann::ordered_json q = nlohmann::ordered_json::object();
    if (values.empty()) return q;
    std::sort(values.begin(), values.end());
    for (double level : kLevels) q[fmt::format("{:.2f}", level)] = quantile_sorted(values, level);
    return q;
  };
  j["quantiles_u"] = quantiles(dist.u_values());
  j["quantiles_v"] = quantiles(dist.v_values());
  out << j.dump(2) << "\n";
}

}  // namespace durboot
