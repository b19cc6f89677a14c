#include "durboot/limit_law.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "durboot/error.hpp"
#include "durboot/parallel.hpp"
#include "durboot/seed.hpp"

namespace durboot {

namespace {

void validate_lepage(double alpha, double p, std::size_t terms, std::size_t grid) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw Error(ErrorCode::RejectRange, fmt::format("alpha={} outside (0,2]", alpha));
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::RejectRange, fmt::format("p={} outside [0,1]", p));
  if (terms < 1) throw Error(ErrorCode::RejectRange, "LePage series needs K >= 1 terms");
  if (grid < 2) throw Error(ErrorCode::RejectRange, "grid needs N >= 2");
  if (alpha >= 1.0 && p != 0.5)
    throw Error(ErrorCode::RejectAsymmetry, fmt::format("alpha={} in [1,2] requires p=1/2", alpha));
}

// Adds each jump to the first grid point at or after its location.
void evaluate_series(LePagePath& path) {
  const std::size_t grid = path.grid;
  std::vector<double> increments(grid + 1, 0.0);
  const double exponent = -1.0 / path.alpha;
  for (std::size_t k = 0; k < path.arrivals.size(); ++k) {
    const double jump = path.signs[k] * std::pow(path.arrivals[k], exponent);
    auto bucket = static_cast<std::size_t>(std::ceil(path.locations[k] * static_cast<double>(grid)));
    bucket = std::clamp<std::size_t>(bucket, 1, grid);  // keeps S(0) = 0
    increments[bucket] += jump;
  }
  path.values.assign(grid + 1, 0.0);
  double running = increments[0];
  path.values[0] = running;
  for (std::size_t j = 1; j <= grid; ++j) {
    running += increments[j];
    path.values[j] = running;
  }
}

}  // namespace

BrownianPath sample_brownian_path(std::size_t grid, std::uint64_t seed) {
  if (grid < 2) throw Error(ErrorCode::RejectRange, "grid needs N >= 2");
  BrownianPath path;
  path.grid = grid;
  path.seed = seed;
  path.values.resize(grid + 1);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / static_cast<double>(grid)));
  double w = 0.0;
  path.values[0] = 0.0;
  for (std::size_t j = 1; j <= grid; ++j) {
    w += normal(rng);
    path.values[j] = w;
  }
  return path;
}

LePagePath sample_lepage_path(double alpha, double p, std::size_t terms, std::size_t grid, std::uint64_t seed) {
  validate_lepage(alpha, p, terms, grid);
  LePagePath path;
  path.alpha = alpha;
  path.p = p;
  path.grid = grid;
  if (alpha == 2.0) {
    path.values = sample_brownian_path(grid, seed).values;
    return path;
  }
  path.terms = terms;
  path.arrivals.resize(terms);
  path.locations.resize(terms);
  path.signs.resize(terms);
  Rng rng(seed);
  double arrival = 0.0;
  for (std::size_t k = 0; k < terms; ++k) {
    arrival += -std::log(open_uniform(rng));
    path.arrivals[k] = arrival;
    path.locations[k] = open_uniform(rng);
    path.signs[k] = open_uniform(rng) < p ? 1 : -1;
  }
  evaluate_series(path);
  return path;
}

LePagePath lepage_path_from_terms(double alpha, double p, std::vector<double> arrivals, std::vector<double> locations,
                                  std::vector<int> signs, std::size_t grid) {
  validate_lepage(alpha, p, std::max<std::size_t>(arrivals.size(), 1), grid);
  if (locations.size() != arrivals.size() || signs.size() != arrivals.size())
    throw Error(ErrorCode::RejectRange, "LePage term arrays differ in length");
  LePagePath path;
  path.alpha = alpha;
  path.p = p;
  path.grid = grid;
  path.terms = arrivals.size();
  path.arrivals = std::move(arrivals);
  path.locations = std::move(locations);
  path.signs = std::move(signs);
  evaluate_series(path);
  return path;
}

LePagePath with_flipped_signs(const LePagePath& path) {
  LePagePath out = path;
  for (int& s : out.signs) s = -s;
  for (double& x : out.values) x = -x;
  out.p = 1.0 - path.p;
  return out;
}

IntegralSet stochastic_integrals(std::span<const double> s_path, std::span<const double> w_path) {
  if (s_path.size() != w_path.size())
    throw Error(ErrorCode::GridMismatch, fmt::format("S has {} grid points, W has {}", s_path.size(), w_path.size()));
  if (s_path.size() < 3) throw Error(ErrorCode::GridMismatch, "paths need at least 3 grid points");
  const std::size_t grid = s_path.size() - 1;
  const double h = 1.0 / static_cast<double>(grid);
  IntegralSet out;
  double inner = 0.0;  // left-endpoint sum of S over [0, t_j)
  for (std::size_t j = 0; j < grid; ++j) {
    const double s = s_path[j];
    const double dw = w_path[j + 1] - w_path[j];
    out.I1 += s * dw;
    out.I2 += inner * dw;
    out.G11 += s * s;
    out.G12 += s * inner;
    out.G22 += inner * inner;
    inner += h * s;
  }
  out.G11 *= h;
  out.G12 *= h;
  out.G22 *= h;
  return out;
}

LimitSample limit_vector_from_integrals(const IntegralSet& integrals, const PsiMoments& moments) {
  LimitSample out;
  out.integrals = integrals;
  out.moments = moments;
  const double det = integrals.G11 * integrals.G22 - integrals.G12 * integrals.G12;
  if (!(std::abs(det) >= 1e-14 * (integrals.G11 * integrals.G22 + 1.0))) {
    out.singular = true;
    out.u = out.v = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double factor = std::sqrt(moments.sigma2) / moments.psiprime_mean;
  const double b1 = factor * integrals.I1;
  const double b2 = factor * integrals.I2;
  out.u = (integrals.G22 * b1 - integrals.G12 * b2) / det;
  out.v = (integrals.G11 * b2 - integrals.G12 * b1) / det;
  return out;
}

LimitSample sample_limit_vector(double alpha, double p, const PsiMoments& moments, std::size_t terms,
                                std::size_t grid, std::uint64_t seed) {
  if (moments.psiprime_mean == 0.0) throw Error(ErrorCode::MomentDegenerate, "E psi' must be nonzero");
  if (!(moments.sigma2 >= 0.0)) throw Error(ErrorCode::RejectRange, "E psi^2 must be >= 0");
  const LePagePath s_path = sample_lepage_path(alpha, p, terms, grid, derive_seed(seed, "limit-S"));
  BrownianPath w_path = sample_brownian_path(grid, derive_seed(seed, "limit-W"));
  if (alpha == 2.0 && moments.sw_correlation != 0.0) {
    const double rho = std::clamp(moments.sw_correlation, -1.0, 1.0);
    const double rest = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t j = 0; j <= grid; ++j) w_path.values[j] = rho * s_path.values[j] + rest * w_path.values[j];
  }
  return limit_vector_from_integrals(stochastic_integrals(s_path.values, w_path.values), moments);
}

std::vector<double> LimitDistribution::u_values() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    if (!s.singular) out.push_back(s.u);
  return out;
}

std::vector<double> LimitDistribution::v_values() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    if (!s.singular) out.push_back(s.v);
  return out;
}

LimitDistribution limit_distribution(double alpha, double p, const PsiMoments& moments, std::size_t replicates,
                                     std::size_t terms, std::size_t grid, std::uint64_t seed, unsigned threads,
                                     std::size_t first_replicate) {
  if (replicates < 1) throw Error(ErrorCode::RejectRange, "limit distribution needs R >= 1");
  validate_lepage(alpha, p, terms, grid);
  LimitDistribution out;
  out.samples.resize(replicates);
  parallel_for(replicates, threads, [&](std::size_t i) {
    const std::size_t rep = first_replicate + i;
    out.samples[i] = sample_limit_vector(alpha, p, moments, terms, grid, derive_seed(seed, "limit", rep));
    out.samples[i].rep = rep;
  });
  for (const auto& s : out.samples) out.singular_count += s.singular ? 1 : 0;
  return out;
}

void write_limit_csv(std::ostream& out, const LimitDistribution& dist) {
  out << "rep,u_lim,v_lim,G11,G12,G22,I1,I2,singular\n";
  for (const auto& s : dist.samples) {
    const auto& g = s.integrals;
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", s.rep, s.u, s.v, g.G11, g.G12,
                       g.G22, g.I1, g.I2, s.singular ? 1 : 0);
  }
}

}  // namespace durboot
