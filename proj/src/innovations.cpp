#include "durboot/innovations.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "durboot/error.hpp"

namespace durboot {

namespace {

constexpr double kPi = std::numbers::pi;

// P(|X| > x) for a standard symmetric alpha-stable X, alpha not in {1, 2}.
// Integral representation of the distribution function for beta = 0:
//   V(t) = (cos t / sin(alpha t))^(alpha/(alpha-1)) * cos((alpha-1) t) / cos t
//   alpha > 1:  P = (2/pi) int_0^{pi/2} exp(-x^(alpha/(alpha-1)) V(t)) dt
//   alpha < 1:  P = (2/pi) int_0^{pi/2} (1 - exp(-x^(alpha/(alpha-1)) V(t))) dt
// The integrand has a boundary layer at one endpoint for large x, which
// tanh-sinh handles well; the complement argument gives cos t accurately
// near pi/2.
double standard_stable_tail(double alpha, double x) {
  const double e = alpha / (alpha - 1.0);
  const double xpow = std::pow(x, e);
  auto integrand = [&](double t, double tc) {
    // tc is the signed distance to the nearest endpoint; positive near pi/2.
    const double cos_t = tc > 0.0 ? std::sin(tc) : std::cos(t);
    const double sin_at = std::sin(alpha * t);
    // Endpoint limits: the integrand tends to 0 at t = 0 and to 1 at pi/2.
    if (cos_t <= 0.0 || sin_at <= 0.0) return t < 1.0 ? 0.0 : 1.0;
    const double v = std::pow(cos_t / sin_at, e) * std::cos((alpha - 1.0) * t) / cos_t;
    const double z = xpow * v;
    if (!std::isfinite(z)) return alpha > 1.0 ? 0.0 : 1.0;
    return alpha > 1.0 ? std::exp(-z) : -std::expm1(-z);
  };
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  const double integral = integrator.integrate(integrand, 0.0, kPi / 2.0, 1e-13);
  return std::clamp(2.0 / kPi * integral, 0.0, 1.0);
}

void validate(const InnovationSpec& spec) {
  if (!(spec.alpha > 0.0 && spec.alpha <= 2.0))
    throw Error(ErrorCode::RejectRange, fmt::format("alpha={} outside (0,2]", spec.alpha));
  if (!(spec.p >= 0.0 && spec.p <= 1.0))
    throw Error(ErrorCode::RejectRange, fmt::format("p={} outside [0,1]", spec.p));
  if (!(spec.scale > 0.0) || !std::isfinite(spec.scale))
    throw Error(ErrorCode::RejectRange, fmt::format("scale={} must be positive", spec.scale));
  if (spec.family == Family::Gaussian && spec.alpha != 2.0)
    throw Error(ErrorCode::RejectRange, "Gaussian family requires alpha=2");
  if (spec.alpha >= 1.0 && spec.p != 0.5)
    throw Error(ErrorCode::RejectAsymmetry,
                fmt::format("alpha={} in [1,2] requires p=1/2 (got p={})", spec.alpha, spec.p));
  if (spec.family == Family::SymmetricStable && spec.p != 0.5)
    throw Error(ErrorCode::RejectAsymmetry, "SymmetricStable family requires p=1/2");
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::SymmetricStable: return "symmetric_stable";
    case Family::ParetoTwoSided: return "pareto_two_sided";
    case Family::Gaussian: return "gaussian";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "symmetric_stable" || name == "stable") return Family::SymmetricStable;
  if (name == "pareto_two_sided" || name == "pareto") return Family::ParetoTwoSided;
  if (name == "gaussian" || name == "normal") return Family::Gaussian;
  throw Error(ErrorCode::Config, fmt::format("unknown innovation family '{}'", name));
}

InnovationSpec make_innovation_spec(Family family, double alpha, double p, double scale) {
  InnovationSpec spec{family, alpha, p, scale};
  validate(spec);
  return spec;
}

double standard_symmetric_stable(double alpha, Rng& rng) {
  const double v = kPi * (open_uniform(rng) - 0.5);
  if (alpha == 1.0) return std::tan(v);
  const double w = -std::log(open_uniform(rng));
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

InnovationVector sample_innovations(const InnovationSpec& spec, std::size_t n, std::uint64_t seed) {
  validate(spec);
  if (n == 0) throw Error(ErrorCode::RejectRange, "n must be >= 1");
  InnovationVector out{std::vector<double>(n), spec, seed};
  Rng rng(seed);
  switch (spec.family) {
    case Family::SymmetricStable:
      for (auto& x : out.values) x = spec.scale * standard_symmetric_stable(spec.alpha, rng);
      break;
    case Family::ParetoTwoSided: {
      const double inv_alpha = 1.0 / spec.alpha;
      for (auto& x : out.values) {
        const double magnitude = spec.scale * std::pow(open_uniform(rng), -inv_alpha);
        x = open_uniform(rng) < spec.p ? magnitude : -magnitude;
      }
      break;
    }
    case Family::Gaussian: {
      std::normal_distribution<double> normal(0.0, spec.scale);
      for (auto& x : out.values) x = normal(rng);
      break;
    }
  }
  return out;
}

double tail_probability(const InnovationSpec& spec, double x) {
  validate(spec);
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double z = x / spec.scale;
  switch (spec.family) {
    case Family::ParetoTwoSided:
      return z <= 1.0 ? 1.0 : std::pow(z, -spec.alpha);
    case Family::Gaussian:
      return std::erfc(z / std::numbers::sqrt2);
    case Family::SymmetricStable:
      if (spec.alpha == 2.0) return std::erfc(z / 2.0);  // N(0, 2 scale^2)
      if (spec.alpha == 1.0) return 1.0 - 2.0 / kPi * std::atan(z);
      return standard_stable_tail(spec.alpha, z);
  }
  return 1.0;
}

double normalizer_a_n(const InnovationSpec& spec, std::size_t n) {
  validate(spec);
  if (n == 0) throw Error(ErrorCode::RejectRange, "n must be >= 1");
  const double level = 1.0 / static_cast<double>(n);
  switch (spec.family) {
    case Family::ParetoTwoSided:
      return spec.scale * std::pow(static_cast<double>(n), 1.0 / spec.alpha);
    case Family::Gaussian:
      return spec.scale * std::numbers::sqrt2 * boost::math::erfc_inv(level);
    case Family::SymmetricStable:
      if (spec.alpha == 2.0) return 2.0 * spec.scale * boost::math::erfc_inv(level);
      break;
  }
  if (n == 1) return 0.0;

  // Bracket the root of tail(x) = 1/n starting from the power-law asymptote
  // P(|X| > x) ~ (2/pi) Gamma(alpha) sin(pi alpha / 2) x^-alpha.
  const double tail_constant = 2.0 / kPi * std::tgamma(spec.alpha) * std::sin(kPi * spec.alpha / 2.0);
  double guess = spec.scale * std::pow(tail_constant * static_cast<double>(n), 1.0 / spec.alpha);
  auto excess = [&](double x) { return tail_probability(spec, x) - level; };
  double lo = guess, hi = guess;
  while (excess(lo) <= 0.0) lo *= 0.5;
  while (excess(hi) > 0.0) hi *= 2.0;
  auto close_enough = [](double a, double b) { return std::abs(b - a) <= 1e-8 * std::min(a, b); };
  const auto bracket = boost::math::tools::bisect(excess, lo, hi, close_enough);
  return bracket.second;
}

double partial_sum_scale(const InnovationSpec& spec, std::size_t n) {
  validate(spec);
  if (n == 0) throw Error(ErrorCode::RejectRange, "n must be >= 1");
  const double root_n = std::sqrt(static_cast<double>(n));
  if (spec.family == Family::Gaussian) return spec.scale * root_n;
  if (spec.family == Family::SymmetricStable && spec.alpha == 2.0)
    return spec.scale * std::numbers::sqrt2 * root_n;
  return normalizer_a_n(spec, n);
}

double lepage_stable_scale(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw Error(ErrorCode::RejectRange, fmt::format("LePage scale needs alpha in (0,2), got {}", alpha));
  const double c_alpha = alpha == 1.0 ? 2.0 / kPi
                                      : (1.0 - alpha) / (std::tgamma(2.0 - alpha) * std::cos(kPi * alpha / 2.0));
  return std::pow(c_alpha, -1.0 / alpha);
}

void write_innovations_csv(std::ostream& out, std::span<const double> values) {
  out << "epsilon\n";
  for (double x : values) out << fmt::format("{:.17g}\n", x);
}

}  // namespace durboot
