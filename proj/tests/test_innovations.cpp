#include <doctest.h>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "durboot/error.hpp"
#include "durboot/innovations.hpp"
#include "durboot/seed.hpp"

using namespace durboot;

namespace {

// P(|X| > x) for the standard symmetric stable law by Fourier inversion of
// the characteristic function exp(-|t|^alpha):
//   P(|X| <= x) = (2/pi) int_0^inf sin(t x) exp(-t^alpha) / t dt.
double fourier_tail(double alpha, double x) {
  boost::math::quadrature::ooura_fourier_sin<double> integrator;
  auto f = [alpha](double t) { return std::exp(-std::pow(t, alpha)) / t; };
  const auto [value, err] = integrator.integrate(f, x);
  return 1.0 - 2.0 / std::numbers::pi * value;
}

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("spec construction enforces the symmetry rule") {
  CHECK_NOTHROW(make_innovation_spec(Family::Gaussian, 2.0, 0.5, 1.0));
  CHECK_NOTHROW(make_innovation_spec(Family::ParetoTwoSided, 0.8, 0.7, 1.0));
  try {
    make_innovation_spec(Family::SymmetricStable, 1.5, 0.7, 1.0);
    FAIL("expected REJECT_ASYMMETRY");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RejectAsymmetry);
  }
  try {
    make_innovation_spec(Family::ParetoTwoSided, 1.2, 0.3, 1.0);
    FAIL("expected REJECT_ASYMMETRY");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RejectAsymmetry);
  }
  for (double alpha : {0.0, -1.0, 2.5}) {
    try {
      make_innovation_spec(Family::ParetoTwoSided, alpha, 0.5, 1.0);
      FAIL("expected REJECT_RANGE");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RejectRange);
    }
  }
  CHECK_THROWS_AS(make_innovation_spec(Family::ParetoTwoSided, 1.5, 0.5, 0.0), Error);
  CHECK_THROWS_AS(make_innovation_spec(Family::ParetoTwoSided, 0.5, 1.5, 1.0), Error);
  CHECK_THROWS_AS(make_innovation_spec(Family::Gaussian, 1.5, 0.5, 1.0), Error);
}

TEST_CASE("family names round trip") {
  for (Family f : {Family::SymmetricStable, Family::ParetoTwoSided, Family::Gaussian})
    CHECK(parse_family(to_string(f)) == f);
  CHECK_THROWS_AS(parse_family("cauchy"), Error);
}

TEST_CASE("sampling is deterministic in (spec, n, seed)") {
  for (Family f : {Family::SymmetricStable, Family::ParetoTwoSided, Family::Gaussian}) {
    const double alpha = f == Family::Gaussian ? 2.0 : 1.3;
    const auto spec = make_innovation_spec(f, alpha, 0.5, 1.0);
    const auto a = sample_innovations(spec, 1000, 42);
    const auto b = sample_innovations(spec, 1000, 42);
    const auto c = sample_innovations(spec, 1000, 43);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.seed == 42);
  }
}

TEST_CASE("gaussian sample variance") {
  const auto spec = make_innovation_spec(Family::Gaussian, 2.0, 0.5, 1.0);
  const auto eps = sample_innovations(spec, 100000, 7);
  const double m = sample_mean(eps.values);
  double ss = 0.0;
  for (double x : eps.values) ss += (x - m) * (x - m);
  CHECK(std::abs(ss / (eps.values.size() - 1) - 1.0) < 0.05);
}

TEST_CASE("pareto tail slope over the top decile") {
  const auto spec = make_innovation_spec(Family::ParetoTwoSided, 1.2, 0.5, 1.0);
  const auto eps = sample_innovations(spec, 100000, 11);
  std::vector<double> mags;
  for (double x : eps.values) mags.push_back(std::abs(x));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  const std::size_t n = mags.size();
  const std::size_t top = n / 10;
  // least-squares slope of log survival on log x over the top decile
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < top; ++i) {
    const double lx = std::log(mags[i]);
    const double ly = std::log(static_cast<double>(i + 1) / static_cast<double>(n));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double k = static_cast<double>(top);
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(std::abs(slope + 1.2) <= 0.15);
  CHECK(*std::min_element(mags.begin(), mags.end()) >= 1.0);
}

TEST_CASE("pareto sign balance follows p") {
  const auto spec = make_innovation_spec(Family::ParetoTwoSided, 0.7, 0.8, 2.0);
  const auto eps = sample_innovations(spec, 100000, 3);
  double positive = 0.0;
  for (double x : eps.values) positive += x > 0 ? 1.0 : 0.0;
  CHECK(std::abs(positive / 1e5 - 0.8) < 0.01);
}

TEST_CASE("symmetric specs have balanced signs") {
  for (Family f : {Family::SymmetricStable, Family::ParetoTwoSided, Family::Gaussian}) {
    const double alpha = f == Family::Gaussian ? 2.0 : 1.5;
    const auto eps = sample_innovations(make_innovation_spec(f, alpha, 0.5, 1.0), 100000, 5);
    double s = 0.0;
    for (double x : eps.values) s += x > 0 ? 1.0 : -1.0;
    CHECK(std::abs(s / 1e5) < 0.01);
  }
}

TEST_CASE("tail probability closed forms") {
  const auto pareto = make_innovation_spec(Family::ParetoTwoSided, 1.0, 0.5, 1.0);
  CHECK(tail_probability(pareto, 10.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(tail_probability(pareto, 0.5) == 1.0);
  const auto gauss = make_innovation_spec(Family::Gaussian, 2.0, 0.5, 1.0);
  CHECK(tail_probability(gauss, 0.0) == 1.0);
  CHECK(tail_probability(gauss, 1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
  const auto cauchy = make_innovation_spec(Family::SymmetricStable, 1.0, 0.5, 1.0);
  CHECK(tail_probability(cauchy, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("stable tail probability matches Fourier inversion") {
  for (double alpha : {0.5, 0.8, 1.2, 1.5, 1.8, 1.95}) {
    const auto spec = make_innovation_spec(Family::SymmetricStable, alpha, 0.5, 1.0);
    for (double x : {0.3, 1.0, 2.5, 7.0}) {
      CAPTURE(alpha);
      CAPTURE(x);
      CHECK(std::abs(tail_probability(spec, x) - fourier_tail(alpha, x)) < 1e-7);
    }
  }
}

TEST_CASE("stable tail probability approaches the power-law asymptote") {
  for (double alpha : {0.8, 1.5}) {
    const auto spec = make_innovation_spec(Family::SymmetricStable, alpha, 0.5, 1.0);
    const double constant = 2.0 / std::numbers::pi * std::tgamma(alpha) * std::sin(std::numbers::pi * alpha / 2);
    const double x = 1e4;
    CHECK(tail_probability(spec, x) * std::pow(x, alpha) == doctest::Approx(constant).epsilon(1e-3));
  }
}

TEST_CASE("stable tail probability scales") {
  const auto unit = make_innovation_spec(Family::SymmetricStable, 1.3, 0.5, 1.0);
  const auto wide = make_innovation_spec(Family::SymmetricStable, 1.3, 0.5, 3.0);
  CHECK(tail_probability(wide, 6.0) == doctest::Approx(tail_probability(unit, 2.0)).epsilon(1e-12));
}

TEST_CASE("empirical stable tail agrees with the analytic one") {
  const auto spec = make_innovation_spec(Family::SymmetricStable, 1.5, 0.5, 1.0);
  const auto eps = sample_innovations(spec, 200000, 9);
  for (double x : {0.5, 2.0, 5.0}) {
    double hits = 0.0;
    for (double e : eps.values) hits += std::abs(e) > x ? 1.0 : 0.0;
    const double p = tail_probability(spec, x);
    const double se = std::sqrt(p * (1 - p) / 2e5);
    CHECK(std::abs(hits / 2e5 - p) < 4.0 * se);
  }
}

TEST_CASE("normalizer examples") {
  CHECK(normalizer_a_n(make_innovation_spec(Family::ParetoTwoSided, 0.5, 0.5, 1.0), 100) == 10000.0);
  CHECK(normalizer_a_n(make_innovation_spec(Family::ParetoTwoSided, 2.0, 0.5, 3.0), 16) == 12.0);
  const double cauchy = normalizer_a_n(make_innovation_spec(Family::SymmetricStable, 1.0, 0.5, 1.0), 1000);
  CHECK(cauchy == doctest::Approx(std::tan(std::numbers::pi / 2 * (1 - 1e-3))).epsilon(1e-8));
  CHECK(cauchy == doctest::Approx(636.6).epsilon(1e-4));
}

TEST_CASE("normalizer satisfies the infimum definition") {
  for (Family f : {Family::SymmetricStable, Family::Gaussian, Family::ParetoTwoSided}) {
    for (double alpha : {0.6, 1.0, 1.5, 2.0}) {
      if (f == Family::Gaussian && alpha != 2.0) continue;
      const auto spec = make_innovation_spec(f, alpha, 0.5, 1.7);
      for (std::size_t n : {2u, 10u, 1000u, 100000u}) {
        CAPTURE(alpha);
        CAPTURE(n);
        const double a = normalizer_a_n(spec, n);
        const double target = 1.0 / static_cast<double>(n);
        CHECK(tail_probability(spec, a) <= target * (1 + 1e-6));
        CHECK(tail_probability(spec, a * (1 - 1e-6)) > target);
      }
    }
  }
}

TEST_CASE("partial sum scale reduces to the normalizer below alpha 2") {
  const auto spec = make_innovation_spec(Family::SymmetricStable, 1.5, 0.5, 2.0);
  CHECK(partial_sum_scale(spec, 500) == normalizer_a_n(spec, 500));
  const auto gauss = make_innovation_spec(Family::Gaussian, 2.0, 0.5, 2.0);
  CHECK(partial_sum_scale(gauss, 400) == doctest::Approx(40.0));
  const auto stable2 = make_innovation_spec(Family::SymmetricStable, 2.0, 0.5, 1.0);
  CHECK(partial_sum_scale(stable2, 50) == doctest::Approx(10.0));
}

TEST_CASE("innovations csv") {
  std::ostringstream out;
  const std::vector<double> v{0.1, -2.5};
  write_innovations_csv(out, v);
  CHECK(out.str() == "epsilon\n0.10000000000000001\n-2.5\n");
}
