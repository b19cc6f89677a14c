#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "durboot/ar_process.hpp"
#include "durboot/bootstrap.hpp"
#include "durboot/error.hpp"
#include "durboot/innovations.hpp"
#include "durboot/m_estimation.hpp"
#include "durboot/seed.hpp"
#include "durboot/stats.hpp"

using namespace durboot;

namespace {

TimeSeries simulated(const InnovationSpec& spec, std::size_t n, std::uint64_t seed) {
  auto series = simulate_double_unit_root(sample_innovations(spec, n, seed).values);
  series.spec = spec;
  return series;
}

const InnovationSpec kStable = make_innovation_spec(Family::SymmetricStable, 1.5, 0.5, 1.0);

BootstrapDistribution synthetic(const std::vector<std::pair<double, double>>& uv, Coefficients center, std::size_t n,
                                double a_n) {
  BootstrapDistribution d;
  d.n = n;
  d.m = n;
  d.a_m = a_n;
  d.a_n = a_n;
  d.center = center;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    BootstrapDraw draw;
    draw.rep = i;
    draw.stat.u = uv[i].first;
    draw.stat.v = uv[i].second;
    d.draws.push_back(draw);
  }
  return d;
}

}  // namespace

TEST_CASE("residual empirical distributions") {
  const std::vector<double> r{1, 2, 3};
  CHECK(residual_empirical(r, CenteringMode::MeanCenter).atoms == std::vector<double>{-1, 0, 1});
  CHECK(residual_empirical(r, CenteringMode::None).atoms == r);
  const std::vector<double> pm{1, -1};
  const auto sym = residual_empirical(pm, CenteringMode::Symmetrize);
  CHECK(sym.atoms == std::vector<double>{1, -1, -1, 1});
  CHECK(sym.source_size == 2);
  const auto psi = make_loss(LossKind::PseudoHuber, 1.0);
  double s = 0.0;
  for (double a : sym.atoms) s += psi.psi(a);
  CHECK(s == 0.0);

  const std::vector<double> one{5};
  for (CenteringMode mode : {CenteringMode::MeanCenter, CenteringMode::Symmetrize}) {
    const auto d = residual_empirical(one, mode);
    double mean = 0.0;
    for (double a : d.atoms) mean += a;
    CHECK(mean == 0.0);
  }
  CHECK(residual_empirical(one, CenteringMode::None).atoms == one);
  for (CenteringMode m : {CenteringMode::MeanCenter, CenteringMode::Symmetrize, CenteringMode::None})
    CHECK(parse_centering_mode(to_string(m)) == m);
  for (AMode m : {AMode::Theoretical, AMode::Empirical}) CHECK(parse_a_mode(to_string(m)) == m);
}

TEST_CASE("centering invariants on heavy-tailed residuals") {
  const auto eps = sample_innovations(kStable, 5000, 4);
  double scale = 0.0;
  for (double e : eps.values) scale = std::max(scale, std::abs(e));
  const auto mc = residual_empirical(eps.values, CenteringMode::MeanCenter);
  double sum = 0.0;
  for (double a : mc.atoms) sum += a;
  CHECK(std::abs(sum) <= 1e-10 * scale * mc.atoms.size());
  const auto sym = residual_empirical(eps.values, CenteringMode::Symmetrize);
  for (LossKind k : {LossKind::Squared, LossKind::PseudoHuber, LossKind::Huber}) {
    const auto loss = make_loss(k, 1.0);
    double odd = 0.0;
    for (double a : sym.atoms) odd += loss.psi(a);
    CHECK(odd == 0.0);
  }
}

TEST_CASE("resampling") {
  EmpiricalDist zero;
  zero.atoms = {0.0};
  CHECK(resample(zero, 5, 1) == std::vector<double>(5, 0.0));
  EmpiricalDist coin;
  coin.atoms = {-1.0, 1.0};
  const auto draws = resample(coin, 100000, 2);
  double mean = 0.0;
  for (double x : draws) mean += x / 1e5;
  CHECK(std::abs(mean) <= 0.02);
  CHECK(resample(coin, 50, 9) == resample(coin, 50, 9));
  CHECK(resample(coin, 50, 9) != resample(coin, 50, 10));
}

TEST_CASE("resample size") {
  CHECK(resample_size(100, 1.0) == 100);
  CHECK(resample_size(5000, 0.7) == 388);
  CHECK(resample_size(4, 0.5) == 3);
  for (std::size_t n : {100u, 1000u, 10000u, 100000u, 1000000u}) {
    const double m = static_cast<double>(resample_size(n, 0.7));
    CHECK(m / n <= std::pow(static_cast<double>(n), 0.7 - 1.0) * (1 + 1e-12));
  }
  CHECK_THROWS_AS(resample_size(100, 0.0), Error);
  CHECK_THROWS_AS(resample_size(100, 1.5), Error);
}

TEST_CASE("a single zero atom gives a degenerate bootstrap design") {
  EmpiricalDist zero;
  zero.atoms = {0.0};
  try {
    bootstrap_replicate(kDoubleUnitRoot, zero, 10, make_loss(LossKind::PseudoHuber), 1.0, 3);
    FAIL("expected DEGENERATE_DESIGN");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateDesign);
  }
}

TEST_CASE("bootstrap series composes resampling with the AR recursion") {
  EmpiricalDist dist;
  dist.atoms = {0, 0, 0, 0, 1};
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    CHECK(bootstrap_series(kDoubleUnitRoot, dist, 5, seed).values ==
          simulate_double_unit_root(resample(dist, 5, seed)).values);
  // some seed draws a lone impulse at t = 3, reproducing the impulse example
  bool found = false;
  for (std::uint64_t seed = 0; seed < 20000 && !found; ++seed) {
    if (resample(dist, 5, seed) == std::vector<double>{0, 0, 1, 0, 0}) {
      CHECK(bootstrap_series(kDoubleUnitRoot, dist, 5, seed).values == std::vector<double>{0, 0, 1, 2, 3});
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("replicate normalizes around the original estimate") {
  const auto series = simulated(kStable, 1000, 6);
  const auto loss = make_loss(LossKind::PseudoHuber, 1.0);
  const auto est = fit_ar2(series, loss);
  const auto dist = residual_empirical(est.residuals, CenteringMode::Symmetrize);
  const auto stat = bootstrap_replicate(est.coeffs, dist, 126, loss, 2.5, 77);
  const auto path = bootstrap_series(est.coeffs, dist, 126, 77);
  const auto refit = fit_ar2(path, loss);
  CHECK(stat.center == est.coeffs);
  CHECK(stat.n == 126);
  CHECK(stat.u == doctest::Approx(std::sqrt(126.0) * 2.5 * (refit.coeffs.phi1 - est.coeffs.phi1)));
  CHECK_THROWS_AS(bootstrap_replicate(est.coeffs, dist, 126, loss, 0.0, 77), Error);
}

TEST_CASE("bootstrap distribution bookkeeping") {
  const auto series = simulated(kStable, 2000, 8);
  const auto loss = make_loss(LossKind::PseudoHuber, 1.0);
  BootstrapOptions opts;
  opts.replicates = 50;
  const auto d = bootstrap_distribution(series, loss, opts, 5);
  CHECK(d.m == resample_size(2000, 0.7));
  CHECK(d.draws.size() == 50);
  CHECK(d.center == fit_ar2(series, loss).coeffs);
  const auto dist = residual_empirical(fit_ar2(series, loss).residuals, CenteringMode::Symmetrize);
  CHECK(d.a_m == empirical_normalizer(dist, d.m));
  for (std::size_t i = 0; i < d.draws.size(); ++i) CHECK(d.draws[i].rep == i);

  opts.a_mode = AMode::Theoretical;
  const auto t = bootstrap_distribution(series, loss, opts, 5);
  CHECK(t.a_m == partial_sum_scale(kStable, t.m));
  CHECK(t.a_n == partial_sum_scale(kStable, 2000));

  TimeSeries bare;
  bare.values = series.values;
  CHECK_THROWS_AS(bootstrap_distribution(bare, loss, opts, 5), Error);
  opts.replicates = 0;
  CHECK_THROWS_AS(bootstrap_distribution(series, loss, opts, 5), Error);
}

TEST_CASE("empirical normalizer is the ceil(N/m)-th largest magnitude") {
  EmpiricalDist d;
  d.atoms = {-9, 1, 2, -3, 4, 5, -6, 7, 8, 0.5};
  CHECK(empirical_normalizer(d, 10) == 9);
  CHECK(empirical_normalizer(d, 5) == 8);
  CHECK(empirical_normalizer(d, 3) == 6);
  CHECK(empirical_normalizer(d, 1) == 0.5);
}

TEST_CASE("extrapolated normalizer tracks the pareto law") {
  const auto pareto = make_innovation_spec(Family::ParetoTwoSided, 1.5, 0.5, 1.0);
  const auto eps = sample_innovations(pareto, 20000, 12);
  const auto d = residual_empirical(eps.values, CenteringMode::None);
  const double got = extrapolated_normalizer(d, 1000, 20000);
  CHECK(got / normalizer_a_n(pareto, 20000) > 0.7);
  CHECK(got / normalizer_a_n(pareto, 20000) < 1.4);
}

TEST_CASE("disjoint replicate ranges concatenate to a single run") {
  const auto series = simulated(kStable, 1500, 10);
  const auto loss = make_loss(LossKind::PseudoHuber, 1.0);
  BootstrapOptions opts;
  opts.replicates = 40;
  const auto whole = bootstrap_distribution(series, loss, opts, 99);
  opts.replicates = 15;
  const auto head = bootstrap_distribution(series, loss, opts, 99);
  opts.first_replicate = 15;
  opts.replicates = 25;
  const auto tail = bootstrap_distribution(series, loss, opts, 99);
  std::vector<double> joined = head.u_values();
  const auto tu = tail.u_values();
  joined.insert(joined.end(), tu.begin(), tu.end());
  auto ref = whole.u_values();
  std::sort(joined.begin(), joined.end());
  std::sort(ref.begin(), ref.end());
  CHECK(joined == ref);
}

TEST_CASE("bootstrap draws do not depend on the thread count") {
  const auto series = simulated(kStable, 1500, 11);
  const auto loss = make_loss(LossKind::PseudoHuber, 1.0);
  BootstrapOptions opts;
  opts.replicates = 60;
  const auto serial = bootstrap_distribution(series, loss, opts, 3);
  opts.threads = 7;
  const auto parallel = bootstrap_distribution(series, loss, opts, 3);
  CHECK(serial.u_values() == parallel.u_values());
  CHECK(serial.v_values() == parallel.v_values());
}

TEST_CASE("all replicates failing signals HIGH_FAILURE_RATE") {
  const std::vector<double> eps(100, 0.0);
  auto series = simulate_double_unit_root(eps, InitialValues{1, 2});
  BootstrapOptions opts;
  opts.replicates = 30;
  opts.a_mode = AMode::Theoretical;
  opts.spec = kStable;
  try {
    bootstrap_distribution(series, make_loss(LossKind::PseudoHuber), opts, 1);
    FAIL("expected HIGH_FAILURE_RATE");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HighFailureRate);
  }
  opts.throw_on_high_failure = false;
  const auto d = bootstrap_distribution(series, make_loss(LossKind::PseudoHuber), opts, 1);
  CHECK(d.high_failure_rate);
  CHECK(d.failure_count == 30);
  CHECK(d.u_values().empty());
  std::ostringstream csv;
  write_bootstrap_csv(csv, d);
  CHECK(csv.str().find("0,nan,nan,nan,nan,1\n") != std::string::npos);
}

TEST_CASE("percentile intervals") {
  const std::vector<std::pair<double, double>> zeros(40, {0.0, 0.0});
  const auto flat = bootstrap_ci(synthetic(zeros, {1.9, -0.9}, 100, 2.0), 0.95);
  CHECK(flat.phi1.lower == 1.9);
  CHECK(flat.phi1.upper == 1.9);
  CHECK(flat.phi2.lower == -0.9);
  CHECK(flat.phi2.upper == -0.9);

  std::vector<std::pair<double, double>> coin;
  for (int i = 0; i < 40; ++i) coin.push_back({i % 2 ? 1.0 : -1.0, 0.0});
  const auto sym = bootstrap_ci(synthetic(coin, {2.0, -1.0}, 100, 1.0), 0.5);
  CHECK((sym.phi1.lower + sym.phi1.upper) / 2 == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sym.phi1.lower < 2.0);
  CHECK(sym.phi1.upper > 2.0);

  // interval ends are the reflected quantiles of u / (n^{1/2} a_n)
  std::vector<std::pair<double, double>> ramp;
  for (int i = 0; i < 101; ++i) ramp.push_back({static_cast<double>(i), 0.0});
  const auto r = bootstrap_ci(synthetic(ramp, {2.0, -1.0}, 25, 2.0), 0.9);
  CHECK(r.phi1.lower == doctest::Approx(2.0 - 95.0 / 10.0));
  CHECK(r.phi1.upper == doctest::Approx(2.0 - 5.0 / 10.0));
  CHECK(r.phi2.lower == doctest::Approx(-1.0 + 5.0 / 10.0));
  CHECK(r.phi2.upper == doctest::Approx(-1.0 + 95.0 / 10.0));

  CHECK_THROWS_AS(bootstrap_ci(synthetic(zeros, {2, -1}, 100, 1.0), 1.0), Error);
  CHECK_THROWS_AS(bootstrap_ci(synthetic(zeros, {2, -1}, 100, 1.0), 0.0), Error);
  const std::vector<std::pair<double, double>> few(10, {0.0, 0.0});
  CHECK_THROWS_AS(bootstrap_ci(synthetic(few, {2, -1}, 100, 1.0), 0.9), Error);
}

TEST_CASE("residual psi moments converge to the population value") {
  const double alpha = 1.5;
  const auto pareto = make_innovation_spec(Family::ParetoTwoSided, alpha, 0.5, 1.0);
  const auto loss = make_loss(LossKind::PseudoHuber, 1.0);
  boost::math::quadrature::exp_sinh<double> integrator;
  const double oracle = integrator.integrate([alpha](double s) {
    const double x = 1.0 + s;
    return x * x / (1 + x * x) * alpha * std::pow(x, -alpha - 1);
  });
  std::vector<double> errors;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::vector<double> err;
    for (std::size_t r = 0; r < 15; ++r) {
      const auto series = simulated(pareto, n, derive_seed(4, "moments", r));
      const auto atoms = residual_empirical(fit_ar2(series, loss).residuals, CenteringMode::Symmetrize).atoms;
      err.push_back(std::abs(psi_moments(atoms, loss).sigma2 - oracle));
    }
    errors.push_back(median(err));
  }
  CHECK(errors[1] < errors[0]);
  CHECK(errors[2] < errors[1]);
}

TEST_CASE("bootstrap exports") {
  const auto series = simulated(kStable, 800, 13);
  BootstrapOptions opts;
  opts.replicates = 25;
  const auto d = bootstrap_distribution(series, make_loss(LossKind::PseudoHuber), opts, 2);
  std::ostringstream csv;
  write_bootstrap_csv(csv, d);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "rep,u_star,v_star,phi1_star,phi2_star,failed");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 25);

  std::ostringstream js;
  write_bootstrap_summary_json(js, d);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j["m"] == d.m);
  CHECK(j["B"] == 25);
  CHECK(j["a_m"].get<double>() == d.a_m);
  CHECK(j["quantiles_u"].size() == 9);
  auto u = d.u_values();
  std::sort(u.begin(), u.end());
  CHECK(j["quantiles_u"]["0.50"].get<double>() == quantile_sorted(u, 0.5));
}
