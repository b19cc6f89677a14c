#include "durboot/ar_process.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "durboot/error.hpp"

namespace durboot {

TimeSeries simulate_ar(Coefficients coeffs, std::span<const double> innovations,
                       std::optional<InitialValues> init) {
  const std::size_t n = innovations.size();
  if (n < 3) throw Error(ErrorCode::RejectRange, fmt::format("need at least 3 innovations, got {}", n));

  TimeSeries series;
  series.coeffs_true = coeffs;
  auto& x = series.values;
  x.resize(n);
  if (coeffs == kDoubleUnitRoot) {
    // (1 - B)^2 X = eps run as two cumulative sums: the first differences are
    // then exact running sums of eps and rounding does not compound.
    double d = 0.0;
    std::size_t start = 1;
    if (init) {
      x[0] = init->x1;
      x[1] = init->x2;
      d = init->x2 - init->x1;
      start = 2;
    } else {
      x[0] = innovations[0];
      d = innovations[0];
    }
    for (std::size_t t = start; t < n; ++t) {
      d += innovations[t];
      x[t] = x[t - 1] + d;
    }
  } else {
    if (init) {
      x[0] = init->x1;
      x[1] = init->x2;
    } else {
      x[0] = innovations[0];
      x[1] = coeffs.phi1 * x[0] + innovations[1];
    }
    for (std::size_t t = 2; t < n; ++t) {
      x[t] = coeffs.phi1 * x[t - 1] + coeffs.phi2 * x[t - 2] + innovations[t];
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (!std::isfinite(x[t]))
      throw Error(ErrorCode::NonFinite, fmt::format("series value at t={} is not finite", t + 1));
  }
  return series;
}

TimeSeries simulate_double_unit_root(std::span<const double> innovations, std::optional<InitialValues> init) {
  return simulate_ar(kDoubleUnitRoot, innovations, init);
}

StepProcess::StepProcess(std::span<const double> increments, double normalizer) : normalizer_(normalizer) {
  const std::size_t n = increments.size();
  jump_times_.resize(n);
  cumulative_.resize(n);
  double running = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    running += increments[k];
    jump_times_[k] = static_cast<double>(k + 1) / static_cast<double>(n);
    cumulative_[k] = running / normalizer;
  }
}

double StepProcess::operator()(double t) const {
  // Number of jumps at or before t.
  const auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  const auto count = static_cast<std::size_t>(it - jump_times_.begin());
  return count == 0 ? 0.0 : cumulative_[count - 1];
}

StepProcess partial_sum_process(std::span<const double> values, double normalizer) {
  if (!(normalizer > 0.0)) throw Error(ErrorCode::RejectRange, "normalizer must be positive");
  return StepProcess(values, normalizer);
}

void write_series_csv(std::ostream& out, const TimeSeries& series) {
  std::string meta;
  if (series.coeffs_true)
    meta += fmt::format(" phi1={:.17g} phi2={:.17g}", series.coeffs_true->phi1, series.coeffs_true->phi2);
  if (series.spec)
    meta += fmt::format(" family={} alpha={:.17g} p={:.17g} scale={:.17g}", to_string(series.spec->family),
                        series.spec->alpha, series.spec->p, series.spec->scale);
  if (series.seed) meta += fmt::format(" seed={}", *series.seed);
  if (!meta.empty()) out << "#" << meta << "\n";
  out << "t,x\n";
  for (std::size_t t = 0; t < series.values.size(); ++t) out << fmt::format("{},{:.17g}\n", t + 1, series.values[t]);
}

namespace {

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::Io, fmt::format("cannot parse number '{}'", text));
  return value;
}

}  // namespace

TimeSeries read_series_csv(std::istream& in) {
  TimeSeries series;
  std::optional<double> phi1, phi2, alpha, p, scale;
  std::optional<Family> family;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream fields(line.substr(1));
      std::string field;
      while (fields >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "phi1") phi1 = parse_double(value);
        else if (key == "phi2") phi2 = parse_double(value);
        else if (key == "alpha") alpha = parse_double(value);
        else if (key == "p") p = parse_double(value);
        else if (key == "scale") scale = parse_double(value);
        else if (key == "family") family = parse_family(value);
        else if (key == "seed") series.seed = std::stoull(value);
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line == "t,x") continue;
      throw Error(ErrorCode::Io, fmt::format("expected header 't,x', got '{}'", line));
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::Io, fmt::format("malformed row '{}'", line));
    series.values.push_back(parse_double(std::string_view(line).substr(comma + 1)));
  }
  if (phi1 && phi2) series.coeffs_true = Coefficients{*phi1, *phi2};
  if (alpha) {
    series.spec = make_innovation_spec(family.value_or(Family::SymmetricStable), *alpha, p.value_or(0.5),
                                       scale.value_or(1.0));
  }
  return series;
}

}  // namespace durboot
