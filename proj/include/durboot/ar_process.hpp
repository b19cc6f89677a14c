#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "durboot/innovations.hpp"

namespace durboot {

/// AR(2) coefficients (phi1, phi2) of X_t = phi1 X_{t-1} + phi2 X_{t-2} + eps_t.
struct Coefficients {
  double phi1 = 0.0;
  double phi2 = 0.0;

  friend bool operator==(const Coefficients&, const Coefficients&) = default;
};

/// Coefficients of (1 - B)^2 X_t = eps_t.
inline constexpr Coefficients kDoubleUnitRoot{2.0, -1.0};

/// Explicit starting values (X_1, X_2).
struct InitialValues {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct TimeSeries {
  std::vector<double> values;  // X_1 .. X_n
  std::optional<Coefficients> coeffs_true;
  std::optional<InnovationSpec> spec;
  std::optional<std::uint64_t> seed;

  std::size_t size() const { return values.size(); }
};

/**
 * X_t = phi1 X_{t-1} + phi2 X_{t-2} + eps_t.
 *
 * Without `init` the pre-sample values X_{-1} = X_0 = 0 are used, so
 * X_1 = eps_1 and X_2 = phi1 eps_1 + eps_2. With `init` the first two values
 * are taken as given and eps_1, eps_2 are ignored. At (2, -1) the
 * recursion is evaluated in the equivalent form D_t = D_{t-1} + eps_t,
 * X_t = X_{t-1} + D_t.
 *
 * Throws Error{RejectRange} when fewer than 3 innovations are given and
 * Error{NonFinite} if the recursion overflows.
 */
TimeSeries simulate_ar(Coefficients coeffs, std::span<const double> innovations,
                       std::optional<InitialValues> init = std::nullopt);

/// simulate_ar with (phi1, phi2) = (2, -1). With the default zero pre-sample,
/// X_t - X_{t-1} = eps_1 + ... + eps_t.
TimeSeries simulate_double_unit_root(std::span<const double> innovations,
                                     std::optional<InitialValues> init = std::nullopt);

/**
 * Right-continuous step function t -> normalizer^-1 * sum_{k <= [n t]} x_k on
 * [0, 1], with jumps at k / n. Cumulative sums are stored once; evaluation
 * is a binary search over jump times.
 */
class StepProcess {
 public:
  StepProcess() = default;
  StepProcess(std::span<const double> increments, double normalizer);

  double operator()(double t) const;

  std::size_t jumps() const { return cumulative_.size(); }
  double normalizer() const { return normalizer_; }
  std::span<const double> jump_times() const { return jump_times_; }
  /// Values just after each jump.
  std::span<const double> cumulative() const { return cumulative_; }

 private:
  std::vector<double> jump_times_;
  std::vector<double> cumulative_;
  double normalizer_ = 1.0;
};

/// Throws Error{RejectRange} unless normalizer > 0.
StepProcess partial_sum_process(std::span<const double> values, double normalizer);

/// Two-column CSV `t,x` (t = 1..n) preceded by `# key=value` comment lines
/// for whatever generating metadata is known.
void write_series_csv(std::ostream& out, const TimeSeries& series);
TimeSeries read_series_csv(std::istream& in);

}  // namespace durboot
