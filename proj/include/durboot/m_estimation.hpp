#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "durboot/ar_process.hpp"
#include "durboot/innovations.hpp"

namespace durboot {

enum class LossKind { Squared, PseudoHuber, Huber };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Which regularity conditions a loss satisfies. `psi_prime_lipschitz`
/// holds the Lipschitz constant of psi' when there is one.
struct LossCertification {
  bool twice_differentiable = false;
  bool psi_bounded = false;
  std::optional<double> psi_prime_lipschitz;
};

struct LossValues {
  double rho = 0.0;
  double psi = 0.0;
  double psi_prime = 0.0;
};

/**
 * Convex loss rho with psi = rho' and psi' = rho''; all kinds have odd psi.
 *
 *   Squared      rho(x) = x^2 / 2
 *   PseudoHuber  rho(x) = c^2 (sqrt(1 + (x/c)^2) - 1)
 *   Huber        rho(x) = x^2 / 2 for |x| <= c, c |x| - c^2 / 2 otherwise
 *
 * Huber's psi' is taken as 1 at the kinks x = +-c. `weight` multiplies
 * rho, psi and psi' together.
 */
class LossFunction {
 public:
  LossKind kind() const { return kind_; }
  double c() const { return c_; }
  double weight() const { return weight_; }
  const LossCertification& certification() const { return certification_; }

  LossValues eval(double x) const;
  double rho(double x) const { return eval(x).rho; }
  double psi(double x) const;
  double psi_prime(double x) const;

  /// Same loss multiplied by `factor` > 0.
  LossFunction scaled(double factor) const;

 private:
  friend LossFunction make_loss(LossKind kind, double c);
  LossFunction(LossKind kind, double c, LossCertification certification)
      : kind_(kind), c_(c), certification_(certification) {}

  LossKind kind_;
  double c_;
  double weight_ = 1.0;
  LossCertification certification_;
};

/// Throws Error{RejectRange} for c <= 0 (c is ignored for Squared).
LossFunction make_loss(LossKind kind, double c = 1.0);

inline LossValues loss_eval(const LossFunction& loss, double x) { return loss.eval(x); }

/// Whether E psi(eps) = 0 and E psi^2(eps) < inf hold for the innovation law.
enum class MomentCondition { Holds, Fails, Unverified };
std::string_view to_string(MomentCondition status);
MomentCondition certify_moment_condition(const LossFunction& loss, const InnovationSpec& spec);

struct FitOptions {
  /// Bound on the scaled gradient (see EstimateResult::grad_norm).
  double tol = 1e-10;
  int max_iter = 200;
  /// Use the normal equations for Squared loss instead of starting Newton.
  bool closed_form_for_squared = true;
  /// Newton starting point; the least-squares solution when empty.
  std::optional<Coefficients> start;
};

struct EstimateResult {
  Coefficients coeffs;
  /// e_3 .. e_n, formed in the solver's regressor coordinates; equal to
  /// residuals(series, coeffs) up to rounding.
  std::vector<double> residuals;
  LossKind loss_kind = LossKind::PseudoHuber;
  double objective = 0.0;
  int iterations = 0;
  /// ||g||_inf / max(1, ||psi(e)||_2), where g is the objective gradient with
  /// respect to coefficients of the unit-norm regressors (X_{t-1} - X_{t-2})
  /// and X_{t-2}.
  double grad_norm = 0.0;
  bool gradient_fallback = false;
};

/**
 * M-estimate of (phi1, phi2) minimizing sum_{t=3}^n rho(X_t - b1 X_{t-1} - b2 X_{t-2}).
 *
 * Damped Newton with Armijo backtracking (constant 1e-4, shrink 0.5),
 * falling back to a gradient step when the Hessian condition number exceeds
 * 1e12. Iterates are kept in the coordinates of the regressors
 * (X_{t-1} - X_{t-2}, X_{t-2}) around (2, -1); this is an exact change of
 * variables that stays well conditioned near the double unit root.
 *
 * Throws Error{RejectRange} for n < 3, Error{DegenerateDesign} when the lag
 * Gram matrix is singular to 1e-12 and Error{NoConvergence} when the
 * tolerance is not met within max_iter iterations.
 */
EstimateResult fit_ar2(std::span<const double> series, const LossFunction& loss, const FitOptions& opts = {});
inline EstimateResult fit_ar2(const TimeSeries& series, const LossFunction& loss, const FitOptions& opts = {}) {
  return fit_ar2(std::span<const double>(series.values), loss, opts);
}

/// e_t = X_t - phi1 X_{t-1} - phi2 X_{t-2}, t = 3..n.
std::vector<double> residuals(std::span<const double> series, Coefficients coeffs);

/// Objective, gradient and Hessian in (phi1, phi2), evaluated directly.
struct ObjectiveDerivatives {
  double value = 0.0;
  std::array<double, 2> gradient{};
  std::array<double, 3> hessian{};  // h11, h12, h22
};
ObjectiveDerivatives ar2_objective(std::span<const double> series, const LossFunction& loss, Coefficients coeffs);

struct PsiMoments {
  double sigma2 = 0.0;        // estimate of E psi^2(eps)
  double psiprime_mean = 0.0; // estimate of E psi'(eps)
  /// corr(eps, psi(eps)); only meaningful for finite-variance innovations,
  /// where the limiting partial-sum processes of eps and psi(eps) are
  /// correlated Brownian motions.
  double sw_correlation = 0.0;
};

/// Means of psi^2 and psi' over the input. Throws Error{RejectRange} on empty
/// input and Error{MomentDegenerate} if the psi' mean is <= 1e-12.
PsiMoments psi_moments(std::span<const double> values, const LossFunction& loss);

/// mean(x psi(x)) / sqrt(mean(x^2) mean(psi^2)).
double psi_correlation(std::span<const double> values, const LossFunction& loss);

/// (u, v) = (n^{1/2} a (phi1 - c1), n^{3/2} a ((phi1 - c1) + (phi2 - c2))).
struct NormalizedStatistic {
  double u = 0.0;
  double v = 0.0;
  std::size_t n = 0;
  double a = 1.0;
  Coefficients center;

  /// Inverts the map back to (phi1, phi2).
  Coefficients coefficients() const;
};

NormalizedStatistic normalized_statistic(Coefficients coeffs_hat, Coefficients center, std::size_t n, double a);

void write_estimate_kv(std::ostream& out, const EstimateResult& result);
std::string estimate_csv_header();
std::string estimate_csv_row(const EstimateResult& result);

}  // namespace durboot
