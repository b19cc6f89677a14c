#include "durboot/m_estimation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "durboot/error.hpp"

namespace durboot {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Squared: return "squared";
    case LossKind::PseudoHuber: return "pseudo_huber";
    case LossKind::Huber: return "huber";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared" || name == "ls") return LossKind::Squared;
  if (name == "pseudo_huber" || name == "pseudohuber") return LossKind::PseudoHuber;
  if (name == "huber") return LossKind::Huber;
  throw Error(ErrorCode::Config, fmt::format("unknown loss '{}'", name));
}

LossFunction make_loss(LossKind kind, double c) {
  if (kind != LossKind::Squared && !(c > 0.0 && std::isfinite(c)))
    throw Error(ErrorCode::RejectRange, fmt::format("loss tuning constant c={} must be positive", c));
  switch (kind) {
    case LossKind::Squared:
      // psi(x) = x: smooth, but E psi^2 is infinite for alpha < 2.
      return LossFunction(kind, 1.0, {true, false, 0.0});
    case LossKind::PseudoHuber:
      // |d psi'/dx| peaks at 3 s (1 + s^2)^(-5/2) / c ~ 0.86 / c (s = x/c); 1/c bounds it.
      return LossFunction(kind, c, {true, true, 1.0 / c});
    case LossKind::Huber:
      // psi' jumps at +-c; the regularity conditions hold only up to a null set.
      return LossFunction(kind, c, {false, true, std::nullopt});
  }
  throw Error(ErrorCode::RejectRange, "unknown loss kind");
}

LossValues LossFunction::eval(double x) const {
  LossValues out;
  switch (kind_) {
    case LossKind::Squared:
      out = {0.5 * x * x, x, 1.0};
      break;
    case LossKind::PseudoHuber: {
      if (std::abs(x) <= c_) {
        const double s = x / c_;
        const double root = std::sqrt(1.0 + s * s);
        // c^2 (root - 1) = x^2 / (root + 1), which avoids cancellation near 0.
        out = {x * x / (root + 1.0), x / root, 1.0 / (root * root * root)};
      } else {
        // In terms of r = c / x so that (x / c)^2 cannot overflow.
        const double r = c_ / x;
        const double root = std::sqrt(1.0 + r * r);
        const double ratio = std::abs(r) / root;  // = 1 / sqrt(1 + (x/c)^2)
        out = {c_ * std::abs(x) * root - c_ * c_, std::copysign(c_ / root, x), ratio * ratio * ratio};
      }
      break;
    }
    case LossKind::Huber: {
      const double ax = std::abs(x);
      if (ax <= c_) out = {0.5 * x * x, x, 1.0};
      else out = {c_ * (ax - 0.5 * c_), std::copysign(c_, x), 0.0};
      break;
    }
  }
  out.rho *= weight_;
  out.psi *= weight_;
  out.psi_prime *= weight_;
  return out;
}

double LossFunction::psi(double x) const {
  switch (kind_) {
    case LossKind::Squared: return weight_ * x;
    case LossKind::PseudoHuber: return eval(x).psi;
    case LossKind::Huber: return weight_ * std::clamp(x, -c_, c_);
  }
  return 0.0;
}

double LossFunction::psi_prime(double x) const {
  switch (kind_) {
    case LossKind::Squared: return weight_;
    case LossKind::PseudoHuber: return eval(x).psi_prime;
    case LossKind::Huber: return std::abs(x) <= c_ ? weight_ : 0.0;
  }
  return 0.0;
}

LossFunction LossFunction::scaled(double factor) const {
  if (!(factor > 0.0)) throw Error(ErrorCode::RejectRange, "loss scale factor must be positive");
  LossFunction out = *this;
  out.weight_ *= factor;
  if (out.certification_.psi_prime_lipschitz) *out.certification_.psi_prime_lipschitz *= factor;
  return out;
}

std::string_view to_string(MomentCondition status) {
  switch (status) {
    case MomentCondition::Holds: return "holds";
    case MomentCondition::Fails: return "fails";
    case MomentCondition::Unverified: return "unverified";
  }
  return "unknown";
}

MomentCondition certify_moment_condition(const LossFunction& loss, const InnovationSpec& spec) {
  if (!loss.certification().psi_bounded && !spec.finite_variance()) return MomentCondition::Fails;
  // Odd psi integrates to zero against a symmetric law; otherwise nothing is known.
  return spec.symmetric() ? MomentCondition::Holds : MomentCondition::Unverified;
}

namespace {

// Regression of D2_t = X_t - 2 X_{t-1} + X_{t-2} on the unit-norm columns
// zu_t = (X_{t-1} - X_{t-2}) / su and zv_t = X_{t-2} / sv. The residual at
// coefficients (2 + gu / su, -1 + gv / sv - gu / su) is D2_t - gu zu_t - gv zv_t.
struct Design {
  std::vector<double> d2, zu, zv;
  double su = 0.0, sv = 0.0;
  double corr = 0.0;  // <zu, zv>
};

Design build_design(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorCode::RejectRange, fmt::format("need at least 3 observations, got {}", n));
  Design d;
  const std::size_t rows = n - 2;
  d.d2.resize(rows);
  d.zu.resize(rows);
  d.zv.resize(rows);
  double su2 = 0.0, sv2 = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double diff_prev = x[i + 1] - x[i];
    const double diff_cur = x[i + 2] - x[i + 1];
    d.d2[i] = diff_cur - diff_prev;
    d.zu[i] = diff_prev;
    d.zv[i] = x[i];
    su2 += diff_prev * diff_prev;
    sv2 += x[i] * x[i];
  }
  if (!std::isfinite(su2) || !std::isfinite(sv2))
    throw Error(ErrorCode::NonFinite, "series too large to form the lag Gram matrix");
  d.su = std::sqrt(su2);
  d.sv = std::sqrt(sv2);
  if (d.su == 0.0 || d.sv == 0.0) throw Error(ErrorCode::DegenerateDesign, "a lag column is identically zero");
  double corr = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    d.zu[i] /= d.su;
    d.zv[i] /= d.sv;
    corr += d.zu[i] * d.zv[i];
  }
  d.corr = corr;
  if (1.0 - corr * corr <= 1e-12) throw Error(ErrorCode::DegenerateDesign, "lagged values are collinear");
  return d;
}

struct Point {
  double gu = 0.0, gv = 0.0;
};

struct Evaluation {
  double f = 0.0;
  double g[2] = {0.0, 0.0};
  double h11 = 0.0, h12 = 0.0, h22 = 0.0;
  double psi_norm = 0.0;

  double scaled_grad() const {
    return std::max(std::abs(g[0]), std::abs(g[1])) / std::max(1.0, psi_norm);
  }
};

Evaluation evaluate(const Design& d, const LossFunction& loss, Point p) {
  Evaluation e;
  double psi2 = 0.0;
  for (std::size_t i = 0; i < d.d2.size(); ++i) {
    const double r = d.d2[i] - p.gu * d.zu[i] - p.gv * d.zv[i];
    const LossValues lv = loss.eval(r);
    e.f += lv.rho;
    e.g[0] -= lv.psi * d.zu[i];
    e.g[1] -= lv.psi * d.zv[i];
    e.h11 += lv.psi_prime * d.zu[i] * d.zu[i];
    e.h12 += lv.psi_prime * d.zu[i] * d.zv[i];
    e.h22 += lv.psi_prime * d.zv[i] * d.zv[i];
    psi2 += lv.psi * lv.psi;
  }
  e.psi_norm = std::sqrt(psi2);
  return e;
}

Point least_squares(const Design& d) {
  const double det = 1.0 - d.corr * d.corr;
  auto solve = [&](double bu, double bv) { return Point{(bu - d.corr * bv) / det, (bv - d.corr * bu) / det}; };
  double bu = 0.0, bv = 0.0;
  for (std::size_t i = 0; i < d.d2.size(); ++i) {
    bu += d.zu[i] * d.d2[i];
    bv += d.zv[i] * d.d2[i];
  }
  Point p = solve(bu, bv);
  // One step of iterative refinement on the normal equations.
  double ru = 0.0, rv = 0.0;
  for (std::size_t i = 0; i < d.d2.size(); ++i) {
    const double r = d.d2[i] - p.gu * d.zu[i] - p.gv * d.zv[i];
    ru += d.zu[i] * r;
    rv += d.zv[i] * r;
  }
  const Point correction = solve(ru, rv);
  return {p.gu + correction.gu, p.gv + correction.gv};
}

Point to_point(const Design& d, Coefficients c) {
  return {(c.phi1 - 2.0) * d.su, (c.phi1 + c.phi2 - 1.0) * d.sv};
}

Coefficients to_coefficients(const Design& d, Point p) {
  const double du = p.gu / d.su;
  const double dv = p.gv / d.sv;
  return {2.0 + du, -1.0 + (dv - du)};
}

EstimateResult finish(const Design& d, const LossFunction& loss, Point p, const Evaluation& e, int iterations,
                      bool fallback) {
  EstimateResult out;
  out.coeffs = to_coefficients(d, p);
  out.residuals.resize(d.d2.size());
  for (std::size_t i = 0; i < d.d2.size(); ++i) out.residuals[i] = d.d2[i] - p.gu * d.zu[i] - p.gv * d.zv[i];
  out.loss_kind = loss.kind();
  out.objective = e.f;
  out.iterations = iterations;
  out.grad_norm = e.scaled_grad();
  out.gradient_fallback = fallback;
  return out;
}

}  // namespace

EstimateResult fit_ar2(std::span<const double> series, const LossFunction& loss, const FitOptions& opts) {
  const Design design = build_design(series);

  Point p = opts.start ? to_point(design, *opts.start) : least_squares(design);
  Evaluation e = evaluate(design, loss, p);
  bool fallback = false;

  if (loss.kind() == LossKind::Squared && opts.closed_form_for_squared && !opts.start) {
    // Normal-equation solution; Newton below only refines it if the
    // gradient check fails.
    if (e.scaled_grad() <= opts.tol) return finish(design, loss, p, e, 0, false);
  }

  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr double kMaxCondition = 1e12;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (e.scaled_grad() <= opts.tol) return finish(design, loss, p, e, iter, fallback);

    // Eigenvalues of the 2x2 Hessian decide between Newton and gradient steps.
    const double mean = 0.5 * (e.h11 + e.h22);
    const double spread = std::hypot(0.5 * (e.h11 - e.h22), e.h12);
    const double lambda_max = mean + spread;
    const double lambda_min = mean - spread;
    double du = 0.0, dv = 0.0;
    if (lambda_min > 0.0 && lambda_max <= kMaxCondition * lambda_min) {
      const double det = e.h11 * e.h22 - e.h12 * e.h12;
      du = -(e.h22 * e.g[0] - e.h12 * e.g[1]) / det;
      dv = -(e.h11 * e.g[1] - e.h12 * e.g[0]) / det;
    } else {
      fallback = true;
      const double curvature = lambda_max > 0.0 ? lambda_max : std::max(1.0, e.psi_norm);
      du = -e.g[0] / curvature;
      dv = -e.g[1] / curvature;
    }

    const double slope = e.g[0] * du + e.g[1] * dv;
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60 && !accepted; ++k, step *= kShrink) {
      const Point trial{p.gu + step * du, p.gv + step * dv};
      Evaluation te = evaluate(design, loss, trial);
      if (!std::isfinite(te.f)) continue;
      const bool armijo = te.f <= e.f + kArmijo * step * slope;
      // Near the optimum the decrease drops below the rounding error of the
      // objective sum; accept a full step there if it shrinks the gradient.
      const bool within_rounding =
          k == 0 && te.f - e.f <= 1e-13 * std::max(e.f, std::numeric_limits<double>::min()) &&
          te.scaled_grad() < e.scaled_grad();
      if (armijo || within_rounding) {
        p = trial;
        e = te;
        accepted = true;
      }
    }
    if (!accepted) {
      throw Error(ErrorCode::NoConvergence,
                  fmt::format("line search failed at iteration {} (scaled gradient {:.3g})", iter, e.scaled_grad()));
    }
  }
  if (e.scaled_grad() <= opts.tol) return finish(design, loss, p, e, opts.max_iter, fallback);
  throw Error(ErrorCode::NoConvergence,
              fmt::format("no convergence after {} iterations (scaled gradient {:.3g})", opts.max_iter,
                          e.scaled_grad()));
}

std::vector<double> residuals(std::span<const double> series, Coefficients coeffs) {
  if (series.size() < 3) throw Error(ErrorCode::RejectRange, "need at least 3 observations");
  std::vector<double> out(series.size() - 2);
  for (std::size_t t = 2; t < series.size(); ++t)
    out[t - 2] = series[t] - coeffs.phi1 * series[t - 1] - coeffs.phi2 * series[t - 2];
  return out;
}

ObjectiveDerivatives ar2_objective(std::span<const double> series, const LossFunction& loss, Coefficients coeffs) {
  if (series.size() < 3) throw Error(ErrorCode::RejectRange, "need at least 3 observations");
  ObjectiveDerivatives out;
  for (std::size_t t = 2; t < series.size(); ++t) {
    const double z1 = series[t - 1];
    const double z2 = series[t - 2];
    const LossValues lv = loss.eval(series[t] - coeffs.phi1 * z1 - coeffs.phi2 * z2);
    out.value += lv.rho;
    out.gradient[0] -= lv.psi * z1;
    out.gradient[1] -= lv.psi * z2;
    out.hessian[0] += lv.psi_prime * z1 * z1;
    out.hessian[1] += lv.psi_prime * z1 * z2;
    out.hessian[2] += lv.psi_prime * z2 * z2;
  }
  return out;
}

PsiMoments psi_moments(std::span<const double> values, const LossFunction& loss) {
  if (values.empty()) throw Error(ErrorCode::RejectRange, "psi_moments needs a nonempty sample");
  double psi2 = 0.0, psiprime = 0.0;
  for (double x : values) {
    const double psi = loss.psi(x);
    psi2 += psi * psi;
    psiprime += loss.psi_prime(x);
  }
  const auto count = static_cast<double>(values.size());
  PsiMoments out{psi2 / count, psiprime / count, 0.0};
  if (out.psiprime_mean <= 1e-12)
    throw Error(ErrorCode::MomentDegenerate, fmt::format("mean psi' = {} is not positive", out.psiprime_mean));
  return out;
}

double psi_correlation(std::span<const double> values, const LossFunction& loss) {
  if (values.empty()) throw Error(ErrorCode::RejectRange, "psi_correlation needs a nonempty sample");
  double cross = 0.0, x2 = 0.0, psi2 = 0.0;
  for (double x : values) {
    const double psi = loss.psi(x);
    cross += x * psi;
    x2 += x * x;
    psi2 += psi * psi;
  }
  if (x2 == 0.0 || psi2 == 0.0) return 0.0;
  return cross / std::sqrt(x2 * psi2);
}

NormalizedStatistic normalized_statistic(Coefficients coeffs_hat, Coefficients center, std::size_t n, double a) {
  if (n < 3) throw Error(ErrorCode::RejectRange, "normalized statistic needs n >= 3");
  if (!(a > 0.0)) throw Error(ErrorCode::RejectRange, "normalizer a must be positive");
  const double nd = static_cast<double>(n);
  const double d1 = coeffs_hat.phi1 - center.phi1;
  const double d2 = coeffs_hat.phi2 - center.phi2;
  return {std::sqrt(nd) * a * d1, nd * std::sqrt(nd) * a * (d1 + d2), n, a, center};
}

Coefficients NormalizedStatistic::coefficients() const {
  const double nd = static_cast<double>(n);
  const double d1 = u / (std::sqrt(nd) * a);
  const double sum = v / (nd * std::sqrt(nd) * a);
  return {center.phi1 + d1, center.phi2 + (sum - d1)};
}

void write_estimate_kv(std::ostream& out, const EstimateResult& result) {
  out << fmt::format("phi1_hat = {:.17g}\n", result.coeffs.phi1);
  out << fmt::format("phi2_hat = {:.17g}\n", result.coeffs.phi2);
  out << fmt::format("loss = {}\n", to_string(result.loss_kind));
  out << fmt::format("objective = {:.17g}\n", result.objective);
  out << fmt::format("iters = {}\n", result.iterations);
  out << fmt::format("grad_norm = {:.17g}\n", result.grad_norm);
  out << fmt::format("gradient_fallback = {}\n", result.gradient_fallback);
  out << fmt::format("residual_count = {}\n", result.residuals.size());
}

std::string estimate_csv_header() { return "phi1_hat,phi2_hat,objective,iters,grad_norm"; }

std::string estimate_csv_row(const EstimateResult& result) {
  return fmt::format("{:.17g},{:.17g},{:.17g},{},{:.17g}", result.coeffs.phi1, result.coeffs.phi2, result.objective,
                     result.iterations, result.grad_norm);
}

}  // namespace durboot
