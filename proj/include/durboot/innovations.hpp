#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "durboot/seed.hpp"

namespace durboot {

enum class Family { SymmetricStable, ParetoTwoSided, Gaussian };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

/**
 * Law of the i.i.d. innovations. Every family has regularly varying tails
 * with a constant slowly varying part:
 *
 *  - SymmetricStable: characteristic function exp(-|scale * t|^alpha).
 *    Only p = 1/2 is supported (the family is symmetric by definition).
 *  - ParetoTwoSided: |eps| = scale * U^(-1/alpha), sign +1 with probability p,
 *    so P(|eps| > x) = (x / scale)^(-alpha) for x >= scale.
 *  - Gaussian: N(0, scale^2); alpha is fixed at 2.
 *
 * For alpha in [1, 2] the tails must balance (p = 1/2).
 */
struct InnovationSpec {
  Family family = Family::SymmetricStable;
  double alpha = 1.5;
  double p = 0.5;
  double scale = 1.0;

  double q() const { return 1.0 - p; }
  bool symmetric() const { return p == 0.5; }
  bool finite_variance() const {
    return family == Family::Gaussian || (family == Family::SymmetricStable && alpha == 2.0);
  }

  friend bool operator==(const InnovationSpec&, const InnovationSpec&) = default;
};

/// Validates and builds a spec. Throws Error{RejectRange} for alpha outside
/// (0, 2], p outside [0, 1], non-positive scale, or a Gaussian with
/// alpha != 2; Error{RejectAsymmetry} for alpha >= 1 with p != 1/2, or for a
/// SymmetricStable spec with p != 1/2.
InnovationSpec make_innovation_spec(Family family, double alpha, double p, double scale);

struct InnovationVector {
  std::vector<double> values;
  InnovationSpec spec;
  std::uint64_t seed = 0;
};

/// n i.i.d. draws; the output is a pure function of (spec, n, seed).
InnovationVector sample_innovations(const InnovationSpec& spec, std::size_t n, std::uint64_t seed);

/// One standard symmetric alpha-stable draw (characteristic function
/// exp(-|t|^alpha)) by the Chambers-Mallows-Stuck polar construction.
double standard_symmetric_stable(double alpha, Rng& rng);

/// P(|eps| > x) under the spec. Closed form for Pareto, Gaussian, Cauchy and
/// alpha = 2; otherwise a one-dimensional integral representation evaluated
/// by adaptive Gauss-Kronrod quadrature.
double tail_probability(const InnovationSpec& spec, double x);

/// a_n = inf{x : P(|eps| > x) <= 1/n}. Pareto and Gaussian are closed form;
/// SymmetricStable with alpha < 2 is found by bisection on tail_probability
/// to relative tolerance 1e-8 (the upper end of the final bracket is
/// returned, so tail_probability(a_n) <= 1/n).
double normalizer_a_n(const InnovationSpec& spec, std::size_t n);

/// Scale under which a^-1 * (eps_1 + ... + eps_[nt]) converges to the
/// limit process used by the limit law. Equals normalizer_a_n for
/// infinite-variance specs and sd * sqrt(n) for finite-variance ones
/// (Gaussian, SymmetricStable with alpha = 2), where the quantile
/// definition does not give a Brownian limit.
double partial_sum_scale(const InnovationSpec& spec, std::size_t n);

/// Scale sigma such that sum_k delta_k Gamma_k^(-1/alpha) with symmetric
/// signs is distributed as sigma times a standard symmetric alpha-stable
/// variable: sigma = C_alpha^(-1/alpha).
double lepage_stable_scale(double alpha);

/// Single-column CSV with header `epsilon`.
void write_innovations_csv(std::ostream& out, std::span<const double> values);

}  // namespace durboot
