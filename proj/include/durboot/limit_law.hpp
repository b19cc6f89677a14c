#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "durboot/m_estimation.hpp"

namespace durboot {

/**
 * Truncated LePage series S(t) = sum_{k<=K} delta_k Gamma_k^(-1/alpha) 1(U_k <= t)
 * on the grid t_j = j/N, j = 0..N. Gamma_k are unit-rate Poisson arrival
 * times, U_k ~ U(0,1), P(delta_k = +1) = p. For alpha = 2 the path is a
 * standard Brownian motion and the term arrays are empty.
 */
struct LePagePath {
  double alpha = 1.5;
  double p = 0.5;
  std::size_t terms = 0;
  std::vector<double> arrivals;
  std::vector<double> locations;
  std::vector<int> signs;
  std::size_t grid = 0;       // N
  std::vector<double> values; // S(j/N), j = 0..N
};

struct BrownianPath {
  std::size_t grid = 0;
  std::vector<double> values;  // W(j/N), j = 0..N
  std::uint64_t seed = 0;
};

/// Throws Error{RejectRange} for alpha outside (0,2], K < 1 or N < 2 and
/// Error{RejectAsymmetry} for alpha in [1,2] with p != 1/2.
LePagePath sample_lepage_path(double alpha, double p, std::size_t terms, std::size_t grid, std::uint64_t seed);

/// Evaluates the series for given terms (used to pin down paths exactly).
LePagePath lepage_path_from_terms(double alpha, double p, std::vector<double> arrivals, std::vector<double> locations,
                                  std::vector<int> signs, std::size_t grid);

/// The same series with every delta_k negated.
LePagePath with_flipped_signs(const LePagePath& path);

/// Cumulative sums of N independent N(0, 1/N) increments, W(0) = 0.
BrownianPath sample_brownian_path(std::size_t grid, std::uint64_t seed);

/// I1 = int S dW, I2 = int (int_0^t S) dW, G11 = int S^2,
/// G12 = int S (int_0^t S), G22 = int (int_0^t S)^2 over [0,1].
struct IntegralSet {
  double I1 = 0.0;
  double I2 = 0.0;
  double G11 = 0.0;
  double G12 = 0.0;
  double G22 = 0.0;
};

/// Left-endpoint sums on the common grid, for both the Ito and the Riemann
/// integrals; the inner integral int_0^t S is itself a left-endpoint sum.
/// Throws Error{GridMismatch} unless both paths have the same N + 1 >= 3 points.
IntegralSet stochastic_integrals(std::span<const double> s_path, std::span<const double> w_path);

struct LimitSample {
  std::size_t rep = 0;
  double u = 0.0;
  double v = 0.0;
  IntegralSet integrals;
  PsiMoments moments;
  bool singular = false;
};

/// Gamma2^-1 * (sqrt(E psi^2) I1, sqrt(E psi^2) I2) / E psi' with
/// Gamma2 = [[G11, G12], [G12, G22]] inverted through its adjugate. The
/// sample is marked singular (u = v = NaN) when
/// |det Gamma2| < 1e-14 (G11 G22 + 1).
LimitSample limit_vector_from_integrals(const IntegralSet& integrals, const PsiMoments& moments);

/**
 * One draw of the limiting vector. S uses sub-seed derive_seed(seed, "limit-S")
 * and the independent Brownian part uses derive_seed(seed, "limit-W"). For
 * alpha = 2, W = rho S + sqrt(1 - rho^2) W_perp with rho = moments.sw_correlation;
 * for alpha < 2, W is independent of S.
 * Throws Error{MomentDegenerate} if moments.psiprime_mean == 0 and
 * Error{RejectRange} if moments.sigma2 < 0.
 */
LimitSample sample_limit_vector(double alpha, double p, const PsiMoments& moments, std::size_t terms,
                                std::size_t grid, std::uint64_t seed);

struct LimitDistribution {
  std::vector<LimitSample> samples;  // singular ones included, flagged
  std::size_t singular_count = 0;

  std::vector<double> u_values() const;
  std::vector<double> v_values() const;
};

/// R draws; replicate r uses sample_limit_vector(..., derive_seed(seed, "limit", r)).
LimitDistribution limit_distribution(double alpha, double p, const PsiMoments& moments, std::size_t replicates,
                                     std::size_t terms, std::size_t grid, std::uint64_t seed, unsigned threads = 1,
                                     std::size_t first_replicate = 0);

/// CSV columns: rep,u_lim,v_lim,G11,G12,G22,I1,I2,singular
void write_limit_csv(std::ostream& out, const LimitDistribution& dist);

}  // namespace durboot
