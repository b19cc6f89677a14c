#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace durboot {

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|,
/// computed exactly by a merge scan over the sorted samples (ties are
/// consumed together). Throws Error{EmptySample} if either is empty.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Empirical CDF as (x, F(x)) at each distinct sample value.
using EcdfTable = std::vector<std::pair<double, double>>;

EcdfTable ecdf_table(std::span<const double> sample);

/// sup |F_a - F_b| for two step functions given by their tables.
double ks_distance(const EcdfTable& a, const EcdfTable& b);

/// CSV with header `x,F`.
void write_ecdf_csv(std::ostream& out, const EcdfTable& table);
EcdfTable read_ecdf_csv(std::istream& in);

}  // namespace durboot
