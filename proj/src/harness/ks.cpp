#include "durboot/harness/ks.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "durboot/error.hpp"

namespace durboot {

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "KS distance needs two nonempty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (i == sa.size()) x = sb[j];
    else if (j == sb.size()) x = sa[i];
    else x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

EcdfTable ecdf_table(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  EcdfTable table;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    table.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return table;
}

double ks_distance(const EcdfTable& a, const EcdfTable& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "KS distance needs two nonempty tables");
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, best = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (i == a.size()) x = b[j].first;
    else if (j == b.size()) x = a[i].first;
    else x = std::min(a[i].first, b[j].first);
    if (i < a.size() && a[i].first == x) fa = a[i++].second;
    if (j < b.size() && b[j].first == x) fb = b[j++].second;
    best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

void write_ecdf_csv(std::ostream& out, const EcdfTable& table) {
  out << "x,F\n";
  for (const auto& [x, f] : table) out << fmt::format("{:.17g},{:.17g}\n", x, f);
}

EcdfTable read_ecdf_csv(std::istream& in) {
  EcdfTable table;
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,F", 0) != 0) throw Error(ErrorCode::Io, "expected ECDF header 'x,F'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::Io, fmt::format("malformed ECDF row '{}'", line));
    table.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return table;
}

}  // namespace durboot
