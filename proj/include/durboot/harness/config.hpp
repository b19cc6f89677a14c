#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "durboot/bootstrap.hpp"
#include "durboot/innovations.hpp"
#include "durboot/m_estimation.hpp"

namespace durboot {

/**
 * Everything a desk-scale experiment needs. The file form is one
 * `key = value` per line; `#` starts a comment. Keys and defaults:
 *
 *   family = symmetric_stable   alpha = 1.5   p = 0.5   scale = 1
 *   loss = pseudo_huber         c = 1
 *   n = 2000        gamma = 0.7        B = 999
 *   R_mc = 500      R_lim = 500        K = 5000        N = 2048
 *   seed = 1        centering = symmetrize             a_mode = empirical
 *   bootstrap_series = 1       coverage_reps = 0       coverage_B = 499
 *   level = 0.95    moment_draws = 1000000             moments_crosscheck = false
 *   threads = 1     out_dir = out                      input =
 */
struct ExperimentConfig {
  InnovationSpec spec{Family::SymmetricStable, 1.5, 0.5, 1.0};
  LossKind loss = LossKind::PseudoHuber;
  double c = 1.0;
  std::size_t n = 2000;
  double gamma = 0.7;
  std::size_t B = 999;
  std::size_t R_mc = 500;
  std::size_t R_lim = 500;
  std::size_t K = 5000;
  std::size_t N = 2048;
  std::uint64_t seed = 1;
  CenteringMode centering = CenteringMode::Symmetrize;
  AMode a_mode = AMode::Empirical;
  std::size_t bootstrap_series = 1;
  std::size_t coverage_reps = 0;
  std::size_t coverage_B = 499;
  double level = 0.95;
  std::size_t moment_draws = 1000000;
  bool moments_crosscheck = false;
  unsigned threads = 1;
  std::string out_dir = "out";
  std::string input;  // optional series CSV for `estimate` / `bootstrap`

  LossFunction make_loss_function() const { return make_loss(loss, c); }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses the key-value form; unknown keys and malformed values throw
/// Error{Config}, out-of-range values throw the owning module's error.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Every key, in a fixed order, with doubles at 17 significant digits, so
/// parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Range checks delegated to the owning modules.
void validate_config(const ExperimentConfig& config);

}  // namespace durboot
