#include "durboot/harness/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <string_view>

#include "durboot/error.hpp"

namespace durboot {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::Config, fmt::format("bad value '{}' for key '{}'", text, key));
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::Config, fmt::format("bad boolean '{}' for key '{}'", text, key));
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  Family family = cfg.spec.family;
  double alpha = cfg.spec.alpha, p = cfg.spec.p, scale = cfg.spec.scale;
  bool alpha_given = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::Config, fmt::format("line {}: expected 'key = value'", line_no));
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));

    if (key == "family") family = parse_family(value);
    else if (key == "alpha") { alpha = parse_number<double>(key, value); alpha_given = true; }
    else if (key == "p") p = parse_number<double>(key, value);
    else if (key == "scale") scale = parse_number<double>(key, value);
    else if (key == "loss") cfg.loss = parse_loss_kind(value);
    else if (key == "c") cfg.c = parse_number<double>(key, value);
    else if (key == "n") cfg.n = parse_number<std::size_t>(key, value);
    else if (key == "gamma") cfg.gamma = parse_number<double>(key, value);
    else if (key == "B") cfg.B = parse_number<std::size_t>(key, value);
    else if (key == "R_mc") cfg.R_mc = parse_number<std::size_t>(key, value);
    else if (key == "R_lim") cfg.R_lim = parse_number<std::size_t>(key, value);
    else if (key == "K") cfg.K = parse_number<std::size_t>(key, value);
    else if (key == "N") cfg.N = parse_number<std::size_t>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "centering") cfg.centering = parse_centering_mode(value);
    else if (key == "a_mode") cfg.a_mode = parse_a_mode(value);
    else if (key == "bootstrap_series") cfg.bootstrap_series = parse_number<std::size_t>(key, value);
    else if (key == "coverage_reps") cfg.coverage_reps = parse_number<std::size_t>(key, value);
    else if (key == "coverage_B") cfg.coverage_B = parse_number<std::size_t>(key, value);
    else if (key == "level") cfg.level = parse_number<double>(key, value);
    else if (key == "moment_draws") cfg.moment_draws = parse_number<std::size_t>(key, value);
    else if (key == "moments_crosscheck") cfg.moments_crosscheck = parse_bool(key, value);
    else if (key == "threads") cfg.threads = parse_number<unsigned>(key, value);
    else if (key == "out_dir") cfg.out_dir = std::string(value);
    else if (key == "input") cfg.input = std::string(value);
    else throw Error(ErrorCode::Config, fmt::format("line {}: unknown key '{}'", line_no, key));
  }
  if (family == Family::Gaussian && !alpha_given) alpha = 2.0;
  cfg.spec = make_innovation_spec(family, alpha, p, scale);
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, fmt::format("cannot open config '{}'", path));
  return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  auto put = [&](std::string_view key, const auto& value) { out += fmt::format("{} = {}\n", key, value); };
  auto put_real = [&](std::string_view key, double value) { out += fmt::format("{} = {:.17g}\n", key, value); };
  put("family", to_string(c.spec.family));
  put_real("alpha", c.spec.alpha);
  put_real("p", c.spec.p);
  put_real("scale", c.spec.scale);
  put("loss", to_string(c.loss));
  put_real("c", c.c);
  put("n", c.n);
  put_real("gamma", c.gamma);
  put("B", c.B);
  put("R_mc", c.R_mc);
  put("R_lim", c.R_lim);
  put("K", c.K);
  put("N", c.N);
  put("seed", c.seed);
  put("centering", to_string(c.centering));
  put("a_mode", to_string(c.a_mode));
  put("bootstrap_series", c.bootstrap_series);
  put("coverage_reps", c.coverage_reps);
  put("coverage_B", c.coverage_B);
  put_real("level", c.level);
  put("moment_draws", c.moment_draws);
  put("moments_crosscheck", c.moments_crosscheck ? "true" : "false");
  put("threads", c.threads);
  put("out_dir", c.out_dir);
  put("input", c.input);
  return out;
}

void validate_config(const ExperimentConfig& c) {
  make_innovation_spec(c.spec.family, c.spec.alpha, c.spec.p, c.spec.scale);
  make_loss(c.loss, c.c);
  if (c.n < 3) throw Error(ErrorCode::RejectRange, "n must be >= 3");
  resample_size(c.n, c.gamma);
  if (c.B < 1) throw Error(ErrorCode::RejectRange, "B must be >= 1");
  if (c.K < 1) throw Error(ErrorCode::RejectRange, "K must be >= 1");
  if (c.N < 2) throw Error(ErrorCode::RejectRange, "N must be >= 2");
  if (!(c.level > 0.0 && c.level < 1.0)) throw Error(ErrorCode::RejectRange, "level must be in (0,1)");
  if (c.coverage_reps > 0 && c.coverage_B < 20) throw Error(ErrorCode::RejectRange, "coverage_B must be >= 20");
  if (c.moment_draws < 1) throw Error(ErrorCode::RejectRange, "moment_draws must be >= 1");
}

}  // namespace durboot
