#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "durboot/ar_process.hpp"
#include "durboot/bootstrap.hpp"
#include "durboot/error.hpp"
#include "durboot/harness/config.hpp"
#include "durboot/harness/experiment.hpp"
#include "durboot/limit_law.hpp"
#include "durboot/seed.hpp"

namespace fs = std::filesystem;
using namespace durboot;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> input;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--input", o.input, "series CSV (t,x) for estimate/bootstrap");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig config = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed) config.seed = *o.seed;
  if (o.out_dir) config.out_dir = *o.out_dir;
  if (o.input) config.input = *o.input;
  if (o.threads) config.threads = *o.threads;
  validate_config(config);
  fs::create_directories(config.out_dir);
  return config;
}

std::ofstream open_out(const ExperimentConfig& config, const std::string& name) {
  const fs::path path = fs::path(config.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

TimeSeries input_series(const ExperimentConfig& config) {
  if (config.input.empty()) return simulate_series(config.spec, config.n, derive_seed(config.seed, "simulate", 0));
  std::ifstream in(config.input);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot read '{}'", config.input));
  return read_series_csv(in);
}

void cmd_simulate(const ExperimentConfig& config) {
  const std::uint64_t seed = derive_seed(config.seed, "simulate", 0);
  const InnovationVector eps = sample_innovations(config.spec, config.n, seed);
  TimeSeries series = simulate_double_unit_root(eps.values);
  series.spec = config.spec;
  series.seed = seed;
  auto s = open_out(config, "series.csv");
  write_series_csv(s, series);
  auto e = open_out(config, "innovations.csv");
  write_innovations_csv(e, eps.values);
}

void cmd_estimate(const ExperimentConfig& config) {
  const TimeSeries series = input_series(config);
  const EstimateResult est = fit_ar2(series, config.make_loss_function());
  auto kv = open_out(config, "estimate.txt");
  write_estimate_kv(kv, est);
  auto csv = open_out(config, "estimate.csv");
  csv << estimate_csv_header() << "\n" << estimate_csv_row(est) << "\n";
  write_estimate_kv(std::cout, est);
}

void cmd_bootstrap(const ExperimentConfig& config) {
  const TimeSeries series = input_series(config);
  BootstrapOptions opts;
  opts.gamma = config.gamma;
  opts.replicates = config.B;
  opts.centering = config.centering;
  opts.a_mode = config.a_mode;
  opts.threads = config.threads;
  if (config.a_mode == AMode::Theoretical) opts.spec = series.spec ? *series.spec : config.spec;
  const BootstrapDistribution dist =
      bootstrap_distribution(series, config.make_loss_function(), opts, derive_seed(config.seed, "bootstrap", 0));
  auto csv = open_out(config, "bootstrap.csv");
  write_bootstrap_csv(csv, dist);
  auto json = open_out(config, "bootstrap_summary.json");
  write_bootstrap_summary_json(json, dist);
  const BootstrapInterval ci = bootstrap_ci(dist, config.level);
  auto txt = open_out(config, "interval.txt");
  const std::string body = fmt::format(
      "level = {:.17g}\nphi1_hat = {:.17g}\nphi2_hat = {:.17g}\nphi1_lower = {:.17g}\nphi1_upper = {:.17g}\n"
      "phi2_lower = {:.17g}\nphi2_upper = {:.17g}\nm = {}\na_m = {:.17g}\nfailures = {}\n",
      config.level, dist.center.phi1, dist.center.phi2, ci.phi1.lower, ci.phi1.upper, ci.phi2.lower, ci.phi2.upper,
      dist.m, dist.a_m, dist.failure_count);
  txt << body;
  std::cout << body;
}

void cmd_limit(const ExperimentConfig& config) {
  const LossFunction loss = config.make_loss_function();
  const PsiMoments moments = sampled_limit_moments(config.spec, loss, config.moment_draws, config.seed);
  const LimitDistribution dist = limit_distribution(config.spec.alpha, config.spec.p, moments, config.R_lim, config.K,
                                                    config.N, config.seed, config.threads);
  auto csv = open_out(config, "limit.csv");
  write_limit_csv(csv, dist);
  std::cout << fmt::format("samples = {}\nsingular = {}\nsigma2 = {:.17g}\npsiprime_mean = {:.17g}\n",
                           dist.samples.size(), dist.singular_count, moments.sigma2, moments.psiprime_mean);
}

void cmd_experiment(const ExperimentConfig& config) {
  const ExperimentReport report = run_experiment(config);
  write_report(std::cout, report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-unit-root M-estimation, m-out-of-n bootstrap and limit-law sampler"};
  app.require_subcommand(1);
  Overrides o;
  struct Command {
    const char* name;
    const char* help;
    void (*run)(const ExperimentConfig&);
  };
  const Command commands[] = {
      {"simulate", "simulate a double-unit-root series", cmd_simulate},
      {"estimate", "fit AR(2) coefficients by M-estimation", cmd_estimate},
      {"bootstrap", "m-out-of-n residual bootstrap and percentile intervals", cmd_bootstrap},
      {"limit", "sample the limiting distribution", cmd_limit},
      {"experiment", "full validation experiment", cmd_experiment},
  };
  for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ExperimentConfig config = resolve(o);
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) c.run(config);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
