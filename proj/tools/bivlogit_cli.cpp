#include "CLI11.hpp"

#include "bivlogit/bootstrap.hpp"
#include "bivlogit/cre.hpp"
#include "bivlogit/discovery.hpp"
#include "bivlogit/error.hpp"
#include "bivlogit/gmm.hpp"
#include "bivlogit/panel_io.hpp"
#include "bivlogit/run.hpp"

#include <cstdio>
#include <iostream>

using namespace bivlogit;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kNotConverged = 3;
constexpr int kNumerical = 4;

struct SimArgs {
  std::size_t n = 1000;
  int T = 3;
  std::string dist = "correct";
  std::uint64_t seed = 1;
  bool restricted = true;
  std::vector<double> gamma{2.5, -1.5, -1.5, 2.5};
  double rho = 1.0;
  double kappa = 2.0;
  int covariates = 0;
  double beta = 0.5;
  double p1 = 0.5, p2 = 0.5;
  std::string output;
};

const CLI::Validator dist_name(
    [](std::string& v) {
      try {
        HeterogeneityDist::from_name(v);
      } catch (const InvalidInput&) {
        std::string names;
        for (const auto& n : HeterogeneityDist::names()) names += (names.empty() ? "" : ", ") + n;
        return "unknown distribution '" + v + "' (one of " + names + ")";
      }
      return std::string();
    },
    "DIST", "dist");

LoadedPanel load_or_die(const std::string& path) {
  auto lp = load_panel(path);
  std::cerr << lp.report.summary() << '\n';
  for (const auto& is : lp.report.issues) std::cerr << "  " << is.str() << '\n';
  if (lp.report.households_loaded == 0) throw InvalidInput("no valid households in " + path);
  return lp;
}

void add_run_flags(CLI::App* cmd, RunConfig& cfg, std::string& config_file, std::string& estimator,
                   std::string& window) {
  cmd->add_option("--config", config_file, "key=value configuration file; flags override it");
  cmd->add_option("--input", cfg.input, "panel CSV");
  cmd->add_option("--estimator", estimator, "static-ss|dynamic-pooled|cmle|cmle-restricted|gmm-rho|cre");
  cmd->add_flag("--by-group", cfg.by_group, "one cell per group label");
  cmd->add_option("--window", window, "rolling window over window_key as width,step");
  cmd->add_flag("--edge-windows", cfg.edge_windows, "add truncated windows at both ends");
  cmd->add_option("--seed", cfg.seed);
  cmd->add_option("--rho-low", cfg.rho_low);
  cmd->add_option("--rho-high", cfg.rho_high);
  cmd->add_option("--cre-order", cfg.cre_order);
  cmd->add_option("--output", cfg.output, "report prefix");
}

// Config file first, then every flag given on the command line.
RunConfig resolve(const CLI::App* cmd, RunConfig flags, const std::string& config_file, const std::string& estimator,
                  const std::string& window, int bootstrap) {
  RunConfig cfg;
  if (!config_file.empty()) cfg.load_file(config_file);
  if (!estimator.empty()) cfg.set("estimator", estimator);
  if (!window.empty()) cfg.set("window", window);
  if (cmd->count("--input")) cfg.input = flags.input;
  if (cmd->count("--by-group")) cfg.by_group = flags.by_group;
  if (cmd->count("--edge-windows")) cfg.edge_windows = flags.edge_windows;
  if (cmd->count("--seed")) cfg.seed = flags.seed;
  if (cmd->count("--rho-low")) cfg.rho_low = flags.rho_low;
  if (cmd->count("--rho-high")) cfg.rho_high = flags.rho_high;
  if (cmd->count("--cre-order")) cfg.cre_order = flags.cre_order;
  if (cmd->count("--output")) cfg.output = flags.output;
  if (bootstrap >= 0) cfg.bootstrap = bootstrap;
  cfg.validate();
  if (cfg.input.empty()) throw InvalidInput("no input panel given");
  return cfg;
}

int do_simulate(const SimArgs& a) {
  if (a.gamma.size() != 4) throw InvalidInput("--gamma takes four values");
  auto params = CommonParams::dynamic(a.gamma[0], a.gamma[1], a.gamma[2], a.gamma[3], a.rho, a.kappa);
  params.beta1 = Vector::Constant(a.covariates, a.beta);
  params.beta2 = Vector::Constant(a.covariates, a.beta);
  SimulationOptions opts;
  opts.initial = {a.p1, a.p2};
  opts.covariate_dim = a.covariates;
  const auto panel =
      simulate_panel(params, HeterogeneityDist::from_name(a.dist), a.n, a.T, a.restricted, a.seed, opts);
  if (a.output.empty()) write_panel(panel, std::cout);
  else write_panel(panel, a.output);
  return kOk;
}

int do_fit(const RunConfig& cfg) {
  const auto lp = load_or_die(cfg.input);
  std::cerr << "resolved configuration:\n" << cfg.echo();
  const auto report = run(cfg, lp.panel);
  std::cout << report.text();
  if (!cfg.output.empty()) write_reports(report, cfg.output);
  return report.all_ok() ? kOk : kNotConverged;
}

int do_bootstrap(const RunConfig& cfg) {
  const auto lp = load_or_die(cfg.input);
  std::cerr << "resolved configuration:\n" << cfg.echo();
  const auto fit = fit_estimator(cfg, lp.panel);
  BootstrapOptions bo;
  bo.replicates = cfg.bootstrap;
  bo.seed = cfg.seed;
  const auto br = bootstrap_se(
      lp.panel,
      [&](const Panel& p) {
        const auto f = fit_estimator(cfg, p);
        if (!f.converged) throw NoInformation("replicate did not converge");
        return f.estimates;
      },
      bo);
  const Vector se = fit.se();
  std::printf("%-12s %14s %12s %12s\n", "parameter", "estimate", "se", "boot_se");
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    std::printf("%-12s %14.6f %12.6f %12.6f\n", fit.names[k].c_str(), fit.estimates[i], se[i],
                br.se.size() > i ? br.se[i] : std::nan(""));
  }
  std::printf("replicates used %d, dropped %d\n", br.used, br.dropped);
  if (br.warning) std::cerr << "warning: " << br.message << '\n';
  return fit.converged && !br.warning ? kOk : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic bivariate simultaneous logit: simulation, estimation and moment analysis"};
  app.require_subcommand(1);

  SimArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a panel and write it as CSV");
  simulate->add_option("--n", sim.n, "households");
  simulate->add_option("--T", sim.T, "periods after the initial one");
  simulate->add_option("--dist", sim.dist, "heterogeneity distribution")
      ->check(dist_name);
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--restricted", sim.restricted, "alpha2 = alpha1 + kappa (1) or independent (0)");
  simulate->add_option("--gamma", sim.gamma, "g11 g12 g21 g22")->expected(4);
  simulate->add_option("--rho", sim.rho);
  simulate->add_option("--kappa", sim.kappa);
  simulate->add_option("--covariates", sim.covariates, "regressors per spouse");
  simulate->add_option("--beta", sim.beta, "common slope for every regressor");
  simulate->add_option("--p1", sim.p1, "P(y1_0 = 1)");
  simulate->add_option("--p2", sim.p2, "P(y2_0 = 1)");
  simulate->add_option("--output", sim.output, "CSV path; stdout when omitted");

  RunConfig fit_flags;
  std::string fit_config, fit_estimator_name, fit_window;
  int fit_boot = -1;
  auto* fit = app.add_subcommand("fit", "estimate per group and window cell");
  add_run_flags(fit, fit_flags, fit_config, fit_estimator_name, fit_window);
  fit->add_option("--bootstrap", fit_boot, "household-resampling replicates per cell");

  RunConfig boot_flags;
  std::string boot_config, boot_estimator_name, boot_window;
  int boot_reps = 200;
  auto* boot = app.add_subcommand("bootstrap", "household-resampling standard errors for one estimator");
  add_run_flags(boot, boot_flags, boot_config, boot_estimator_name, boot_window);
  boot->add_option("--replicates", boot_reps);

  CountConfig count;
  std::uint64_t count_seed = 1;
  int count_restricted = 0, count_cov = 0;
  auto* cnt = app.add_subcommand("count-moments", "count valid moment conditions (prints n_tot / n_para / n_rho)");
  cnt->add_option("--T", count.T)->check(CLI::Range(1, 6));
  cnt->add_option("--restricted", count_restricted)->check(CLI::Range(0, 1));
  cnt->add_option("--covariates", count_cov)->check(CLI::Range(0, 1));
  cnt->add_option("--seed", count_seed);
  cnt->add_option("--param-draws", count.param_draws, "minimum stacked parameter draws");
  bool count_verbose = false;
  cnt->add_flag("--verbose", count_verbose, "floating-point rank diagnostics on stderr");

  std::string plim_dist = "all";
  int plim_T = 3;
  PlimOptions plim_opts;
  auto* plim = app.add_subcommand("plim-cre", "probability limits of the CRE estimator under misspecification");
  plim->add_option("--dist", plim_dist, "distribution name or 'all'")
      ->check(CLI::Validator([&](std::string& v) { return v == "all" ? std::string() : dist_name(v); }, "DIST", "dist"));
  plim->add_option("--T", plim_T);
  plim->add_option("--order", plim_opts.order, "initial quadrature order");
  plim->add_option("--starts", plim_opts.starts);

  int vm_draws = 100;
  std::uint64_t vm_seed = 1;
  double vm_tol = 1e-10;
  auto* vm = app.add_subcommand("validate-moments", "exact expectations of the closed-form T=3 moments");
  vm->add_option("--draws", vm_draws);
  vm->add_option("--seed", vm_seed);
  vm->add_option("--tol", vm_tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*simulate) return do_simulate(sim);
    if (*fit) return do_fit(resolve(fit, fit_flags, fit_config, fit_estimator_name, fit_window, fit_boot));
    if (*boot) return do_bootstrap(resolve(boot, boot_flags, boot_config, boot_estimator_name, boot_window, boot_reps));
    if (*cnt) {
      count.restricted = count_restricted != 0;
      count.with_covariates = count_cov != 0;
      const auto rep = count_moments(count, count_seed);
      std::cout << rep.table_row() << '\n';
      if (count_verbose)
        std::cerr << "parameter draws " << rep.para_draws << ", rho draws " << rep.rho_draws
                  << ", floating-point rank " << rep.numeric_rank << " (last signal " << rep.sv_last_signal
                  << ", first null " << rep.sv_first_null << ")\n";
      return kOk;
    }
    if (*plim) {
      const auto truth = CommonParams::dynamic(2.5, -1.5, -1.5, 2.5, 1.0, 2.0);
      std::vector<std::string> dists;
      if (plim_dist == "all") dists = {"correct", "discrete-normal", "asymmetric", "heteroskedastic", "very-heteroskedastic"};
      else dists = {plim_dist};
      bool ok = true;
      std::printf("%-22s %6s %6s %6s %6s %6s %6s\n", "distribution", "g11", "g12", "g21", "g22", "rho", "kappa");
      for (const auto& d : dists) {
        const auto r = cre_plim(truth, HeterogeneityDist::from_name(d), plim_T, plim_opts);
        ok = ok && r.converged;
        const Vector c = r.common();
        std::printf("%-22s %6.2f %6.2f %6.2f %6.2f %6.2f %6.2f%s\n", d.c_str(), c[0], c[1], c[2], c[3], c[4], c[5],
                    r.converged ? "" : "  (not converged)");
      }
      return ok ? kOk : kNotConverged;
    }
    if (*vm) {
      const auto rep = moment_validity_suite(vm_draws, vm_seed);
      std::printf("draws %d, worst relative expectation %.3e (moment %d, initial (%d,%d), alpha %g)\n", rep.draws,
                  rep.worst.max_rel, rep.worst.worst_moment, int(rep.worst.worst_initial.y1),
                  int(rep.worst.worst_initial.y2), rep.worst.worst_alpha);
      const bool pass = rep.worst.max_rel <= vm_tol;
      std::printf("%s\n", pass ? "valid" : "INVALID");
      return pass ? kOk : kNumerical;
    }
  } catch (const AmbiguousRank& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kOk;
}
