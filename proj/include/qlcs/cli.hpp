#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qlcs/experiments.hpp"

namespace qlcs {

namespace detail_cli {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

inline void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment config file (JSON)")->required();
  cmd->add_option("--override", o.overrides, "override a config key, e.g. --override trials=2");
  cmd->add_option("--seed", o.seed, "override the base seed");
  cmd->add_option("--out", o.out, "override the output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
}

inline ExperimentConfig load(const CommonOpts& o) {
  nlohmann::json j = load_config_json(o.config_path);
  for (const auto& ov : o.overrides) apply_override(j, ov);
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["out"] = *o.out;
  if (o.threads) j["threads"] = *o.threads;
  return parse_config(j);
}

inline Eigen::VectorXd single_run_signal(const ExperimentConfig& cfg, Rng& rng) {
  Eigen::VectorXd x = cfg.single.signal == "sparse_decaying"
                          ? sparse_decaying_signal(cfg.ensemble.d, cfg.single.k,
                                                   cfg.single.decay_ratio, rng)
                          : sparse_gaussian_signal(cfg.ensemble.d, cfg.single.k, rng);
  return scaled_to_norm(std::move(x), cfg.single.norm);
}

inline int run_greedy_single(const ExperimentConfig& cfg) {
  const auto op = make_operator(cfg.ensemble, 0);
  Rng rng(derive_seed(cfg.seed, 0x517));
  const Eigen::VectorXd xhat = single_run_signal(cfg, rng);
  const Eigen::VectorXd b = op->evaluate(xhat);
  GreedyConfig gcfg = cfg.greedy;
  gcfg.seed = derive_seed(cfg.seed, 1);
  if (gcfg.threads <= 0) gcfg.threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
  const auto trace = greedy_recover<double>(*op, b, gcfg);

  CsvWriter csv(std::filesystem::path(cfg.out) / "greedy_trace.csv", "greedy_trace",
                "d=" + std::to_string(cfg.ensemble.d) + " n=" + std::to_string(cfg.ensemble.n) +
                    " seed=" + std::to_string(cfg.seed),
                "step,index_added,residual_lp,error,phase_error");
  std::vector<Eigen::Index> prev;
  for (std::size_t j = 0; j < trace.supports.size(); ++j) {
    Eigen::Index added = -1;
    for (const Eigen::Index i : trace.supports[j])
      if (std::find(prev.begin(), prev.end(), i) == prev.end()) added = i;
    prev = trace.supports[j];
    std::ostringstream row;
    row << j + 1 << ',' << added << ',' << fmt17(trace.residual_lp[j]) << ','
        << fmt17((trace.iterates[j] - xhat).norm()) << ','
        << fmt17(phase_aligned_distance<double>(trace.iterates[j], xhat));
    csv.row(row.str());
  }
  std::printf("greedy: %zu steps, final residual %.3e, phase-aligned error %.3e\n",
              trace.supports.size(), trace.residual_lp.back(),
              phase_aligned_distance<double>(trace.iterates.back(), xhat));
  return 0;
}

inline void write_threshold_report(const ExperimentConfig& cfg, const ThresholdingReport& rep,
                                   const char* name, const Eigen::VectorXd& xhat) {
  CsvWriter csv(std::filesystem::path(cfg.out) / (std::string(name) + "_report.csv"),
                std::string(name) + "_report",
                "d=" + std::to_string(cfg.ensemble.d) + " n=" + std::to_string(cfg.ensemble.n) +
                    " seed=" + std::to_string(cfg.seed),
                "iteration,objective");
  for (std::size_t i = 0; i < rep.objective_history.size(); ++i) {
    std::ostringstream row;
    row << i + 1 << ',' << fmt17(rep.objective_history[i]);
    csv.row(row.str());
  }
  std::printf("%s: %d iterations, converged=%d diverged=%d, error %.3e, fp residual %.3e\n", name,
              rep.iterations, rep.converged ? 1 : 0, rep.diverged ? 1 : 0, (rep.final - xhat).norm(),
              rep.fixed_point_residual);
}

inline int run_iht_single(const ExperimentConfig& cfg) {
  const auto op = make_operator(cfg.ensemble, 0);
  Rng rng(derive_seed(cfg.seed, 0x517));
  const Eigen::VectorXd xhat = single_run_signal(cfg, rng);
  IHTConfig hcfg = cfg.iht;
  hcfg.k = cfg.single.k;
  const auto rep = iht(*op, op->evaluate(xhat), hcfg);
  write_threshold_report(cfg, rep, "iht", xhat);
  return rep.diverged ? 2 : 0;
}

inline int run_ist_single(const ExperimentConfig& cfg) {
  const auto op = make_operator(cfg.ensemble, 0);
  Rng rng(derive_seed(cfg.seed, 0x517));
  const Eigen::VectorXd xhat = single_run_signal(cfg, rng);
  const Eigen::VectorXd b = op->evaluate(xhat);
  const double anchor =
      (op->factor(Eigen::VectorXd::Zero(cfg.ensemble.d)).transpose() * b).cwiseAbs().maxCoeff();
  const double alpha0 = std::max(cfg.alpha_rule.factor * anchor, 1e-300);
  const auto path = alpha_continuation(*op, b, alpha_path(cfg.alpha_rule, alpha0), cfg.ist);
  write_threshold_report(cfg, path.stages.back(), "ist", xhat);
  return path.stages.back().diverged ? 2 : 0;
}

inline int run_grid_cmd(const ExperimentConfig& cfg) {
  if (cfg.experiment == "fig4_phase_greedy") {
    const RateGrid grid = run_fig4(cfg);
    write_fig4_outputs(cfg, grid);
    std::printf("fig4 grid done in %.1fs -> %s\n", grid.wall_seconds, cfg.out.c_str());
    return 0;
  }
  if (cfg.experiment == "fig6_threshold_grid") {
    const Fig6Result result = run_fig6(cfg);
    write_fig6_outputs(cfg, result);
    std::printf("fig6 grids done in %.1fs -> %s (soft converged runs: %d, diverged: %d)\n",
                result.soft.wall_seconds, cfg.out.c_str(), result.converged_soft_runs,
                result.diverged_soft_runs);
    return 0;
  }
  throw ConfigError("grid subcommand needs experiment=fig4_phase_greedy or fig6_threshold_grid");
}

inline int run_probe_cmd(const ExperimentConfig& cfg) {
  if (cfg.experiment != "probe_suite" && cfg.experiment != "fig1_ratemap")
    throw ConfigError("probe subcommand needs experiment=probe_suite or fig1_ratemap");
  const ProbeSuiteResult result = run_probe_suite(cfg);
  write_probe_suite_outputs(cfg, result);
  std::printf("probe suite done in %.1fs -> %s (%zu probes, %zu maps)\n", result.wall_seconds,
              cfg.out.c_str(), result.probes.size(), result.maps.size());
  return 0;
}

inline int run_astero_cmd(const ExperimentConfig& cfg) {
  if (cfg.experiment != "astero_demo")
    throw ConfigError("astero subcommand needs experiment=astero_demo");
  const AsteroResult result = run_astero(cfg);
  write_astero_outputs(cfg, result);
  std::printf("astero demo done in %.1fs -> %s (2-sparse %d/%d, 3-sparse %d/%d, decay %d/%d)\n",
              result.wall_seconds, cfg.out.c_str(), result.sparse2_hits, result.seeds,
              result.sparse3_hits, result.seeds, result.decay_hits, result.seeds);
  return 0;
}

}  // namespace detail_cli

inline int cli_run(const std::vector<std::string>& args) {
  CLI::App app{"quasi-linear compressed sensing experiments"};
  app.require_subcommand(1);

  detail_cli::CommonOpts opts;
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const ExperimentConfig&);
  };
  const std::vector<Sub> subs = {
      {"probe", "run the isometry probe suite / rate maps", detail_cli::run_probe_cmd},
      {"greedy", "single greedy recovery run", detail_cli::run_greedy_single},
      {"iht", "single iterative hard-thresholding run", detail_cli::run_iht_single},
      {"ist", "single iterative soft-thresholding run", detail_cli::run_ist_single},
      {"grid", "recovery-rate grids (fig4 / fig6 experiments)", detail_cli::run_grid_cmd},
      {"astero", "asteroseismology reconstruction demo", detail_cli::run_astero_cmd},
  };
  std::vector<std::pair<CLI::App*, int (*)(const ExperimentConfig&)>> dispatch;
  for (const auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    detail_cli::add_common(cmd, opts);
    dispatch.emplace_back(cmd, s.fn);
  }

  std::vector<const char*> argv;
  argv.push_back("qlcs");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), const_cast<char**>(argv.data()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const ExperimentConfig cfg = detail_cli::load(opts);
    for (const auto& [cmd, fn] : dispatch)
      if (cmd->parsed()) return fn(cfg);
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace qlcs
