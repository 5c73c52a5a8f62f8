#pragma once

#include <chrono>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "qlcs/config.hpp"
#include "qlcs/csv.hpp"
#include "qlcs/greedy.hpp"
#include "qlcs/parallel.hpp"
#include "qlcs/ripprobe.hpp"
#include "qlcs/signals.hpp"
#include "qlcs/svg.hpp"
#include "qlcs/thresholding.hpp"

namespace qlcs {

// 2-D success-count table over (k, second axis); every cell records the seed
// its trials were derived from, so any cell can be re-run in isolation.
struct RateGrid {
  std::vector<int> ks;
  std::vector<double> second_axis;  // norms, or {0} when the axis is unused
  Eigen::MatrixXi successes;        // second_axis.size() x ks.size()
  Eigen::MatrixXi attempts;
  Eigen::MatrixXi solver_errors;
  std::vector<std::vector<std::uint64_t>> cell_seeds;
  double wall_seconds = 0.0;

  double rate(int axis2, int kidx) const {
    return attempts(axis2, kidx) > 0
               ? static_cast<double>(successes(axis2, kidx)) / attempts(axis2, kidx)
               : 0.0;
  }
};

namespace detail {

inline void init_grid(RateGrid& g, const std::vector<int>& ks, const std::vector<double>& axis2) {
  g.ks = ks;
  g.second_axis = axis2;
  const auto r = static_cast<Eigen::Index>(axis2.size());
  const auto c = static_cast<Eigen::Index>(ks.size());
  g.successes = Eigen::MatrixXi::Zero(r, c);
  g.attempts = Eigen::MatrixXi::Zero(r, c);
  g.solver_errors = Eigen::MatrixXi::Zero(r, c);
  g.cell_seeds.assign(axis2.size(), std::vector<std::uint64_t>(ks.size(), 0));
}

inline std::vector<double> norm_axis(const GridSpec& g) {
  std::vector<double> norms;
  if (g.norm_count == 1) {
    norms.push_back(g.norm_min);
    return norms;
  }
  for (int i = 0; i < g.norm_count; ++i) {
    const double t = static_cast<double>(i) / (g.norm_count - 1);
    norms.push_back(g.norm_spacing == "log"
                        ? g.norm_min * std::pow(g.norm_max / g.norm_min, t)
                        : g.norm_min + (g.norm_max - g.norm_min) * t);
  }
  return norms;
}

}  // namespace detail

inline void write_rate_grid_csv(const std::filesystem::path& path, const RateGrid& grid,
                                const std::string& schema, const std::string& metadata,
                                bool with_norm_column) {
  CsvWriter csv(path, schema, metadata,
                with_norm_column ? "k,norm,trials,successes,errors,rate,cell_seed"
                                 : "k,trials,successes,errors,rate,cell_seed");
  for (std::size_t c = 0; c < grid.ks.size(); ++c) {
    for (std::size_t r = 0; r < grid.second_axis.size(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const auto ci = static_cast<Eigen::Index>(c);
      std::ostringstream line;
      line << grid.ks[c] << ',';
      if (with_norm_column) line << fmt17(grid.second_axis[r]) << ',';
      line << grid.attempts(ri, ci) << ',' << grid.successes(ri, ci) << ','
           << grid.solver_errors(ri, ci) << ','
           << fmt17(grid.rate(static_cast<int>(r), static_cast<int>(c))) << ','
           << grid.cell_seeds[r][c];
      csv.row(line.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Greedy phase-retrieval rates vs sparsity.
// ---------------------------------------------------------------------------

inline RateGrid run_fig4(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RateGrid grid;
  std::vector<int> ks;
  for (int k = cfg.fig4.k_min; k <= cfg.fig4.k_max; ++k) ks.push_back(k);
  detail::init_grid(grid, ks, {0.0});

  struct Cell {
    int kidx;
    int trial;
  };
  std::vector<Cell> cells;
  for (std::size_t kidx = 0; kidx < ks.size(); ++kidx)
    for (int t = 0; t < cfg.trials; ++t) cells.push_back({static_cast<int>(kidx), t});

  std::vector<std::uint8_t> success(cells.size(), 0), error(cells.size(), 0);
  const int threads = cfg.threads > 0 ? cfg.threads : default_thread_count();

  for (std::size_t kidx = 0; kidx < ks.size(); ++kidx)
    grid.cell_seeds[0][kidx] = derive_seed(cfg.seed, 0xF4, static_cast<std::uint64_t>(ks[kidx]));

  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const int k = ks[static_cast<std::size_t>(cells[i].kidx)];
    const std::uint64_t base =
        derive_seed(grid.cell_seeds[0][static_cast<std::size_t>(cells[i].kidx)],
                    static_cast<std::uint64_t>(cells[i].trial));
    try {
      const auto op = make_operator(cfg.ensemble, derive_seed(base, 1));
      Rng rng(derive_seed(base, 2));
      Eigen::VectorXd xhat = sparse_gaussian_signal(cfg.ensemble.d, k, rng);
      xhat.normalize();
      GreedyConfig gcfg = cfg.greedy;
      gcfg.k_max = k;
      gcfg.seed = derive_seed(base, 3);
      gcfg.threads = 1;  // cells already run in parallel
      const auto trace = greedy_recover<double>(*op, op->evaluate(xhat), gcfg);
      if (phase_aligned_distance<double>(trace.iterates.back(), xhat) <=
          cfg.fig4.success_rel_tol * xhat.norm())
        success[i] = 1;
    } catch (const std::exception&) {
      error[i] = 1;
    }
  });

  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(cells[i].kidx);
    grid.attempts(0, c) += 1;
    grid.successes(0, c) += success[i];
    grid.solver_errors(0, c) += error[i];
  }
  grid.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return grid;
}

inline void write_fig4_outputs(const ExperimentConfig& cfg, const RateGrid& grid) {
  std::ostringstream meta;
  meta << "ensemble=" << ensemble_kind_name(cfg.ensemble.kind) << " d=" << cfg.ensemble.d
       << " n=" << cfg.ensemble.n << " p=" << fmt17(cfg.greedy.p) << " trials=" << cfg.trials
       << " seed=" << cfg.seed << " success_rel_tol=" << fmt17(cfg.fig4.success_rel_tol);
  write_rate_grid_csv(std::filesystem::path(cfg.out) / "greedy_rates.csv", grid, "greedy_rates",
                      meta.str(), false);
  Eigen::MatrixXd rates(1, static_cast<Eigen::Index>(grid.ks.size()));
  std::vector<std::string> xticks;
  for (std::size_t c = 0; c < grid.ks.size(); ++c) {
    rates(0, static_cast<Eigen::Index>(c)) = grid.rate(0, static_cast<int>(c));
    xticks.push_back(std::to_string(grid.ks[c]));
  }
  write_heatmap_svg(std::filesystem::path(cfg.out) / "greedy_rates.svg", rates,
                    "greedy recovery rate vs sparsity", "k", "", xticks, {});
}

// ---------------------------------------------------------------------------
// Iterative-thresholding recovery grids (soft and hard).
// ---------------------------------------------------------------------------

struct Fig6Result {
  RateGrid soft;
  RateGrid hard;
  // fixed-point self-consistency of converged soft runs, as a multiple of stop_tol
  double max_fp_residual_ratio = 0.0;
  int converged_soft_runs = 0;
  int diverged_soft_runs = 0;
};

inline std::vector<double> alpha_path(const AlphaRule& rule, double alpha0) {
  std::vector<double> alphas;
  double a = alpha0;
  for (int s = 0; s < rule.stages; ++s) {
    alphas.push_back(a);
    a *= rule.stage_shrink;
  }
  return alphas;
}

inline Fig6Result run_fig6(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Fig6Result result;
  std::vector<int> ks;
  for (int k = cfg.grid.k_min; k <= cfg.grid.k_max; ++k) ks.push_back(k);
  const std::vector<double> norms = detail::norm_axis(cfg.grid);
  detail::init_grid(result.soft, ks, norms);
  detail::init_grid(result.hard, ks, norms);

  struct Cell {
    int kidx, nidx, trial;
  };
  std::vector<Cell> cells;
  for (std::size_t kidx = 0; kidx < ks.size(); ++kidx)
    for (std::size_t nidx = 0; nidx < norms.size(); ++nidx)
      for (int t = 0; t < cfg.trials; ++t)
        cells.push_back({static_cast<int>(kidx), static_cast<int>(nidx), t});

  for (std::size_t kidx = 0; kidx < ks.size(); ++kidx)
    for (std::size_t nidx = 0; nidx < norms.size(); ++nidx) {
      const std::uint64_t s = derive_seed(cfg.seed, 0xF6, static_cast<std::uint64_t>(ks[kidx]),
                                          static_cast<std::uint64_t>(nidx));
      result.soft.cell_seeds[nidx][kidx] = s;
      result.hard.cell_seeds[nidx][kidx] = s;
    }

  std::vector<std::uint8_t> soft_ok(cells.size(), 0), hard_ok(cells.size(), 0);
  std::vector<std::uint8_t> soft_err(cells.size(), 0), hard_err(cells.size(), 0);
  std::vector<std::uint8_t> soft_conv(cells.size(), 0), soft_div(cells.size(), 0);
  std::vector<double> fp_ratio(cells.size(), 0.0);

  const int threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const int k = ks[static_cast<std::size_t>(cell.kidx)];
    const double norm = norms[static_cast<std::size_t>(cell.nidx)];
    const std::uint64_t base =
        derive_seed(result.soft.cell_seeds[static_cast<std::size_t>(cell.nidx)]
                                          [static_cast<std::size_t>(cell.kidx)],
                    static_cast<std::uint64_t>(cell.trial));
    const double tol = cfg.fig6.success_rel_tol * std::max(norm, cfg.fig6.success_floor);

    Eigen::VectorXd xhat;
    std::unique_ptr<QuasiLinearOperator<double>> op;
    try {
      op = make_operator(cfg.ensemble, derive_seed(base, 1));
      Rng rng(derive_seed(base, 2));
      xhat = scaled_to_norm(sparse_gaussian_signal(cfg.ensemble.d, k, rng), norm);
    } catch (const std::exception&) {
      soft_err[i] = hard_err[i] = 1;
      return;
    }
    const Eigen::VectorXd b = op->evaluate(xhat);

    try {  // soft thresholding with the alpha rule
      const double anchor =
          (op->factor(Eigen::VectorXd::Zero(cfg.ensemble.d)).transpose() * b).cwiseAbs().maxCoeff();
      const double alpha0 = std::max(cfg.alpha_rule.factor * anchor, 1e-300);
      ISTConfig icfg = cfg.ist;
      const auto path = alpha_continuation(*op, b, alpha_path(cfg.alpha_rule, alpha0), icfg);
      const ThresholdingReport& last = path.stages.back();
      if (!last.diverged && (last.final - xhat).norm() <= tol) soft_ok[i] = 1;
      if (last.diverged) soft_div[i] = 1;
      if (last.converged && !last.diverged) {
        soft_conv[i] = 1;
        fp_ratio[i] = last.fixed_point_residual / std::max(cfg.ist.stop_tol, 1e-300);
      }
    } catch (const std::exception&) {
      soft_err[i] = 1;
    }

    try {  // hard thresholding at the cell's sparsity
      IHTConfig hcfg = cfg.iht;
      hcfg.k = k;
      const auto rep = iht(*op, b, hcfg);
      if ((rep.final - xhat).norm() <= tol) hard_ok[i] = 1;
    } catch (const std::exception&) {
      hard_err[i] = 1;
    }
  });

  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(cells[i].nidx);
    const auto c = static_cast<Eigen::Index>(cells[i].kidx);
    result.soft.attempts(r, c) += 1;
    result.hard.attempts(r, c) += 1;
    result.soft.successes(r, c) += soft_ok[i];
    result.hard.successes(r, c) += hard_ok[i];
    result.soft.solver_errors(r, c) += soft_err[i];
    result.hard.solver_errors(r, c) += hard_err[i];
    result.converged_soft_runs += soft_conv[i];
    result.diverged_soft_runs += soft_div[i];
    result.max_fp_residual_ratio = std::max(result.max_fp_residual_ratio, fp_ratio[i]);
  }
  result.soft.wall_seconds = result.hard.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

inline void write_fig6_outputs(const ExperimentConfig& cfg, const Fig6Result& result) {
  std::ostringstream meta;
  meta << "ensemble=" << ensemble_kind_name(cfg.ensemble.kind) << " d=" << cfg.ensemble.d
       << " n=" << cfg.ensemble.n << " epsilon=" << fmt17(cfg.ensemble.epsilon)
       << " trials=" << cfg.trials << " seed=" << cfg.seed
       << " alpha_factor=" << fmt17(cfg.alpha_rule.factor) << " alpha_stages=" << cfg.alpha_rule.stages
       << " success_rel_tol=" << fmt17(cfg.fig6.success_rel_tol);
  const std::filesystem::path out(cfg.out);
  write_rate_grid_csv(out / "soft.csv", result.soft, "threshold_grid", "solver=soft " + meta.str(), true);
  write_rate_grid_csv(out / "hard.csv", result.hard, "threshold_grid", "solver=hard " + meta.str(), true);

  for (const char* which : {"soft", "hard"}) {
    const RateGrid& g = std::string(which) == "soft" ? result.soft : result.hard;
    Eigen::MatrixXd rates(static_cast<Eigen::Index>(g.second_axis.size()),
                          static_cast<Eigen::Index>(g.ks.size()));
    std::vector<std::string> xt, yt;
    for (std::size_t c = 0; c < g.ks.size(); ++c) xt.push_back(std::to_string(g.ks[c]));
    for (std::size_t r = 0; r < g.second_axis.size(); ++r) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3g", g.second_axis[r]);
      yt.push_back(buf);
      for (std::size_t c = 0; c < g.ks.size(); ++c)
        rates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            g.rate(static_cast<int>(r), static_cast<int>(c));
    }
    write_heatmap_svg(out / (std::string(which) + ".svg"), rates,
                      std::string("recovery rate, ") + which + "-thresholding", "k", "||xhat||", xt, yt);
  }
}

// ---------------------------------------------------------------------------
// Asteroseismology demo: sparse pulsation-pattern recovery.
// ---------------------------------------------------------------------------

struct AsteroCaseResult {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<Eigen::Index> true_support;
  Eigen::VectorXd xhat;
  GreedyTrace<double> trace;
  bool success = false;
};

struct AsteroResult {
  std::vector<AsteroCaseResult> cases;
  int sparse2_hits = 0;
  int sparse3_hits = 0;
  int decay_hits = 0;
  int seeds = 0;
  double wall_seconds = 0.0;
};

inline AsteroResult run_astero(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  AsteroResult result;
  result.seeds = cfg.astero.seeds;
  const auto op = make_operator(cfg.ensemble, 0);

  struct Job {
    std::string name;
    Eigen::Index k_steps;
    int seed_index;
  };
  std::vector<Job> jobs;
  for (int s = 0; s < cfg.astero.seeds; ++s) {
    jobs.push_back({"sparse2", 2, s});
    jobs.push_back({"sparse3", 3, s});
    jobs.push_back({"decay", 3, s});
  }
  std::vector<AsteroCaseResult> outcomes(jobs.size());

  const int threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    AsteroCaseResult r;
    r.name = job.name;
    r.seed = derive_seed(cfg.seed, 0xA57E0, static_cast<std::uint64_t>(job.seed_index),
                         job.name == "sparse2" ? 2 : (job.name == "sparse3" ? 3 : 0));
    Rng rng(r.seed);

    Eigen::VectorXd xhat = Eigen::VectorXd::Zero(cfg.ensemble.d);
    if (job.name == "decay") {
      // full low-frequency band with geometrically decaying magnitudes
      double mag = 1.0;
      for (Eigen::Index i2 = 0; i2 < std::min<Eigen::Index>(12, cfg.ensemble.d); ++i2) {
        xhat[i2] = mag * (rng.uniform01() < 0.5 ? -1.0 : 1.0);
        mag *= cfg.astero.decay_ratio;
      }
      const auto rearr = rearrange<double>(xhat);
      r.true_support.assign(rearr.permutation.begin(), rearr.permutation.begin() + 3);
      std::sort(r.true_support.begin(), r.true_support.end());
    } else {
      const Eigen::Index k = job.name == "sparse2" ? 2 : 3;
      r.true_support = rng.sample_support(cfg.astero.freq_max, k);
      for (const Eigen::Index idx : r.true_support)
        xhat[idx] = (cfg.astero.amp_min + cfg.astero.amp_span * rng.uniform01()) *
                    (rng.uniform01() < 0.5 ? -1.0 : 1.0);
    }
    r.xhat = xhat;

    GreedyConfig gcfg = cfg.greedy;
    gcfg.k_max = job.k_steps;
    gcfg.seed = derive_seed(r.seed, 1);
    gcfg.threads = 1;
    try {
      r.trace = greedy_recover<double>(*op, op->evaluate(xhat), gcfg);
      r.success = !r.trace.supports.empty() && r.trace.supports.back() == r.true_support;
    } catch (const std::exception&) {
      r.success = false;
    }
    outcomes[i] = std::move(r);
  });

  for (auto& r : outcomes) {
    if (r.success) {
      if (r.name == "sparse2") ++result.sparse2_hits;
      if (r.name == "sparse3") ++result.sparse3_hits;
      if (r.name == "decay") ++result.decay_hits;
    }
    result.cases.push_back(std::move(r));
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

inline void write_astero_outputs(const ExperimentConfig& cfg, const AsteroResult& result) {
  const std::filesystem::path out(cfg.out);
  std::ostringstream meta;
  meta << "d=" << cfg.ensemble.d << " n=" << cfg.ensemble.n << " theta=" << fmt17(cfg.ensemble.theta)
       << " seeds=" << cfg.astero.seeds << " seed=" << cfg.seed;

  CsvWriter summary(out / "astero_summary.csv", "astero_summary", meta.str(),
                    "case,seed,success,steps,true_support,found_support");
  CsvWriter coeffs(out / "astero_steps.csv", "astero_steps", meta.str(), "case,seed,step,index,value");
  CsvWriter contour(out / "astero_contour.csv", "astero_contour", meta.str(),
                    "case,seed,step,phi,u_true,u_recon");

  const double theta = cfg.ensemble.theta;
  const auto contour_value = [&](const Eigen::VectorXd& x, double phi) {
    double u = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) u += x[i] * std::sin((2.0 * EIGEN_PI * phi + theta) * static_cast<double>(i + 1));
    return u;
  };

  for (const auto& r : result.cases) {
    std::ostringstream sup, found;
    for (std::size_t i = 0; i < r.true_support.size(); ++i)
      sup << (i ? ";" : "") << r.true_support[i];
    if (!r.trace.supports.empty())
      for (std::size_t i = 0; i < r.trace.supports.back().size(); ++i)
        found << (i ? ";" : "") << r.trace.supports.back()[i];
    std::ostringstream line;
    line << r.name << ',' << r.seed << ',' << (r.success ? 1 : 0) << ',' << r.trace.supports.size()
         << ',' << sup.str() << ',' << found.str();
    summary.row(line.str());

    for (std::size_t step = 0; step < r.trace.iterates.size(); ++step) {
      const Eigen::VectorXd& x = r.trace.iterates[step];
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;
        std::ostringstream row;
        row << r.name << ',' << r.seed << ',' << step + 1 << ',' << i << ',' << fmt17(x[i]);
        coeffs.row(row.str());
      }
    }

    for (int g = 0; g < cfg.astero.contour_points; ++g) {
      const double phi = -1.0 + 2.0 * g / (cfg.astero.contour_points - 1);
      for (std::size_t step = 0; step < r.trace.iterates.size(); ++step) {
        std::ostringstream row;
        row << r.name << ',' << r.seed << ',' << step + 1 << ',' << fmt17(phi) << ','
            << fmt17(contour_value(r.xhat, phi)) << ','
            << fmt17(contour_value(r.trace.iterates[step], phi));
        contour.row(row.str());
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Probe suite: empirical isometry constants and the Fig. 1 rate maps.
// ---------------------------------------------------------------------------

inline void write_rate_map_csv(const std::filesystem::path& path, const RateMap& map,
                               const std::string& metadata) {
  std::ostringstream meta;
  meta << metadata << " k=" << map.spec.k << " threshold=" << fmt17(map.spec.threshold)
       << " draws=" << map.spec.draws << " p=" << fmt17(map.spec.p)
       << " xhat_angle_deg=" << fmt17(map.spec.xhat_angle_deg);
  if (map.spec.k == 3) meta << " xhat_polar_deg=" << fmt17(map.spec.xhat_polar_deg);
  CsvWriter csv(path, "rate_map", meta.str(), "polar_deg,azimuth_deg,rate,mean_ratio");
  for (Eigen::Index r = 0; r < map.rates.rows(); ++r)
    for (Eigen::Index c = 0; c < map.rates.cols(); ++c) {
      std::ostringstream row;
      row << fmt17(map.angle2_deg[static_cast<std::size_t>(r)]) << ','
          << fmt17(map.angle1_deg[static_cast<std::size_t>(c)]) << ',' << fmt17(map.rates(r, c))
          << ',' << fmt17(map.mean_ratio(r, c));
      csv.row(row.str());
    }
}

struct ProbeSuiteResult {
  std::vector<ProbeResult> probes;
  std::vector<RateMap> maps;
  double wall_seconds = 0.0;
};

inline const char* probe_condition_name(ProbeCondition c) {
  switch (c) {
    case ProbeCondition::linear_rip: return "linear_rip";
    case ProbeCondition::eq1: return "eq1";
    case ProbeCondition::eq1b: return "eq1b";
    case ProbeCondition::f_rip: return "f_rip";
    case ProbeCondition::lipschitz_F: return "lipschitz_F";
    case ProbeCondition::tail_L: return "tail_L";
  }
  return "?";
}

inline ProbeSuiteResult run_probe_suite(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ProbeSuiteResult result;
  const Eigen::Index d = cfg.ensemble.d, n = cfg.ensemble.n, k = cfg.probe.k;
  const int trials = cfg.probe.trials;

  // linear RIP of the scaled Gaussian ensemble at orders k and 2k
  const Eigen::MatrixXd a = make_gaussian(n, d, derive_seed(cfg.seed, 1), GaussianNormalize::by_sqrt_n);
  result.probes.push_back(probe_linear_rip(a, k, trials, derive_seed(cfg.seed, 2)));
  result.probes.push_back(probe_linear_rip(a, 2 * k, trials, derive_seed(cfg.seed, 3)));

  // eq1/eq1b on the rank-1 phase ensemble with a decaying anchor signal
  Rank1PhaseOperator<double> phase(n, d, derive_seed(cfg.seed, 4));
  Rng rng(derive_seed(cfg.seed, 5));
  Eigen::VectorXd xhat = sparse_decaying_signal(d, k, 0.5, rng);
  xhat.normalize();
  result.probes.push_back(probe_eq1(phase, xhat, k, cfg.fig1.p, trials, 0.0, derive_seed(cfg.seed, 6)));
  result.probes.push_back(probe_eq1b(phase, xhat, k, cfg.fig1.p, trials, 0.0, derive_seed(cfg.seed, 7)));

  // factor RIP and factor Lipschitz constant of the perturbed ensemble
  LipschitzPerturbedOperator perturbed(
      make_gaussian(std::max<Eigen::Index>(n, 20), d, derive_seed(cfg.seed, 8), GaussianNormalize::by_sqrt_n),
      Eigen::MatrixXd::Identity(std::max<Eigen::Index>(n, 20), d), 0.1,
      Eigen::VectorXd::Zero(d));
  result.probes.push_back(probe_f_rip(perturbed, k, trials, derive_seed(cfg.seed, 9)));
  Eigen::VectorXd near_sparse = xhat + 0.01 * sparse_decaying_signal(d, k, 0.5, rng);
  const auto lip = probe_lipschitz_F(perturbed, near_sparse, k, trials, derive_seed(cfg.seed, 10));
  result.probes.push_back(lip.factor_lipschitz);
  result.probes.push_back(lip.tail_euclidean);
  result.probes.push_back(lip.tail_hs);

  // Fig. 1 rate maps at the committed threshold sweep
  const OperatorFactory factory = [&](std::uint64_t s) {
    return std::unique_ptr<QuasiLinearOperator<double>>(new Rank1PhaseOperator<double>(n, d, s));
  };
  for (const Eigen::Index kk : {Eigen::Index(2), Eigen::Index(3)}) {
    for (std::size_t ti = 0; ti < cfg.fig1.thresholds.size(); ++ti) {
      Fig1Spec spec;
      spec.d = d;
      spec.n = n;
      spec.k = kk;
      spec.p = cfg.fig1.p;
      spec.angular_points = cfg.fig1.angular_points;
      spec.polar_points = cfg.fig1.polar_points;
      spec.draws = cfg.fig1.draws;
      spec.threshold = cfg.fig1.thresholds[ti];
      spec.xhat_angle_deg = cfg.fig1.xhat_angle_deg;
      spec.xhat_polar_deg = cfg.fig1.xhat_polar_deg;
      spec.seed = derive_seed(cfg.seed, 11, static_cast<std::uint64_t>(kk), ti);
      spec.threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
      result.maps.push_back(build_rate_map(factory, spec));
    }
  }

  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

inline void write_probe_suite_outputs(const ExperimentConfig& cfg, const ProbeSuiteResult& result) {
  const std::filesystem::path out(cfg.out);
  std::ostringstream meta;
  meta << "d=" << cfg.ensemble.d << " n=" << cfg.ensemble.n << " k=" << cfg.probe.k
       << " trials=" << cfg.probe.trials << " seed=" << cfg.seed;
  CsvWriter csv(out / "probe_results.csv", "probe_results", meta.str(),
                "condition,alpha_hat,beta_hat,success_rate,samples,skipped,defined,extra,seed");
  for (const auto& p : result.probes) {
    std::ostringstream row;
    row << probe_condition_name(p.condition) << ',' << fmt17(p.alpha_hat) << ',' << fmt17(p.beta_hat)
        << ',' << fmt17(p.success_rate) << ',' << p.samples << ',' << p.skipped << ','
        << (p.defined ? 1 : 0) << ',' << fmt17(p.extra) << ',' << p.seed;
    csv.row(row.str());
  }

  for (const auto& map : result.maps) {
    std::ostringstream name;
    name << "ratemap_k" << map.spec.k << "_t" << fmt17(map.spec.threshold);
    std::string base = name.str();
    for (auto& ch : base)
      if (ch == '.') ch = 'p';
    write_rate_map_csv(out / (base + ".csv"), map, meta.str());
    std::vector<std::string> xt;
    for (std::size_t i = 0; i < map.angle1_deg.size(); i += std::max<std::size_t>(1, map.angle1_deg.size() / 12))
      xt.push_back(std::to_string(static_cast<int>(map.angle1_deg[i])));
    write_heatmap_svg(out / (base + ".svg"), map.rates, "lower-bound success rate (" + base + ")",
                      "azimuth of y (deg)", map.spec.k == 3 ? "polar of y (deg)" : "", {}, {});
  }
}

}  // namespace qlcs
