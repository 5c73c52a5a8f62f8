#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "qlcs/core.hpp"
#include "qlcs/linalg.hpp"
#include "qlcs/operators.hpp"
#include "qlcs/rng.hpp"

namespace qlcs {

// Componentwise soft-thresholding: shrink toward zero by alpha/2, zeroing
// entries below that magnitude (the proximal map of (alpha/2)|t| per entry,
// matching the relaxed objective ||F(x)x - b||^2 + alpha ||x||_1).
inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("soft_threshold: alpha must be >= 0");
  const double half = alpha / 2.0;
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] >= half)
      out[i] = x[i] - half;
    else if (x[i] <= -half)
      out[i] = x[i] + half;
    else
      out[i] = 0.0;
  }
  return out;
}

struct IHTConfig {
  Eigen::Index k = 1;
  double mu = 0.0;  // gradient scale 1/mu; 0 selects the refreshed spectral-norm rule
  int max_iters = 1000;
  Eigen::VectorXd x0;  // empty = zero start
  double stop_tol = 1e-10;
  int mu_refresh_every = 10;
};

struct ISTConfig {
  double alpha = 0.1;  // relaxation parameter
  int max_iters = 1000;
  Eigen::VectorXd x0;  // empty = zero start
  double stop_tol = 1e-10;
  double divergence_factor = 1e6;  // abort when ||x|| exceeds this times (1 + ||b||)
};

struct ThresholdingReport {
  std::vector<Eigen::VectorXd> iterates;  // every iterate up to 1000, every 10th after
  Eigen::VectorXd final;
  std::vector<double> objective_history;  // J_alpha for ist, squared residual for iht
  std::vector<double> contraction_estimates;
  double fixed_point_residual = 0.0;
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
};

inline double objective_J(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& b,
                          double alpha, const Eigen::VectorXd& x) {
  if (b.size() != op.rows()) throw std::invalid_argument("objective_J: data length mismatch");
  return (op.factor_apply(x, x) - b).squaredNorm() + alpha * x.cwiseAbs().sum();
}

// Surrogate J^S(x, a) = ||F(a)x-b||^2 + alpha||x||_1 + ||x-a||^2 - ||F(a)x - F(a)a||^2;
// J^S(x, x) = J(x).
inline double surrogate_J(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& b,
                          double alpha, const Eigen::VectorXd& x, const Eigen::VectorXd& a) {
  const Eigen::VectorXd fax = op.factor_apply(a, x);
  const Eigen::VectorXd faa = op.factor_apply(a, a);
  return (fax - b).squaredNorm() + alpha * x.cwiseAbs().sum() + (x - a).squaredNorm() -
         (fax - faa).squaredNorm();
}

// One soft-thresholded surrogate step: S_alpha((I - F(x)^*F(x)) x + F(x)^* b).
inline Eigen::VectorXd fixed_point_map(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& b,
                                       double alpha, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd f = op.factor(x);
  return soft_threshold(x - f.transpose() * (f * x - b), alpha);
}

namespace detail {

inline void record_iterate(ThresholdingReport& report, const Eigen::VectorXd& x, int iteration) {
  if (iteration <= 1000 || iteration % 10 == 0) report.iterates.push_back(x);
}

}  // namespace detail

// Iterative hard-thresholding x <- (x + (1/mu) F(x)^*(b - F(x)x))_{{k}}.
inline ThresholdingReport iht(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& b,
                              const IHTConfig& cfg) {
  if (!op.supports_factor()) throw std::invalid_argument("iht: operator does not expose a factor");
  if (b.size() != op.rows()) throw std::invalid_argument("iht: data length mismatch");
  if (cfg.mu < 0.0) throw std::invalid_argument("iht: mu must be positive (or 0 for the refresh rule)");
  if (cfg.k < 1 || cfg.k > op.cols()) throw std::invalid_argument("iht: k out of range");

  ThresholdingReport report;
  Eigen::VectorXd x = cfg.x0.size() == 0 ? Eigen::VectorXd::Zero(op.cols()) : cfg.x0;
  if (x.size() != op.cols()) throw std::invalid_argument("iht: x0 length mismatch");

  double mu = cfg.mu;
  double prev_step = -1.0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::MatrixXd f = op.factor(x);
    const Eigen::VectorXd residual = b - f * x;
    report.objective_history.push_back(residual.squaredNorm());
    if (cfg.mu == 0.0 && it % cfg.mu_refresh_every == 0) {
      const double sn = spectral_norm<double>(f).value;
      mu = std::max(sn * sn, 1e-12);
    }
    const Eigen::VectorXd next = best_k_approx<double>(x + f.transpose() * residual / mu, cfg.k);
    const double step = (next - x).norm();
    if (prev_step > 0.0) report.contraction_estimates.push_back(step / prev_step);
    prev_step = step;
    x = next;
    report.iterations = it + 1;
    detail::record_iterate(report, x, report.iterations);
    if (step <= cfg.stop_tol) {
      report.converged = true;
      break;
    }
  }
  report.final = x;
  return report;
}

// Quasi-linear iterative soft-thresholding (surrogate-functional scheme):
// x <- S_alpha((I - F(x)^*F(x)) x + F(x)^* b).
inline ThresholdingReport ist(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& b,
                              const ISTConfig& cfg) {
  if (!op.supports_factor()) throw std::invalid_argument("ist: operator does not expose a factor");
  if (b.size() != op.rows()) throw std::invalid_argument("ist: data length mismatch");
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("ist: alpha must be positive");

  ThresholdingReport report;
  Eigen::VectorXd x = cfg.x0.size() == 0 ? Eigen::VectorXd::Zero(op.cols()) : cfg.x0;
  if (x.size() != op.cols()) throw std::invalid_argument("ist: x0 length mismatch");

  const double blowup = cfg.divergence_factor * (1.0 + b.norm());
  double prev_step = -1.0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::MatrixXd f = op.factor(x);
    const Eigen::VectorXd next = soft_threshold(x - f.transpose() * (f * x - b), cfg.alpha);
    const double step = (next - x).norm();
    if (prev_step > 0.0) report.contraction_estimates.push_back(step / prev_step);
    prev_step = step;
    x = next;
    report.iterations = it + 1;
    report.objective_history.push_back(objective_J(op, b, cfg.alpha, x));
    detail::record_iterate(report, x, report.iterations);
    if (x.norm() > blowup) {
      report.diverged = true;
      break;
    }
    if (step <= cfg.stop_tol) {
      report.converged = true;
      break;
    }
  }
  report.final = x;
  if (!report.diverged) report.fixed_point_residual = (fixed_point_map(op, b, cfg.alpha, x) - x).norm();
  return report;
}

struct ContinuationResult {
  std::vector<ThresholdingReport> stages;
  std::vector<double> l1_norms;       // ||x_alpha||_1 per stage
  std::vector<double> residual_norms; // ||F(x_alpha)x_alpha - b|| per stage
  bool l1_bound_satisfied = true;     // against the supplied feasible point, if any
};

// Runs ist along a decreasing alpha path, warm-starting each stage at the
// previous limit. When a feasible xhat with F(xhat)xhat = b is supplied, the
// l1 norms along the path are checked against ||xhat||_1.
inline ContinuationResult alpha_continuation(const QuasiLinearOperator<double>& op,
                                             const Eigen::VectorXd& b, const std::vector<double>& alphas,
                                             ISTConfig cfg, const Eigen::VectorXd* feasible = nullptr,
                                             double l1_slack = 1e-8) {
  if (alphas.empty()) throw std::invalid_argument("alpha_continuation: empty alpha path");
  for (std::size_t i = 0; i + 1 < alphas.size(); ++i)
    if (!(alphas[i] > alphas[i + 1]))
      throw std::invalid_argument("alpha_continuation: alphas must be strictly decreasing");

  ContinuationResult result;
  const double feasible_l1 = feasible != nullptr ? feasible->cwiseAbs().sum() : 0.0;
  for (const double alpha : alphas) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha_continuation: alphas must be positive");
    cfg.alpha = alpha;
    ThresholdingReport report = ist(op, b, cfg);
    cfg.x0 = report.final;
    const double l1 = report.final.cwiseAbs().sum();
    result.l1_norms.push_back(l1);
    result.residual_norms.push_back((op.factor_apply(report.final, report.final) - b).norm());
    if (feasible != nullptr && l1 > feasible_l1 + l1_slack) result.l1_bound_satisfied = false;
    result.stages.push_back(std::move(report));
  }
  return result;
}

namespace detail {

// Exact scriptS_alpha(x): the l1-regularized least-squares solution on the
// frozen matrix F(x), by proximal-gradient iteration with a safe step.
inline bool frozen_l1_solve(const Eigen::MatrixXd& f, const Eigen::VectorXd& b, double alpha,
                            double tol, int max_iters, Eigen::VectorXd& z) {
  const double lip = std::max(spectral_norm<double>(f).value, 1e-12);
  const double step = 1.0 / (2.0 * lip * lip);
  z = Eigen::VectorXd::Zero(f.cols());
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd next =
        soft_threshold(z - 2.0 * step * (f.transpose() * (f * z - b)), 2.0 * step * alpha);
    const double moved = (next - z).norm();
    z = next;
    if (moved <= tol) return true;
  }
  return false;
}

}  // namespace detail

struct ContractionProbe {
  double max_ratio = 0.0;
  int samples_used = 0;
  int skipped = 0;
};

// Empirical contraction factor of scriptS_alpha: max over sampled pairs of
// ||S(x) - S(y)|| / ||x - y||, each S computed by an exact frozen-matrix solve.
inline ContractionProbe probe_contraction(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& b,
                                          double alpha, int trials, std::uint64_t seed,
                                          double inner_tol = 1e-10, int inner_iters = 200000) {
  if (trials < 1) throw std::invalid_argument("probe_contraction: trials must be >= 1");
  if (!op.supports_factor()) throw std::invalid_argument("probe_contraction: operator does not expose a factor");
  ContractionProbe probe;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Eigen::VectorXd x = rng.gaussian_vector(op.cols());
    const Eigen::VectorXd y = rng.gaussian_vector(op.cols());
    const double dist = (x - y).norm();
    if (dist < 1e-12) {
      ++probe.skipped;
      continue;
    }
    Eigen::VectorXd sx, sy;
    const bool okx = detail::frozen_l1_solve(op.factor(x), b, alpha, inner_tol, inner_iters, sx);
    const bool oky = detail::frozen_l1_solve(op.factor(y), b, alpha, inner_tol, inner_iters, sy);
    if (!okx || !oky) {
      ++probe.skipped;
      continue;
    }
    probe.max_ratio = std::max(probe.max_ratio, (sx - sy).norm() / dist);
    ++probe.samples_used;
  }
  return probe;
}

}  // namespace qlcs
