#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "qlcs/core.hpp"
#include "qlcs/operators.hpp"
#include "qlcs/parallel.hpp"
#include "qlcs/rng.hpp"

namespace qlcs {

struct SubsolverConfig {
  enum class Kind { linear_least_squares, multistart_local };
  Kind kind = Kind::multistart_local;
  int starts = 10;
  int max_iters = 500;
  double step_tol = 1e-10;
  double init_scale = 1.0;
  double fd_step = 1e-6;        // central-difference scale for dF
  double smoothing_eps = 1e-9;  // |t|_eps used inside gradients when p != 2
  int warm_refinements = 1;     // lagged-linearization rounds building the warm start
};

struct GreedyConfig {
  double p = 2.0;
  Eigen::Index k_max = 1;
  double residual_tol = 0.0;
  SubsolverConfig subsolver;
  std::uint64_t seed = 0;
  int threads = 1;
  bool polish = true;  // re-solve the winning support at tighter tolerance
};

template <class Scalar>
struct GreedyTrace {
  std::vector<std::vector<Eigen::Index>> supports;  // Lambda^(j), nested
  std::vector<Vector<Scalar>> iterates;             // x^(j)
  std::vector<double> residual_lp;                  // ||A(x^(j)) - b||_p
  std::vector<int> nonconverged_candidates;         // per step
};

template <class Scalar>
struct SubproblemResult {
  Vector<Scalar> x;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = true;
};

namespace detail {

// Support-restricted coordinates as a flat real parameter vector; complex
// coordinates contribute (re, im) pairs.
template <class Scalar>
Vector<Scalar> params_to_signal(const Eigen::VectorXd& params, const std::vector<Eigen::Index>& support,
                                Eigen::Index d) {
  Vector<Scalar> x = Vector<Scalar>::Zero(d);
  for (std::size_t i = 0; i < support.size(); ++i) {
    if constexpr (is_complex_v<Scalar>) {
      x[support[i]] = Scalar(params[2 * static_cast<Eigen::Index>(i)],
                             params[2 * static_cast<Eigen::Index>(i) + 1]);
    } else {
      x[support[i]] = params[static_cast<Eigen::Index>(i)];
    }
  }
  return x;
}

template <class Scalar>
Eigen::VectorXd signal_to_params(const Vector<Scalar>& x, const std::vector<Eigen::Index>& support) {
  const Eigen::Index s = static_cast<Eigen::Index>(support.size());
  Eigen::VectorXd params(is_complex_v<Scalar> ? 2 * s : s);
  for (Eigen::Index i = 0; i < s; ++i) {
    if constexpr (is_complex_v<Scalar>) {
      params[2 * i] = std::real(x[support[static_cast<std::size_t>(i)]]);
      params[2 * i + 1] = std::imag(x[support[static_cast<std::size_t>(i)]]);
    } else {
      params[i] = x[support[static_cast<std::size_t>(i)]];
    }
  }
  return params;
}

// Smoothed residual norm used only to form search directions at kinks.
template <class Scalar>
double smoothed_lp(const Vector<Scalar>& r, double p, double eps) {
  if (p == 2.0) return r.norm();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    acc += std::pow(std::sqrt(std::norm(r[i]) + eps * eps), p);
  return std::pow(acc, 1.0 / p);
}

template <class Scalar>
class RestrictedObjective {
 public:
  RestrictedObjective(const QuasiLinearOperator<Scalar>& op, const Vector<Scalar>& b,
                      const std::vector<Eigen::Index>& support, double p, const SubsolverConfig& cfg)
      : op_(op), b_(b), support_(support), p_(p), cfg_(cfg) {}

  double value(const Eigen::VectorXd& params) const {
    const Vector<Scalar> x = params_to_signal<Scalar>(params, support_, op_.cols());
    return lp_norm<Scalar>(op_.evaluate(x) - b_, p_);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& params) const {
    const Vector<Scalar> x = params_to_signal<Scalar>(params, support_, op_.cols());
    const double h = cfg_.fd_step * (1.0 + x.norm());
    if constexpr (!is_complex_v<Scalar>) {
      if (p_ == 2.0 && op_.supports_factor()) return gradient_factor(x, h);
    }
    return gradient_numeric(params, h);
  }

 private:
  // Gradient of ||A(x) - b|| with A(x) = F(x) x; the derivative of F enters
  // through central differences of the factor applied to x.
  Eigen::VectorXd gradient_factor(const Vector<Scalar>& x, double h) const {
    const Vector<Scalar> r = op_.factor_apply(x, x) - b_;
    const double nrm = r.norm();
    const Eigen::Index s = static_cast<Eigen::Index>(support_.size());
    Eigen::VectorXd g(s);
    const auto cols = op_.factor_columns(x, support_);
    for (Eigen::Index i = 0; i < s; ++i) {
      Vector<Scalar> xp = x, xm = x;
      xp[support_[static_cast<std::size_t>(i)]] += Scalar(h);
      xm[support_[static_cast<std::size_t>(i)]] -= Scalar(h);
      const Vector<Scalar> dF_x = (op_.factor_apply(xp, x) - op_.factor_apply(xm, x)) / (2.0 * h);
      const double dsq = 2.0 * (r.dot(cols.col(i)) + r.dot(dF_x));
      g[i] = nrm > 0.0 ? dsq / (2.0 * nrm) : 0.0;  // d||r|| = d(||r||^2) / (2||r||)
    }
    return g;
  }

  Eigen::VectorXd gradient_numeric(const Eigen::VectorXd& params, double h) const {
    Eigen::VectorXd g(params.size());
    Eigen::VectorXd q = params;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      const double save = q[i];
      q[i] = save + h;
      const double fp = smoothed_value(q);
      q[i] = save - h;
      const double fm = smoothed_value(q);
      q[i] = save;
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  }

  double smoothed_value(const Eigen::VectorXd& params) const {
    const Vector<Scalar> x = params_to_signal<Scalar>(params, support_, op_.cols());
    return smoothed_lp<Scalar>(op_.evaluate(x) - b_, p_, cfg_.smoothing_eps);
  }

  const QuasiLinearOperator<Scalar>& op_;
  const Vector<Scalar>& b_;
  const std::vector<Eigen::Index>& support_;
  double p_;
  const SubsolverConfig& cfg_;
};

// Gradient descent with backtracking line search on the unsmoothed objective.
template <class Scalar>
std::pair<Eigen::VectorXd, bool> local_descent(const RestrictedObjective<Scalar>& obj,
                                               Eigen::VectorXd params, const SubsolverConfig& cfg) {
  double value = obj.value(params);
  double step_hint = 1.0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd g = obj.gradient(params);
    const double gn = g.norm();
    if (gn <= cfg.step_tol) return {params, true};
    double t = step_hint / gn;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd trial = params - t * g;
      const double tv = obj.value(trial);
      if (tv < value - 1e-4 * t * gn * gn) {
        const double moved = t * gn;
        params = trial;
        value = tv;
        improved = true;
        step_hint = std::min(2.0 * t * gn, 1e6);
        if (moved < cfg.step_tol) return {params, true};
        break;
      }
      t *= 0.5;
    }
    if (!improved) return {params, true};  // no descent direction left at this resolution
  }
  return {params, false};
}

template <class Scalar>
SubproblemResult<Scalar> restricted_least_squares(const QuasiLinearOperator<Scalar>& op,
                                                  const Vector<Scalar>& b,
                                                  const std::vector<Eigen::Index>& support, double p) {
  const auto cols = op.factor_columns(Vector<Scalar>::Zero(op.cols()), support);
  Eigen::CompleteOrthogonalDecomposition<DenseMatrix<Scalar>> cod(cols);
  const Vector<Scalar> coeffs = cod.solve(b);  // minimum-norm solution when singular
  SubproblemResult<Scalar> res;
  res.x = Vector<Scalar>::Zero(op.cols());
  for (std::size_t i = 0; i < support.size(); ++i) res.x[support[i]] = coeffs[static_cast<Eigen::Index>(i)];
  res.residual = lp_norm<Scalar>(op.evaluate(res.x) - b, p);
  res.converged = true;
  return res;
}

}  // namespace detail

// arg min over signals supported on `support` of ||A(x) - b||_p. For linear
// operators with p = 2 this is the exact restricted least-squares solution;
// otherwise the best of several local searches.
template <class Scalar>
SubproblemResult<Scalar> subproblem(const QuasiLinearOperator<Scalar>& op, const Vector<Scalar>& b,
                                    const std::vector<Eigen::Index>& support, double p,
                                    const SubsolverConfig& cfg, std::uint64_t seed = 0,
                                    const Vector<Scalar>* warm_start = nullptr) {
  if (b.size() != op.rows()) throw std::invalid_argument("subproblem: data length mismatch");
  for (const Eigen::Index i : support)
    if (i < 0 || i >= op.cols()) throw std::invalid_argument("subproblem: support index out of range");

  if (support.empty()) {
    SubproblemResult<Scalar> res;
    res.x = Vector<Scalar>::Zero(op.cols());
    res.residual = lp_norm<Scalar>(b, p);
    return res;
  }

  const bool linear_exact = op.is_linear() && p == 2.0;
  if (cfg.kind == SubsolverConfig::Kind::linear_least_squares && !linear_exact)
    throw std::invalid_argument("subproblem: linear_least_squares subsolver requires a linear operator and p = 2");
  if (linear_exact) return detail::restricted_least_squares(op, b, support, p);

  const detail::RestrictedObjective<Scalar> obj(op, b, support, p, cfg);
  const Eigen::Index nparams = is_complex_v<Scalar> ? 2 * static_cast<Eigen::Index>(support.size())
                                                    : static_cast<Eigen::Index>(support.size());
  Rng rng(derive_seed(seed, 0x5b5b));

  std::vector<Eigen::VectorXd> starts;
  starts.reserve(static_cast<std::size_t>(std::max(cfg.starts, 1)) + 1);

  // Start 1: previous iterate, with the newly added coordinate estimated by a
  // least-squares fit on the linearization F(x_prev).
  if (warm_start != nullptr && op.supports_factor()) {
    Vector<Scalar> w = *warm_start;
    const auto cols = op.factor_columns(w, support);
    const Vector<Scalar> resid = b - op.evaluate(w);
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (w[support[i]] == Scalar(0)) {
        const auto col = cols.col(static_cast<Eigen::Index>(i));
        const double nc = col.squaredNorm();
        if (nc > 1e-300) w[support[i]] = col.dot(resid) / nc;
      }
    }
    starts.push_back(detail::signal_to_params<Scalar>(w, support));
    // and the least-squares estimate on the linearization, re-linearized a
    // configurable number of rounds
    Vector<Scalar> full = *warm_start;
    for (int round = 0; round < std::max(cfg.warm_refinements, 1); ++round) {
      Eigen::CompleteOrthogonalDecomposition<DenseMatrix<Scalar>> cod(op.factor_columns(full, support));
      const Vector<Scalar> ls = cod.solve(b);
      full = Vector<Scalar>::Zero(op.cols());
      for (std::size_t i = 0; i < support.size(); ++i)
        full[support[i]] = ls[static_cast<Eigen::Index>(i)];
    }
    starts.push_back(detail::signal_to_params<Scalar>(full, support));
  } else if (warm_start != nullptr) {
    starts.push_back(detail::signal_to_params<Scalar>(*warm_start, support));
  }

  const double scale = cfg.init_scale * std::sqrt(std::max(b.norm(), 1e-300));
  while (static_cast<int>(starts.size()) < std::max(cfg.starts, 1)) {
    Eigen::VectorXd s(nparams);
    for (Eigen::Index i = 0; i < nparams; ++i) s[i] = scale * rng.gaussian();
    starts.push_back(std::move(s));
  }

  SubproblemResult<Scalar> best;
  for (const Eigen::VectorXd& s : starts) {
    auto [params, converged] = detail::local_descent(obj, s, cfg);
    const double value = obj.value(params);
    if (value < best.residual) {
      best.x = detail::params_to_signal<Scalar>(params, support, op.cols());
      best.residual = value;
      best.converged = converged;
    }
  }
  return best;
}

// The lp-greedy algorithm (generalized orthogonal least squares): at step j,
// solve the restricted problem on Lambda u {l} for every remaining l and keep
// the index with the smallest residual, ties broken by the smallest index.
template <class Scalar>
GreedyTrace<Scalar> greedy_recover(const QuasiLinearOperator<Scalar>& op, const Vector<Scalar>& b,
                                   const GreedyConfig& cfg) {
  if (b.size() != op.rows()) throw std::invalid_argument("greedy_recover: data length mismatch");
  if (cfg.k_max < 1 || cfg.k_max > op.cols()) throw std::invalid_argument("greedy_recover: k_max out of range");
  if (!(cfg.p >= 1.0)) throw std::invalid_argument("greedy_recover: p must be >= 1");

  GreedyTrace<Scalar> trace;
  std::vector<Eigen::Index> active;
  Vector<Scalar> current = Vector<Scalar>::Zero(op.cols());

  for (Eigen::Index j = 1; j <= cfg.k_max; ++j) {
    std::vector<Eigen::Index> candidates;
    for (Eigen::Index l = 0; l < op.cols(); ++l)
      if (std::find(active.begin(), active.end(), l) == active.end()) candidates.push_back(l);

    std::vector<SubproblemResult<Scalar>> results(candidates.size());
    parallel_for(candidates.size(), cfg.threads, [&](std::size_t c) {
      std::vector<Eigen::Index> sup = active;
      sup.push_back(candidates[c]);
      std::sort(sup.begin(), sup.end());
      results[c] = subproblem<Scalar>(op, b, sup, cfg.p, cfg.subsolver,
                                      derive_seed(cfg.seed, static_cast<std::uint64_t>(j),
                                                  static_cast<std::uint64_t>(candidates[c])),
                                      &current);
    });

    std::size_t best = 0;
    int nonconverged = 0;
    for (std::size_t c = 0; c < results.size(); ++c) {
      if (!results[c].converged) ++nonconverged;
      if (results[c].residual < results[best].residual) best = c;
    }

    active.push_back(candidates[best]);
    std::sort(active.begin(), active.end());
    SubproblemResult<Scalar> winner = std::move(results[best]);

    if (cfg.polish && !op.is_linear()) {
      SubsolverConfig pcfg = cfg.subsolver;
      pcfg.starts = 2;  // the winner itself plus the refined linearization
      pcfg.max_iters = cfg.subsolver.max_iters * 5;
      pcfg.step_tol = cfg.subsolver.step_tol * 1e-2;
      const auto polished = subproblem<Scalar>(
          op, b, active, cfg.p, pcfg,
          derive_seed(cfg.seed, static_cast<std::uint64_t>(j), 0x90115), &winner.x);
      if (polished.residual < winner.residual) winner = polished;
    }
    current = winner.x;

    trace.supports.push_back(active);
    trace.iterates.push_back(current);
    trace.residual_lp.push_back(winner.residual);
    trace.nonconverged_candidates.push_back(nonconverged);

    if (winner.residual <= cfg.residual_tol) break;
  }
  return trace;
}

enum class BoundVariant { euclidean, hs };

struct TheoremConstants {
  double alpha = 1.0;
  double beta = 1.0;
  double lipschitz_tail = 0.0;  // L_k
  double kappa = 0.5;
  double noise_lp = 0.0;  // ||e||_p
  double r1 = 1.0;        // largest magnitude of the signal
};

// Right-hand side of the greedy recovery guarantee after j steps; the hs
// variant carries sqrt(3) in place of sqrt(2).
inline double recovery_error_bound(int j, const TheoremConstants& c,
                                   BoundVariant variant = BoundVariant::euclidean) {
  if (!(c.alpha > 0.0) || !(c.beta > 0.0) || !(c.kappa > 0.0 && c.kappa < 1.0))
    throw std::invalid_argument("recovery_error_bound: invalid constants");
  const double factor = variant == BoundVariant::euclidean ? std::sqrt(2.0) : std::sqrt(3.0);
  return c.noise_lp / c.alpha +
         std::pow(c.kappa, j) * c.r1 * factor * (1.0 + (c.beta + 2.0 * c.lipschitz_tail) / c.alpha);
}

}  // namespace qlcs
