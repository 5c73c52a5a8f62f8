#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "qlcs/core.hpp"
#include "qlcs/linalg.hpp"
#include "qlcs/operators.hpp"
#include "qlcs/parallel.hpp"
#include "qlcs/rng.hpp"

namespace qlcs {

enum class ProbeCondition { linear_rip, eq1, eq1b, f_rip, lipschitz_F, tail_L };

// Empirical extremal ratios of a restricted-isometry-type condition together
// with the fraction of sampled pairs clearing a threshold. The probes report
// observations, never certificates.
struct ProbeResult {
  ProbeCondition condition = ProbeCondition::linear_rip;
  double alpha_hat = std::numeric_limits<double>::infinity();  // smallest observed ratio
  double beta_hat = 0.0;                                       // largest observed ratio
  double success_rate = 0.0;
  int samples = 0;
  int skipped = 0;
  std::uint64_t seed = 0;
  double extra = 0.0;    // delta_hat for linear_rip
  bool defined = true;   // false when the probed quantity is degenerate (e.g. zero tail)
};

// Unit-norm vector with a uniformly random size-k support and Gaussian entries.
inline Eigen::VectorXd sample_sparse_sphere(Eigen::Index d, Eigen::Index k, Rng& rng) {
  if (k < 1 || k > d) throw std::invalid_argument("sample_sparse_sphere: need 1 <= k <= d");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (;;) {
    const auto sup = rng.sample_support(d, k);
    double sq = 0.0;
    for (const Eigen::Index i : sup) {
      x[i] = rng.gaussian();
      sq += x[i] * x[i];
    }
    if (sq > 1e-300) {
      x /= std::sqrt(sq);
      return x;
    }
    for (const Eigen::Index i : sup) x[i] = 0.0;
  }
}

inline Eigen::VectorXd sample_sparse_sphere(Eigen::Index d, Eigen::Index k, std::uint64_t seed) {
  Rng rng(seed);
  return sample_sparse_sphere(d, k, rng);
}

// min/max of ||Ax|| over sampled k-sparse unit vectors; extra carries
// delta_hat = max(1 - alpha_hat, beta_hat - 1) for the (1 +- delta) RIP form.
inline ProbeResult probe_linear_rip(const Eigen::MatrixXd& a, Eigen::Index k, int trials,
                                    std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("probe_linear_rip: trials must be >= 1");
  ProbeResult res;
  res.condition = ProbeCondition::linear_rip;
  res.seed = seed;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Eigen::VectorXd x = sample_sparse_sphere(a.cols(), k, rng);
    const double ratio = (a * x).norm();
    res.alpha_hat = std::min(res.alpha_hat, ratio);
    res.beta_hat = std::max(res.beta_hat, ratio);
    ++res.samples;
  }
  res.success_rate = 1.0;
  res.extra = std::max(1.0 - res.alpha_hat, res.beta_hat - 1.0);
  return res;
}

namespace detail {

template <class Denominator>
ProbeResult probe_pair_ratios(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& xhat,
                              Eigen::Index k, double p, int trials, double alpha_threshold,
                              std::uint64_t seed, ProbeCondition condition, Denominator denom) {
  if (trials < 1) throw std::invalid_argument("probe: trials must be >= 1");
  ProbeResult res;
  res.condition = condition;
  res.seed = seed;
  const Eigen::VectorXd xk = best_k_approx<double>(xhat, k);
  const Eigen::VectorXd axk = op.evaluate(xk);
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Eigen::VectorXd y = sample_sparse_sphere(op.cols(), k, rng);
    const double den = denom(xk, y);
    if (den < 1e-12) {
      ++res.skipped;
      continue;
    }
    const double ratio = lp_norm<double>(op.evaluate(y) - axk, p) / den;
    res.alpha_hat = std::min(res.alpha_hat, ratio);
    res.beta_hat = std::max(res.beta_hat, ratio);
    if (ratio > alpha_threshold) res.success_rate += 1.0;
    ++res.samples;
  }
  if (res.samples == 0) throw std::runtime_error("probe: all sampled pairs were degenerate");
  res.success_rate /= res.samples;
  return res;
}

}  // namespace detail

// Ratios ||A(x_{{k}}) - A(y)||_p / ||x_{{k}} - y|| over sampled k-sparse y.
inline ProbeResult probe_eq1(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& xhat,
                             Eigen::Index k, double p, int trials, double alpha_threshold,
                             std::uint64_t seed) {
  return detail::probe_pair_ratios(op, xhat, k, p, trials, alpha_threshold, seed, ProbeCondition::eq1,
                                   [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
                                     return (a - b).norm();
                                   });
}

// Same ratios with the Hilbert-Schmidt denominator ||x_{{k}}x_{{k}}^* - yy^*||_HS.
inline ProbeResult probe_eq1b(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& xhat,
                              Eigen::Index k, double p, int trials, double alpha_threshold,
                              std::uint64_t seed) {
  return detail::probe_pair_ratios(op, xhat, k, p, trials, alpha_threshold, seed, ProbeCondition::eq1b,
                                   [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
                                     return hs_outer_distance<double>(a, b);
                                   });
}

// Extremal ratios ||F(z)(x-y)|| / ||x-y|| over k-sparse triples (x, y, z).
inline ProbeResult probe_f_rip(const QuasiLinearOperator<double>& op, Eigen::Index k, int trials,
                               std::uint64_t seed) {
  if (!op.supports_factor()) throw std::invalid_argument("probe_f_rip: operator does not expose a factor");
  if (trials < 1) throw std::invalid_argument("probe_f_rip: trials must be >= 1");
  ProbeResult res;
  res.condition = ProbeCondition::f_rip;
  res.seed = seed;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Eigen::VectorXd x = sample_sparse_sphere(op.cols(), k, rng);
    const Eigen::VectorXd y = sample_sparse_sphere(op.cols(), k, rng);
    const Eigen::VectorXd z = sample_sparse_sphere(op.cols(), k, rng);
    const Eigen::VectorXd diff = x - y;
    const double den = diff.norm();
    if (den < 1e-12) {
      ++res.skipped;
      continue;
    }
    const double ratio = op.factor_apply(z, diff).norm() / den;
    res.alpha_hat = std::min(res.alpha_hat, ratio);
    res.beta_hat = std::max(res.beta_hat, ratio);
    ++res.samples;
  }
  if (res.samples == 0) throw std::runtime_error("probe_f_rip: all sampled pairs were degenerate");
  res.success_rate = 1.0;
  return res;
}

struct LipschitzProbe {
  ProbeResult factor_lipschitz;  // ratios ||F(x_{{k}}) - F(y)||_2 / ||x_{{k}} - y||
  ProbeResult tail_euclidean;    // ||A(xhat) - A(x_{{k}})||_p / ||xhat - x_{{k}}||
  ProbeResult tail_hs;           // same numerator over ||xhat xhat^* - x_{{k}}x_{{k}}^*||_HS
};

inline LipschitzProbe probe_lipschitz_F(const QuasiLinearOperator<double>& op, const Eigen::VectorXd& xhat,
                                        Eigen::Index k, int trials, std::uint64_t seed, double p = 2.0) {
  if (!op.supports_factor()) throw std::invalid_argument("probe_lipschitz_F: operator does not expose a factor");
  if (trials < 1) throw std::invalid_argument("probe_lipschitz_F: trials must be >= 1");
  LipschitzProbe probe;
  probe.factor_lipschitz.condition = ProbeCondition::lipschitz_F;
  probe.factor_lipschitz.seed = seed;
  const Eigen::VectorXd xk = best_k_approx<double>(xhat, k);
  const Eigen::MatrixXd fxk = op.factor(xk);
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    // vary the norm of y as well; unit-sphere-only samples cannot see
    // norm-dependent factor changes
    const Eigen::VectorXd y = (0.2 + 1.6 * rng.uniform01()) * sample_sparse_sphere(op.cols(), k, rng);
    const double den = (xk - y).norm();
    if (den < 1e-12) {
      ++probe.factor_lipschitz.skipped;
      continue;
    }
    const double ratio = spectral_norm<double>(fxk - op.factor(y)).value / den;
    probe.factor_lipschitz.alpha_hat = std::min(probe.factor_lipschitz.alpha_hat, ratio);
    probe.factor_lipschitz.beta_hat = std::max(probe.factor_lipschitz.beta_hat, ratio);
    ++probe.factor_lipschitz.samples;
  }
  probe.factor_lipschitz.success_rate = 1.0;

  probe.tail_euclidean.condition = ProbeCondition::tail_L;
  probe.tail_hs.condition = ProbeCondition::tail_L;
  probe.tail_euclidean.seed = probe.tail_hs.seed = seed;
  const double tail_num = lp_norm<double>(op.evaluate(xhat) - op.evaluate(xk), p);
  const double tail_den = (xhat - xk).norm();
  const double tail_den_hs = hs_outer_distance<double>(xhat, xk);
  if (tail_den < 1e-12) {
    probe.tail_euclidean.defined = false;
    probe.tail_euclidean.alpha_hat = probe.tail_euclidean.beta_hat = 0.0;
  } else {
    probe.tail_euclidean.alpha_hat = probe.tail_euclidean.beta_hat = tail_num / tail_den;
    probe.tail_euclidean.samples = 1;
  }
  if (tail_den_hs < 1e-12) {
    probe.tail_hs.defined = false;
    probe.tail_hs.alpha_hat = probe.tail_hs.beta_hat = 0.0;
  } else {
    probe.tail_hs.alpha_hat = probe.tail_hs.beta_hat = tail_num / tail_den_hs;
    probe.tail_hs.samples = 1;
  }
  return probe;
}

enum class KappaVariant { euclidean, hs };

// Largest admissible decay rate kappa for the greedy recovery guarantees:
// euclidean uses (beta + 2L)^2 under the root, hs carries an extra factor 2.

inline double decay_threshold_kappa(double alpha, double beta, double lipschitz_tail, double e_lp,
                                    double r_k, KappaVariant variant) {
  if (!(r_k > 0.0)) throw std::invalid_argument("decay_threshold_kappa: r_k must be positive");
  const double alpha_tilde = alpha - 2.0 * e_lp / r_k;
  if (!(alpha_tilde > 0.0))
    throw std::domain_error("decay_threshold_kappa: noise too large for this k (alpha_tilde <= 0)");
  const double mix = beta + 2.0 * lipschitz_tail;
  const double weight = variant == KappaVariant::euclidean ? 1.0 : 2.0;
  return alpha_tilde / std::sqrt(alpha_tilde * alpha_tilde + weight * mix * mix);
}

using OperatorFactory = std::function<std::unique_ptr<QuasiLinearOperator<double>>(std::uint64_t)>;

struct Fig1Spec {
  Eigen::Index d = 80;
  Eigen::Index n = 30;
  Eigen::Index k = 2;  // 2 or 3
  double p = 1.0;
  int angular_points = 180;       // azimuth resolution
  int polar_points = 60;          // polar resolution, k = 3 only
  int draws = 50;                 // operator draws averaged per cell
  double threshold = 1.0;         // lower-bound level
  double xhat_angle_deg = 33.7;   // azimuth of xhat on the support sphere
  double xhat_polar_deg = 61.3;   // polar angle of xhat, k = 3 only
  std::vector<Eigen::Index> support;  // defaults to {0..k-1}
  std::uint64_t seed = 1;
  int threads = 1;
};

struct RateMap {
  Fig1Spec spec;
  std::vector<double> angle1_deg;  // azimuth grid
  std::vector<double> angle2_deg;  // polar grid ({0} for k = 2)
  Eigen::MatrixXd rates;           // polar x azimuth
  Eigen::MatrixXd mean_ratio;      // per-cell average ratio, for threshold calibration
};

namespace detail {

inline Eigen::VectorXd sphere_point(const Fig1Spec& spec, double azim_rad, double polar_rad) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(spec.d);
  if (spec.k == 2) {
    y[spec.support[0]] = std::cos(azim_rad);
    y[spec.support[1]] = std::sin(azim_rad);
  } else {
    y[spec.support[0]] = std::sin(polar_rad) * std::cos(azim_rad);
    y[spec.support[1]] = std::sin(polar_rad) * std::sin(azim_rad);
    y[spec.support[2]] = std::cos(polar_rad);
  }
  return y;
}

}  // namespace detail

// Success-rate map of the lower-bound event ||A(xhat) - A(y)||_p > alpha ||xhat - y||
// for y sweeping the same-support sphere, averaged over operator draws.
inline RateMap build_rate_map(const OperatorFactory& factory, Fig1Spec spec) {
  if (spec.k != 2 && spec.k != 3) throw std::invalid_argument("build_rate_map: k must be 2 or 3");
  if (spec.support.empty())
    for (Eigen::Index i = 0; i < spec.k; ++i) spec.support.push_back(i);
  if (static_cast<Eigen::Index>(spec.support.size()) != spec.k)
    throw std::invalid_argument("build_rate_map: support size must equal k");

  RateMap map;
  const int n1 = spec.angular_points;
  const int n2 = spec.k == 3 ? spec.polar_points : 1;
  map.angle1_deg.resize(static_cast<std::size_t>(n1));
  for (int i = 0; i < n1; ++i) map.angle1_deg[static_cast<std::size_t>(i)] = 360.0 * i / n1;
  if (spec.k == 3) {
    map.angle2_deg.resize(static_cast<std::size_t>(n2));
    // polar interior grid, avoiding the degenerate poles
    for (int i = 0; i < n2; ++i)
      map.angle2_deg[static_cast<std::size_t>(i)] = 180.0 * (i + 0.5) / n2;
  } else {
    map.angle2_deg = {0.0};
  }

  const double deg = EIGEN_PI / 180.0;
  const Eigen::VectorXd xhat =
      detail::sphere_point(spec, spec.xhat_angle_deg * deg, spec.xhat_polar_deg * deg);

  std::vector<Eigen::MatrixXd> draw_hits(static_cast<std::size_t>(spec.draws));
  std::vector<Eigen::MatrixXd> draw_ratio(static_cast<std::size_t>(spec.draws));
  parallel_for(static_cast<std::size_t>(spec.draws), spec.threads, [&](std::size_t t) {
    const auto op = factory(derive_seed(spec.seed, t));
    const Eigen::VectorXd ax = op->evaluate(xhat);
    Eigen::MatrixXd hits = Eigen::MatrixXd::Zero(n2, n1);
    Eigen::MatrixXd ratios = Eigen::MatrixXd::Zero(n2, n1);
    for (int i2 = 0; i2 < n2; ++i2) {
      for (int i1 = 0; i1 < n1; ++i1) {
        const Eigen::VectorXd y = detail::sphere_point(
            spec, map.angle1_deg[static_cast<std::size_t>(i1)] * deg,
            map.angle2_deg[static_cast<std::size_t>(i2)] * deg);
        const double den = (xhat - y).norm();
        const double num = lp_norm<double>(op->evaluate(y) - ax, spec.p);
        if (den < 1e-12) {
          hits(i2, i1) = 1.0;  // the bound is vacuous at y = xhat
          continue;
        }
        const double ratio = num / den;
        ratios(i2, i1) = ratio;
        // the floor absorbs rounding noise where A(y) = A(xhat) analytically
        if (ratio > std::max(spec.threshold, 1e-10)) hits(i2, i1) = 1.0;
      }
    }
    draw_hits[t] = std::move(hits);
    draw_ratio[t] = std::move(ratios);
  });

  map.rates = Eigen::MatrixXd::Zero(n2, n1);
  map.mean_ratio = Eigen::MatrixXd::Zero(n2, n1);
  for (std::size_t t = 0; t < draw_hits.size(); ++t) {
    map.rates += draw_hits[t];
    map.mean_ratio += draw_ratio[t];
  }
  map.rates /= spec.draws;
  map.mean_ratio /= spec.draws;
  map.spec = spec;
  return map;
}

}  // namespace qlcs
