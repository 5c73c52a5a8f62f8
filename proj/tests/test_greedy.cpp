#include <algorithm>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <Eigen/SVD>

#include "qlcs/greedy.hpp"
#include "qlcs/ripprobe.hpp"

using namespace qlcs;
using Catch::Approx;

namespace {

// k-sparse Gaussian signal with the given support size.
Eigen::VectorXd sparse_gaussian(Eigen::Index d, Eigen::Index k, Rng& rng) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (const Eigen::Index i : rng.sample_support(d, k)) x[i] = rng.gaussian();
  return x;
}

// k-sparse signal with rapidly decaying magnitudes, i.e. within the scope of
// the recovery theorem's decay hypothesis.
Eigen::VectorXd sparse_decaying(Eigen::Index d, Eigen::Index k, double ratio, Rng& rng) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  double mag = 1.0;
  for (const Eigen::Index i : rng.sample_support(d, k)) {
    x[i] = mag * (rng.uniform01() < 0.5 ? -1.0 : 1.0);
    mag *= ratio * (0.6 + 0.4 * rng.uniform01());
  }
  return x;
}

std::vector<Eigen::Index> support_of(const Eigen::VectorXd& x) { return support<double>(x); }

}  // namespace

TEST_CASE("subproblem on the identity restricts b to the support", "[greedy]") {
  LinearOperator<double> id(Eigen::MatrixXd::Identity(5, 5));
  Rng rng(1);
  const Eigen::VectorXd b = rng.gaussian_vector(5);
  SubsolverConfig cfg;
  const auto res = subproblem<double>(id, b, {1, 3}, 2.0, cfg);
  REQUIRE(res.x[1] == Approx(b[1]));
  REQUIRE(res.x[3] == Approx(b[3]));
  REQUIRE(res.x[0] == 0.0);
  REQUIRE(res.x[2] == 0.0);
  REQUIRE(res.x[4] == 0.0);
}

TEST_CASE("subproblem handles empty support and bad input", "[greedy]") {
  LinearOperator<double> id(Eigen::MatrixXd::Identity(3, 3));
  Rng rng(2);
  const Eigen::VectorXd b = rng.gaussian_vector(3);
  SubsolverConfig cfg;
  const auto res = subproblem<double>(id, b, {}, 2.0, cfg);
  REQUIRE(res.x.norm() == 0.0);
  REQUIRE(res.residual == Approx(b.norm()));
  REQUIRE_THROWS_AS(subproblem<double>(id, b, {7}, 2.0, cfg), std::invalid_argument);
}

TEST_CASE("linear restricted subproblem matches the pseudo-inverse oracle", "[greedy]") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd a = make_gaussian(8, 12, 100 + static_cast<std::uint64_t>(t));
    LinearOperator<double> op(a);
    const Eigen::VectorXd b = rng.gaussian_vector(8);
    const std::vector<Eigen::Index> sup = rng.sample_support(12, 3);
    SubsolverConfig cfg;
    const auto res = subproblem<double>(op, b, sup, 2.0, cfg);

    Eigen::MatrixXd cols(8, 3);
    for (int c = 0; c < 3; ++c) cols.col(c) = a.col(sup[static_cast<std::size_t>(c)]);
    const Eigen::VectorXd oracle =
        cols.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
    for (int c = 0; c < 3; ++c)
      REQUIRE(res.x[sup[static_cast<std::size_t>(c)]] == Approx(oracle[c]).margin(1e-8));
  }
}

TEST_CASE("singular restricted system falls back to the minimum-norm solution", "[greedy]") {
  Eigen::MatrixXd a(3, 2);
  a.col(0) << 1, 0, 0;
  a.col(1) << 1, 0, 0;  // duplicated column
  LinearOperator<double> op(a);
  Eigen::VectorXd b(3);
  b << 2, 0, 0;
  SubsolverConfig cfg;
  const auto res = subproblem<double>(op, b, {0, 1}, 2.0, cfg);
  REQUIRE(res.residual <= 1e-12);
  REQUIRE(res.x[0] == Approx(1.0).margin(1e-10));  // min-norm splits evenly
  REQUIRE(res.x[1] == Approx(1.0).margin(1e-10));
}

TEST_CASE("1-sparse phase retrieval subproblem against a grid oracle", "[greedy]") {
  Rank1PhaseOperator<double> op(6, 3, 44);
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(3);
  xhat[0] = 2.0;
  const Eigen::VectorXd b = op.evaluate(xhat);
  SubsolverConfig cfg;
  const auto res = subproblem<double>(op, b, {0}, 2.0, cfg, 7);
  REQUIRE(res.residual <= 1e-6);
  REQUIRE(std::abs(std::abs(res.x[0]) - 2.0) <= 1e-5);

  // grid oracle over the 1-D objective
  double best_val = std::numeric_limits<double>::infinity();
  for (double t = -3.0; t <= 3.0; t += 1e-3) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
    y[0] = t;
    best_val = std::min(best_val, (op.evaluate(y) - b).norm());
  }
  REQUIRE(res.residual <= best_val + 1e-6);
}

TEST_CASE("greedy recovers sparse signals under linear Gaussian measurements", "[greedy]") {
  Rng rng(5);
  const Eigen::Index d = 20, n = 15, k = 3;
  const Eigen::MatrixXd a = make_gaussian(n, d, 500, GaussianNormalize::by_sqrt_n);
  LinearOperator<double> op(a);
  const Eigen::VectorXd xhat = sparse_gaussian(d, k, rng);
  const Eigen::VectorXd b = op.evaluate(xhat);

  GreedyConfig cfg;
  cfg.p = 2.0;
  cfg.k_max = k;
  const auto trace = greedy_recover<double>(op, b, cfg);

  REQUIRE(trace.supports.back() == support_of(xhat));
  REQUIRE((trace.iterates.back() - xhat).norm() <= 1e-6);

  // exhaustive-support oracle at this scale: no 3-support fits better
  double best = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> best_sup;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j)
      for (Eigen::Index l = j + 1; l < d; ++l) {
        SubsolverConfig scfg;
        const auto fit = subproblem<double>(op, b, {i, j, l}, 2.0, scfg);
        if (fit.residual < best) {
          best = fit.residual;
          best_sup = {i, j, l};
        }
      }
  REQUIRE(best_sup == trace.supports.back());
}

TEST_CASE("greedy on zero data selects the first index with zero residual", "[greedy]") {
  LinearOperator<double> op(make_gaussian(4, 6, 8));
  GreedyConfig cfg;
  cfg.k_max = 3;
  const auto trace = greedy_recover<double>(op, Eigen::VectorXd::Zero(4), cfg);
  REQUIRE(trace.supports.size() == 1);  // stops at the residual_tol = 0 criterion
  REQUIRE(trace.supports[0] == std::vector<Eigen::Index>{0});
  REQUIRE(trace.residual_lp[0] <= 1e-14);
  REQUIRE(trace.iterates[0].norm() == 0.0);
}

TEST_CASE("greedy trace invariants: nesting and monotone residuals", "[greedy][property]") {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index d = 14, n = 9;
    const Eigen::MatrixXd a = make_gaussian(n, d, 600 + static_cast<std::uint64_t>(t),
                                            GaussianNormalize::by_sqrt_n);
    LinearOperator<double> op(a);
    const Eigen::VectorXd b = rng.gaussian_vector(n);  // generic data, no sparse ground truth
    GreedyConfig cfg;
    cfg.k_max = 5;
    const auto trace = greedy_recover<double>(op, b, cfg);
    for (std::size_t j = 0; j < trace.supports.size(); ++j) {
      REQUIRE(trace.supports[j].size() == j + 1);
      if (j > 0) {
        REQUIRE(std::includes(trace.supports[j].begin(), trace.supports[j].end(),
                              trace.supports[j - 1].begin(), trace.supports[j - 1].end()));
        REQUIRE(trace.residual_lp[j] <= trace.residual_lp[j - 1] + 1e-12);
      }
    }
  }
}

TEST_CASE("noiseless exact recovery across seeds (scaled-down property)", "[greedy]") {
  // decaying amplitudes keep the signals inside the theorem's decay class
  const Eigen::Index d = 30, n = 20;
  int hits = 0;
  for (int t = 0; t < 20; ++t) {
    Rng rng(900 + static_cast<std::uint64_t>(t));
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::MatrixXd a =
        make_gaussian(n, d, 7000 + static_cast<std::uint64_t>(t), GaussianNormalize::by_sqrt_n);
    LinearOperator<double> op(a);
    const Eigen::VectorXd xhat = sparse_decaying(d, k, 0.4, rng);
    GreedyConfig cfg;
    cfg.p = 2.0;
    cfg.k_max = k;
    const auto trace = greedy_recover<double>(op, op.evaluate(xhat), cfg);
    if (trace.supports.back() == support_of(xhat) && (trace.iterates.back() - xhat).norm() <= 1e-6)
      ++hits;
  }
  REQUIRE(hits == 20);
}

TEST_CASE("phase retrieval greedy recovers 2-sparse signals in most trials", "[greedy][slow]") {
  const Eigen::Index d = 20, n = 11, k = 2;
  int hits = 0;
  const int trials = 9;
  for (int t = 0; t < trials; ++t) {
    Rng rng(40 + static_cast<std::uint64_t>(t));
    Rank1PhaseOperator<double> op(n, d, 4000 + static_cast<std::uint64_t>(t));
    Eigen::VectorXd xhat = sparse_gaussian(d, k, rng);
    xhat.normalize();
    GreedyConfig cfg;
    cfg.p = 1.0;
    cfg.k_max = k;
    cfg.seed = 77 + static_cast<std::uint64_t>(t);
    cfg.subsolver.starts = 8;
    cfg.subsolver.max_iters = 300;
    const auto trace = greedy_recover<double>(op, op.evaluate(xhat), cfg);
    if (phase_aligned_distance<double>(trace.iterates.back(), xhat) <= 1e-3) ++hits;
  }
  REQUIRE(hits * 2 > trials);  // majority
}

TEST_CASE("decay ordering under probe-certified constants", "[greedy]") {
  // Construct an instance where the probed constants certify the decay
  // hypothesis, then check the greedy picks supports in magnitude order.
  const Eigen::Index d = 30, n = 22, k = 4;
  const Eigen::MatrixXd a = make_gaussian(n, d, 321, GaussianNormalize::by_sqrt_n);
  LinearOperator<double> op(a);

  const auto rip = probe_linear_rip(a, 2 * k, 4000, 55);
  const double alpha = rip.alpha_hat, beta = rip.beta_hat;
  REQUIRE(alpha > 0.0);

  const double kappa_max = decay_threshold_kappa(alpha, beta, 0.0, 0.0, 1.0, KappaVariant::euclidean);
  const double kappa = 0.9 * kappa_max;

  Rng rng(77);
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(d);
  const auto sup = rng.sample_support(d, k);
  double mag = 1.0;
  for (const Eigen::Index i : sup) {
    xhat[i] = mag * (rng.uniform01() < 0.5 ? -1.0 : 1.0);
    mag *= kappa * 0.95;
  }
  REQUIRE(in_decay_class<double>(xhat, kappa));

  GreedyConfig cfg;
  cfg.k_max = k;
  const auto trace = greedy_recover<double>(op, op.evaluate(xhat), cfg);

  const auto r = rearrange<double>(xhat);
  for (std::size_t j = 0; j < trace.supports.size(); ++j) {
    std::vector<Eigen::Index> expect(r.permutation.begin(),
                                     r.permutation.begin() + static_cast<long>(j + 1));
    std::sort(expect.begin(), expect.end());
    REQUIRE(trace.supports[j] == expect);
    // error bound of the recovery theorem with the probed constants
    TheoremConstants c;
    c.alpha = alpha;
    c.beta = beta;
    c.kappa = kappa;
    c.r1 = r.values[0];
    const double bound = recovery_error_bound(static_cast<int>(j + 1), c);
    REQUIRE((trace.iterates[j] - xhat).norm() <= bound + 1e-9);
  }
}

TEST_CASE("recovery error bound arithmetic", "[greedy]") {
  TheoremConstants c;
  c.alpha = 0.5;
  c.beta = 1.5;
  c.lipschitz_tail = 0.0;
  c.kappa = 0.3;
  c.noise_lp = 0.0;
  c.r1 = 1.0;
  REQUIRE(recovery_error_bound(2, c) == Approx(0.09 * std::sqrt(2.0) * 4.0));
  // monotone decreasing in j when the noise term vanishes
  double prev = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= 6; ++j) {
    const double b = recovery_error_bound(j, c);
    REQUIRE(b < prev);
    prev = b;
  }
  // hs variant swaps sqrt(2) for sqrt(3)
  REQUIRE(recovery_error_bound(1, c, BoundVariant::hs) ==
          Approx(0.3 * std::sqrt(3.0) * 4.0));
  REQUIRE_THROWS_AS(recovery_error_bound(1, TheoremConstants{0.0, 1, 0, 0.5, 0, 1}),
                    std::invalid_argument);
}
