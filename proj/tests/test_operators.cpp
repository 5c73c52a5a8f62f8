#include <complex>
#include <memory>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <Eigen/SVD>

#include "qlcs/operators.hpp"
#include "qlcs/rng.hpp"

using namespace qlcs;
using Catch::Approx;

TEST_CASE("make_gaussian is seed-deterministic", "[operators]") {
  const Eigen::MatrixXd a = make_gaussian(4, 4, 7);
  const Eigen::MatrixXd b = make_gaussian(4, 4, 7);
  REQUIRE(a == b);
  const Eigen::MatrixXd c = make_gaussian(4, 4, 8);
  REQUIRE(a != c);
}

TEST_CASE("make_gaussian normalization concentrates column norms", "[operators]") {
  const Eigen::MatrixXd a = make_gaussian(2000, 1, 33, GaussianNormalize::by_sqrt_n);
  const double sq = a.col(0).squaredNorm();
  REQUIRE(sq > 0.9);
  REQUIRE(sq < 1.1);
}

TEST_CASE("make_gaussian moments", "[operators]") {
  const Eigen::MatrixXd a = make_gaussian(250, 400, 12);  // 1e5 samples
  const double mean = a.mean();
  const double var = (a.array() - mean).square().sum() / (a.size() - 1);
  REQUIRE(std::abs(mean) <= 0.02);
  REQUIRE(var >= 0.97);
  REQUIRE(var <= 1.03);
}

TEST_CASE("lipschitz perturbed operator", "[operators]") {
  Rng rng(55);
  const Eigen::Index n = 6, d = 10;
  const Eigen::MatrixXd a1 = make_gaussian(n, d, 1, GaussianNormalize::by_sqrt_n);
  Eigen::MatrixXd a2 = Eigen::MatrixXd::Identity(n, d);

  SECTION("epsilon = 0 reduces bit-identically to the linear map") {
    LipschitzPerturbedOperator op(a1, a2, 0.0, Eigen::VectorXd::Zero(d));
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd x = rng.gaussian_vector(d);
      const Eigen::VectorXd direct = a1 * x;
      REQUIRE(op.evaluate(x) == direct);
    }
    REQUIRE(op.is_linear());
  }

  SECTION("evaluate matches the defining expression") {
    LipschitzPerturbedOperator op(a1, a2, 0.7, Eigen::VectorXd::Zero(d));
    REQUIRE(op.evaluate(Eigen::VectorXd::Zero(d)).norm() == 0.0);
    for (int t = 0; t < 50; ++t) {
      const Eigen::VectorXd x = rng.gaussian_vector(d);
      const Eigen::VectorXd expected = a1 * x + 0.7 * (1.0 / (1.0 + x.squaredNorm())) * (a2 * x);
      REQUIRE((op.evaluate(x) - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
    }
  }

  SECTION("dimension mismatch is rejected") {
    REQUIRE_THROWS_AS(
        LipschitzPerturbedOperator(a1, Eigen::MatrixXd::Identity(n, d + 1), 1.0, Eigen::VectorXd::Zero(d)),
        std::invalid_argument);
    REQUIRE_THROWS_AS(LipschitzPerturbedOperator(a1, a2, 1.0, Eigen::VectorXd::Zero(d + 2)),
                      std::invalid_argument);
  }
}

TEST_CASE("rank1 phase operator basics", "[operators]") {
  Eigen::MatrixXd vecs = Eigen::MatrixXd::Zero(1, 3);
  vecs(0, 0) = 1.0;  // a_1 = e_1
  Rank1PhaseOperator<double> fixture(vecs);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1[0] = 1.0;
  REQUIRE(fixture.evaluate(e1)[0] == Approx(1.0));

  Rank1PhaseOperator<double> op(9, 5, 17);
  Rng rng(18);
  for (int t = 0; t < 30; ++t) {
    const Eigen::VectorXd x = rng.gaussian_vector(5);
    REQUIRE((op.evaluate(x) - op.evaluate(Eigen::VectorXd(-x))).norm() == 0.0);
    // scalar summation oracle
    const Eigen::VectorXd b = op.evaluate(x);
    for (Eigen::Index i = 0; i < 9; ++i) {
      double ip = 0.0;
      for (Eigen::Index j = 0; j < 5; ++j) ip += op.measurement_vectors()(i, j) * x[j];
      REQUIRE(b[i] == Approx(ip * ip).margin(1e-12));
    }
    // quadratic homogeneity
    const double c = 0.5 + rng.uniform01();
    REQUIRE((op.evaluate(Eigen::VectorXd(c * x)) - c * c * b).norm() <= 1e-10 * (1.0 + b.norm()));
  }
}

TEST_CASE("complex rank1 phase operator", "[operators]") {
  Rank1PhaseOperator<std::complex<double>> op(6, 4, 29, PhaseVectorKind::unit_sphere);
  Rng rng(30);
  for (int t = 0; t < 20; ++t) {
    const ComplexVector x = rng.complex_gaussian_vector(4);
    const ComplexVector b = op.evaluate(x);
    for (Eigen::Index i = 0; i < 6; ++i) {
      std::complex<double> ip = 0.0;
      for (Eigen::Index j = 0; j < 4; ++j) ip += std::conj(op.measurement_vectors()(i, j)) * x[j];
      REQUIRE(std::abs(b[i] - std::norm(ip)) <= 1e-12);
    }
    // measurements are invariant under a unimodular factor
    const ComplexVector rotated = std::polar(1.0, 1.234) * x;
    REQUIRE((op.evaluate(rotated) - b).norm() <= 1e-10);
  }
  // unit sphere rows
  for (Eigen::Index i = 0; i < 6; ++i) REQUIRE(op.measurement_vectors().row(i).norm() == Approx(1.0));
}

TEST_CASE("factor identity holds for every factor-carrying operator", "[operators][property]") {
  const Eigen::Index n = 7, d = 12;
  std::vector<std::unique_ptr<QuasiLinearOperator<double>>> ops;
  ops.push_back(std::make_unique<LinearOperator<double>>(make_gaussian(n, d, 3)));
  ops.push_back(std::make_unique<LipschitzPerturbedOperator>(
      make_gaussian(n, d, 4, GaussianNormalize::by_sqrt_n), Eigen::MatrixXd::Identity(n, d), 0.8,
      Eigen::VectorXd::Zero(d)));
  ops.push_back(std::make_unique<Rank1PhaseOperator<double>>(n, d, 5));
  ops.push_back(std::make_unique<RankMProjectorPhaseOperator>(n, d, 3, 6));
  AsteroParams ap;
  ap.n = n;
  ap.d = d;
  ops.push_back(std::make_unique<AsteroseismologyOperator>(ap));

  Rng rng(77);
  for (const auto& op : ops) {
    REQUIRE(op->supports_factor());
    for (int t = 0; t < 200; ++t) {
      const Eigen::VectorXd x = rng.gaussian_vector(d);
      const Eigen::VectorXd via_eval = op->evaluate(x);
      const Eigen::VectorXd via_factor = op->factor(x) * x;
      REQUIRE((via_eval - via_factor).norm() <= 1e-10 * (1.0 + via_eval.norm()));
    }
  }
}

TEST_CASE("rank-m projector ensemble", "[operators]") {
  SECTION("m = d gives the identity projector") {
    RankMProjectorPhaseOperator op(5, 6, 6, 91);
    Rng rng(92);
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd x = rng.gaussian_vector(6);
      const Eigen::VectorXd b = op.evaluate(x);
      for (Eigen::Index i = 0; i < 5; ++i) REQUIRE(b[i] == Approx(x.squaredNorm()).epsilon(1e-12));
    }
  }

  SECTION("projectors are idempotent and symmetric") {
    RankMProjectorPhaseOperator op(4, 7, 3, 93);
    for (Eigen::Index i = 0; i < 4; ++i) {
      const Eigen::MatrixXd p = op.projector(i);
      REQUIRE((p * p - p).norm() <= 1e-10);
      REQUIRE((p - p.transpose()).norm() <= 1e-10);
    }
  }

  SECTION("isotropy: E evaluate(x) = ||x||^2 over subspace draws") {
    const Eigen::Index d = 6, m = 2;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    x[0] = 0.9;
    x[3] = -0.6;
    const int draws = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < draws; ++t) {
      RankMProjectorPhaseOperator op(1, d, m, 1000 + static_cast<std::uint64_t>(t));
      const double v = op.evaluate(x)[0];
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / draws;
    const double sd = std::sqrt(std::max(sumsq / draws - mean * mean, 0.0));
    REQUIRE(std::abs(mean - x.squaredNorm()) <= 3.0 * sd / std::sqrt(static_cast<double>(draws)));
  }

  SECTION("m > d is rejected") {
    REQUIRE_THROWS_AS(RankMProjectorPhaseOperator(3, 4, 5, 1), std::invalid_argument);
  }
}

TEST_CASE("nearly isometric random maps", "[operators]") {
  SECTION("zero input maps to zero") {
    NearlyIsometricMap map(5, 6, 11);
    REQUIRE(map.apply({}).norm() == 0.0);
    REQUIRE(map.apply({{0.0, Eigen::VectorXd::Ones(6)}}).norm() == 0.0);
  }

  SECTION("factored application equals the dense trace formula") {
    Rng rng(12);
    NearlyIsometricMap map(4, 5, 13);
    for (int t = 0; t < 50; ++t) {
      const Eigen::VectorXd v1 = rng.gaussian_vector(5);
      const Eigen::VectorXd v2 = rng.gaussian_vector(5);
      const double w1 = rng.gaussian(), w2 = rng.gaussian();
      const Eigen::MatrixXd xmat = w1 * v1 * v1.transpose() + w2 * v2 * v2.transpose();
      const Eigen::VectorXd fast = map.apply({{w1, v1}, {w2, v2}});
      for (Eigen::Index i = 0; i < 4; ++i) {
        const double dense = (map.matrix(i).transpose() * xmat).trace() / std::sqrt(4.0);
        REQUIRE(fast[i] == Approx(dense).margin(1e-10));
      }
    }
  }

  SECTION("rank above two is rejected") {
    NearlyIsometricMap map(2, 3, 14);
    const Eigen::VectorXd v = Eigen::VectorXd::Ones(3);
    REQUIRE_THROWS_AS(map.apply({{1.0, v}, {1.0, v}, {1.0, v}}), std::invalid_argument);
  }

  SECTION("near isometry in expectation") {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(6);
    e1[0] = 1.0;  // X = e1 e1^T has unit HS norm
    const int draws = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < draws; ++t) {
      NearlyIsometricOperator op(5, 6, 5000 + static_cast<std::uint64_t>(t));
      const double v = op.evaluate(e1).squaredNorm();
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / draws;
    const double sd = std::sqrt(std::max(sumsq / draws - mean * mean, 0.0));
    REQUIRE(std::abs(mean - 1.0) <= 3.0 * sd / std::sqrt(static_cast<double>(draws)));
    // no factor is exposed for this ensemble
    NearlyIsometricOperator op(5, 6, 1);
    REQUIRE_FALSE(op.supports_factor());
    REQUIRE_THROWS_AS(op.factor(e1), std::logic_error);
  }
}

TEST_CASE("asteroseismology operator", "[operators]") {
  AsteroParams p;
  p.n = 2;
  p.d = 4;

  AsteroseismologyOperator op(p);

  SECTION("windows form a partition of unity") {
    for (double t = -4.0; t <= 4.0; t += 0.01) {
      double sum = 0.0;
      for (Eigen::Index l = 0; l < p.n; ++l) sum += op.window(l, t);
      REQUIRE(sum == Approx(1.0).margin(1e-12));
    }
    REQUIRE(op.evaluate(Eigen::VectorXd::Zero(4)).norm() == 0.0);
  }

  SECTION("evaluate matches the hand-unrolled double sum") {
    Rng rng(31);
    for (int t = 0; t < 25; ++t) {
      const Eigen::VectorXd x = rng.gaussian_vector(4);
      const Eigen::VectorXd b = op.evaluate(x);
      const double scale = std::sqrt(EIGEN_PI) / (2.0 * p.d + 1.0);
      for (Eigen::Index l = 0; l < p.n; ++l) {
        double bl = 0.0;
        for (Eigen::Index j = -p.d; j <= p.d; ++j) {
          double u = 0.0;
          for (Eigen::Index i = 1; i <= p.d; ++i)
            u += x[i - 1] * std::sin((2.0 * EIGEN_PI * j / p.d + p.theta) * i);
          const double f = op.limb_factor(j);
          bl += op.window(l, f * u) * f * u;
        }
        REQUIRE(b[l] == Approx(scale * bl).margin(1e-12));
      }
    }
  }

  SECTION("partition-of-unity collapse of the measurement sum") {
    // summing over sensors cancels the windows, leaving the plain weighted sum
    Rng rng(32);
    for (int t = 0; t < 25; ++t) {
      const Eigen::VectorXd x = rng.gaussian_vector(4);
      const double total = op.evaluate(x).sum();
      const double scale = std::sqrt(EIGEN_PI) / (2.0 * p.d + 1.0);
      double expected = 0.0;
      for (Eigen::Index j = -p.d; j <= p.d; ++j) {
        double u = 0.0;
        for (Eigen::Index i = 1; i <= p.d; ++i)
          u += x[i - 1] * std::sin((2.0 * EIGEN_PI * j / p.d + p.theta) * i);
        expected += op.limb_factor(j) * u;
      }
      REQUIRE(total == Approx(scale * expected).margin(1e-12));
    }
  }

  SECTION("restricted columns agree with the full factor") {
    Rng rng(33);
    const Eigen::VectorXd z = rng.gaussian_vector(4);
    const Eigen::MatrixXd full = op.factor(z);
    const std::vector<Eigen::Index> cols = {1, 3};
    const Eigen::MatrixXd restricted = op.factor_columns(z, cols);
    REQUIRE((restricted.col(0) - full.col(1)).norm() <= 1e-14);
    REQUIRE((restricted.col(1) - full.col(3)).norm() <= 1e-14);
  }
}

TEST_CASE("spectral norm estimation", "[operators]") {
  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
  diag(0, 0) = 3.0;
  diag(1, 1) = 1.0;
  REQUIRE(spectral_norm<double>(diag).value == Approx(3.0).epsilon(1e-6));
  REQUIRE(spectral_norm<double>(Eigen::MatrixXd::Identity(5, 5)).value == Approx(1.0).epsilon(1e-6));

  const Eigen::MatrixXd m = make_gaussian(8, 6, 21);
  const auto est = spectral_norm<double>(m);
  REQUIRE(est.converged);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  REQUIRE(est.value == Approx(svd.singularValues()[0]).epsilon(1e-6));
}

TEST_CASE("operators are reproducible from their seeds", "[operators]") {
  Rank1PhaseOperator<double> a(5, 8, 42), b(5, 8, 42), c(5, 8, 43);
  REQUIRE(a.measurement_vectors() == b.measurement_vectors());
  REQUIRE(a.measurement_vectors() != c.measurement_vectors());

  RankMProjectorPhaseOperator p(3, 6, 2, 42), q(3, 6, 2, 42);
  Rng rng(1);
  const Eigen::VectorXd x = rng.gaussian_vector(6);
  REQUIRE(p.evaluate(x) == q.evaluate(x));
}
