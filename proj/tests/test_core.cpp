#include <algorithm>
#include <complex>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "qlcs/core.hpp"
#include "qlcs/rng.hpp"

using namespace qlcs;
using Catch::Approx;

namespace {

RealVector make_vec(std::initializer_list<double> v) {
  RealVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

// Draws a vector that lies in D_kappa by construction: magnitudes with
// consecutive ratios at most kappa, random signs, random positions.
RealVector sample_decay_class(Eigen::Index d, double kappa, Rng& rng) {
  Eigen::VectorXd mags(d);
  mags[0] = 0.5 + rng.uniform01();
  for (Eigen::Index j = 1; j < d; ++j) mags[j] = mags[j - 1] * kappa * rng.uniform01();
  RealVector x(d);
  for (Eigen::Index j = 0; j < d; ++j) x[j] = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * mags[j];
  // random permutation of positions
  for (Eigen::Index j = d - 1; j > 0; --j)
    std::swap(x[j], x[static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(j + 1)))]);
  return x;
}

}  // namespace

TEST_CASE("rearrange sorts magnitudes with index tie-break", "[core]") {
  const auto r = rearrange<double>(make_vec({0, -3, 1}));
  REQUIRE(r.values[0] == 3.0);
  REQUIRE(r.values[1] == 1.0);
  REQUIRE(r.values[2] == 0.0);
  REQUIRE(r.permutation == std::vector<Eigen::Index>{1, 2, 0});

  const auto tie = rearrange<double>(make_vec({2, 2}));
  REQUIRE(tie.values[0] == 2.0);
  REQUIRE(tie.permutation == std::vector<Eigen::Index>{0, 1});
}

TEST_CASE("rearrange matches an independent sort oracle", "[core]") {
  Rng rng(101);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(12));
    const RealVector x = rng.gaussian_vector(d);
    const auto r = rearrange<double>(x);
    std::vector<double> oracle(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) oracle[static_cast<std::size_t>(i)] = std::abs(x[i]);
    std::sort(oracle.begin(), oracle.end(), std::greater<>());
    for (Eigen::Index i = 0; i < d; ++i) REQUIRE(r.values[i] == oracle[static_cast<std::size_t>(i)]);
    // permutation consistency
    for (Eigen::Index i = 0; i < d; ++i)
      REQUIRE(std::abs(x[r.permutation[static_cast<std::size_t>(i)]]) == r.values[i]);
  }
}

TEST_CASE("best_k_approx keeps the k largest entries", "[core]") {
  REQUIRE(best_k_approx<double>(make_vec({3, 1, 2}), 2) == make_vec({3, 0, 2}));
  REQUIRE(best_k_approx<double>(make_vec({1, 1, 1}), 0) == make_vec({0, 0, 0}));
  REQUIRE_THROWS_AS(best_k_approx<double>(make_vec({1, 2}), 3), std::invalid_argument);
}

TEST_CASE("best_k_approx is optimal against exhaustive support enumeration", "[core]") {
  Rng rng(202);
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index d = 4 + static_cast<Eigen::Index>(rng.below(5));  // up to 8
    const Eigen::Index k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d + 1)));
    const RealVector x = rng.gaussian_vector(d);
    const double achieved = (x - best_k_approx<double>(x, k)).norm();

    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (1ULL << d); ++mask) {
      if (static_cast<Eigen::Index>(__builtin_popcountll(mask)) != k) continue;
      RealVector y = RealVector::Zero(d);
      for (Eigen::Index i = 0; i < d; ++i)
        if (mask & (1ULL << i)) y[i] = x[i];  // projection onto the support is optimal per support
      best = std::min(best, (x - y).norm());
    }
    REQUIRE(achieved <= best + 1e-12);
  }
}

TEST_CASE("best_k residual matches the rearrangement tail", "[core]") {
  Rng rng(303);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(10));
    const Eigen::Index k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d + 1)));
    const RealVector x = rng.gaussian_vector(d);
    const auto r = rearrange<double>(x);
    double tail = 0.0;
    for (Eigen::Index j = k; j < d; ++j) tail += r.values[j] * r.values[j];
    REQUIRE((x - best_k_approx<double>(x, k)).squaredNorm() == Approx(tail).margin(1e-12));
  }
}

TEST_CASE("in_decay_class detects geometric decay", "[core]") {
  REQUIRE(in_decay_class<double>(make_vec({1, 0.5, 0.25}), 0.5));
  REQUIRE_FALSE(in_decay_class<double>(make_vec({1, 0.9}), 0.5));
  REQUIRE_THROWS_AS(in_decay_class<double>(make_vec({1}), 1.5), std::invalid_argument);
  REQUIRE_THROWS_AS(in_decay_class<double>(make_vec({1}), 0.0), std::invalid_argument);

  // exactly sparse vectors are members (zero tail convention)
  REQUIRE(in_decay_class<double>(make_vec({1, 0, 0}), 0.3));

  const double kappa0 = 0.6;
  RealVector x(8);
  x[0] = 1.0;
  for (Eigen::Index j = 1; j < 8; ++j) x[j] = x[j - 1] * kappa0;
  for (double kappa : {0.1, 0.3, 0.5, 0.59, 0.6, 0.7, 0.9})
    REQUIRE(in_decay_class<double>(x, kappa) == (kappa >= kappa0));
}

TEST_CASE("decay class membership is monotone in kappa", "[core]") {
  Rng rng(404);
  for (int t = 0; t < 100; ++t) {
    const RealVector x = rng.gaussian_vector(6);
    bool prev = false;
    for (double kappa : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
      const bool now = in_decay_class<double>(x, kappa);
      if (prev) REQUIRE(now);
      prev = now;
    }
  }
}

TEST_CASE("decay tail bounds hold on the decay class", "[core]") {
  const auto t = decay_tail_bound_check<double>(make_vec({1, 0, 0}), 1, 0.5);
  REQUIRE(t.lhs == 0.0);
  REQUIRE(t.bound1 == 0.0);
  REQUIRE(t.bound2 == Approx(0.5 / std::sqrt(0.75)));

  RealVector geo(10);
  geo[0] = 1.0;
  for (Eigen::Index j = 1; j < 10; ++j) geo[j] = geo[j - 1] * 0.5;
  const auto g = decay_tail_bound_check<double>(geo, 3, 0.5);
  REQUIRE(g.lhs <= g.bound1);
  REQUIRE(g.bound1 <= g.bound2);

  REQUIRE_THROWS_AS(decay_tail_bound_check<double>(make_vec({1, 0.9}), 1, 0.5), std::domain_error);

  Rng rng(505);
  for (int i = 0; i < 1000; ++i) {
    const double kappa = 0.2 + 0.7 * rng.uniform01();
    const Eigen::Index d = 3 + static_cast<Eigen::Index>(rng.below(8));
    const RealVector x = sample_decay_class(d, kappa, rng);
    const Eigen::Index j = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d - 1)));
    const auto b = decay_tail_bound_check<double>(x, j, kappa);
    REQUIRE(b.lhs <= b.bound1 + 1e-12);
    REQUIRE(b.bound1 <= b.bound2 + 1e-12);
  }
}

TEST_CASE("lp_norm basics and oracle", "[core]") {
  REQUIRE(lp_norm<double>(make_vec({3, 4}), 2.0) == Approx(5.0));
  REQUIRE(lp_norm<double>(make_vec({1, -1, 1}), 1.0) == Approx(3.0));
  REQUIRE_THROWS_AS(lp_norm<double>(make_vec({1}), 0.5), std::invalid_argument);

  Rng rng(606);
  for (int t = 0; t < 200; ++t) {
    const RealVector v = rng.gaussian_vector(9);
    double direct = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) direct += v[i] * v[i];
    REQUIRE(lp_norm<double>(v, 2.0) * lp_norm<double>(v, 2.0) == Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("lp_norm is nonincreasing in p", "[core]") {
  Rng rng(707);
  for (int t = 0; t < 100; ++t) {
    const RealVector v = rng.gaussian_vector(7);
    double prev = std::numeric_limits<double>::infinity();
    for (double p : {1.0, 1.5, 2.0, 3.0, 6.0}) {
      const double now = lp_norm<double>(v, p);
      REQUIRE(now <= prev * (1.0 + 1e-12));
      prev = now;
    }
  }
}

TEST_CASE("hs_outer_distance agrees with the dense matrix oracle", "[core]") {
  const RealVector e1 = make_vec({1, 0, 0});
  const RealVector e2 = make_vec({0, 1, 0});
  REQUIRE(hs_outer_distance<double>(e1, e1) == 0.0);
  REQUIRE(hs_outer_distance<double>(e1, e2) == Approx(std::sqrt(2.0)));
  REQUIRE_THROWS_AS(hs_outer_distance<double>(e1, make_vec({1, 2})), std::invalid_argument);

  Rng rng(808);
  for (int t = 0; t < 300; ++t) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(5));
    const RealVector x = rng.gaussian_vector(d);
    const RealVector y = rng.gaussian_vector(d);
    const Eigen::MatrixXd outer = x * x.transpose() - y * y.transpose();
    REQUIRE(hs_outer_distance<double>(x, y) == Approx(outer.norm()).margin(1e-12));
  }
  // complex case against the dense oracle as well
  for (int t = 0; t < 300; ++t) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(5));
    const ComplexVector x = rng.complex_gaussian_vector(d);
    const ComplexVector y = rng.complex_gaussian_vector(d);
    const Eigen::MatrixXcd outer = x * x.adjoint() - y * y.adjoint();
    REQUIRE(hs_outer_distance<std::complex<double>>(x, y) == Approx(outer.norm()).margin(1e-12));
  }
}

TEST_CASE("hs_outer_distance symmetries", "[core]") {
  Rng rng(909);
  for (int t = 0; t < 100; ++t) {
    const RealVector x = rng.gaussian_vector(5);
    const RealVector y = rng.gaussian_vector(5);
    const double d1 = hs_outer_distance<double>(x, y);
    REQUIRE(hs_outer_distance<double>(y, x) == Approx(d1));
    REQUIRE(hs_outer_distance<double>(-x, y) == Approx(d1));
  }
}

TEST_CASE("HS sandwich inequality", "[core][property]") {
  Rng rng(111);
  for (int t = 0; t < 10000; ++t) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(8));
    const RealVector x = rng.gaussian_vector(d);
    const RealVector y = rng.gaussian_vector(d);
    const double hs = hs_outer_distance<double>(x, y);
    const double mid = (x - y).norm() * (x + y).norm();
    const double scale = std::max(1.0, mid);
    REQUIRE(hs <= mid + 1e-10 * scale);
    REQUIRE(mid <= std::sqrt(2.0) * hs + 1e-10 * scale);
  }
}

TEST_CASE("phase aligned distance", "[core]") {
  Rng rng(121);
  const RealVector x = rng.gaussian_vector(4);
  REQUIRE(phase_aligned_distance<double>(x, RealVector(-x)) == 0.0);

  ComplexVector cx = ComplexVector::Zero(3);
  cx[0] = 1.0;
  ComplexVector cy = ComplexVector::Zero(3);
  cy[0] = std::complex<double>(0.0, 1.0);
  REQUIRE(phase_aligned_distance<std::complex<double>>(cx, cy) == Approx(0.0).margin(1e-12));

  // against a dense phase-grid oracle
  for (int t = 0; t < 50; ++t) {
    const ComplexVector a = rng.complex_gaussian_vector(5);
    const ComplexVector b = rng.complex_gaussian_vector(5);
    double best = std::numeric_limits<double>::infinity();
    for (int g = 0; g < 3600; ++g) {
      const double th = 2.0 * EIGEN_PI * g / 3600.0;
      best = std::min(best, (a - std::polar(1.0, th) * b).norm());
    }
    REQUIRE(phase_aligned_distance<std::complex<double>>(a, b) == Approx(best).margin(1e-6));
  }
  for (int t = 0; t < 50; ++t) {
    const RealVector a = rng.gaussian_vector(5);
    const RealVector b = rng.gaussian_vector(5);
    REQUIRE(phase_aligned_distance<double>(a, b) == Approx(std::min((a - b).norm(), (a + b).norm())));
  }
}
