#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace qlcs {

template <class Scalar>
using Vector = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RealVector = Vector<double>;
using ComplexVector = Vector<std::complex<double>>;

template <class Scalar>
inline constexpr bool is_complex_v = Eigen::NumTraits<Scalar>::IsComplex;

// Magnitudes sorted nonincreasingly together with the rank -> original-index
// map. Ties are broken by ascending original index, so the rearrangement is
// reproducible.
struct Rearrangement {
  Eigen::VectorXd values;                   // r_1(x) >= r_2(x) >= ...
  std::vector<Eigen::Index> permutation;    // permutation[rank] = original index
};

template <class Scalar>
Rearrangement rearrange(const Vector<Scalar>& x) {
  const Eigen::Index d = x.size();
  if (d < 1) throw std::invalid_argument("rearrange: empty signal");
  Rearrangement r;
  r.permutation.resize(static_cast<std::size_t>(d));
  std::iota(r.permutation.begin(), r.permutation.end(), Eigen::Index{0});
  Eigen::VectorXd mag = x.cwiseAbs().template cast<double>();
  std::stable_sort(r.permutation.begin(), r.permutation.end(),
                   [&mag](Eigen::Index a, Eigen::Index b) { return mag[a] > mag[b]; });
  r.values.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) r.values[i] = mag[r.permutation[static_cast<std::size_t>(i)]];
  return r;
}

template <class Scalar>
std::vector<Eigen::Index> support(const Vector<Scalar>& x) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] != Scalar(0)) s.push_back(i);
  return s;
}

template <class Scalar>
Eigen::Index l0_norm(const Vector<Scalar>& x) {
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] != Scalar(0)) ++c;
  return c;
}

// Best k-term approximation x_{{k}}: keeps the k largest-magnitude entries
// (ties by ascending index), zeros elsewhere.
template <class Scalar>
Vector<Scalar> best_k_approx(const Vector<Scalar>& x, Eigen::Index k) {
  if (k < 0 || k > x.size()) throw std::invalid_argument("best_k_approx: k out of range");
  const Rearrangement r = rearrange(x);
  Vector<Scalar> out = Vector<Scalar>::Zero(x.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index idx = r.permutation[static_cast<std::size_t>(i)];
    out[idx] = x[idx];
  }
  return out;
}

// Membership in the class D_kappa of kappa-rapidly decaying vectors:
// r_{j+1}(x) <= kappa * r_j(x) for all j. A zero r_j makes the condition hold
// (0 <= kappa*0), so exactly sparse vectors are members.
template <class Scalar>
bool in_decay_class(const Vector<Scalar>& x, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("in_decay_class: kappa must be in (0,1)");
  const Rearrangement r = rearrange(x);
  for (Eigen::Index j = 0; j + 1 < r.values.size(); ++j)
    if (r.values[j + 1] > kappa * r.values[j]) return false;
  return true;
}

struct TailBounds {
  double lhs;     // ||x - x_{{j}}||
  double bound1;  // r_{j+1}(x) / sqrt(1-kappa^2)
  double bound2;  // r_j(x) * kappa / sqrt(1-kappa^2)
};

// Evaluates both sides of the tail estimate for decaying vectors; callers
// assert lhs <= bound1 <= bound2 (non-strict, to absorb all-zero tails).
template <class Scalar>
TailBounds decay_tail_bound_check(const Vector<Scalar>& x, Eigen::Index j, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("decay_tail_bound_check: kappa must be in (0,1)");
  if (j < 1 || j >= x.size()) throw std::invalid_argument("decay_tail_bound_check: need 1 <= j < d");
  if (!in_decay_class(x, kappa)) throw std::domain_error("decay_tail_bound_check: x is not kappa-rapidly decaying");
  const Rearrangement r = rearrange(x);
  const double denom = std::sqrt(1.0 - kappa * kappa);
  TailBounds t;
  t.lhs = (x - best_k_approx(x, j)).norm();
  t.bound1 = r.values[j] / denom;
  t.bound2 = r.values[j - 1] * kappa / denom;
  return t;
}

template <class Scalar>
double lp_norm(const Vector<Scalar>& v, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (p == 2.0) return v.norm();
  if (p == 1.0) return v.cwiseAbs().sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), p);
  return std::pow(acc, 1.0 / p);
}

// ||xx* - yy*||_HS without forming d x d matrices, via the Gram identity
// ||xx* - yy*||_HS^2 = ||x||^4 + ||y||^4 - 2|<x,y>|^2.
template <class Scalar>
double hs_outer_distance(const Vector<Scalar>& x, const Vector<Scalar>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("hs_outer_distance: length mismatch");
  const double nx2 = x.squaredNorm();
  const double ny2 = y.squaredNorm();
  const double ip = std::abs(x.dot(y));
  const double sq = nx2 * nx2 + ny2 * ny2 - 2.0 * ip * ip;
  return std::sqrt(std::max(sq, 0.0));
}

// Distance up to a global sign (real) or unimodular factor (complex).
template <class Scalar>
double phase_aligned_distance(const Vector<Scalar>& x, const Vector<Scalar>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("phase_aligned_distance: length mismatch");
  if constexpr (is_complex_v<Scalar>) {
    const double sq = x.squaredNorm() + y.squaredNorm() - 2.0 * std::abs(x.dot(y));
    return std::sqrt(std::max(sq, 0.0));
  } else {
    return std::min((x - y).norm(), (x + y).norm());
  }
}

}  // namespace qlcs
