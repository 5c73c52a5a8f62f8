#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "qlcs/core.hpp"
#include "qlcs/linalg.hpp"
#include "qlcs/rng.hpp"

namespace qlcs {

// Quasi-linear measurement map A(x) = F(x) x with access to the factor F(x).
// Operators are immutable after construction; evaluate/factor are pure.
template <class Scalar>
class QuasiLinearOperator {
 public:
  using Vec = Vector<Scalar>;
  using Mat = DenseMatrix<Scalar>;

  virtual ~QuasiLinearOperator() = default;

  virtual Eigen::Index rows() const = 0;  // n measurements
  virtual Eigen::Index cols() const = 0;  // d signal entries

  virtual Vec evaluate(const Vec& x) const = 0;

  virtual bool supports_factor() const { return false; }
  virtual bool is_linear() const { return false; }

  virtual Mat factor(const Vec& /*x*/) const {
    throw std::logic_error("QuasiLinearOperator: factor not supported");
  }

  // F(z) * x. Default goes through the dense factor; operators with structure
  // override this with a cheaper path.
  virtual Vec factor_apply(const Vec& z, const Vec& x) const { return factor(z) * x; }

  // Restricted column block F(z)[:, cols].
  virtual Mat factor_columns(const Vec& z, const std::vector<Eigen::Index>& cols) const {
    const Mat f = factor(z);
    Mat out(rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = f.col(cols[c]);
    return out;
  }

 protected:
  void check_signal(const Vec& x) const {
    if (x.size() != cols()) throw std::invalid_argument("operator: signal length mismatch");
  }
};

enum class GaussianNormalize { none, by_sqrt_n };

// i.i.d. standard normal entries from the seeded stream, filled column-major;
// by_sqrt_n scales entries by 1/sqrt(n) so that E||Ax||^2 = ||x||^2.
inline Eigen::MatrixXd make_gaussian(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                                     GaussianNormalize normalize = GaussianNormalize::none) {
  if (n < 1 || d < 1) throw std::invalid_argument("make_gaussian: dimensions must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = rng.gaussian();
  if (normalize == GaussianNormalize::by_sqrt_n) m /= std::sqrt(static_cast<double>(n));
  return m;
}

template <class Scalar>
class LinearOperator final : public QuasiLinearOperator<Scalar> {
 public:
  using typename QuasiLinearOperator<Scalar>::Vec;
  using typename QuasiLinearOperator<Scalar>::Mat;

  explicit LinearOperator(Mat a) : a_(std::move(a)) {}

  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  bool supports_factor() const override { return true; }
  bool is_linear() const override { return true; }

  Vec evaluate(const Vec& x) const override {
    this->check_signal(x);
    return a_ * x;
  }
  Mat factor(const Vec&) const override { return a_; }
  Vec factor_apply(const Vec&, const Vec& x) const override { return a_ * x; }
  Mat factor_columns(const Vec&, const std::vector<Eigen::Index>& cols) const override {
    Mat out(a_.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = a_.col(cols[c]);
    return out;
  }

  const Mat& matrix() const { return a_; }

 private:
  Mat a_;
};

struct PerturbationProfile {
  std::function<double(double)> f;
  double bound = 1.0;      // sup_t |f(t)|
  double lipschitz = 1.0;  // Lipschitz constant of f
  std::string name;
};

// Default profile f(t) = 1/(1+t^2): bounded by 1, Lipschitz 3*sqrt(3)/8.
inline PerturbationProfile inverse_quadratic_profile() {
  PerturbationProfile p;
  p.f = [](double t) { return 1.0 / (1.0 + t * t); };
  p.bound = 1.0;
  p.lipschitz = 3.0 * std::sqrt(3.0) / 8.0;
  p.name = "inverse_quadratic";
  return p;
}

// Saturating profile f(t) = t^2/(1+t^2): the perturbation vanishes at the
// origin and grows with the signal norm. Same bound and Lipschitz constant
// as the default profile.
inline PerturbationProfile saturating_quadratic_profile() {
  PerturbationProfile p;
  p.f = [](double t) { return t * t / (1.0 + t * t); };
  p.bound = 1.0;
  p.lipschitz = 3.0 * std::sqrt(3.0) / 8.0;
  p.name = "saturating_quadratic";
  return p;
}

// A(x) = A1 x + eps * f(||x - x0||) * A2 x, a Lipschitz perturbation of a
// linear (typically RIP) matrix. F(x) = A1 + eps f(||x - x0||) A2.
class LipschitzPerturbedOperator final : public QuasiLinearOperator<double> {
 public:
  LipschitzPerturbedOperator(Eigen::MatrixXd a1, Eigen::MatrixXd a2, double epsilon,
                             Eigen::VectorXd x0, PerturbationProfile profile = inverse_quadratic_profile())
      : a1_(std::move(a1)), a2_(std::move(a2)), epsilon_(epsilon), x0_(std::move(x0)),
        profile_(std::move(profile)) {
    if (a2_.rows() != a1_.rows() || a2_.cols() != a1_.cols())
      throw std::invalid_argument("LipschitzPerturbedOperator: A1/A2 dimension mismatch");
    if (x0_.size() != a1_.cols())
      throw std::invalid_argument("LipschitzPerturbedOperator: x0 dimension mismatch");
  }

  Eigen::Index rows() const override { return a1_.rows(); }
  Eigen::Index cols() const override { return a1_.cols(); }
  bool supports_factor() const override { return true; }
  bool is_linear() const override { return epsilon_ == 0.0; }

  double coefficient_at(const Eigen::VectorXd& x) const {
    return epsilon_ * profile_.f((x - x0_).norm());
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const override {
    check_signal(x);
    if (epsilon_ == 0.0) return a1_ * x;  // bit-identical to the plain product
    return a1_ * x + coefficient_at(x) * (a2_ * x);
  }

  Eigen::MatrixXd factor(const Eigen::VectorXd& x) const override {
    check_signal(x);
    if (epsilon_ == 0.0) return a1_;
    return a1_ + coefficient_at(x) * a2_;
  }

  Eigen::VectorXd factor_apply(const Eigen::VectorXd& z, const Eigen::VectorXd& x) const override {
    if (epsilon_ == 0.0) return a1_ * x;
    return a1_ * x + coefficient_at(z) * (a2_ * x);
  }

  const Eigen::MatrixXd& a1() const { return a1_; }
  const Eigen::MatrixXd& a2() const { return a2_; }
  double epsilon() const { return epsilon_; }
  const PerturbationProfile& profile() const { return profile_; }

 private:
  Eigen::MatrixXd a1_, a2_;
  double epsilon_;
  Eigen::VectorXd x0_;
  PerturbationProfile profile_;
};

enum class PhaseVectorKind { gaussian, unit_sphere };

// Phase retrieval map A(x)_i = |<a_i, x>|^2 with A_i = a_i a_i*; the factor
// has i-th row x* A_i, so F(x) x = A(x).
template <class Scalar>
class Rank1PhaseOperator final : public QuasiLinearOperator<Scalar> {
 public:
  using typename QuasiLinearOperator<Scalar>::Vec;
  using typename QuasiLinearOperator<Scalar>::Mat;

  explicit Rank1PhaseOperator(Mat measurement_vectors) : vectors_(std::move(measurement_vectors)) {
    if (vectors_.rows() < 1 || vectors_.cols() < 1)
      throw std::invalid_argument("Rank1PhaseOperator: dimensions must be >= 1");
  }

  Rank1PhaseOperator(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                     PhaseVectorKind kind = PhaseVectorKind::gaussian)
      : vectors_(n, d) {
    if (n < 1 || d < 1) throw std::invalid_argument("Rank1PhaseOperator: dimensions must be >= 1");
    Rng rng(seed);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        if constexpr (is_complex_v<Scalar>) {
          vectors_(i, j) = rng.complex_gaussian();
        } else {
          vectors_(i, j) = rng.gaussian();
        }
      }
      if (kind == PhaseVectorKind::unit_sphere) vectors_.row(i).normalize();
    }
  }

  Eigen::Index rows() const override { return vectors_.rows(); }
  Eigen::Index cols() const override { return vectors_.cols(); }
  bool supports_factor() const override { return true; }

  Vec evaluate(const Vec& x) const override {
    this->check_signal(x);
    const Vec w = vectors_.conjugate() * x;  // w_i = <a_i, x>
    Vec out(rows());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = Scalar(std::norm(w[i]));
    return out;
  }

  Mat factor(const Vec& x) const override {
    this->check_signal(x);
    const Vec w = vectors_.conjugate() * x;
    return w.conjugate().asDiagonal() * vectors_.conjugate();
  }

  // Rows are the measurement vectors a_i.
  const Mat& measurement_vectors() const { return vectors_; }

 private:
  Mat vectors_;
};

// A_i = (d/m) P_{V_i} with V_i Haar-random m-dimensional subspaces;
// A(x)_i = (d/m) ||P_{V_i} x||^2.
class RankMProjectorPhaseOperator final : public QuasiLinearOperator<double> {
 public:
  RankMProjectorPhaseOperator(Eigen::Index n, Eigen::Index d, Eigen::Index m, std::uint64_t seed)
      : d_(d), m_(m) {
    if (n < 1 || d < 1) throw std::invalid_argument("RankMProjectorPhaseOperator: dimensions must be >= 1");
    if (m < 1 || m > d) throw std::invalid_argument("RankMProjectorPhaseOperator: need 1 <= m <= d");
    Rng rng(seed);
    bases_.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::MatrixXd g(d, m);
      for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index r = 0; r < d; ++r) g(r, c) = rng.gaussian();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      bases_.push_back(qr.householderQ() * Eigen::MatrixXd::Identity(d, m));
    }
  }

  Eigen::Index rows() const override { return static_cast<Eigen::Index>(bases_.size()); }
  Eigen::Index cols() const override { return d_; }
  bool supports_factor() const override { return true; }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const override {
    check_signal(x);
    const double scale = static_cast<double>(d_) / static_cast<double>(m_);
    Eigen::VectorXd out(rows());
    for (Eigen::Index i = 0; i < rows(); ++i)
      out[i] = scale * (bases_[static_cast<std::size_t>(i)].transpose() * x).squaredNorm();
    return out;
  }

  Eigen::MatrixXd factor(const Eigen::VectorXd& x) const override {
    check_signal(x);
    const double scale = static_cast<double>(d_) / static_cast<double>(m_);
    Eigen::MatrixXd f(rows(), d_);
    for (Eigen::Index i = 0; i < rows(); ++i) {
      const Eigen::MatrixXd& q = bases_[static_cast<std::size_t>(i)];
      f.row(i) = scale * (q * (q.transpose() * x)).transpose();
    }
    return f;
  }

  Eigen::MatrixXd projector(Eigen::Index i) const {
    const Eigen::MatrixXd& q = bases_.at(static_cast<std::size_t>(i));
    return q * q.transpose();
  }

 private:
  Eigen::Index d_, m_;
  std::vector<Eigen::MatrixXd> bases_;
};

// Random linear map on d x d matrices, cal(A)(X) = (1/sqrt(n)) (trace(A_i^T X))_i
// with independent Gaussian A_i. Inputs are given in factored form, as a sum
// of at most two weighted outer products w * v v^T.
class NearlyIsometricMap {
 public:
  struct Term {
    double weight;
    Eigen::VectorXd vec;
  };

  NearlyIsometricMap(Eigen::Index n, Eigen::Index d, std::uint64_t seed) : d_(d) {
    if (n < 1 || d < 1) throw std::invalid_argument("NearlyIsometricMap: dimensions must be >= 1");
    Rng rng(seed);
    mats_.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::MatrixXd a(d, d);
      for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index r = 0; r < d; ++r) a(r, c) = rng.gaussian();
      mats_.push_back(std::move(a));
    }
  }

  Eigen::Index rows() const { return static_cast<Eigen::Index>(mats_.size()); }
  Eigen::Index dim() const { return d_; }

  Eigen::VectorXd apply(const std::vector<Term>& terms) const {
    if (terms.size() > 2) throw std::invalid_argument("NearlyIsometricMap: rank of factored input exceeds 2");
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows()));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows());
    for (const Term& t : terms) {
      if (t.vec.size() != d_) throw std::invalid_argument("NearlyIsometricMap: term dimension mismatch");
      for (Eigen::Index i = 0; i < rows(); ++i)
        out[i] += t.weight * t.vec.dot(mats_[static_cast<std::size_t>(i)] * t.vec);
    }
    return scale * out;
  }

  const Eigen::MatrixXd& matrix(Eigen::Index i) const { return mats_.at(static_cast<std::size_t>(i)); }

 private:
  Eigen::Index d_;
  std::vector<Eigen::MatrixXd> mats_;
};

// A(x) = cal(A)(x x^T) as a quasi-linear operator; no factor is exposed.
class NearlyIsometricOperator final : public QuasiLinearOperator<double> {
 public:
  NearlyIsometricOperator(Eigen::Index n, Eigen::Index d, std::uint64_t seed) : map_(n, d, seed) {}
  explicit NearlyIsometricOperator(NearlyIsometricMap map) : map_(std::move(map)) {}

  Eigen::Index rows() const override { return map_.rows(); }
  Eigen::Index cols() const override { return map_.dim(); }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const override {
    check_signal(x);
    return map_.apply({{1.0, x}});
  }

  const NearlyIsometricMap& map() const { return map_; }

 private:
  NearlyIsometricMap map_;
};

struct AsteroParams {
  Eigen::Index n = 13;  // sensor windows
  Eigen::Index d = 800; // Fourier coefficients
  double theta = 0.3;   // inclination angle
  double window_lo = -2.5;  // intensity range covered by the window partition
  double window_hi = 2.5;
  double limb_coefficient = 0.6;
  double limb_floor = 0.2;
  std::uint64_t seed = 0;  // kept for ensemble bookkeeping; the model is deterministic
};

// Star contour measurement model: the shape u(phi) = sum_i x_i sin((2*pi*phi + theta) i)
// is sampled at phi = j/d, attenuated by a limb-darkening factor f_j, and each
// sensor integrates the intensity it is sensitive to through a raised-cosine
// partition of unity omega_l over the intensity axis:
//   b_l = sqrt(pi)/(2d+1) * sum_j omega_l(f_j u(j/d)) f_j u(j/d).
class AsteroseismologyOperator final : public QuasiLinearOperator<double> {
 public:
  static constexpr std::size_t kWindowTable = 2048;

  explicit AsteroseismologyOperator(AsteroParams params) : p_(params) {
    if (p_.n < 1) throw std::invalid_argument("AsteroseismologyOperator: need n >= 1");
    if (p_.d < 1) throw std::invalid_argument("AsteroseismologyOperator: need d >= 1");
    const Eigen::Index samples = 2 * p_.d + 1;
    limb_.resize(samples);
    for (Eigen::Index jj = 0; jj < samples; ++jj) {
      const double j = static_cast<double>(jj - p_.d);
      const double f = 1.0 - p_.limb_coefficient * (1.0 - std::cos(EIGEN_PI * j / static_cast<double>(p_.d)));
      limb_[jj] = std::min(1.0, std::max(p_.limb_floor, f));
    }
    sines_.resize(samples, p_.d);
    for (Eigen::Index jj = 0; jj < samples; ++jj) {
      const double phase = 2.0 * EIGEN_PI * static_cast<double>(jj - p_.d) / static_cast<double>(p_.d) + p_.theta;
      for (Eigen::Index i = 0; i < p_.d; ++i)
        sines_(jj, i) = std::sin(phase * static_cast<double>(i + 1));
    }
    scale_ = std::sqrt(EIGEN_PI) / static_cast<double>(samples);
  }

  Eigen::Index rows() const override { return p_.n; }
  Eigen::Index cols() const override { return p_.d; }
  bool supports_factor() const override { return true; }

  // cos^2(pi q / 2) on [0, 1] through a symmetric interpolation table; the
  // symmetry T(1-q) = 1 - T(q) keeps adjacent window weights summing to one.
  static double raised_cosine_weight(double q) {
    static const auto table = [] {
      std::array<double, kWindowTable + 1> t{};
      for (std::size_t i = 0; i <= kWindowTable / 2; ++i) {
        const double c = std::cos(EIGEN_PI * (static_cast<double>(i) / kWindowTable) / 2.0);
        t[i] = c * c;
        t[kWindowTable - i] = 1.0 - c * c;
      }
      return t;
    }();
    const double u = q * kWindowTable;
    const auto i = static_cast<std::size_t>(u);
    if (i >= kWindowTable) return 0.0;
    const double fr = u - static_cast<double>(i);
    return table[i] + fr * (table[i + 1] - table[i]);
  }

  // Raised-cosine window l evaluated at intensity t. The outermost windows are
  // clamped to 1 beyond their centers, so sum_l omega_l(t) = 1 for every t.
  double window(Eigen::Index l, double t) const {
    if (p_.n == 1) return 1.0;
    const double h = (p_.window_hi - p_.window_lo) / static_cast<double>(p_.n - 1);
    const double center = p_.window_lo + static_cast<double>(l) * h;
    if (l == 0 && t <= center) return 1.0;
    if (l == p_.n - 1 && t >= center) return 1.0;
    const double dt = std::abs(t - center);
    if (dt >= h) return 0.0;
    return raised_cosine_weight(dt / h);
  }

  double limb_factor(Eigen::Index j) const { return limb_[j + p_.d]; }  // j in [-d, d]

  // At any intensity at most two adjacent windows are nonzero; returns the
  // index of the left one and its weight (the right neighbour carries the
  // complement). Agrees with window() everywhere.
  std::pair<Eigen::Index, double> window_bracket(double t) const {
    if (p_.n == 1) return {0, 1.0};
    const double h = (p_.window_hi - p_.window_lo) / static_cast<double>(p_.n - 1);
    const double pos = (t - p_.window_lo) / h;
    if (pos <= 0.0) return {0, 1.0};
    if (pos >= static_cast<double>(p_.n - 1)) return {p_.n - 1, 1.0};
    const double fl = std::floor(pos);
    const Eigen::Index left = static_cast<Eigen::Index>(fl);
    return {left, raised_cosine_weight(pos - fl)};
  }

  // u(j/d) for all samples; only the nonzeros of x contribute.
  Eigen::VectorXd sample_values(const Eigen::VectorXd& x) const {
    check_signal(x);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(sines_.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) u += x[i] * sines_.col(i);
    return u;
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const override { return factor_apply(x, x); }

  Eigen::VectorXd factor_apply(const Eigen::VectorXd& z, const Eigen::VectorXd& x) const override {
    const Eigen::VectorXd uz = sample_values(z);
    const Eigen::VectorXd ux = (z.data() == x.data()) ? uz : sample_values(x);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p_.n);
    for (Eigen::Index jj = 0; jj < uz.size(); ++jj) {
      const double f = limb_[jj];
      const double weighted = f * ux[jj];
      if (weighted == 0.0) continue;
      const auto [left, w] = window_bracket(f * uz[jj]);
      out[left] += w * weighted;
      if (w < 1.0) out[left + 1] += (1.0 - w) * weighted;
    }
    return scale_ * out;
  }

  Eigen::MatrixXd factor_columns(const Eigen::VectorXd& z,
                                 const std::vector<Eigen::Index>& cols) const override {
    const Eigen::VectorXd uz = sample_values(z);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p_.n, static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index jj = 0; jj < uz.size(); ++jj) {
      const double f = limb_[jj];
      const auto [left, w] = window_bracket(f * uz[jj]);
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const double fs = f * sines_(jj, cols[c]);
        out(left, static_cast<Eigen::Index>(c)) += w * fs;
        if (w < 1.0) out(left + 1, static_cast<Eigen::Index>(c)) += (1.0 - w) * fs;
      }
    }
    return scale_ * out;
  }

  Eigen::MatrixXd factor(const Eigen::VectorXd& z) const override {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(p_.d));
    for (Eigen::Index i = 0; i < p_.d; ++i) all[static_cast<std::size_t>(i)] = i;
    return factor_columns(z, all);
  }

  const AsteroParams& params() const { return p_; }

 private:
  AsteroParams p_;
  Eigen::VectorXd limb_;    // f_j, index j + d
  Eigen::MatrixXd sines_;   // sin((2 pi j/d + theta)(i+1)), (2d+1) x d
  double scale_ = 0.0;
};

}  // namespace qlcs
