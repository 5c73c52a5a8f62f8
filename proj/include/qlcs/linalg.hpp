#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "qlcs/core.hpp"
#include "qlcs/rng.hpp"

namespace qlcs {

struct SpectralNormEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;

  operator double() const { return value; }
};

// Power iteration on M*M with a deterministic seeded start vector.
template <class Scalar>
SpectralNormEstimate spectral_norm(const DenseMatrix<Scalar>& m, double rel_tol = 1e-6,
                                   int max_iters = 10000, std::uint64_t seed = 0x5eed5eedULL) {
  SpectralNormEstimate est;
  if (m.size() == 0) {
    est.converged = true;
    return est;
  }
  Rng rng(seed);
  Vector<Scalar> v(m.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if constexpr (is_complex_v<Scalar>) {
      v[i] = rng.complex_gaussian();
    } else {
      v[i] = rng.gaussian();
    }
  }
  double vn = v.norm();
  if (vn == 0.0) vn = 1.0;
  v /= vn;

  double sigma_prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    Vector<Scalar> mv = m * v;
    const double sigma = mv.norm();
    est.iterations = it;
    est.value = sigma;
    if (sigma == 0.0) {  // v in the null space of a nonzero matrix is measure-zero; treat as zero norm
      est.converged = true;
      return est;
    }
    Vector<Scalar> w = m.adjoint() * mv;
    v = w / w.norm();
    if (it > 1 && std::abs(sigma - sigma_prev) <= rel_tol * sigma) {
      est.converged = true;
      return est;
    }
    sigma_prev = sigma;
  }
  return est;  // best estimate, converged == false
}

}  // namespace qlcs
