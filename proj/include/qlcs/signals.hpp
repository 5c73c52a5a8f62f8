#pragma once

#include <Eigen/Core>

#include "qlcs/rng.hpp"

namespace qlcs {

inline Eigen::VectorXd sparse_gaussian_signal(Eigen::Index d, Eigen::Index k, Rng& rng) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (const Eigen::Index i : rng.sample_support(d, k)) x[i] = rng.gaussian();
  if (x.norm() == 0.0) x[rng.sample_support(d, 1)[0]] = 1.0;
  return x;
}

// k-sparse with rapidly decaying magnitudes (consecutive ratio at most
// `ratio`), random signs and support.
inline Eigen::VectorXd sparse_decaying_signal(Eigen::Index d, Eigen::Index k, double ratio, Rng& rng) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  double mag = 1.0;
  for (const Eigen::Index i : rng.sample_support(d, k)) {
    x[i] = mag * (rng.uniform01() < 0.5 ? -1.0 : 1.0);
    mag *= ratio * (0.6 + 0.4 * rng.uniform01());
  }
  return x;
}

inline Eigen::VectorXd scaled_to_norm(Eigen::VectorXd x, double norm) {
  const double n = x.norm();
  if (n > 0.0) x *= norm / n;
  return x;
}

}  // namespace qlcs
