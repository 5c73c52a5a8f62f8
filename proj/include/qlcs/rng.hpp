#pragma once

#include <cstdint>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace qlcs {

// One splitmix64 step. Used to whiten user seeds and to derive independent
// per-cell / per-trial stream seeds, so results do not depend on scheduling.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64_next(s);
  s ^= a + 0x632be59bd9b4e019ULL;
  h ^= splitmix64_next(s);
  s ^= b + 0x9e6c63d0876a9a47ULL;
  h ^= splitmix64_next(s);
  s ^= c + 0xbf58476d1ce4e5b9ULL;
  h ^= splitmix64_next(s);
  return h;
}

// Seeded random stream. The generator algorithm is mt19937_64, named in the
// experiment config files; Gaussian variates use the Box-Muller transform
// rather than library distributions, which are not portable across stdlibs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = gen_();
      if (r >= threshold) return r % n;
    }
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * EIGEN_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Standard complex Gaussian, E|z|^2 = 1.
  std::complex<double> complex_gaussian() {
    return {gaussian() * M_SQRT1_2, gaussian() * M_SQRT1_2};
  }

  Eigen::VectorXd gaussian_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = gaussian();
    return v;
  }

  Eigen::VectorXcd complex_gaussian_vector(Eigen::Index d) {
    Eigen::VectorXcd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = complex_gaussian();
    return v;
  }

  // k distinct indices from {0..d-1}, ascending (partial Fisher-Yates).
  std::vector<Eigen::Index> sample_support(Eigen::Index d, Eigen::Index k) {
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto j = i + static_cast<Eigen::Index>(below(static_cast<std::uint64_t>(d - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    std::vector<Eigen::Index> out(pool.begin(), pool.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qlcs
