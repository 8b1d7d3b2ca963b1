#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "sigmak/symfun.hpp"

namespace sigmak::sampling {

/// Deterministic RNG wrapper. Normals come from Box-Muller on the raw
/// uniform stream so a fixed seed gives the same values on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {
    return std::generate_canonical<double, 53>(gen_);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Rejection sampler for Gamma_k: Gaussian proposals, optionally with
/// lognormal-inflated tails (tail > 0) for stress tests.
inline Eigen::VectorXd sample_gamma_k(int n, int k, Rng& rng, double tail = 0.0) {
  while (true) {
    Eigen::VectorXd kappa = rng.normal_vec(n);
    if (tail > 0.0) kappa *= std::exp(tail * rng.normal());
    if (symfun::in_gamma(k, kappa).in_cone) return kappa;
  }
}

/// d-dimensional Halton point (prime bases 2,3,5,...), index >= 0.
inline Eigen::VectorXd halton_point(int index, int dim) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23};
  Eigen::VectorXd p(dim);
  for (int d = 0; d < dim; ++d) {
    const int base = primes[d];
    double f = 1.0, x = 0.0;
    int i = index + 1;
    while (i > 0) {
      f /= base;
      x += f * (i % base);
      i /= base;
    }
    p[d] = x;
  }
  return p;
}

}  // namespace sigmak::sampling
