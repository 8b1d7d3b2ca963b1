#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sigmak/sampling.hpp"
#include "sigmak/symfun.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace sigmak;

namespace {

// Independent oracle: sigma_k by explicit subset enumeration.
double sigma_enum(int k, const VectorXd& kappa) {
  const int n = static_cast<int>(kappa.size());
  if (k == 0) return 1.0;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  double total = 0.0;
  while (true) {
    double prod = 1.0;
    for (int i : idx) prod *= kappa[i];
    total += prod;
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int q = pos + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
  return total;
}

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("sigma matches hand values and the enumeration oracle") {
  CHECK(symfun::sigma(2, vec({1, 1, 1})) == doctest::Approx(3.0));
  CHECK(symfun::sigma(2, vec({1, 2, 3})) == doctest::Approx(11.0));
  // Frozen from the subset-enumeration oracle: sigma_3(2,3,5,7) = 247.
  CHECK(sigma_enum(3, vec({2, 3, 5, 7})) == doctest::Approx(247.0));
  CHECK(symfun::sigma(3, vec({2, 3, 5, 7})) == doctest::Approx(247.0));

  sampling::Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 8.0);
    const VectorXd kappa = rng.normal_vec(n) * 2.0;
    for (int k = 0; k <= n; ++k) {
      const double a = symfun::sigma(k, kappa);
      const double b = sigma_enum(k, kappa);
      CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)));
    }
  }
}

TEST_CASE("sigma rejects out-of-range order and bad input") {
  CHECK_THROWS_AS(symfun::sigma(4, vec({1, 2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(symfun::sigma(-1, vec({1, 2, 3})), std::invalid_argument);
  VectorXd bad = vec({1, 2, 3});
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(symfun::sigma(2, bad), std::invalid_argument);
}

TEST_CASE("sigma_grad: deleted-entry definition and Euler identity") {
  const VectorXd g = symfun::sigma_grad(2, vec({1, 2, 3}));
  CHECK(g[0] == doctest::Approx(5.0));
  CHECK(g[1] == doctest::Approx(4.0));
  CHECK(g[2] == doctest::Approx(3.0));

  const VectorXd ones = symfun::sigma_grad(1, vec({-0.3, 7.0, 2.5}));
  CHECK((ones - VectorXd::Ones(3)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  // Euler: sum_i kappa_i sigma_{k-1}(kappa|i) = k sigma_k.
  const VectorXd kappa = vec({1, 2, 3});
  CHECK(kappa.dot(g) == doctest::Approx(2.0 * symfun::sigma(2, kappa)));
  CHECK_THROWS_AS(symfun::sigma_grad(0, kappa), std::invalid_argument);
}

TEST_CASE("sigma_hess: deleted-pair definition, zero diagonal, symmetry") {
  const MatrixXd h2 = symfun::sigma_hess(2, vec({1, 2, 3}));
  for (int i = 0; i < 3; ++i) {
    CHECK(h2(i, i) == 0.0);
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(h2(i, j) == doctest::Approx(1.0));
    }
  }
  const MatrixXd h3 = symfun::sigma_hess(3, vec({1, 2, 3}));
  CHECK(h3(0, 1) == doctest::Approx(3.0));

  sampling::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 6.0);
    const int k = 2 + static_cast<int>(rng.uniform() * (n - 1));
    const VectorXd kappa = rng.normal_vec(n);
    const MatrixXd h = symfun::sigma_hess(k, kappa);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(symfun::sigma_hess(1, vec({1, 2})), std::invalid_argument);
}

TEST_CASE("in_gamma evaluates the cone chain") {
  const auto r2 = symfun::in_gamma(2, vec({3, 2, -1}));
  CHECK(r2.in_cone);
  CHECK(r2.sigmas[0] == doctest::Approx(4.0));
  CHECK(r2.sigmas[1] == doctest::Approx(1.0));

  const auto r3 = symfun::in_gamma(3, vec({3, 2, -1}));
  CHECK_FALSE(r3.in_cone);
  CHECK(r3.sigmas[2] == doctest::Approx(-6.0));

  CHECK(symfun::in_gamma(4, vec({1, 2, 0.5, 3})).in_cone);
}

TEST_CASE("maclaurin_chain values and monotonicity") {
  const VectorXd chain = symfun::maclaurin_chain(3, vec({1, 2, 3}));
  CHECK(chain[0] == doctest::Approx(2.0));
  CHECK(chain[1] == doctest::Approx(std::sqrt(11.0 / 3.0)));
  CHECK(chain[2] == doctest::Approx(std::pow(6.0, 1.0 / 3.0)));

  // Equality case: constant vectors.
  for (double c : {0.5, 1.0, 2.0}) {
    const VectorXd chain_c = symfun::maclaurin_chain(4, VectorXd::Constant(4, c));
    for (int j = 0; j < 4; ++j) CHECK(chain_c[j] == doctest::Approx(c).epsilon(1e-13));
  }

  sampling::Rng rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 2 + trial % 5;
    const int k = 1 + trial % n;
    const VectorXd kappa = sampling::sample_gamma_k(n, k, rng);
    const VectorXd chain_r = symfun::maclaurin_chain(k, kappa);
    for (int j = 1; j < k; ++j) {
      CHECK(chain_r[j] <= chain_r[j - 1] + 1e-12);
    }
  }

  CHECK_THROWS_AS(symfun::maclaurin_chain(3, vec({3, 2, -1})), symfun::ConeViolation);
}

TEST_CASE("sigma_of_matrix: principal minors match the eigenvalue oracle") {
  MatrixXd d = vec({1, 2, 3}).asDiagonal();
  CHECK(symfun::sigma_of_matrix(2, d) == doctest::Approx(11.0));

  sampling::Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5;
    MatrixXd a = MatrixXd::NullaryExpr(n, n, [&](int, int) { return rng.normal(); });
    a = 0.5 * (a + a.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    const VectorXd ev = es.eigenvalues();
    for (int k = 1; k <= n; ++k) {
      const double minors = symfun::sigma_of_matrix(k, a);
      const double from_eigs = symfun::sigma(k, ev);
      CHECK(std::abs(minors - from_eigs) <= 1e-10 * (1.0 + std::abs(from_eigs)));
    }
    CHECK(symfun::sigma_of_matrix(n, a) == doctest::Approx(a.determinant()));
  }

  MatrixXd skew(2, 2);
  skew << 0, 1, -1, 0;
  CHECK_THROWS_AS(symfun::sigma_of_matrix(1, skew), std::invalid_argument);
}

TEST_CASE("newton_tensor: diagonal reduction and finite-difference oracle") {
  MatrixXd d = vec({1, 2, 3}).asDiagonal();
  const auto t1 = symfun::newton_tensor(1, d);
  CHECK(t1.matrix(0, 0) == doctest::Approx(5.0));
  CHECK(t1.matrix(1, 1) == doctest::Approx(4.0));
  CHECK(t1.matrix(2, 2) == doctest::Approx(3.0));
  CHECK(std::abs(t1.matrix(0, 1)) < 1e-14);

  MatrixXd any = MatrixXd::Random(3, 3);
  any = 0.5 * (any + any.transpose()).eval();
  const auto t0 = symfun::newton_tensor(0, any);
  CHECK((t0.matrix - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

  // Central finite differences of sigma_of_matrix(m+1, .) along symmetric
  // perturbations E_ij + E_ji; off-diagonal FD equals 2 T_ij.
  sampling::Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4;
    MatrixXd a = MatrixXd::NullaryExpr(n, n, [&](int, int) { return rng.normal(); });
    a = 0.5 * (a + a.transpose()).eval();
    for (int m : {1, 2}) {
      const auto t = symfun::newton_tensor(m, a);
      const double eps = 1e-6;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          MatrixXd e = MatrixXd::Zero(n, n);
          e(i, j) += 1.0;
          e(j, i) += 1.0;
          if (i == j) e(i, i) = 1.0;
          const double fp = symfun::sigma_of_matrix(m + 1, a + eps * e);
          const double fm = symfun::sigma_of_matrix(m + 1, a - eps * e);
          const double fd = (fp - fm) / (2.0 * eps);
          const double analytic = (i == j) ? t.matrix(i, i) : 2.0 * t.matrix(i, j);
          CHECK(std::abs(fd - analytic) <= 1e-6 * (1.0 + std::abs(analytic)));
        }
      }
      // Contraction identity: tr(T_m A) = (m+1) sigma_{m+1}(A).
      CHECK((t.matrix * a).trace() ==
            doctest::Approx((m + 1) * symfun::sigma_of_matrix(m + 1, a)));
    }
  }

  CHECK_THROWS_AS(symfun::newton_tensor(4, any), std::invalid_argument);
}

TEST_CASE("lu_quadratic: hand-evaluated cases") {
  CHECK(symfun::lu_quadratic(2, vec({1, 1, 1}), vec({0, 0, 0})) == doctest::Approx(0.0));

  // k = 1: zero Hessian, value reduces to (sum xi)^2 / sigma_1^2 >= 0.
  const VectorXd kappa = vec({2, 1, 0.5});
  const VectorXd xi = vec({0.3, -1.2, 0.4});
  const double s1 = symfun::sigma(1, kappa);
  const double expected = std::pow(xi.sum(), 2) / (s1 * s1);
  CHECK(symfun::lu_quadratic(1, kappa, xi) == doctest::Approx(expected));

  // k=2, n=3, kappa = (1,1,1), xi = e_1: hand value 4/9.
  CHECK(symfun::lu_quadratic(2, vec({1, 1, 1}), vec({1, 0, 0})) ==
        doctest::Approx(4.0 / 9.0));

  CHECK_THROWS_AS(symfun::lu_quadratic(3, vec({3, 2, -1}), vec({1, 0, 0})),
                  symfun::ConeViolation);
}

TEST_CASE("symmetric-function identities on random cone samples") {
  sampling::Rng rng(101);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + trial % 5;
    const int k = 1 + trial % n;
    const VectorXd kappa = sampling::sample_gamma_k(n, k, rng);
    const double sk = symfun::sigma(k, kappa);
    const VectorXd g = symfun::sigma_grad(k, kappa);

    // Euler identity.
    CHECK(std::abs(kappa.dot(g) - k * sk) <= 1e-12 * (1.0 + std::abs(sk)));

    // Trace identity: sum_i sigma_{k-1}(kappa|i) = (n-k+1) sigma_{k-1}.
    const double skm1 = symfun::sigma(k - 1, kappa);
    CHECK(std::abs(g.sum() - (n - k + 1) * skm1) <= 1e-12 * (1.0 + std::abs(skm1)));

    // Expansion identity per index, with the deleted-entry tail.
    for (int i = 0; i < n; ++i) {
      VectorXd rest(n - 1);
      for (int q = 0, w = 0; q < n; ++q) {
        if (q != i) rest[w++] = kappa[q];
      }
      const double tail = (k <= n - 1) ? symfun::sigma(k, rest) : 0.0;
      CHECK(std::abs(sk - (kappa[i] * g[i] + tail)) <= 1e-12 * (1.0 + std::abs(sk)));
    }

    // Ellipticity: all derivative components strictly positive on Gamma_k.
    CHECK(g.minCoeff() > 0.0);

    // Dominant-derivative bound on the sorted copy.
    VectorXd sorted = kappa;
    std::sort(sorted.data(), sorted.data() + n, std::greater<double>());
    const VectorXd gs = symfun::sigma_grad(k, sorted);
    CHECK(gs[0] * sorted[0] >= (static_cast<double>(k) / n) * sk - 1e-12 * (1.0 + std::abs(sk)));

    // Negative-entry lower bound.
    CHECK(sorted[n - 1] >= -(static_cast<double>(n - k) / k) * sorted[0] - 1e-10);

    // Derivative at the minimal entry dominates the average.
    if (sorted[n - 1] <= 0.0) {
      CHECK(gs[n - 1] >= gs.sum() / n - 1e-12 * (1.0 + gs.sum()));
    }
  }
}

TEST_CASE("midpoint concavity of sigma_k^{1/k} on cone pairs") {
  sampling::Rng rng(303);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 2 + trial % 5;
    const int k = 1 + trial % n;
    const VectorXd a = sampling::sample_gamma_k(n, k, rng);
    const VectorXd b = sampling::sample_gamma_k(n, k, rng);
    const double lhs = std::pow(symfun::sigma(k, 0.5 * (a + b)), 1.0 / k);
    const double rhs = 0.5 * (std::pow(symfun::sigma(k, a), 1.0 / k) +
                              std::pow(symfun::sigma(k, b), 1.0 / k));
    CHECK(lhs >= rhs - 1e-12);
  }
}
