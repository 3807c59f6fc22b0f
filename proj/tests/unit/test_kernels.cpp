#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "kuq/errors.hpp"
#include "kuq/kernels.hpp"
#include "kuq/rng.hpp"

using namespace kuq;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd pt(double x) {
  VectorXd v(1);
  v[0] = x;
  return v;
}

MatrixXd random_psd(int n, std::uint64_t seed) {
  SplitMix64 gen(seed);
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = gen.gaussian();
  return (a * a.transpose()).eval();
}

}  // namespace

TEST_CASE("kernel point evaluations", "[kernels]") {
  CHECK(KernelSpec::gaussian(1.0)(pt(0), pt(0)) == 1.0);
  CHECK(KernelSpec::gaussian(1.0)(pt(0), pt(1)) ==
        Catch::Approx(0.6065306597126334).epsilon(1e-15));
  CHECK(KernelSpec::rectangular(0.5)(pt(0), pt(2)) == 0.0);
  CHECK(KernelSpec::truncated_parabolic(1.0)(pt(0), pt(2)) == 0.0);
  // The rectangular indicator includes its boundary.
  CHECK(KernelSpec::rectangular(0.5)(pt(0), pt(0.5)) == 1.0);
  CHECK(KernelSpec::laplacian(2.0)(pt(0), pt(2)) == Catch::Approx(std::exp(-1.0)));
  CHECK(KernelSpec::polynomial(1.0, 2)(pt(2), pt(3)) == Catch::Approx(49.0));
  CHECK(KernelSpec::sigmoidal(1.0, 0.0)(pt(1), pt(1)) == Catch::Approx(std::tanh(1.0)));
}

TEST_CASE("kernel evaluation is symmetric in its arguments", "[kernels]") {
  const KernelSpec specs[] = {
      KernelSpec::gaussian(0.7),           KernelSpec::laplacian(1.3),
      KernelSpec::polynomial(0.5, 3),      KernelSpec::sigmoidal(0.2, 0.1),
      KernelSpec::truncated_parabolic(2.0), KernelSpec::rectangular(1.5),
  };
  SplitMix64 gen(31);
  for (const auto& k : specs) {
    for (int i = 0; i < 20; ++i) {
      VectorXd z(3), s(3);
      for (int j = 0; j < 3; ++j) {
        z[j] = gen.gaussian();
        s[j] = gen.gaussian();
      }
      CHECK(k(z, s) == k(s, z));
    }
  }
}

TEST_CASE("kernel parameter validation", "[kernels]") {
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::laplacian(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::polynomial(-0.1, 2), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::polynomial(1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::sigmoidal(-1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::truncated_parabolic(0.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::rectangular(0.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::gaussian(1.0)(pt(0), VectorXd::Zero(2)), std::invalid_argument);
  CHECK(KernelSpec::gaussian(1.0).psd_family());
  CHECK_FALSE(KernelSpec::sigmoidal(1.0, 1.0).psd_family());
}

TEST_CASE("gram matrix on small fixtures", "[kernels]") {
  MatrixXd one(1, 1);
  one(0, 0) = 0.0;
  GramMatrix g1 = gram_matrix(KernelSpec::gaussian(1.0), one);
  CHECK(g1.entries(0, 0) == 1.0);
  CHECK(g1.min_eigenvalue == Catch::Approx(1.0));

  MatrixXd two(2, 1);
  two << 0.0, 1.0;
  GramMatrix g2 = gram_matrix(KernelSpec::gaussian(1.0), two);
  CHECK(g2.entries(0, 1) == Catch::Approx(0.6065306597126334).epsilon(1e-15));
  // Eigenvalues of [[1, r], [r, 1]] are 1 - r and 1 + r.
  CHECK(g2.min_eigenvalue == Catch::Approx(0.3934693402873666).epsilon(1e-12));
  CHECK(g2.max_eigenvalue == Catch::Approx(1.6065306597126334).epsilon(1e-12));

  MatrixXd three(3, 1);
  three << 0.0, 2.0, 4.0;
  GramMatrix g3 = gram_matrix(KernelSpec::rectangular(1.0 / 38.0), three);
  CHECK(g3.entries.isApprox(MatrixXd::Identity(3, 3)));

  CHECK_THROWS_AS(gram_matrix(KernelSpec::gaussian(1.0), MatrixXd(0, 1)),
                  std::invalid_argument);
}

TEST_CASE("strict positive definiteness diagnostics", "[kernels]") {
  MatrixXd three(3, 1);
  three << 0.0, 2.0, 4.0;
  GramMatrix id = gram_matrix(KernelSpec::rectangular(0.1), three);
  CHECK(check_strict_pd(id).strictly_pd);

  // A degree-1 polynomial kernel on scalar inputs gives a rank-1 Gram.
  MatrixXd scalars(2, 1);
  scalars << 1.0, 2.0;
  GramMatrix rank1 = gram_matrix(KernelSpec::polynomial(0.0, 1), scalars);
  CHECK_FALSE(check_strict_pd(rank1).strictly_pd);

  MatrixXd five(5, 1);
  five << 0.1, 0.9, 2.3, 3.7, 4.4;
  CHECK(check_strict_pd(gram_matrix(KernelSpec::gaussian(1.0), five)).strictly_pd);
}

TEST_CASE("gaussian gram stays strictly PD when spacing matches the bandwidth", "[kernels]") {
  // With inputs spread proportionally to sigma the Gram keeps a healthy
  // eigenvalue floor; fixed-spread inputs with a large sigma would not.
  for (double sigma : {0.1, 1.0, 10.0}) {
    SplitMix64 gen(101);
    const int n = 50;
    MatrixXd inputs(n, 1);
    for (int i = 0; i < n; ++i) inputs(i, 0) = 2.0 * sigma * n * gen.uniform01();
    GramMatrix g = gram_matrix(KernelSpec::gaussian(sigma), inputs);
    INFO("sigma " << sigma << ", min eigenvalue " << g.min_eigenvalue);
    CHECK(check_strict_pd(g).strictly_pd);
  }
}

TEST_CASE("gram matrices of PSD families are numerically PSD", "[kernels]") {
  SplitMix64 gen(55);
  MatrixXd inputs(12, 2);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 2; ++j) inputs(i, j) = 3.0 * gen.gaussian();
  const KernelSpec specs[] = {
      KernelSpec::gaussian(1.0),
      KernelSpec::laplacian(1.0),
      KernelSpec::polynomial(1.0, 2),
      KernelSpec::truncated_parabolic(0.2),
      KernelSpec::rectangular(1.0),
  };
  for (const auto& k : specs) {
    GramMatrix g = gram_matrix(k, inputs);
    CHECK(g.min_eigenvalue >= -1e-10 * std::max(g.max_eigenvalue, 1.0));
  }
}

TEST_CASE("psd_sqrt on diagonal and random matrices", "[kernels]") {
  CHECK(psd_sqrt(MatrixXd::Identity(4, 4)).isApprox(MatrixXd::Identity(4, 4)));

  MatrixXd d = VectorXd{{4.0, 9.0}}.asDiagonal();
  MatrixXd s = psd_sqrt(d);
  CHECK(s(0, 0) == Catch::Approx(2.0));
  CHECK(s(1, 1) == Catch::Approx(3.0));
  CHECK(s(0, 1) == Catch::Approx(0.0).margin(1e-14));

  for (int n : {5, 60, 200}) {
    MatrixXd m = random_psd(n, 7 + n);
    MatrixXd r = psd_sqrt(m);
    CHECK(r.isApprox(r.transpose()));
    CHECK((r * r - m).norm() <= 1e-9 * (1.0 + m.norm()));
  }
}

TEST_CASE("psd_sqrt rejects indefinite input", "[kernels]") {
  MatrixXd m = VectorXd{{1.0, -0.5}}.asDiagonal();
  CHECK_THROWS_AS(psd_sqrt(m), NumericalError);
  CHECK_THROWS_AS(psd_sqrt(MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("pd_inv_sqrt inverts the square root", "[kernels]") {
  MatrixXd m = random_psd(8, 91);
  m += MatrixXd::Identity(8, 8);
  MatrixXd w = pd_inv_sqrt(m);
  CHECK((w * m * w).isApprox(MatrixXd::Identity(8, 8), 1e-10));

  MatrixXd singular = MatrixXd::Zero(3, 3);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(pd_inv_sqrt(singular), NumericalError);
}
