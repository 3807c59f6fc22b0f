#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kuq/data.hpp"
#include "kuq/estimators.hpp"
#include "kuq/kernels.hpp"

using namespace kuq;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

GramMatrix gaussian_gram(int n, double lo = 0.0, double hi = 10.0) {
  MatrixXd points(n, 1);
  points.col(0) = equidistant(lo, hi, n);
  return gram_matrix(KernelSpec::gaussian(0.5), points);
}

Transform flip_all(int dim) {
  Transform t;
  t.kind = GroupKind::sign_change;
  t.dim = dim;
  t.signs = -VectorXd::Ones(dim);
  return t;
}

}  // namespace

TEST_CASE("sign0 maps zero to zero", "[estimators]") {
  CHECK(sign0(VectorXd{{2.0, -3.0, 0.0}}) == VectorXd{{1.0, -1.0, 0.0}});
}

TEST_CASE("single-point ridge canonical form by hand", "[estimators]") {
  MatrixXd point(1, 1);
  point(0, 0) = 0.0;
  const GramMatrix gram = gram_matrix(KernelSpec::gaussian(0.5), point);
  const CanonicalLS c = krr_canonical(gram, VectorXd::Constant(1, 2.0), 1.0);
  CHECK(c.Phi == MatrixXd::Ones(2, 1));
  CHECK(c.z == VectorXd{{2.0, 0.0}});
  CHECK(c.n_real == 1);
  CHECK(c.n_aug == 1);
  CHECK(c.n_data == 1);
  CHECK(ls_estimate(c)[0] == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ridge normal matrix equals (1/n) K W K + lambda K", "[estimators]") {
  const GramMatrix gram = gaussian_gram(6);
  auto gen = stream(3, Stream::noise);
  VectorXd y(6), w(6);
  for (int i = 0; i < 6; ++i) {
    y[i] = gen.gaussian();
    w[i] = 0.5 + gen.uniform01();
  }
  const CanonicalLS c = krr_canonical(gram, y, w, 0.1);
  const MatrixXd& K = gram.entries;
  const MatrixXd expected = K * w.asDiagonal() * K / 6.0 + 0.1 * K;
  CHECK((c.Phi.transpose() * c.Phi - expected).norm() < 1e-10 * expected.norm());
  CHECK((c.Phi.transpose() * c.z - K * w.cwiseProduct(y) / 6.0).norm() < 1e-12);
}

TEST_CASE("a vanishing ridge penalty recovers the interpolant", "[estimators]") {
  const GramMatrix gram = gaussian_gram(5);
  const VectorXd y = VectorXd{{1.0, -2.0, 0.5, 3.0, -1.0}};
  const VectorXd alpha = ls_estimate(krr_canonical(gram, y, 1e-10));
  const VectorXd interpolant = gram.entries.ldlt().solve(y);
  CHECK((alpha - interpolant).norm() < 1e-6 * interpolant.norm());
}

TEST_CASE("ridge canonical form rejects inconsistent inputs", "[estimators]") {
  const GramMatrix gram = gaussian_gram(4);
  const VectorXd y = VectorXd::Ones(4);
  CHECK_THROWS_AS(krr_canonical(gram, VectorXd::Ones(3), 0.1), std::invalid_argument);
  CHECK_THROWS_AS(krr_canonical(gram, y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(krr_canonical(gram, y, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(krr_canonical(gram, y, VectorXd::Ones(3), 0.1), std::invalid_argument);
  VectorXd bad_w = VectorXd::Ones(4);
  bad_w[2] = 0.0;
  CHECK_THROWS_AS(krr_canonical(gram, y, bad_w, 0.1), std::invalid_argument);

  MatrixXd line(2, 1);
  line << 1.0, 2.0;
  const GramMatrix singular = gram_matrix(KernelSpec::polynomial(0.0, 1), line);
  CHECK_THROWS_AS(krr_canonical(singular, VectorXd::Ones(2), 0.1), NumericalError);
}

TEST_CASE("classifier canonical form has the documented block layout", "[estimators]") {
  MatrixXd points(4, 2);
  points << 1, 2, -1, 0.5, 0.3, -2, 2, 1;
  VectorXd labels(4);
  labels << 1, -1, -1, 1;
  const CanonicalLS c = lssvc_canonical(points, labels, 0.5);
  REQUIRE(c.Phi.rows() == 7);
  REQUIRE(c.Phi.cols() == 3);
  CHECK(c.n_real == 4);
  CHECK(c.n_aug == 3);
  const double s = std::sqrt(0.5);
  CHECK(c.Phi(1, 0) == Catch::Approx(-s));
  CHECK(c.Phi(1, 2) == Catch::Approx(-s * 0.5));
  CHECK(c.Phi.row(4).norm() == 0.0);  // the bias carries no penalty
  CHECK(c.Phi(5, 1) == Catch::Approx(1.0 / std::sqrt(2.0)));
  CHECK(c.Phi(6, 2) == Catch::Approx(1.0 / std::sqrt(2.0)));
  CHECK(c.z.head(4) == VectorXd::Constant(4, s));
  CHECK(c.z.tail(3) == VectorXd::Zero(3));

  VectorXd bad = labels;
  bad[1] = 0.5;
  CHECK_THROWS_AS(lssvc_canonical(points, bad, 0.5), DataError);
  CHECK_THROWS_AS(lssvc_canonical(points, labels.head(3), 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lssvc_canonical(points, labels, 0.0), std::invalid_argument);
}

TEST_CASE("a symmetric two-point classifier has zero bias", "[estimators]") {
  MatrixXd points(2, 1);
  points << -1.0, 1.0;
  VectorXd labels(2);
  labels << -1.0, 1.0;
  const VectorXd alpha = ls_estimate(lssvc_canonical(points, labels, 1.0));
  CHECK(alpha[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(alpha[1] > 0.0);

  const VectorXd flipped = ls_estimate(lssvc_canonical(points, -labels, 1.0));
  CHECK((alpha + flipped).norm() < 1e-12);
}

TEST_CASE("least-squares solve zeroes the normal-equation gradient", "[estimators]") {
  CanonicalLS c;
  c.Phi = MatrixXd::Ones(2, 1);
  c.z = VectorXd{{1.0, 3.0}};
  c.n_real = 2;
  const VectorXd alpha = ls_estimate(c);
  CHECK(alpha[0] == Catch::Approx(2.0).epsilon(1e-14));
  CHECK((c.Phi.transpose() * (c.z - c.Phi * alpha)).norm() <=
        1e-8 * (c.Phi.transpose() * c.z).norm());

  CanonicalLS deficient;
  deficient.Phi = MatrixXd::Ones(2, 2);
  deficient.z = VectorXd::Ones(2);
  CHECK_THROWS_AS(ls_estimate(deficient), NumericalError);
}

TEST_CASE("regression tube residual by hand", "[estimators]") {
  MatrixXd point(1, 1);
  point(0, 0) = 0.0;
  const GramMatrix gram = gram_matrix(KernelSpec::gaussian(1.0), point);
  const VectorXd y = VectorXd::Constant(1, 1.0);
  const VectorXd alpha = VectorXd::Constant(1, 0.5);
  const Transform id = identity_transform({GroupKind::sign_change, 0}, 1);
  CHECK(svr_z(gram, y, alpha, 0.2, id) == Catch::Approx(0.09).epsilon(1e-14));
  CHECK(svr_z(gram, y, alpha, 0.2, flip_all(1)) == Catch::Approx(0.49).epsilon(1e-14));
  CHECK(svr_z(gram, y, alpha, 0.0, flip_all(1)) ==
        Catch::Approx((y - gram.entries * alpha).squaredNorm()).epsilon(1e-14));
  CHECK_THROWS_AS(svr_z(gram, y, alpha, -0.1, id), std::invalid_argument);
  CHECK_THROWS_AS(svr_z(gram, y, VectorXd::Ones(2), 0.2, id), std::invalid_argument);
}

TEST_CASE("lasso perturbed gradient by hand", "[estimators]") {
  GramMatrix gram;
  gram.entries = MatrixXd::Constant(1, 1, 2.0);
  gram.min_eigenvalue = gram.max_eigenvalue = 2.0;
  gram.condition_estimate = 1.0;
  const VectorXd y = VectorXd::Constant(1, 3.0);
  const VectorXd alpha = VectorXd::Constant(1, 1.0);
  const Transform id = identity_transform({GroupKind::sign_change, 0}, 1);
  CHECK(klasso_z(gram, y, alpha, 1.0, id) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(klasso_z(gram, y, alpha, 1.0, flip_all(1)) == Catch::Approx(9.0).epsilon(1e-14));
  CHECK(klasso_z(gram, y, VectorXd::Zero(1), 1.0, id) ==
        Catch::Approx((gram.entries * y).squaredNorm()).epsilon(1e-14));
  CHECK_THROWS_AS(klasso_z(gram, y, alpha, 0.0, id), std::invalid_argument);
}

TEST_CASE("subgradients match their objectives' stationary structure", "[estimators]") {
  const GramMatrix gram = gaussian_gram(4);
  const VectorXd y = VectorXd{{1.0, -1.0, 2.0, 0.5}};
  const VectorXd alpha = VectorXd{{0.3, -0.2, 0.1, 0.4}};
  CHECK((svr_subgradient(gram, y, 0.2, alpha) -
         (y - gram.entries * alpha - 0.2 * sign0(alpha))).norm() == 0.0);
  CHECK((klasso_subgradient(gram, y, 0.7, alpha) -
         (gram.entries * (gram.entries * alpha - y) + 0.7 * sign0(alpha))).norm() == 0.0);
}

TEST_CASE("lasso solver returns the zero solution above the threshold", "[estimators]") {
  const GramMatrix gram = gaussian_gram(5);
  const VectorXd y = VectorXd{{1.0, -2.0, 0.5, 3.0, -1.0}};
  const double threshold = (gram.entries * y).cwiseAbs().maxCoeff();
  SolveReport report;
  const VectorXd alpha = klasso_estimate(gram, y, 1.1 * threshold, 1000, 1e-12, &report);
  CHECK(alpha == VectorXd::Zero(5));
  CHECK(report.converged);
  CHECK(report.objective == Catch::Approx(0.5 * y.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("lasso solver approaches the interpolant for tiny penalties", "[estimators]") {
  const GramMatrix gram = gaussian_gram(5);
  const VectorXd y = VectorXd{{1.0, -2.0, 0.5, 3.0, -1.0}};
  const VectorXd alpha = klasso_estimate(gram, y, 1e-6, 200000, 1e-12);
  const VectorXd interpolant = gram.entries.ldlt().solve(y);
  CHECK((alpha - interpolant).norm() < 1e-4 * interpolant.norm());
}

TEST_CASE("no nearby point improves the lasso objective", "[estimators]") {
  const GramMatrix gram = gaussian_gram(6);
  const VectorXd y = VectorXd{{1.0, -2.0, 0.5, 3.0, -1.0, 2.0}};
  const VectorXd alpha = klasso_estimate(gram, y, 0.5, 200000, 1e-10);
  const double best = klasso_objective(gram, y, 0.5, alpha);
  auto gen = stream(21, Stream::directions);
  for (int rep = 0; rep < 100; ++rep) {
    VectorXd delta(6);
    for (int i = 0; i < 6; ++i) delta[i] = gen.gaussian();
    delta *= 1e-3 / delta.norm();
    CHECK(klasso_objective(gram, y, 0.5, alpha + delta) >= best - 1e-9);
  }
}

TEST_CASE("lasso solver reports non-convergence honestly", "[estimators]") {
  const GramMatrix gram = gaussian_gram(5);
  const VectorXd y = VectorXd{{1.0, -2.0, 0.5, 3.0, -1.0}};
  SolveReport report;
  CHECK_THROWS_AS(klasso_estimate(gram, y, 0.1, 1, 1e-12, &report), NumericalError);
  CHECK(report.iterations == 1);
  CHECK_FALSE(report.converged);
  CHECK_THROWS_AS(klasso_estimate(gram, y, 0.0, 10, 1e-12), std::invalid_argument);
}

TEST_CASE("a tube wider than the data yields the zero regressor", "[estimators]") {
  const GramMatrix gram = gaussian_gram(5);
  const VectorXd y = VectorXd{{1.0, -2.0, 0.5, 3.0, -1.0}};
  const VectorXd alpha = svr_estimate(gram, y, 3.5, 10.0, 1000, 1e-10);
  CHECK(alpha == VectorXd::Zero(5));
}

TEST_CASE("tube dual solution is feasible and beats random feasible points", "[estimators]") {
  const GramMatrix gram = gaussian_gram(8);
  const DataSample data =
      generate_synthetic(x_sin_x, 8, 0.0, 10.0, NoiseSpec::laplace(0.0, 0.5), 5);
  const VectorXd& y = data.outputs;
  const double eps = 0.2, c = 250.0;
  const double bound = c / 8.0;
  const VectorXd alpha = svr_estimate(gram, y, eps, c, 200000, 1e-10);

  CHECK(std::abs(alpha.sum()) < 1e-8 * (1.0 + alpha.cwiseAbs().sum()));
  CHECK(alpha.cwiseAbs().maxCoeff() <= bound + 1e-12);

  const double best = svr_dual_objective(gram, y, eps, alpha);
  auto gen = stream(77, Stream::directions);
  auto dual_pm = [&](const VectorXd& ap, const VectorXd& an) {
    const VectorXd a = ap - an;
    return y.dot(a) - 0.5 * a.dot(gram.entries * a) - eps * (ap.sum() + an.sum());
  };
  for (int rep = 0; rep < 100; ++rep) {
    VectorXd ap(8), an(8);
    for (int i = 0; i < 8; ++i) {
      ap[i] = bound * gen.uniform01();
      an[i] = bound * gen.uniform01();
    }
    detail::project_svr_dual(ap, an, bound);
    CHECK(dual_pm(ap, an) <= best + 1e-6);
  }
  CHECK_THROWS_AS(svr_estimate(gram, y, -0.1, c), std::invalid_argument);
  CHECK_THROWS_AS(svr_estimate(gram, y, eps, 0.0), std::invalid_argument);
}

TEST_CASE("canonical and direct objectives differ by a constant", "[estimators]") {
  const GramMatrix gram = gaussian_gram(5);
  auto gen = stream(15, Stream::noise);
  VectorXd y(5), w(5);
  for (int i = 0; i < 5; ++i) {
    y[i] = gen.gaussian();
    w[i] = 0.5 + gen.uniform01();
  }
  const CanonicalLS c = krr_canonical(gram, y, w, 0.3);
  const double offset = (c.z - c.Phi * VectorXd::Zero(5)).squaredNorm() -
                        krr_objective(gram, y, w, 0.3, VectorXd::Zero(5));
  for (int rep = 0; rep < 10; ++rep) {
    VectorXd alpha(5);
    for (int i = 0; i < 5; ++i) alpha[i] = 2.0 * gen.gaussian();
    const double canonical = (c.z - c.Phi * alpha).squaredNorm();
    const double direct = krr_objective(gram, y, w, 0.3, alpha);
    CHECK(canonical - direct == Catch::Approx(offset).margin(1e-9));
  }
}
