#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kuq/data.hpp"
#include "kuq/errors.hpp"
#include "kuq/kernels.hpp"
#include "kuq/perturbation.hpp"
#include "kuq/rank_region.hpp"

namespace kuq {

// A quadratic objective rewritten as ||z - Phi alpha||^2. The first n_real
// rows carry the perturbable residuals; the last n_aug rows are auxiliary
// and stay fixed under the block transform group.
struct CanonicalLS {
  Eigen::MatrixXd Phi;
  Eigen::VectorXd z;
  int n_real = 0;
  int n_aug = 0;
  int n_data = 0;  // sample size used for the 1/n scaling of SPS radii

  int dim() const { return static_cast<int>(Phi.cols()); }
  int rows() const { return static_cast<int>(Phi.rows()); }
};

inline Eigen::VectorXd sign0(const Eigen::VectorXd& v) {
  Eigen::VectorXd s(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    s[i] = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
  return s;
}

// ----- Kernel ridge regression -----

// Canonical blocks Phi = [(1/sqrt(n)) W^{1/2} K ; sqrt(lambda) K^{1/2}],
// z = [(1/sqrt(n)) W^{1/2} y ; 0]; requires a strictly PD Gram matrix.
inline CanonicalLS krr_canonical(const GramMatrix& gram, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& weights, double lambda,
                                 double pd_rel_tol = 1e-10) {
  const int n = gram.n();
  if (y.size() != n) throw std::invalid_argument("krr_canonical: y length does not match Gram size");
  if (weights.size() != n)
    throw std::invalid_argument("krr_canonical: weight vector length does not match Gram size");
  if (!(lambda > 0.0)) throw std::invalid_argument("krr_canonical: lambda must be positive");
  if (weights.minCoeff() <= 0.0)
    throw std::invalid_argument("krr_canonical: weights must be positive");
  const PdDiagnostics pd = check_strict_pd(gram, pd_rel_tol);
  if (!pd.strictly_pd)
    throw NumericalError("krr_canonical: Gram matrix is not strictly positive definite "
                         "(min eigenvalue " + std::to_string(pd.min_eigenvalue) + ")");

  const Eigen::VectorXd wsqrt = weights.cwiseSqrt();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  CanonicalLS c;
  c.Phi.resize(2 * n, n);
  c.Phi.topRows(n) = inv_sqrt_n * wsqrt.asDiagonal() * gram.entries;
  c.Phi.bottomRows(n) = std::sqrt(lambda) * psd_sqrt(gram.entries);
  c.z.resize(2 * n);
  c.z.head(n) = inv_sqrt_n * wsqrt.cwiseProduct(y);
  c.z.tail(n).setZero();
  c.n_real = n;
  c.n_aug = n;
  c.n_data = n;
  return c;
}

inline CanonicalLS krr_canonical(const GramMatrix& gram, const Eigen::VectorXd& y,
                                 double lambda) {
  return krr_canonical(gram, y, Eigen::VectorXd::Ones(gram.n()), lambda);
}

// Direct objective (1/n) sum_k w_k (y_k - (K alpha)_k)^2 + lambda alpha' K alpha.
inline double krr_objective(const GramMatrix& gram, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& weights, double lambda,
                            const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd r = y - gram.entries * alpha;
  const double fit = weights.cwiseProduct(r).dot(r) / gram.n();
  return fit + lambda * alpha.dot(gram.entries * alpha);
}

// ----- Least-squares support vector classification -----

// Canonical blocks for labels y_k in {-1,+1} over augmented inputs
// x~_k = [1, x_k']': Phi = [sqrt(lambda) (y 1') .* X~ ; (1/sqrt(2)) B],
// z = [sqrt(lambda) 1 ; 0], B = diag(0, 1, ..., 1). Coefficients are
// alpha = [b, w']'.
inline CanonicalLS lssvc_canonical(const Eigen::MatrixXd& points, const Eigen::VectorXd& labels,
                                   double lambda) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (labels.size() != n)
    throw std::invalid_argument("lssvc_canonical: label count does not match point count");
  if (!(lambda > 0.0)) throw std::invalid_argument("lssvc_canonical: lambda must be positive");
  for (int i = 0; i < n; ++i)
    if (labels[i] != 1.0 && labels[i] != -1.0)
      throw DataError("lssvc_canonical: label " + std::to_string(i + 1) + " is " +
                      std::to_string(labels[i]) + ", expected -1 or +1");

  CanonicalLS c;
  c.Phi.resize(n + d + 1, d + 1);
  for (int i = 0; i < n; ++i) {
    c.Phi(i, 0) = std::sqrt(lambda) * labels[i];
    c.Phi.row(i).tail(d) = std::sqrt(lambda) * labels[i] * points.row(i);
  }
  c.Phi.bottomRows(d + 1).setZero();
  for (int j = 1; j <= d; ++j) c.Phi(n + j, j) = 1.0 / std::sqrt(2.0);
  c.z.resize(n + d + 1);
  c.z.head(n).setConstant(std::sqrt(lambda));
  c.z.tail(d + 1).setZero();
  c.n_real = n;
  c.n_aug = d + 1;
  c.n_data = n;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.Phi);
  if (qr.rank() < d + 1)
    throw NumericalError("lssvc_canonical: design matrix is rank deficient");
  return c;
}

// Direct objective (1/2)||B alpha||^2 + lambda ||1 - y .* (X~ alpha)||^2.
inline double lssvc_objective(const Eigen::MatrixXd& points, const Eigen::VectorXd& labels,
                              double lambda, const Eigen::VectorXd& alpha) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (alpha.size() != d + 1)
    throw std::invalid_argument("lssvc_objective: coefficient dimension must be d + 1");
  double fit = 0.0;
  for (int i = 0; i < n; ++i) {
    const double margin = 1.0 - labels[i] * (alpha[0] + points.row(i).dot(alpha.tail(d)));
    fit += margin * margin;
  }
  return 0.5 * alpha.tail(d).squaredNorm() + lambda * fit;
}

// ----- Least-squares estimate of a canonical problem -----

inline Eigen::VectorXd ls_estimate(const CanonicalLS& c) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.Phi);
  if (qr.rank() < c.dim())
    throw NumericalError("ls_estimate: regressor matrix is rank deficient (rank " +
                         std::to_string(qr.rank()) + " of " + std::to_string(c.dim()) + ")");
  return qr.solve(c.z);
}

// ----- epsilon-insensitive support vector regression -----

// Dual objective in alpha form: y' alpha - (1/2) alpha' K alpha
// - eps ||alpha||_1 (to be maximized).
inline double svr_dual_objective(const GramMatrix& gram, const Eigen::VectorXd& y,
                                 double eps, const Eigen::VectorXd& alpha) {
  return y.dot(alpha) - 0.5 * alpha.dot(gram.entries * alpha) -
         eps * alpha.lpNorm<1>();
}

// Subgradient of the dual objective: y - K alpha - eps sign(alpha).
inline Eigen::VectorXd svr_subgradient(const GramMatrix& gram, const Eigen::VectorXd& y,
                                       double eps, const Eigen::VectorXd& alpha) {
  return y - gram.entries * alpha - eps * sign0(alpha);
}

// Z(alpha; G) = ||G(y - K alpha) - eps sign(alpha)||^2. The transform acts
// on the raw residual only; the sign term stays unperturbed.
inline double svr_z(const GramMatrix& gram, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& alpha, double eps, const Transform& t) {
  if (eps < 0.0) throw std::invalid_argument("svr_z: eps must be nonnegative");
  if (alpha.size() != gram.n())
    throw std::invalid_argument("svr_z: coefficient dimension does not match Gram size");
  const Eigen::VectorXd residual = y - gram.entries * alpha;
  return (t.apply(residual) - eps * sign0(alpha)).squaredNorm();
}

// ----- Kernelized LASSO -----

// Objective (1/2)||y - K alpha||^2 + lambda ||alpha||_1.
inline double klasso_objective(const GramMatrix& gram, const Eigen::VectorXd& y,
                               double lambda, const Eigen::VectorXd& alpha) {
  return 0.5 * (y - gram.entries * alpha).squaredNorm() + lambda * alpha.lpNorm<1>();
}

// Subgradient K(K alpha - y) + lambda sign(alpha).
inline Eigen::VectorXd klasso_subgradient(const GramMatrix& gram, const Eigen::VectorXd& y,
                                          double lambda, const Eigen::VectorXd& alpha) {
  return gram.entries * (gram.entries * alpha - y) + lambda * sign0(alpha);
}

// Z(alpha; G) = ||K G(K alpha - y) + lambda sign(alpha)||^2. The transform
// sits inside the K product, on the inner residual.
inline double klasso_z(const GramMatrix& gram, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& alpha, double lambda, const Transform& t) {
  if (!(lambda > 0.0)) throw std::invalid_argument("klasso_z: lambda must be positive");
  if (alpha.size() != gram.n())
    throw std::invalid_argument("klasso_z: coefficient dimension does not match Gram size");
  const Eigen::VectorXd inner = gram.entries * alpha - y;
  return (gram.entries * t.apply(inner) + lambda * sign0(alpha)).squaredNorm();
}

// ----- Point-estimate solvers -----

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double last_change = 0.0;  // KLASSO: objective decrease; SVR: KKT residual
};

// Proximal gradient (soft thresholding) with fixed step 1/L,
// L = max eigenvalue of K'K. Stops when the iterate change drops to tol;
// the objective never increases between iterates. Singular Gram matrices
// make the tail sublinear, so tight tolerances can be unreachable there;
// callers that only need an approximate center pass a looser tol.
inline Eigen::VectorXd klasso_estimate(const GramMatrix& gram, const Eigen::VectorXd& y,
                                       double lambda, int max_iter = 100000,
                                       double tol = 1e-10, SolveReport* report = nullptr) {
  if (!(lambda > 0.0)) throw std::invalid_argument("klasso_estimate: lambda must be positive");
  const int n = gram.n();
  if (y.size() != n) throw std::invalid_argument("klasso_estimate: y length does not match Gram size");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.entries, Eigen::EigenvaluesOnly);
  const double spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double L = std::max(spectral * spectral, 1e-300);
  const double step = 1.0 / L;

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  double objective = klasso_objective(gram, y, lambda, alpha);
  double last_gap = 0.0;
  SolveReport local;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd grad = gram.entries * (gram.entries * alpha - y);
    Eigen::VectorXd next = alpha - step * grad;
    const double threshold = step * lambda;
    for (int i = 0; i < n; ++i) {
      if (next[i] > threshold) next[i] -= threshold;
      else if (next[i] < -threshold) next[i] += threshold;
      else next[i] = 0.0;
    }
    const double next_objective = klasso_objective(gram, y, lambda, next);
    const double gap = objective - next_objective;
    local.iterations = it;
    local.last_change = (next - alpha).norm();
    alpha = std::move(next);
    objective = next_objective;
    if (local.last_change <= tol) {
      local.converged = true;
      break;
    }
    last_gap = gap;
  }
  local.objective = objective;
  if (report) *report = local;
  if (!local.converged)
    throw NumericalError("klasso_estimate: no convergence in " + std::to_string(max_iter) +
                         " iterations; final objective gap " + detail::format_g17(last_gap) +
                         ", iterate change " + detail::format_g17(local.last_change));
  return alpha;
}

namespace detail {

// Projection of (ap, an) onto [0, bound]^{2n} intersected with
// {1'bp - 1'bn = 0}, via bisection on the shift theta.
inline void project_svr_dual(Eigen::VectorXd& ap, Eigen::VectorXd& an, double bound) {
  const auto balance = [&](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < ap.size(); ++i) {
      s += std::clamp(ap[i] - theta, 0.0, bound);
      s -= std::clamp(an[i] + theta, 0.0, bound);
    }
    return s;
  };
  double lo = -1.0, hi = 1.0;
  const double span = bound + std::max(ap.cwiseAbs().maxCoeff(), an.cwiseAbs().maxCoeff());
  lo = -span - 1.0;
  hi = span + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (balance(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  const double theta = 0.5 * (lo + hi);
  for (Eigen::Index i = 0; i < ap.size(); ++i) {
    ap[i] = std::clamp(ap[i] - theta, 0.0, bound);
    an[i] = std::clamp(an[i] + theta, 0.0, bound);
  }
}

}  // namespace detail

// Projected-gradient ascent on the concave Wolfe dual over
// alpha+, alpha- in [0, c/n]^n with (alpha+ - alpha-)'1 = 0. Returns
// alpha = alpha+ - alpha-; the dual objective is non-decreasing across
// iterates.
inline Eigen::VectorXd svr_estimate(const GramMatrix& gram, const Eigen::VectorXd& y,
                                    double eps, double c, int max_iter = 100000,
                                    double tol = 1e-10, SolveReport* report = nullptr) {
  if (eps < 0.0) throw std::invalid_argument("svr_estimate: eps must be nonnegative");
  if (!(c > 0.0)) throw std::invalid_argument("svr_estimate: c must be positive");
  const int n = gram.n();
  if (y.size() != n) throw std::invalid_argument("svr_estimate: y length does not match Gram size");
  const double bound = c / n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.entries, Eigen::EigenvaluesOnly);
  const double L = std::max(2.0 * eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  const double step = 1.0 / L;

  Eigen::VectorXd ap = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd an = Eigen::VectorXd::Zero(n);
  auto dual = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& m) {
    const Eigen::VectorXd alpha = p - m;
    return y.dot(alpha) - 0.5 * alpha.dot(gram.entries * alpha) - eps * (p.sum() + m.sum());
  };
  double objective = dual(ap, an);
  SolveReport local;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd kalpha = gram.entries * (ap - an);
    Eigen::VectorXd next_p = ap + step * (y - kalpha - Eigen::VectorXd::Constant(n, eps));
    Eigen::VectorXd next_n = an + step * (kalpha - y - Eigen::VectorXd::Constant(n, eps));
    detail::project_svr_dual(next_p, next_n, bound);
    const double next_objective = dual(next_p, next_n);
    const double move = std::max((next_p - ap).cwiseAbs().maxCoeff(),
                                 (next_n - an).cwiseAbs().maxCoeff());
    ap = std::move(next_p);
    an = std::move(next_n);
    objective = next_objective;
    local.iterations = it;
    local.last_change = move / step;  // projected-gradient norm, the KKT residual
    if (move <= tol * (1.0 + bound)) {
      local.converged = true;
      break;
    }
  }
  local.objective = objective;
  if (report) *report = local;
  if (!local.converged)
    throw NumericalError("svr_estimate: no convergence in " + std::to_string(max_iter) +
                         " iterations; KKT residual " + std::to_string(local.last_change));
  return ap - an;
}

// ----- Problem adapters for the rank-region machinery -----

inline GradientPerturbationProblem svr_problem(const GramMatrix& gram, const Eigen::VectorXd& y,
                                               double eps,
                                               GroupKind kind = GroupKind::sign_change) {
  const int n = gram.n();
  GradientPerturbationProblem p;
  p.dim = n;
  p.residual_dim = n;
  p.group = TransformGroup{kind, 0};
  Eigen::MatrixXd K = gram.entries;
  GramMatrix gcopy{std::move(K), gram.min_eigenvalue, gram.max_eigenvalue, gram.condition_estimate};
  p.z = [gcopy, y, eps](const Eigen::VectorXd& alpha, const Transform& t) {
    return svr_z(gcopy, y, alpha, eps, t);
  };
  p.z_batch = [gcopy, y, eps](const Eigen::VectorXd& alpha, const PerturbationSet& pset) {
    const Eigen::VectorXd residual = y - gcopy.entries * alpha;
    const Eigen::VectorXd shift = eps * sign0(alpha);
    std::vector<double> zs(pset.m);
    for (int i = 0; i < pset.m; ++i)
      zs[i] = (pset.transforms[i].apply(residual) - shift).squaredNorm();
    return zs;
  };
  return p;
}

inline GradientPerturbationProblem klasso_problem(const GramMatrix& gram, const Eigen::VectorXd& y,
                                                  double lambda,
                                                  GroupKind kind = GroupKind::sign_change) {
  const int n = gram.n();
  GradientPerturbationProblem p;
  p.dim = n;
  p.residual_dim = n;
  p.group = TransformGroup{kind, 0};
  Eigen::MatrixXd K = gram.entries;
  GramMatrix gcopy{std::move(K), gram.min_eigenvalue, gram.max_eigenvalue, gram.condition_estimate};
  p.z = [gcopy, y, lambda](const Eigen::VectorXd& alpha, const Transform& t) {
    return klasso_z(gcopy, y, alpha, lambda, t);
  };
  p.z_batch = [gcopy, y, lambda](const Eigen::VectorXd& alpha, const PerturbationSet& pset) {
    const Eigen::VectorXd inner = gcopy.entries * alpha - y;
    const Eigen::VectorXd shift = lambda * sign0(alpha);
    std::vector<double> zs(pset.m);
    for (int i = 0; i < pset.m; ++i)
      zs[i] = (gcopy.entries * pset.transforms[i].apply(inner) + shift).squaredNorm();
    return zs;
  };
  return p;
}

}  // namespace kuq
