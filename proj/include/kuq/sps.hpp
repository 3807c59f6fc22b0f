#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kuq/errors.hpp"
#include "kuq/estimators.hpp"
#include "kuq/kernels.hpp"
#include "kuq/rank_region.hpp"

namespace kuq {

enum class SpsWeighting { hessian_inv_sqrt, identity };

// A canonical least-squares problem prepared for the rank test:
// Z(alpha; G) = ||Psi Phi' G (z - Phi alpha)||^2 with Psi the cached
// (Phi'Phi)^{-1/2} (or the identity), and the block group fixing the
// auxiliary rows.
class SpsProblem {
 public:
  static SpsProblem build(CanonicalLS canon, GroupKind kind = GroupKind::sign_change,
                          SpsWeighting weighting = SpsWeighting::hessian_inv_sqrt) {
    SpsProblem p;
    p.canon_ = std::move(canon);
    p.weighting_ = weighting;
    p.H_ = p.canon_.Phi.transpose() * p.canon_.Phi;
    p.H_ = ((p.H_ + p.H_.transpose()) / 2.0).eval();
    p.Hsi_ = pd_inv_sqrt(p.H_);
    p.alpha_hat_ = ls_estimate(p.canon_);
    p.residual_hat_ = p.canon_.z - p.canon_.Phi * p.alpha_hat_;
    p.group_ = TransformGroup{kind, p.canon_.n_aug};
    const Eigen::MatrixXd weight = weighting == SpsWeighting::hessian_inv_sqrt
                                       ? p.Hsi_
                                       : Eigen::MatrixXd::Identity(p.canon_.dim(), p.canon_.dim());
    p.U_ = weight * p.canon_.Phi.transpose();
    return p;
  }

  const CanonicalLS& canonical() const { return canon_; }
  const Eigen::MatrixXd& hessian() const { return H_; }
  const Eigen::MatrixXd& whitener() const { return Hsi_; }
  const Eigen::VectorXd& estimate() const { return alpha_hat_; }
  const TransformGroup& group() const { return group_; }
  int dim() const { return canon_.dim(); }
  int residual_dim() const { return canon_.rows(); }

  double z_value(const Eigen::VectorXd& alpha, const Transform& t) const {
    return (U_ * t.apply(canon_.z - canon_.Phi * alpha)).squaredNorm();
  }

  // (alpha - alpha_hat)' Phi'Phi (alpha - alpha_hat); equals Z_0(alpha)
  // under the default weighting.
  double reference_quadratic(const Eigen::VectorXd& alpha) const {
    const Eigen::VectorXd d = alpha - alpha_hat_;
    return d.dot(H_ * d);
  }

  std::vector<double> z_all(const Eigen::VectorXd& alpha, const PerturbationSet& pset) const {
    const Eigen::VectorXd residual = canon_.z - canon_.Phi * alpha;
    const int nr = canon_.n_real;
    // The fixed tail contributes the same term to every element.
    const Eigen::VectorXd tail_part =
        U_.rightCols(canon_.n_aug) * residual.tail(canon_.n_aug);
    const auto head = residual.head(nr);
    std::vector<double> zs(pset.m);
    Eigen::VectorXd turned(nr);
    for (int i = 0; i < pset.m; ++i) {
      const Transform& t = pset.transforms[i];
      if (t.kind == GroupKind::sign_change) {
        turned = t.signs.cwiseProduct(head);
      } else {
        for (int j = 0; j < nr; ++j) turned[t.perm[j]] = head[j];
      }
      zs[i] = (U_.leftCols(nr) * turned + tail_part).squaredNorm();
    }
    return zs;
  }

  GradientPerturbationProblem problem() const {
    GradientPerturbationProblem p;
    p.dim = dim();
    p.residual_dim = residual_dim();
    p.group = group_;
    SpsProblem copy = *this;
    p.z = [copy](const Eigen::VectorXd& alpha, const Transform& t) {
      return copy.z_value(alpha, t);
    };
    SpsProblem copy2 = *this;
    p.z_batch = [copy2](const Eigen::VectorXd& alpha, const PerturbationSet& pset) {
      return copy2.z_all(alpha, pset);
    };
    return p;
  }

 private:
  CanonicalLS canon_;
  SpsWeighting weighting_ = SpsWeighting::hessian_inv_sqrt;
  Eigen::MatrixXd H_;
  Eigen::MatrixXd Hsi_;
  Eigen::MatrixXd U_;  // Psi Phi'
  Eigen::VectorXd alpha_hat_;
  Eigen::VectorXd residual_hat_;
  TransformGroup group_;
};

inline double sps_z(const SpsProblem& p, const Eigen::VectorXd& alpha, const Transform& t) {
  return p.z_value(alpha, t);
}

inline MembershipResult sps_membership(const SpsProblem& p, const Eigen::VectorXd& alpha,
                                       const RegionConfig& config) {
  return is_member(p.problem(), alpha, config);
}

// Outer approximation {alpha : (alpha - center)' shape (alpha - center) <= radius}
// with shape = (1/n) Phi'Phi. An infinite radius marks a degenerate level.
struct Ellipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  double radius = 0.0;

  bool degenerate() const { return !std::isfinite(radius); }

  double quadratic(const Eigen::VectorXd& alpha) const {
    const Eigen::VectorXd d = alpha - center;
    return d.dot(shape * d);
  }

  bool contains(const Eigen::VectorXd& alpha) const {
    return degenerate() || quadratic(alpha) <= radius;
  }
};

namespace detail {

// Upper bound on max ||theta||^2 subject to theta'A theta + 2 b'theta + c <= 0
// through the one-dimensional dual g(mu) = mu^2 b'(mu A - I)^{-1} b - mu c,
// minimized by bisection on g' over mu > 1/lambda_min(A). Any feasible mu
// yields a valid bound, so bisection inaccuracy never breaks containment.
// A not positive definite means the constraint set is unbounded: +inf.
inline double qcqp_sup_norm2(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double c,
                             double mu_tol = 1e-9, int max_iter = 200) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  if (eig.info() != Eigen::Success)
    throw NumericalError("qcqp_sup_norm2: eigendecomposition failed");
  const Eigen::VectorXd lam = eig.eigenvalues();
  const double lam_max = lam.maxCoeff();
  const double lam_min = lam.minCoeff();
  if (lam_min <= 1e-12 * std::max(1.0, std::abs(lam_max)))
    return std::numeric_limits<double>::infinity();

  const Eigen::VectorXd bt = eig.eigenvectors().transpose() * b;
  const auto g = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < lam.size(); ++j) s += bt[j] * bt[j] / (mu * lam[j] - 1.0);
    return mu * mu * s - mu * c;
  };
  const auto gprime = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < lam.size(); ++j) {
      const double d = mu * lam[j] - 1.0;
      s += bt[j] * bt[j] * mu * (mu * lam[j] - 2.0) / (d * d);
    }
    return s - c;
  };

  double lo = (1.0 + 1e-10) / lam_min;
  if (gprime(lo) >= 0.0) return g(lo);
  double hi = std::max(2.0 * lo, lo + 1.0);
  int doublings = 0;
  while (gprime(hi) < 0.0 && doublings < 400) {
    hi *= 2.0;
    ++doublings;
  }
  if (gprime(hi) < 0.0) return g(hi);
  for (int it = 0; it < max_iter && hi - lo > mu_tol * std::max(1.0, lo); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gprime(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return g(hi);
}

}  // namespace detail

// Per-level radii of the SPS outer approximation for one perturbation set.
// Two valid bounds are combined:
//  - per transform i, the supremum of (1/n) Z_0 over {Z_0 <= Z_i}; the
//    radius for level q is the q-th largest of these, and
//  - the supremum of (1/n) Z_0 over the aggregate constraint
//    q Z_0 <= sum_i Z_i, which membership at level q also implies.
// The radius is the smaller of the two. Either bound can be infinite; for
// square perturbable blocks (KRR) the per-i sets are unbounded for every
// sign pattern with a +1 entry, and only the aggregate bound can close at
// large q. Infinite radii are reported as degenerate, never clipped.
class SpsOuter {
 public:
  SpsOuter(const SpsProblem& problem, const PerturbationSet& pset) {
    if (pset.dim != problem.residual_dim())
      throw std::invalid_argument("SpsOuter: perturbation set dimension mismatch");
    if (pset.group.fixed_tail != problem.canonical().n_aug)
      throw std::invalid_argument("SpsOuter: perturbation set does not fix the auxiliary tail");
    n_ = problem.canonical().n_data;
    m_ = pset.m;
    center_ = problem.estimate();
    shape_ = problem.hessian() / n_;

    // Whitened pieces: P = Phi (Phi'Phi)^{-1/2} has orthonormal columns;
    // M_i = P' G_i P and w_i = P' G_i (z - Phi alpha_hat).
    const Eigen::MatrixXd P = problem.canonical().Phi * problem.whitener();
    const Eigen::VectorXd ehat =
        problem.canonical().z - problem.canonical().Phi * problem.estimate();
    const int dim = problem.dim();
    Eigen::MatrixXd sumMtM = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd sumMtw = Eigen::VectorXd::Zero(dim);
    double sum_w2 = 0.0;
    gammas_.reserve(m_ - 1);
    for (int i = 1; i < m_; ++i) {
      const Transform& t = pset.transforms[i];
      Eigen::MatrixXd GP(P.rows(), P.cols());
      for (Eigen::Index col = 0; col < P.cols(); ++col) GP.col(col) = t.apply(P.col(col));
      const Eigen::MatrixXd M = P.transpose() * GP;
      const Eigen::VectorXd w = P.transpose() * t.apply(ehat);
      const Eigen::MatrixXd A =
          (Eigen::MatrixXd::Identity(dim, dim) - M.transpose() * M).eval();
      const Eigen::VectorXd b = M.transpose() * w;
      const double c = -w.squaredNorm();
      gammas_.push_back(detail::qcqp_sup_norm2((A + A.transpose()) / 2.0, b, c) / n_);
      sumMtM += M.transpose() * M;
      sumMtw += b;
      sum_w2 += w.squaredNorm();
    }
    sorted_gammas_ = gammas_;
    std::sort(sorted_gammas_.begin(), sorted_gammas_.end(), std::greater<double>());
    sumMtM_ = ((sumMtM + sumMtM.transpose()) / 2.0).eval();
    sumMtw_ = sumMtw;
    sum_w2_ = sum_w2;
  }

  // q-th largest per-transform bound.
  double per_transform_radius(int q) const {
    check_q(q);
    return sorted_gammas_[q - 1];
  }

  // Aggregate bound from q Z_0 <= sum of all perturbed values.
  double aggregate_radius(int q) const {
    check_q(q);
    const int dim = static_cast<int>(sumMtM_.rows());
    const Eigen::MatrixXd A =
        static_cast<double>(q) * Eigen::MatrixXd::Identity(dim, dim) - sumMtM_;
    return detail::qcqp_sup_norm2(A, sumMtw_, -sum_w2_) / n_;
  }

  double radius(int q) const { return std::min(per_transform_radius(q), aggregate_radius(q)); }

  Ellipsoid ellipsoid(int q) const { return Ellipsoid{center_, shape_, radius(q)}; }

  const std::vector<double>& per_transform_gammas() const { return gammas_; }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& shape() const { return shape_; }

 private:
  void check_q(int q) const {
    if (!(q > 0 && q < m_)) throw std::invalid_argument("SpsOuter: q must satisfy 0 < q < m");
  }

  int n_ = 0;
  int m_ = 0;
  Eigen::VectorXd center_;
  Eigen::MatrixXd shape_;
  std::vector<double> gammas_;
  std::vector<double> sorted_gammas_;
  Eigen::MatrixXd sumMtM_;
  Eigen::VectorXd sumMtw_;
  double sum_w2_ = 0.0;
};

inline Ellipsoid outer_ellipsoid(const SpsProblem& problem, const PerturbationSet& pset, int q) {
  return SpsOuter(problem, pset).ellipsoid(q);
}

inline bool ellipsoid_contains(const Ellipsoid& e, const Eigen::VectorXd& alpha) {
  return e.contains(alpha);
}

}  // namespace kuq
