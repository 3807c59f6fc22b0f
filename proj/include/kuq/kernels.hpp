#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "kuq/errors.hpp"

namespace kuq {

enum class KernelFamily {
  gaussian,
  laplacian,
  polynomial,
  sigmoidal,
  truncated_parabolic,
  rectangular,
};

// A kernel family plus hyper-parameters; evaluates k(z, s).
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double sigma = 1.0;  // gaussian, laplacian: bandwidth
  double c = 0.0;      // polynomial: offset; truncated_parabolic, rectangular: radius
  int p = 1;           // polynomial: degree
  double a = 0.0;      // sigmoidal: slope
  double b = 0.0;      // sigmoidal: intercept

  static KernelSpec gaussian(double sigma) {
    require(sigma > 0.0, "gaussian kernel requires sigma > 0");
    KernelSpec k;
    k.family = KernelFamily::gaussian;
    k.sigma = sigma;
    return k;
  }

  static KernelSpec laplacian(double sigma) {
    require(sigma > 0.0, "laplacian kernel requires sigma > 0");
    KernelSpec k;
    k.family = KernelFamily::laplacian;
    k.sigma = sigma;
    return k;
  }

  static KernelSpec polynomial(double c, int p) {
    require(c >= 0.0, "polynomial kernel requires c >= 0");
    require(p >= 1, "polynomial kernel requires integer degree p >= 1");
    KernelSpec k;
    k.family = KernelFamily::polynomial;
    k.c = c;
    k.p = p;
    return k;
  }

  static KernelSpec sigmoidal(double a, double b) {
    require(a >= 0.0 && b >= 0.0, "sigmoidal kernel requires a, b >= 0");
    KernelSpec k;
    k.family = KernelFamily::sigmoidal;
    k.a = a;
    k.b = b;
    return k;
  }

  static KernelSpec truncated_parabolic(double c) {
    require(c > 0.0, "truncated_parabolic kernel requires c > 0");
    KernelSpec k;
    k.family = KernelFamily::truncated_parabolic;
    k.c = c;
    return k;
  }

  static KernelSpec rectangular(double c) {
    require(c > 0.0, "rectangular kernel requires c > 0");
    KernelSpec k;
    k.family = KernelFamily::rectangular;
    k.c = c;
    return k;
  }

  // The sigmoidal family is not positive semi-definite in general; region
  // construction with it requires an explicit override at the CLI level.
  bool psd_family() const { return family != KernelFamily::sigmoidal; }

  std::string name() const {
    switch (family) {
      case KernelFamily::gaussian: return "gaussian";
      case KernelFamily::laplacian: return "laplacian";
      case KernelFamily::polynomial: return "polynomial";
      case KernelFamily::sigmoidal: return "sigmoidal";
      case KernelFamily::truncated_parabolic: return "truncated_parabolic";
      case KernelFamily::rectangular: return "rectangular";
    }
    return "unknown";
  }

  double operator()(const Eigen::VectorXd& z, const Eigen::VectorXd& s) const {
    if (z.size() != s.size())
      throw std::invalid_argument("eval_kernel: point dimensions differ (" +
                                  std::to_string(z.size()) + " vs " +
                                  std::to_string(s.size()) + ")");
    switch (family) {
      case KernelFamily::gaussian:
        return std::exp(-(z - s).squaredNorm() / (2.0 * sigma * sigma));
      case KernelFamily::laplacian:
        return std::exp(-(z - s).norm() / sigma);
      case KernelFamily::polynomial: {
        double base = z.dot(s) + c;
        double out = 1.0;
        for (int i = 0; i < p; ++i) out *= base;
        return out;
      }
      case KernelFamily::sigmoidal:
        return std::tanh(a * z.dot(s) + b);
      case KernelFamily::truncated_parabolic:
        return std::max(1.0 - c * (z - s).squaredNorm(), 0.0);
      case KernelFamily::rectangular:
        return (z - s).norm() <= c ? 1.0 : 0.0;
    }
    return 0.0;
  }

 private:
  static void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
  }
};

struct GramMatrix {
  Eigen::MatrixXd entries;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double condition_estimate = 0.0;

  int n() const { return static_cast<int>(entries.rows()); }
};

// Builds the n-by-n matrix of pairwise kernel values over the rows of
// `inputs` (one point per row) and its eigenvalue diagnostics.
inline GramMatrix gram_matrix(const KernelSpec& kernel, const Eigen::MatrixXd& inputs) {
  const auto n = inputs.rows();
  if (n < 1) throw std::invalid_argument("gram_matrix: empty input set");
  GramMatrix g;
  g.entries.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel(inputs.row(i).transpose(), inputs.row(j).transpose());
      g.entries(i, j) = v;
      g.entries(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.entries, Eigen::EigenvaluesOnly);
  g.min_eigenvalue = eig.eigenvalues().minCoeff();
  g.max_eigenvalue = eig.eigenvalues().maxCoeff();
  g.condition_estimate = g.min_eigenvalue > 0.0
                             ? g.max_eigenvalue / g.min_eigenvalue
                             : std::numeric_limits<double>::infinity();
  return g;
}

struct PdDiagnostics {
  bool strictly_pd = false;
  double min_eigenvalue = 0.0;
  double condition_estimate = 0.0;
};

// Strict positive definiteness relative to the spectral radius.
inline PdDiagnostics check_strict_pd(const GramMatrix& g, double rel_tol = 1e-10) {
  PdDiagnostics d;
  d.min_eigenvalue = g.min_eigenvalue;
  d.condition_estimate = g.condition_estimate;
  d.strictly_pd = g.min_eigenvalue > rel_tol * g.max_eigenvalue;
  return d;
}

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// [-rel_tol * max, 0] are clamped to zero; anything below is an error.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) throw std::invalid_argument("psd_sqrt: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success)
    throw NumericalError("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd vals = eig.eigenvalues();
  const double scale = std::max(std::abs(vals.minCoeff()), std::abs(vals.maxCoeff()));
  const double clamp = rel_tol * std::max(scale, 1.0);
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals[i] < -clamp)
      throw NumericalError("psd_sqrt: eigenvalue " + std::to_string(vals[i]) +
                           " below the PSD clamp threshold " + std::to_string(-clamp));
    if (vals[i] < 0.0) vals[i] = 0.0;
  }
  const Eigen::MatrixXd s = eig.eigenvectors() * vals.cwiseSqrt().asDiagonal() *
                            eig.eigenvectors().transpose();
  return ((s + s.transpose()) / 2.0).eval();
}

// Inverse symmetric square root of a strictly PD matrix.
inline Eigen::MatrixXd pd_inv_sqrt(const Eigen::MatrixXd& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) throw std::invalid_argument("pd_inv_sqrt: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success)
    throw NumericalError("pd_inv_sqrt: eigendecomposition failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();
  if (vals.minCoeff() <= rel_tol * std::max(vals.maxCoeff(), 0.0))
    throw NumericalError("pd_inv_sqrt: matrix not strictly positive definite (min eigenvalue " +
                         std::to_string(vals.minCoeff()) + ")");
  const Eigen::MatrixXd s = eig.eigenvectors() *
                            vals.cwiseSqrt().cwiseInverse().asDiagonal() *
                            eig.eigenvectors().transpose();
  return ((s + s.transpose()) / 2.0).eval();
}

}  // namespace kuq
