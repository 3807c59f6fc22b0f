#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuq/data.hpp"
#include "kuq/errors.hpp"
#include "kuq/estimators.hpp"
#include "kuq/kernels.hpp"
#include "kuq/rank_region.hpp"
#include "kuq/sps.hpp"

namespace kuq {

enum class EstimatorKind { krr, lssvc, svr, klasso };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::krr;
  double lambda = 0.1;  // krr, lssvc, klasso
  double eps = 0.2;     // svr tube half-width
  double c = 250.0;     // svr box constraint

  static EstimatorSpec krr(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("krr requires lambda > 0");
    EstimatorSpec e;
    e.kind = EstimatorKind::krr;
    e.lambda = lambda;
    return e;
  }
  static EstimatorSpec lssvc(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lssvc requires lambda > 0");
    EstimatorSpec e;
    e.kind = EstimatorKind::lssvc;
    e.lambda = lambda;
    return e;
  }
  static EstimatorSpec svr(double c, double eps) {
    if (!(c > 0.0)) throw std::invalid_argument("svr requires c > 0");
    if (eps < 0.0) throw std::invalid_argument("svr requires eps >= 0");
    EstimatorSpec e;
    e.kind = EstimatorKind::svr;
    e.c = c;
    e.eps = eps;
    return e;
  }
  static EstimatorSpec klasso(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("klasso requires lambda > 0");
    EstimatorSpec e;
    e.kind = EstimatorKind::klasso;
    e.lambda = lambda;
    return e;
  }

  std::string name() const {
    switch (kind) {
      case EstimatorKind::krr: return "krr";
      case EstimatorKind::lssvc: return "lssvc";
      case EstimatorKind::svr: return "svr";
      case EstimatorKind::klasso: return "klasso";
    }
    return "unknown";
  }
};

// Builds the rank-test problem for a regression estimator on one dataset.
inline GradientPerturbationProblem make_problem(const EstimatorSpec& spec,
                                                const GramMatrix& gram,
                                                const Eigen::VectorXd& y,
                                                GroupKind group = GroupKind::sign_change) {
  switch (spec.kind) {
    case EstimatorKind::krr:
      return SpsProblem::build(krr_canonical(gram, y, spec.lambda), group).problem();
    case EstimatorKind::svr:
      return svr_problem(gram, y, spec.eps, group);
    case EstimatorKind::klasso:
      return klasso_problem(gram, y, spec.lambda, group);
    case EstimatorKind::lssvc:
      throw std::invalid_argument("make_problem: LS-SVC needs labeled points, not a Gram matrix");
  }
  throw std::invalid_argument("make_problem: unknown estimator");
}

struct CoverageScenario {
  std::function<double(double)> true_fn = x_sin_x;
  int n = 20;
  double lo = 0.0;
  double hi = 10.0;
  NoiseSpec noise = NoiseSpec::laplace(0.0, 0.5);
  KernelSpec kernel = KernelSpec::gaussian(0.5);
  EstimatorSpec estimator = EstimatorSpec::krr(0.1);
  GroupKind group = GroupKind::sign_change;
};

struct CoverageResult {
  int trials = 0;
  double nominal = 0.0;
  double empirical = 0.0;
  double ci_half_width = 0.0;      // 3 sigma binomial at the nominal level
  std::vector<int> positions;      // rank position of alpha* per trial
};

// Monte Carlo verification of exact coverage: each trial generates a fresh
// sample, solves K alpha* = y* for the ideal coefficients, draws a fresh
// perturbation set from the trial seed, and tests membership of alpha*.
inline CoverageResult coverage_experiment(const CoverageScenario& scenario, int trials,
                                          const RegionConfig& config, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("coverage_experiment: trials must be >= 1");
  if (!(config.q > 0 && config.q < config.m))
    throw std::invalid_argument("coverage_experiment: region config requires 0 < q < m");
  if (scenario.estimator.kind == EstimatorKind::lssvc)
    throw std::invalid_argument("coverage_experiment: supported for regression estimators only");

  CoverageResult result;
  result.trials = trials;
  result.nominal = config.confidence();
  result.positions.reserve(trials);
  int hits = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
    const DataSample sample = generate_synthetic(scenario.true_fn, scenario.n, scenario.lo,
                                                 scenario.hi, scenario.noise, trial_seed);
    const GramMatrix gram = gram_matrix(scenario.kernel, sample.inputs);
    const PdDiagnostics pd = check_strict_pd(gram);
    if (!pd.strictly_pd)
      throw NumericalError("coverage trial " + std::to_string(trial) +
                           ": Gram matrix not strictly PD (min eigenvalue " +
                           std::to_string(pd.min_eigenvalue) + ", condition estimate " +
                           std::to_string(pd.condition_estimate) + ")");
    const Eigen::VectorXd alpha_star =
        gram.entries.ldlt().solve(*sample.true_outputs);

    const GradientPerturbationProblem problem =
        make_problem(scenario.estimator, gram, sample.outputs, scenario.group);
    const PerturbationSet pset =
        draw_perturbations(problem.group, config.m, problem.residual_dim, trial_seed);
    const std::vector<double> zs = z_values(problem, alpha_star, pset);
    const int position = rank_position(zs, pset.tie_order);
    result.positions.push_back(position);
    if (position <= config.m - config.q) ++hits;
  }
  result.empirical = static_cast<double>(hits) / trials;
  result.ci_half_width =
      3.0 * std::sqrt(result.nominal * (1.0 - result.nominal) / trials);
  return result;
}

// Chi-square statistic of the rank-position histogram against the uniform
// distribution on {1, ..., m}; m - 1 degrees of freedom.
inline double rank_chi_square(const std::vector<int>& positions, int m) {
  if (positions.empty()) throw std::invalid_argument("rank_chi_square: no positions");
  std::vector<int> counts(m, 0);
  for (int p : positions) {
    if (p < 1 || p > m) throw std::invalid_argument("rank_chi_square: position out of range");
    ++counts[p - 1];
  }
  const double expected = static_cast<double>(positions.size()) / m;
  double stat = 0.0;
  for (int c : counts) {
    const double d = c - expected;
    stat += d * d / expected;
  }
  return stat;
}

}  // namespace kuq
