#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuq/perturbation.hpp"

namespace kuq {

// Confidence-region parameters: m perturbations, exclusion count q, and the
// seed the shared perturbation set is drawn from. Confidence is 1 - q/m.
struct RegionConfig {
  int m = 0;
  int q = 0;
  std::uint64_t seed = 0;

  RegionConfig() = default;
  RegionConfig(int m_, int q_, std::uint64_t seed_) : m(m_), q(q_), seed(seed_) {
    if (!(q > 0 && q < m))
      throw std::invalid_argument("region config requires 0 < q < m, got q=" +
                                  std::to_string(q_) + ", m=" + std::to_string(m_));
  }

  double confidence() const { return 1.0 - static_cast<double>(q) / m; }
};

// Estimator-specific evaluator of Z(alpha; G) = squared weighted norm of the
// perturbed (sub)gradient. `z` with the identity transform is the reference
// value Z_0. `z_batch`, when present, evaluates a whole perturbation set at
// once and must agree with `z` elementwise; adapters set it when they can
// share work across transforms.
struct GradientPerturbationProblem {
  std::function<double(const Eigen::VectorXd&, const Transform&)> z;
  std::function<std::vector<double>(const Eigen::VectorXd&, const PerturbationSet&)> z_batch;
  int dim = 0;
  TransformGroup group;
  int residual_dim = 0;
};

struct MembershipResult {
  bool member = false;
  int position = 0;  // rank numerator: 1 = reference lowest under the tie order
  int m = 0;
  std::vector<double> z_values;

  double rank() const { return static_cast<double>(position) / m; }
};

// Evaluates all m perturbed values; element 0 is the unperturbed reference.
inline std::vector<double> z_values(const GradientPerturbationProblem& problem,
                                    const Eigen::VectorXd& alpha,
                                    const PerturbationSet& pset) {
  if (alpha.size() != problem.dim)
    throw std::invalid_argument("z_values: coefficient dimension " +
                                std::to_string(alpha.size()) + " does not match problem dimension " +
                                std::to_string(problem.dim));
  if (pset.dim != problem.residual_dim)
    throw std::invalid_argument("z_values: perturbation set drawn for dimension " +
                                std::to_string(pset.dim) + ", problem residual dimension is " +
                                std::to_string(problem.residual_dim));
  if (problem.z_batch) return problem.z_batch(alpha, pset);
  std::vector<double> zs(pset.m);
  for (int i = 0; i < pset.m; ++i) zs[i] = problem.z(alpha, pset.transforms[i]);
  return zs;
}

// Position of the reference element in the ascending order of all m values
// under the randomized strict total order: z_k precedes z_j when z_k < z_j,
// or z_k == z_j (exact float equality) and pi(k) < pi(j). Position 1 means
// the reference is lowest; ties among continuous Z values have probability
// zero, the pi rule only decides constructed ties.
inline int rank_position(const std::vector<double>& zs, const std::vector<int>& tie_order) {
  if (zs.size() != tie_order.size())
    throw std::invalid_argument("rank_position: tie order size does not match value count");
  const double z0 = zs[0];
  int below = 0;
  for (std::size_t i = 1; i < zs.size(); ++i) {
    if (zs[i] < z0 || (zs[i] == z0 && tie_order[i] < tie_order[0])) ++below;
  }
  return 1 + below;
}

inline double normalized_rank(const std::vector<double>& zs, const std::vector<int>& tie_order) {
  return static_cast<double>(rank_position(zs, tie_order)) / static_cast<double>(zs.size());
}

// The shared perturbation set for one (problem, config) pair. Every alpha
// queried under one config must reuse this set, otherwise the region is not
// a well-defined deterministic set.
inline PerturbationSet region_perturbations(const GradientPerturbationProblem& problem,
                                            const RegionConfig& config) {
  return draw_perturbations(problem.group, config.m, problem.residual_dim, config.seed);
}

inline MembershipResult membership_from_values(std::vector<double> zs,
                                               const std::vector<int>& tie_order, int q) {
  MembershipResult r;
  r.m = static_cast<int>(zs.size());
  if (!(q > 0 && q < r.m)) throw std::invalid_argument("membership requires 0 < q < m");
  r.position = rank_position(zs, tie_order);
  r.member = r.position <= r.m - q;
  r.z_values = std::move(zs);
  return r;
}

inline MembershipResult is_member(const GradientPerturbationProblem& problem,
                                  const Eigen::VectorXd& alpha,
                                  const PerturbationSet& pset, int q) {
  return membership_from_values(z_values(problem, alpha, pset), pset.tie_order, q);
}

inline MembershipResult is_member(const GradientPerturbationProblem& problem,
                                  const Eigen::VectorXd& alpha, const RegionConfig& config) {
  const PerturbationSet pset = region_perturbations(problem, config);
  return is_member(problem, alpha, pset, config.q);
}

}  // namespace kuq
