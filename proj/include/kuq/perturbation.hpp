#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuq/rng.hpp"

namespace kuq {

enum class GroupKind { sign_change, permutation };

// A compact group acting on residual vectors. fixed_tail > 0 selects the
// block variant: the final fixed_tail coordinates are left unchanged by
// every element, which is how augmented canonical forms keep their
// auxiliary rows unperturbed.
struct TransformGroup {
  GroupKind kind = GroupKind::sign_change;
  int fixed_tail = 0;
};

// One group element, stored compactly (sign vector or index array over the
// perturbable head). Permutations act by scatter: out[perm[i]] = v[i], so
// e.g. the 1-based permutation (2,3,1) maps (1,2,3) to (3,1,2).
struct Transform {
  GroupKind kind = GroupKind::sign_change;
  int dim = 0;
  int fixed_tail = 0;
  bool identity = false;
  Eigen::VectorXd signs;   // sign_change: +-1 entries over the head
  std::vector<int> perm;   // permutation: bijection on {0, ..., head-1}

  int head() const { return dim - fixed_tail; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    if (v.size() != dim)
      throw std::invalid_argument("transform expects dimension " + std::to_string(dim) +
                                  ", got " + std::to_string(v.size()));
    Eigen::VectorXd out(dim);
    const int h = head();
    if (kind == GroupKind::sign_change) {
      out.head(h) = signs.cwiseProduct(v.head(h));
    } else {
      for (int i = 0; i < h; ++i) out[perm[i]] = v[i];
    }
    if (fixed_tail > 0) out.tail(fixed_tail) = v.tail(fixed_tail);
    return out;
  }
};

// G_0, ..., G_{m-1} with G_0 the identity, plus the tie-breaking order pi.
// Everything is a function of (group, m, dim, seed) only; the transforms
// come from the `transforms` substream and pi from the `tie_order`
// substream, drawn in index order.
struct PerturbationSet {
  TransformGroup group;
  int m = 0;
  int dim = 0;
  std::uint64_t seed = 0;
  std::vector<Transform> transforms;
  std::vector<int> tie_order;
};

inline Transform identity_transform(const TransformGroup& group, int dim) {
  Transform t;
  t.kind = group.kind;
  t.dim = dim;
  t.fixed_tail = group.fixed_tail;
  t.identity = true;
  const int h = t.head();
  if (group.kind == GroupKind::sign_change) {
    t.signs = Eigen::VectorXd::Ones(h);
  } else {
    t.perm.resize(h);
    std::iota(t.perm.begin(), t.perm.end(), 0);
  }
  return t;
}

inline PerturbationSet draw_perturbations(const TransformGroup& group, int m, int dim,
                                          std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("draw_perturbations: m must be >= 2");
  if (dim < 1) throw std::invalid_argument("draw_perturbations: dimension must be >= 1");
  if (group.fixed_tail < 0 || group.fixed_tail >= dim)
    throw std::invalid_argument("draw_perturbations: fixed_tail must lie in [0, dim)");

  PerturbationSet set;
  set.group = group;
  set.m = m;
  set.dim = dim;
  set.seed = seed;
  set.transforms.reserve(m);
  set.transforms.push_back(identity_transform(group, dim));

  auto gen = stream(seed, Stream::transforms);
  const int h = dim - group.fixed_tail;
  for (int i = 1; i < m; ++i) {
    Transform t;
    t.kind = group.kind;
    t.dim = dim;
    t.fixed_tail = group.fixed_tail;
    if (group.kind == GroupKind::sign_change) {
      t.signs.resize(h);
      for (int j = 0; j < h; ++j) t.signs[j] = gen.sign_pm();
    } else {
      t.perm = gen.permutation(h);
    }
    set.transforms.push_back(std::move(t));
  }

  auto tie_gen = stream(seed, Stream::tie_order);
  set.tie_order = tie_gen.permutation(m);
  return set;
}

}  // namespace kuq
