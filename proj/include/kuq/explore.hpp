#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kuq/coverage.hpp"
#include "kuq/errors.hpp"
#include "kuq/estimators.hpp"
#include "kuq/kernels.hpp"
#include "kuq/rank_region.hpp"
#include "kuq/rng.hpp"
#include "kuq/sps.hpp"

namespace kuq {

// Pairwise kernel evaluations between grid points (rows) and training inputs.
inline Eigen::MatrixXd cross_gram(const KernelSpec& kernel, const Eigen::MatrixXd& grid,
                                  const Eigen::MatrixXd& train_inputs) {
  if (grid.cols() != train_inputs.cols())
    throw std::invalid_argument("cross_gram: grid dimension " + std::to_string(grid.cols()) +
                                " does not match input dimension " +
                                std::to_string(train_inputs.cols()));
  Eigen::MatrixXd out(grid.rows(), train_inputs.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const Eigen::VectorXd zi = grid.row(i).transpose();
    for (Eigen::Index j = 0; j < train_inputs.rows(); ++j)
      out(i, j) = kernel(zi, train_inputs.row(j).transpose());
  }
  return out;
}

// f_alpha on the grid: f_alpha(z) = sum_j alpha_j k(z, x_j).
inline Eigen::VectorXd evaluate_model(const KernelSpec& kernel, const Eigen::MatrixXd& train_inputs,
                                      const Eigen::VectorXd& alpha, const Eigen::MatrixXd& grid) {
  if (alpha.size() != train_inputs.rows())
    throw std::invalid_argument("evaluate_model: " + std::to_string(alpha.size()) +
                                " coefficients for " + std::to_string(train_inputs.rows()) +
                                " training inputs");
  return cross_gram(kernel, grid, train_inputs) * alpha;
}

struct RayBoundary {
  int q = 0;
  double confidence = 0.0;
  double radius = std::numeric_limits<double>::quiet_NaN();
  bool reached = false;    // some point on the ray is a member at this level
  bool bracketed = false;  // a non-member beyond `radius` was seen within r_max
};

struct RayScanResult {
  int center_position = 0;
  bool center_member = false;  // member of the widest admissible region (q = 1)
  std::vector<RayBoundary> boundaries;          // one entry per q = 1 .. m-1
  std::vector<std::pair<double, int>> samples;  // (distance, rank position), sorted
};

// Scans rank positions along center + t * direction for t on a geometric grid
// up to r_max (ratio 2, so small radii are resolved too), then bisects each
// level's member/non-member bracket. Evaluations are cached and shared across
// levels. A boundary that never leaves membership by r_max is reported
// unbracketed at radius r_max.
inline RayScanResult ray_scan(const GradientPerturbationProblem& problem,
                              const Eigen::VectorXd& center, const Eigen::VectorXd& direction,
                              const RegionConfig& config, double r_max, int steps,
                              int refine_iters = 30) {
  if (center.size() != problem.dim)
    throw std::invalid_argument("ray_scan: center dimension mismatch");
  if (direction.size() != problem.dim)
    throw std::invalid_argument("ray_scan: direction dimension mismatch");
  const double dir_norm = direction.norm();
  if (!(dir_norm > 0.0)) throw std::invalid_argument("ray_scan: direction must be nonzero");
  if (!(r_max >= 0.0) || !std::isfinite(r_max))
    throw std::invalid_argument("ray_scan: r_max must be finite and nonnegative");
  if (r_max > 0.0 && steps < 2)
    throw std::invalid_argument("ray_scan: steps must be >= 2");
  const Eigen::VectorXd dir = direction / dir_norm;
  const PerturbationSet pset = region_perturbations(problem, config);

  std::map<double, int> cache;
  const auto position_at = [&](double t) {
    const auto it = cache.find(t);
    if (it != cache.end()) return it->second;
    const int pos =
        rank_position(z_values(problem, center + t * dir, pset), pset.tie_order);
    cache.emplace(t, pos);
    return pos;
  };

  RayScanResult result;
  result.center_position = position_at(0.0);
  result.center_member = result.center_position <= config.m - 1;

  if (r_max > 0.0)
    for (int j = 0; j < steps; ++j)
      position_at(std::ldexp(r_max, -(steps - 1 - j)));

  result.boundaries.reserve(config.m - 1);
  for (int q = 1; q < config.m; ++q) {
    RayBoundary b;
    b.q = q;
    b.confidence = 1.0 - static_cast<double>(q) / config.m;
    const int threshold = config.m - q;

    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [t, pos] : cache) {
      if (pos <= threshold) {
        lo = t;
        hi = std::numeric_limits<double>::quiet_NaN();
      } else if (std::isnan(hi)) {
        hi = t;
      }
    }
    if (std::isnan(lo)) {
      result.boundaries.push_back(b);  // never a member on this ray
      continue;
    }
    b.reached = true;
    if (std::isnan(hi)) {
      b.radius = lo;  // still a member at r_max (or r_max == 0)
      result.boundaries.push_back(b);
      continue;
    }
    for (int it = 0; it < refine_iters && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (position_at(mid) <= threshold) lo = mid;
      else hi = mid;
    }
    b.radius = lo;
    b.bracketed = true;
    result.boundaries.push_back(b);
  }

  result.samples.assign(cache.begin(), cache.end());
  return result;
}

// ----- Monte Carlo sampling of coefficient space -----

struct BoxSampler {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

struct EllipsoidSampler {
  Ellipsoid region;
};

// Draws center + t * (basis * v) with v uniform on the unit sphere and t
// uniform on [0, r_max]. An empty basis means the identity; a whitening
// basis makes near-quadratic regions roundish so a single r_max fits all
// directions.
struct RaySampler {
  Eigen::VectorXd center;
  double r_max = 0.0;
  Eigen::MatrixXd basis;
};

using Sampler = std::variant<BoxSampler, EllipsoidSampler, RaySampler>;

struct RegionSample {
  Eigen::VectorXd alpha;
  int position = 0;
  double rank = 0.0;
};

namespace detail {

// Largest step along `step` keeping center + t * step a member at level q,
// found by doubling from t = 1 and bisecting; `cap` marks rays whose
// membership never ends within reach. Returns 0 when the center itself is
// not a member.
inline double member_extent(const GradientPerturbationProblem& problem,
                            const PerturbationSet& pset, int q, const Eigen::VectorXd& center,
                            const Eigen::VectorXd& step, double cap) {
  const int threshold = pset.m - q;
  const auto member = [&](double t) {
    return rank_position(z_values(problem, center + t * step, pset), pset.tie_order) <=
           threshold;
  };
  if (!member(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (member(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi >= cap) return cap;
  }
  for (int it = 0; it < 25; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (member(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

inline Eigen::VectorXd random_unit_vector(SplitMix64& rng, int dim) {
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int j = 0; j < dim; ++j) v[j] = rng.gaussian();
    norm = v.norm();
  } while (!(norm > 0.0));
  return v / norm;
}

}  // namespace detail

// Draws n_samples coefficient vectors from the sampler and ranks each one
// under the shared perturbation set of `config`. Coordinates come from the
// sampler substream of `seed`, directions (ray and ellipsoid samplers) from
// the directions substream, so box draws and ray draws never interleave.
inline std::vector<RegionSample> mc_region(const GradientPerturbationProblem& problem,
                                           const Sampler& sampler, int n_samples,
                                           const RegionConfig& config, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("mc_region: n_samples must be >= 1");
  const int dim = problem.dim;
  if (const auto* box = std::get_if<BoxSampler>(&sampler)) {
    if (box->lo.size() != dim || box->hi.size() != dim)
      throw std::invalid_argument("mc_region: box bounds dimension mismatch");
    if (!box->lo.allFinite() || !box->hi.allFinite() || (box->hi - box->lo).minCoeff() < 0.0)
      throw std::invalid_argument("mc_region: box bounds must be finite with lo <= hi");
  } else if (const auto* ell = std::get_if<EllipsoidSampler>(&sampler)) {
    if (ell->region.center.size() != dim)
      throw std::invalid_argument("mc_region: ellipsoid dimension mismatch");
    if (ell->region.degenerate() || !(ell->region.radius >= 0.0))
      throw std::invalid_argument("mc_region: ellipsoid sampler needs a finite radius");
  } else if (const auto* ray = std::get_if<RaySampler>(&sampler)) {
    if (ray->center.size() != dim)
      throw std::invalid_argument("mc_region: ray center dimension mismatch");
    if (!(ray->r_max >= 0.0) || !std::isfinite(ray->r_max))
      throw std::invalid_argument("mc_region: ray r_max must be finite and nonnegative");
    if (ray->basis.size() != 0 && (ray->basis.rows() != dim || ray->basis.cols() != dim))
      throw std::invalid_argument("mc_region: ray basis must be dim x dim");
  }

  const PerturbationSet pset = region_perturbations(problem, config);
  SplitMix64 coords(stream(seed, Stream::sampler));
  SplitMix64 dirs(stream(seed, Stream::directions));

  Eigen::LLT<Eigen::MatrixXd> shape_llt;
  if (const auto* ell = std::get_if<EllipsoidSampler>(&sampler)) {
    shape_llt.compute(ell->region.shape);
    if (shape_llt.info() != Eigen::Success)
      throw NumericalError("mc_region: ellipsoid shape is not positive definite");
  }

  std::vector<RegionSample> out;
  out.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd alpha(dim);
    if (const auto* box = std::get_if<BoxSampler>(&sampler)) {
      for (int j = 0; j < dim; ++j)
        alpha[j] = box->lo[j] + coords.uniform01() * (box->hi[j] - box->lo[j]);
    } else if (const auto* ell = std::get_if<EllipsoidSampler>(&sampler)) {
      // Uniform in {d' S d <= r}: push a uniform ball point through L^{-T}.
      const Eigen::VectorXd v = detail::random_unit_vector(dirs, dim);
      const double scale =
          std::sqrt(ell->region.radius) * std::pow(coords.uniform01(), 1.0 / dim);
      alpha = ell->region.center +
              shape_llt.matrixU().solve((scale * v).eval());
    } else {
      const auto& ray = std::get<RaySampler>(sampler);
      const Eigen::VectorXd v = detail::random_unit_vector(dirs, dim);
      const double t = coords.uniform01() * ray.r_max;
      alpha = ray.center + t * (ray.basis.size() != 0 ? (ray.basis * v).eval() : v);
    }
    RegionSample rs;
    rs.position = rank_position(z_values(problem, alpha, pset), pset.tie_order);
    rs.rank = static_cast<double>(rs.position) / config.m;
    rs.alpha = std::move(alpha);
    out.push_back(std::move(rs));
  }
  return out;
}

// ----- Model-space confidence bands -----

struct BandLevel {
  double level = 0.0;  // rank threshold; equals the confidence 1 - q/m
  int q = 0;
  int count = 0;
  bool empty = true;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::string note;
};

struct ModelBand {
  Eigen::MatrixXd grid;
  std::vector<BandLevel> levels;
};

// A level p must be q/m-admissible: p = (m - q)/m for an integer 0 < q < m.
inline int band_level_to_q(double level, int m) {
  const long k = std::lround(level * m);
  if (std::abs(level * m - static_cast<double>(k)) > 1e-6 || k < 1 || k > m - 1)
    throw std::invalid_argument("band level " + std::to_string(level) +
                                " is not k/m for 0 < k < m with m = " + std::to_string(m));
  return m - static_cast<int>(k);
}

// Pointwise min/max envelopes of {f_alpha : rank(alpha) <= level} per level.
// Levels with no qualifying samples are kept but flagged empty with a note.
inline ModelBand model_band(const std::vector<RegionSample>& samples, const KernelSpec& kernel,
                            const Eigen::MatrixXd& train_inputs, const Eigen::MatrixXd& grid,
                            const std::vector<double>& levels, int m) {
  if (levels.empty()) throw std::invalid_argument("model_band: levels list is empty");
  ModelBand band;
  band.grid = grid;
  const Eigen::Index g = grid.rows();
  std::vector<int> thresholds;
  for (double level : levels) {
    BandLevel bl;
    bl.level = level;
    bl.q = band_level_to_q(level, m);
    bl.lower = Eigen::VectorXd::Constant(g, std::numeric_limits<double>::infinity());
    bl.upper = Eigen::VectorXd::Constant(g, -std::numeric_limits<double>::infinity());
    thresholds.push_back(m - bl.q);
    band.levels.push_back(std::move(bl));
  }
  const int max_threshold = *std::max_element(thresholds.begin(), thresholds.end());

  const Eigen::MatrixXd cross = cross_gram(kernel, grid, train_inputs);
  for (const RegionSample& s : samples) {
    if (s.position > max_threshold) continue;
    const Eigen::VectorXd curve = cross * s.alpha;
    for (std::size_t li = 0; li < band.levels.size(); ++li) {
      if (s.position > thresholds[li]) continue;
      BandLevel& bl = band.levels[li];
      bl.lower = bl.lower.cwiseMin(curve);
      bl.upper = bl.upper.cwiseMax(curve);
      ++bl.count;
    }
  }
  for (BandLevel& bl : band.levels) {
    bl.empty = bl.count == 0;
    if (bl.empty) {
      bl.note = "no samples with rank <= " + std::to_string(bl.level);
      bl.lower.resize(0);
      bl.upper.resize(0);
    }
  }
  return band;
}

// ----- Default sampling policy -----

// Quadratic objectives scan rays from their least-squares estimate; SVR and
// KLASSO explore a box around a companion KRR estimate with half-widths from
// its outer ellipsoid when that ellipsoid is finite. Otherwise (the usual
// case at wide levels, where every outer radius is infinite) the sampler is
// a whitened ray sampler around the estimator's own solution: directions are
// drawn through the companion Hessian's inverse square root, where the
// region is roundish, and r_max comes from bisected membership extents along
// `probes` probe directions. The 80th-percentile extent (times 1.3) keeps a
// few unbounded rays from blowing up the range.
inline Sampler default_sampler(const EstimatorSpec& spec, const GramMatrix& gram,
                               const Eigen::VectorXd& y, const RegionConfig& config,
                               double companion_lambda = 0.1, int probes = 32) {
  if (spec.kind == EstimatorKind::lssvc)
    throw std::invalid_argument("default_sampler: bands are defined for regression estimators");
  if (probes < 1) throw std::invalid_argument("default_sampler: probes must be >= 1");

  Eigen::VectorXd center;
  Eigen::MatrixXd basis;
  try {
    const double lambda = spec.kind == EstimatorKind::krr ? spec.lambda : companion_lambda;
    const SpsProblem companion = SpsProblem::build(krr_canonical(gram, y, lambda));
    basis = companion.whitener();
    if (spec.kind == EstimatorKind::krr) {
      center = companion.estimate();
    } else {
      const PerturbationSet pset = region_perturbations(companion.problem(), config);
      const double gamma = SpsOuter(companion, pset).radius(config.q);
      if (std::isfinite(gamma)) {
        const int n = companion.canonical().n_data;
        Eigen::VectorXd half(basis.rows());
        for (Eigen::Index j = 0; j < half.size(); ++j)
          half[j] = 1.25 * std::sqrt(gamma * n) * basis.col(j).norm();
        return BoxSampler{companion.estimate() - half, companion.estimate() + half};
      }
      center = spec.kind == EstimatorKind::svr ? svr_estimate(gram, y, spec.eps, spec.c)
                                               : klasso_estimate(gram, y, spec.lambda,
                                                                 100000, 1e-4);
    }
  } catch (const NumericalError&) {
    if (spec.kind == EstimatorKind::krr) throw;
    center = spec.kind == EstimatorKind::svr ? svr_estimate(gram, y, spec.eps, spec.c)
                                             : klasso_estimate(gram, y, spec.lambda,
                                                               100000, 1e-4);
    basis.resize(0, 0);
  }

  const GradientPerturbationProblem problem = make_problem(spec, gram, y);
  const PerturbationSet pset = region_perturbations(problem, config);
  SplitMix64 rng(stream(config.seed, Stream::directions));
  const int dim = problem.dim;
  const double cap = 1e6;
  std::vector<double> extents;
  extents.reserve(probes);
  for (int i = 0; i < probes; ++i) {
    const Eigen::VectorXd v = detail::random_unit_vector(rng, dim);
    const Eigen::VectorXd step = basis.size() != 0 ? (basis * v).eval() : v;
    extents.push_back(detail::member_extent(problem, pset, config.q, center, step, cap));
  }
  std::sort(extents.begin(), extents.end());
  const double r80 = extents[static_cast<std::size_t>(0.8 * (probes - 1))];
  double r_max = 1.3 * r80;
  if (!(r_max > 0.0)) r_max = 4.0 * (1.0 + center.norm());
  return RaySampler{center, r_max, basis};
}

}  // namespace kuq
