#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kuq/kuq.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

std::string format_level(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", level);
  return buf;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

void emit_json(const std::string& path, const json& j) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw kuq::DataError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw kuq::DataError("failed writing '" + path + "'");
}

Eigen::VectorXd read_coefficients(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kuq::DataError("cannot open coefficient file '" + path + "'");
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size())
      throw kuq::DataError("coefficient file '" + path + "': '" + tok + "' is not a number");
    vals.push_back(v);
  }
  if (vals.empty()) throw kuq::DataError("coefficient file '" + path + "' is empty");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::function<double(double)> lookup_fn(const std::string& name) {
  if (name == "x-sin-x") return kuq::x_sin_x;
  if (name == "sin") return [](double x) { return std::sin(x); };
  if (name == "zero") return [](double) { return 0.0; };
  throw std::invalid_argument("unknown function '" + name +
                              "' (expected x-sin-x, sin, or zero)");
}

void require_psd_kernel(const kuq::KernelSpec& kernel, bool allow_indefinite) {
  if (!kernel.psd_family() && !allow_indefinite)
    throw std::invalid_argument(kernel.name() +
                                " kernels are not positive semidefinite; pass "
                                "--allow-indefinite to use one anyway");
}

kuq::SpsWeighting parse_weighting(const std::string& text) {
  if (text == "hessian") return kuq::SpsWeighting::hessian_inv_sqrt;
  if (text == "identity") return kuq::SpsWeighting::identity;
  throw std::invalid_argument("unknown weighting '" + text + "' (expected hessian or identity)");
}

std::vector<int> parse_q_list(const std::string& text, int m) {
  std::vector<int> qs;
  for (const std::string& part : kuq::detail::split(text, ','))
    qs.push_back(kuq::detail::parse_int(part, "q list '" + text + "'"));
  if (qs.empty()) throw std::invalid_argument("q list is empty");
  for (int q : qs)
    if (!(q > 0 && q < m))
      throw std::invalid_argument("q = " + std::to_string(q) + " is not in (0, " +
                                  std::to_string(m) + ")");
  return qs;
}

Eigen::VectorXd own_estimate(const kuq::EstimatorSpec& est, const kuq::GramMatrix& gram,
                             const Eigen::VectorXd& y, double iterative_tol = 1e-10) {
  switch (est.kind) {
    case kuq::EstimatorKind::krr:
      return kuq::ls_estimate(kuq::krr_canonical(gram, y, est.lambda));
    case kuq::EstimatorKind::svr:
      return kuq::svr_estimate(gram, y, est.eps, est.c, 100000, iterative_tol);
    case kuq::EstimatorKind::klasso:
      return kuq::klasso_estimate(gram, y, est.lambda, 100000, iterative_tol);
    case kuq::EstimatorKind::lssvc:
      break;
  }
  throw std::invalid_argument("own_estimate: unsupported estimator");
}

kuq::Sampler resolve_sampler(const std::string& text, const kuq::EstimatorSpec& est,
                             const kuq::GramMatrix& gram, const Eigen::VectorXd& y,
                             const kuq::RegionConfig& config, double companion_lambda) {
  if (text == "auto") return kuq::default_sampler(est, gram, y, config, companion_lambda);
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "rays") {
    const auto kv = kuq::detail::parse_kv(rest, {"rmax"}, "sampler '" + text + "'");
    const double rmax = kuq::detail::parse_double(
        kuq::detail::require_kv(kv, "rmax", "sampler '" + text + "'"), "sampler rmax");
    return kuq::RaySampler{own_estimate(est, gram, y, 1e-4), rmax, {}};
  }
  if (head == "box") {
    const auto kv = kuq::detail::parse_kv(rest, {"half"}, "sampler '" + text + "'");
    const double half = kuq::detail::parse_double(
        kuq::detail::require_kv(kv, "half", "sampler '" + text + "'"), "sampler half");
    const Eigen::VectorXd center = own_estimate(est, gram, y, 1e-4);
    const Eigen::VectorXd h = Eigen::VectorXd::Constant(center.size(), half);
    return kuq::BoxSampler{center - h, center + h};
  }
  if (head == "ellipsoid") {
    if (!rest.empty())
      throw std::invalid_argument("sampler 'ellipsoid' takes no parameters");
    const double lambda =
        est.kind == kuq::EstimatorKind::krr ? est.lambda : companion_lambda;
    const kuq::SpsProblem sps =
        kuq::SpsProblem::build(kuq::krr_canonical(gram, y, lambda));
    const kuq::Ellipsoid e =
        kuq::outer_ellipsoid(sps, kuq::region_perturbations(sps.problem(), config), config.q);
    if (e.degenerate())
      throw kuq::NumericalError(
          "outer ellipsoid is degenerate at q = " + std::to_string(config.q) +
          "; raise q or choose another sampler");
    return kuq::EllipsoidSampler{e};
  }
  throw std::invalid_argument("unknown sampler '" + text +
                              "' (expected auto, rays:rmax=R, box:half=H, or ellipsoid)");
}

json sampler_summary(const kuq::Sampler& sampler) {
  json out;
  if (const auto* box = std::get_if<kuq::BoxSampler>(&sampler)) {
    out["type"] = "box";
    out["mean_half_width"] = (box->hi - box->lo).mean() / 2.0;
  } else if (const auto* ell = std::get_if<kuq::EllipsoidSampler>(&sampler)) {
    out["type"] = "ellipsoid";
    out["radius"] = ell->region.radius;
  } else {
    const auto& ray = std::get<kuq::RaySampler>(sampler);
    out["type"] = "rays";
    out["r_max"] = ray.r_max;
    out["center_norm"] = ray.center.norm();
    out["whitened"] = ray.basis.size() != 0;
  }
  return out;
}

// ----- simulate -----

struct SimulateOpts {
  std::string fn = "x-sin-x";
  int n = 20;
  std::vector<double> range{0.0, 10.0};
  std::string noise = "laplace:0:0.5";
  std::uint64_t seed = 1;
  std::string out = "data.csv";
};

void run_simulate(const SimulateOpts& o) {
  const auto fn = lookup_fn(o.fn);
  const kuq::NoiseSpec noise = kuq::parse_noise(o.noise);
  if (o.range.size() != 2 || !(o.range[0] < o.range[1]))
    throw std::invalid_argument("--range needs two values with lo < hi");
  const kuq::DataSample sample =
      kuq::generate_synthetic(fn, o.n, o.range[0], o.range[1], noise, o.seed);
  kuq::save_csv(sample, o.out);

  json sidecar;
  sidecar["schema_version"] = kSchemaVersion;
  sidecar["command"] = "simulate";
  sidecar["fn"] = o.fn;
  sidecar["n"] = o.n;
  sidecar["range"] = {o.range[0], o.range[1]};
  sidecar["noise_flag"] = o.noise;
  sidecar["noise"] = kuq::noise_to_string(noise);
  sidecar["seed"] = o.seed;
  sidecar["out"] = o.out;
  emit_json(o.out + ".json", sidecar);
  std::cout << "wrote " << sample.n() << " rows to " << o.out << "\n";
}

// ----- member -----

struct MemberOpts {
  std::string data;
  std::string estimator = "krr:lambda=0.1";
  std::string kernel = "gaussian:sigma=0.5";
  std::string alpha = "fit";
  int m = 100;
  int q = 10;
  std::uint64_t seed = 0;
  std::string group = "sign";
  std::string weighting = "hessian";
  bool allow_indefinite = false;
  std::string out;
};

void run_member(const MemberOpts& o) {
  const kuq::EstimatorSpec est = kuq::parse_estimator(o.estimator);
  const kuq::KernelSpec kernel = kuq::parse_kernel(o.kernel);
  const kuq::GroupKind group = kuq::parse_group(o.group);
  const kuq::SpsWeighting weighting = parse_weighting(o.weighting);
  const kuq::RegionConfig config(o.m, o.q, o.seed);
  if (weighting == kuq::SpsWeighting::identity &&
      (est.kind == kuq::EstimatorKind::svr || est.kind == kuq::EstimatorKind::klasso))
    throw std::invalid_argument("--weighting applies to krr and lssvc only");
  const kuq::DataSample sample = kuq::load_csv(o.data);

  kuq::GradientPerturbationProblem problem;
  Eigen::VectorXd fitted;
  if (est.kind == kuq::EstimatorKind::lssvc) {
    const kuq::SpsProblem sps = kuq::SpsProblem::build(
        kuq::lssvc_canonical(sample.inputs, sample.outputs, est.lambda), group, weighting);
    problem = sps.problem();
    fitted = sps.estimate();
  } else {
    require_psd_kernel(kernel, o.allow_indefinite);
    const kuq::GramMatrix gram = kuq::gram_matrix(kernel, sample.inputs);
    if (est.kind == kuq::EstimatorKind::krr) {
      const kuq::SpsProblem sps = kuq::SpsProblem::build(
          kuq::krr_canonical(gram, sample.outputs, est.lambda), group, weighting);
      problem = sps.problem();
      fitted = sps.estimate();
    } else {
      problem = kuq::make_problem(est, gram, sample.outputs, group);
      if (o.alpha == "fit") fitted = own_estimate(est, gram, sample.outputs);
    }
  }
  const Eigen::VectorXd alpha = o.alpha == "fit" ? fitted : read_coefficients(o.alpha);
  if (alpha.size() != problem.dim)
    throw kuq::DataError("coefficient vector has dimension " + std::to_string(alpha.size()) +
                         " but the problem needs " + std::to_string(problem.dim));
  const kuq::MembershipResult result = kuq::is_member(problem, alpha, config);

  json out;
  out["schema_version"] = kSchemaVersion;
  out["command"] = "member";
  out["member"] = result.member;
  out["rank"] = result.rank();
  out["position"] = result.position;
  out["m"] = o.m;
  out["q"] = o.q;
  out["confidence"] = config.confidence();
  out["seed"] = o.seed;
  out["group"] = kuq::group_to_string(group);
  out["weighting"] = o.weighting;
  out["estimator"] = kuq::estimator_to_string(est);
  out["kernel"] = kuq::kernel_to_string(kernel);
  out["data"] = o.data;
  out["alpha_source"] = o.alpha;
  out["z_values"] = result.z_values;
  emit_json(o.out, out);
}

// ----- band -----

struct BandOpts {
  std::string data;
  std::string estimator = "krr:lambda=0.1";
  std::string kernel = "gaussian:sigma=0.5";
  std::string levels = "0.9";
  std::string sampler = "auto";
  std::string group = "sign";
  int samples = 10000;
  int m = 100;
  std::uint64_t seed = 0;
  std::uint64_t sample_seed = 1;
  int grid_n = 201;
  std::vector<double> grid_range;
  double companion_lambda = 0.1;
  bool allow_indefinite = false;
  std::string out = "band.csv";
};

void run_band(const BandOpts& o) {
  const kuq::EstimatorSpec est = kuq::parse_estimator(o.estimator);
  if (est.kind == kuq::EstimatorKind::lssvc)
    throw std::invalid_argument("band supports the regression estimators (krr, svr, klasso)");
  const kuq::KernelSpec kernel = kuq::parse_kernel(o.kernel);
  require_psd_kernel(kernel, o.allow_indefinite);
  const kuq::GroupKind group = kuq::parse_group(o.group);
  const std::vector<double> levels = kuq::parse_levels(o.levels);
  int q_config = o.m;
  for (double level : levels) q_config = std::min(q_config, kuq::band_level_to_q(level, o.m));
  if (o.samples < 1) throw std::invalid_argument("--samples must be >= 1");
  if (o.grid_n < 2) throw std::invalid_argument("--grid-n must be >= 2");

  const kuq::DataSample sample = kuq::load_csv(o.data);
  if (sample.dim() != 1) throw kuq::DataError("band requires scalar inputs");
  const kuq::GramMatrix gram = kuq::gram_matrix(kernel, sample.inputs);
  const kuq::RegionConfig config(o.m, q_config, o.seed);
  const kuq::GradientPerturbationProblem problem =
      kuq::make_problem(est, gram, sample.outputs, group);
  const kuq::Sampler sampler =
      resolve_sampler(o.sampler, est, gram, sample.outputs, config, o.companion_lambda);
  const std::vector<kuq::RegionSample> points =
      kuq::mc_region(problem, sampler, o.samples, config, o.sample_seed);

  double lo = sample.inputs.col(0).minCoeff();
  double hi = sample.inputs.col(0).maxCoeff();
  if (!o.grid_range.empty()) {
    if (o.grid_range.size() != 2 || !(o.grid_range[0] < o.grid_range[1]))
      throw std::invalid_argument("--grid-range needs two values with lo < hi");
    lo = o.grid_range[0];
    hi = o.grid_range[1];
  }
  const Eigen::MatrixXd grid = kuq::equidistant(lo, hi, o.grid_n);
  const kuq::ModelBand band =
      kuq::model_band(points, kernel, sample.inputs, grid, levels, o.m);

  std::ofstream csv(o.out);
  if (!csv) throw kuq::DataError("cannot open '" + o.out + "' for writing");
  csv << "grid_x";
  for (const kuq::BandLevel& bl : band.levels)
    if (!bl.empty)
      csv << ",lower_" << format_level(bl.level) << ",upper_" << format_level(bl.level);
  csv << "\n";
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    csv << kuq::detail::format_g17(grid(i, 0));
    for (const kuq::BandLevel& bl : band.levels)
      if (!bl.empty)
        csv << "," << kuq::detail::format_g17(bl.lower[i]) << ","
            << kuq::detail::format_g17(bl.upper[i]);
    csv << "\n";
  }
  if (!csv) throw kuq::DataError("failed writing '" + o.out + "'");
  csv.close();

  json sidecar;
  sidecar["schema_version"] = kSchemaVersion;
  sidecar["command"] = "band";
  sidecar["data"] = o.data;
  sidecar["estimator"] = kuq::estimator_to_string(est);
  sidecar["kernel"] = kuq::kernel_to_string(kernel);
  sidecar["group"] = kuq::group_to_string(group);
  sidecar["m"] = o.m;
  sidecar["q"] = q_config;
  sidecar["seed"] = o.seed;
  sidecar["sample_seed"] = o.sample_seed;
  sidecar["samples"] = o.samples;
  sidecar["sampler_flag"] = o.sampler;
  sidecar["sampler"] = sampler_summary(sampler);
  sidecar["grid_n"] = o.grid_n;
  sidecar["grid_range"] = {lo, hi};
  sidecar["out"] = o.out;
  json jlevels = json::array();
  for (const kuq::BandLevel& bl : band.levels) {
    json jl;
    jl["level"] = bl.level;
    jl["q"] = bl.q;
    jl["samples"] = bl.count;
    jl["empty"] = bl.empty;
    if (!bl.note.empty()) jl["note"] = bl.note;
    jlevels.push_back(std::move(jl));
  }
  sidecar["levels"] = std::move(jlevels);
  emit_json(o.out + ".json", sidecar);
  std::cout << "wrote " << grid.rows() << " grid rows to " << o.out << "\n";
}

// ----- ellipsoid -----

struct EllipsoidOpts {
  std::string data;
  std::string estimator = "krr:lambda=0.1";
  std::string kernel = "gaussian:sigma=0.5";
  int m = 100;
  std::string q = "10,50,90";
  std::uint64_t seed = 0;
  std::string group = "sign";
  std::string weighting = "hessian";
  bool allow_indefinite = false;
  std::string out;
};

void run_ellipsoid(const EllipsoidOpts& o) {
  const kuq::EstimatorSpec est = kuq::parse_estimator(o.estimator);
  if (est.kind != kuq::EstimatorKind::krr && est.kind != kuq::EstimatorKind::lssvc)
    throw std::invalid_argument("ellipsoid supports the canonical least-squares estimators "
                                "(krr, lssvc)");
  const kuq::KernelSpec kernel = kuq::parse_kernel(o.kernel);
  const kuq::GroupKind group = kuq::parse_group(o.group);
  const kuq::SpsWeighting weighting = parse_weighting(o.weighting);
  const std::vector<int> qs = parse_q_list(o.q, o.m);
  const kuq::DataSample sample = kuq::load_csv(o.data);

  kuq::SpsProblem sps = [&] {
    if (est.kind == kuq::EstimatorKind::lssvc)
      return kuq::SpsProblem::build(
          kuq::lssvc_canonical(sample.inputs, sample.outputs, est.lambda), group, weighting);
    require_psd_kernel(kernel, o.allow_indefinite);
    return kuq::SpsProblem::build(
        kuq::krr_canonical(kuq::gram_matrix(kernel, sample.inputs), sample.outputs, est.lambda),
        group, weighting);
  }();
  const kuq::RegionConfig config(o.m, qs.front(), o.seed);
  const kuq::PerturbationSet pset = kuq::region_perturbations(sps.problem(), config);
  const kuq::SpsOuter outer(sps, pset);

  json out;
  out["schema_version"] = kSchemaVersion;
  out["command"] = "ellipsoid";
  out["data"] = o.data;
  out["estimator"] = kuq::estimator_to_string(est);
  if (est.kind == kuq::EstimatorKind::krr) out["kernel"] = kuq::kernel_to_string(kernel);
  out["group"] = kuq::group_to_string(group);
  out["weighting"] = o.weighting;
  out["m"] = o.m;
  out["seed"] = o.seed;
  out["dim"] = static_cast<int>(outer.center().size());
  json jlevels = json::array();
  for (int q : qs) {
    const double radius = outer.radius(q);
    json jl;
    jl["q"] = q;
    jl["confidence"] = 1.0 - static_cast<double>(q) / o.m;
    jl["radius"] = radius;  // serialized as null when infinite
    jl["per_transform_radius"] = outer.per_transform_radius(q);
    jl["aggregate_radius"] = outer.aggregate_radius(q);
    jl["degenerate"] = !std::isfinite(radius);
    jlevels.push_back(std::move(jl));
  }
  out["levels"] = std::move(jlevels);
  out["center"] = vector_to_json(outer.center());
  out["shape"] = matrix_to_json(outer.shape());
  emit_json(o.out, out);
}

// ----- coverage -----

struct CoverageOpts {
  std::string fn = "x-sin-x";
  int n = 20;
  std::vector<double> range{0.0, 10.0};
  std::string noise = "laplace:0:0.5";
  std::string kernel = "gaussian:sigma=0.5";
  std::string estimator = "krr:lambda=0.1";
  std::string group = "sign";
  int m = 20;
  int q = 2;
  int trials = 2000;
  std::uint64_t seed = 0;
  bool allow_indefinite = false;
  std::string out;
};

void run_coverage(const CoverageOpts& o) {
  kuq::CoverageScenario scenario;
  scenario.true_fn = lookup_fn(o.fn);
  scenario.n = o.n;
  if (o.range.size() != 2 || !(o.range[0] < o.range[1]))
    throw std::invalid_argument("--range needs two values with lo < hi");
  scenario.lo = o.range[0];
  scenario.hi = o.range[1];
  scenario.noise = kuq::parse_noise(o.noise);
  scenario.kernel = kuq::parse_kernel(o.kernel);
  require_psd_kernel(scenario.kernel, o.allow_indefinite);
  scenario.estimator = kuq::parse_estimator(o.estimator);
  scenario.group = kuq::parse_group(o.group);
  const kuq::RegionConfig config(o.m, o.q, o.seed);
  const kuq::CoverageResult result =
      kuq::coverage_experiment(scenario, o.trials, config, o.seed);

  std::vector<int> counts(o.m, 0);
  for (int p : result.positions) ++counts[p - 1];

  json out;
  out["schema_version"] = kSchemaVersion;
  out["command"] = "coverage";
  out["nominal"] = result.nominal;
  out["empirical"] = result.empirical;
  out["ci_half_width"] = result.ci_half_width;
  out["trials"] = result.trials;
  out["m"] = o.m;
  out["q"] = o.q;
  out["seed"] = o.seed;
  out["fn"] = o.fn;
  out["n"] = o.n;
  out["range"] = {o.range[0], o.range[1]};
  out["noise"] = kuq::noise_to_string(scenario.noise);
  out["kernel"] = kuq::kernel_to_string(scenario.kernel);
  out["estimator"] = kuq::estimator_to_string(scenario.estimator);
  out["group"] = kuq::group_to_string(scenario.group);
  out["position_counts"] = counts;
  emit_json(o.out, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact, distribution-free confidence regions for kernel-method coefficients"};
  app.set_version_flag("--version", "kuq 1.0.0");
  app.set_config("--config", "", "Read options from a key=value file ([section] per subcommand)");
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset CSV");
  simulate->add_option("--fn", sim.fn, "True function: x-sin-x, sin, or zero");
  simulate->add_option("--n", sim.n, "Sample size")->check(CLI::PositiveNumber);
  simulate->add_option("--range", sim.range, "Input interval lo hi")->expected(2);
  simulate->add_option("--noise", sim.noise,
                       "gaussian:STD | laplace:LOC:SCALE | uniform:HALF | binomial:TRIALS[:P]");
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--out", sim.out, "Output CSV path");
  simulate->callback([&] { run_simulate(sim); });

  MemberOpts mem;
  CLI::App* member = app.add_subcommand("member", "Rank-test a coefficient vector");
  member->add_option("--data", mem.data, "Dataset CSV")->required();
  member->add_option("--estimator", mem.estimator,
                     "krr:lambda=L | lssvc:lambda=L | svr:c=C,eps=E | klasso:lambda=L");
  member->add_option("--kernel", mem.kernel, "Kernel, e.g. gaussian:sigma=0.5");
  member->add_option("--alpha", mem.alpha, "Coefficient file, or 'fit' for the point estimate");
  member->add_option("--m", mem.m, "Number of perturbations");
  member->add_option("--q", mem.q, "Exclusion count; confidence is 1 - q/m");
  member->add_option("--seed", mem.seed, "Perturbation-set seed");
  member->add_option("--group", mem.group, "Transformation group: sign or perm");
  member->add_option("--weighting", mem.weighting, "hessian or identity (krr/lssvc)");
  member->add_flag("--allow-indefinite", mem.allow_indefinite,
                   "Permit kernels without a PSD guarantee");
  member->add_option("--out", mem.out, "Result JSON path (stdout when omitted)");
  member->callback([&] { run_member(mem); });

  BandOpts band;
  CLI::App* bandcmd = app.add_subcommand("band", "Sample the region and write model-space bands");
  bandcmd->add_option("--data", band.data, "Dataset CSV")->required();
  bandcmd->add_option("--estimator", band.estimator,
                      "krr:lambda=L | svr:c=C,eps=E | klasso:lambda=L");
  bandcmd->add_option("--kernel", band.kernel, "Kernel, e.g. gaussian:sigma=0.5");
  bandcmd->add_option("--levels", band.levels, "Comma list of confidence levels, each k/m");
  bandcmd->add_option("--sampler", band.sampler, "auto | rays:rmax=R | box:half=H | ellipsoid");
  bandcmd->add_option("--group", band.group, "Transformation group: sign or perm");
  bandcmd->add_option("--samples", band.samples, "Coefficient vectors to draw");
  bandcmd->add_option("--m", band.m, "Number of perturbations");
  bandcmd->add_option("--seed", band.seed, "Perturbation-set seed");
  bandcmd->add_option("--sample-seed", band.sample_seed, "Sampler seed");
  bandcmd->add_option("--grid-n", band.grid_n, "Grid points for the band");
  bandcmd->add_option("--grid-range", band.grid_range, "Band interval lo hi (default: data hull)")
      ->expected(2);
  bandcmd->add_option("--companion-lambda", band.companion_lambda,
                      "Ridge parameter of the companion KRR sampler");
  bandcmd->add_flag("--allow-indefinite", band.allow_indefinite,
                    "Permit kernels without a PSD guarantee");
  bandcmd->add_option("--out", band.out, "Output CSV path");
  bandcmd->callback([&] { run_band(band); });

  EllipsoidOpts ell;
  CLI::App* ellipsoid = app.add_subcommand("ellipsoid", "Outer ellipsoid of the region");
  ellipsoid->add_option("--data", ell.data, "Dataset CSV")->required();
  ellipsoid->add_option("--estimator", ell.estimator, "krr:lambda=L | lssvc:lambda=L");
  ellipsoid->add_option("--kernel", ell.kernel, "Kernel (krr), e.g. gaussian:sigma=0.5");
  ellipsoid->add_option("--m", ell.m, "Number of perturbations");
  ellipsoid->add_option("--q", ell.q, "Comma list of exclusion counts");
  ellipsoid->add_option("--seed", ell.seed, "Perturbation-set seed");
  ellipsoid->add_option("--group", ell.group, "Transformation group: sign or perm");
  ellipsoid->add_option("--weighting", ell.weighting, "hessian or identity");
  ellipsoid->add_flag("--allow-indefinite", ell.allow_indefinite,
                      "Permit kernels without a PSD guarantee");
  ellipsoid->add_option("--out", ell.out, "Result JSON path (stdout when omitted)");
  ellipsoid->callback([&] { run_ellipsoid(ell); });

  CoverageOpts cov;
  CLI::App* coverage = app.add_subcommand("coverage", "Monte Carlo coverage experiment");
  coverage->add_option("--fn", cov.fn, "True function: x-sin-x, sin, or zero");
  coverage->add_option("--n", cov.n, "Sample size per trial")->check(CLI::PositiveNumber);
  coverage->add_option("--range", cov.range, "Input interval lo hi")->expected(2);
  coverage->add_option("--noise", cov.noise,
                       "gaussian:STD | laplace:LOC:SCALE | uniform:HALF | binomial:TRIALS[:P]");
  coverage->add_option("--kernel", cov.kernel, "Kernel, e.g. gaussian:sigma=0.5");
  coverage->add_option("--estimator", cov.estimator, "krr | svr | klasso spec");
  coverage->add_option("--group", cov.group, "Transformation group: sign or perm");
  coverage->add_option("--m", cov.m, "Number of perturbations");
  coverage->add_option("--q", cov.q, "Exclusion count; nominal coverage is 1 - q/m");
  coverage->add_option("--trials", cov.trials, "Monte Carlo trials");
  coverage->add_option("--seed", cov.seed, "Master seed; trial t uses a derived stream");
  coverage->add_flag("--allow-indefinite", cov.allow_indefinite,
                     "Permit kernels without a PSD guarantee");
  coverage->add_option("--out", cov.out, "Result JSON path (stdout when omitted)");
  coverage->callback([&] { run_coverage(cov); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const kuq::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const kuq::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
