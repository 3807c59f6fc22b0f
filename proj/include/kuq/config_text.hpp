#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuq/coverage.hpp"
#include "kuq/data.hpp"
#include "kuq/kernels.hpp"
#include "kuq/perturbation.hpp"

namespace kuq {
namespace detail {

inline std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == delim) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": '" + s + "' is not a number");
  }
  if (pos != s.size())
    throw std::invalid_argument(what + ": trailing characters in '" + s + "'");
  return v;
}

inline int parse_int(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": '" + s + "' is not an integer");
  }
  if (pos != s.size())
    throw std::invalid_argument(what + ": trailing characters in '" + s + "'");
  return v;
}

// "key=value,key=value" with every key drawn from `allowed`, no repeats.
inline std::map<std::string, std::string> parse_kv(const std::string& s,
                                                   const std::vector<std::string>& allowed,
                                                   const std::string& what) {
  std::map<std::string, std::string> kv;
  if (s.empty()) return kv;
  for (const std::string& part : split(s, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument(what + ": expected key=value, got '" + part + "'");
    const std::string key = part.substr(0, eq);
    bool known = false;
    for (const std::string& a : allowed) known = known || a == key;
    if (!known) throw std::invalid_argument(what + ": unknown parameter '" + key + "'");
    if (!kv.emplace(key, part.substr(eq + 1)).second)
      throw std::invalid_argument(what + ": parameter '" + key + "' given twice");
  }
  return kv;
}

inline std::string require_kv(const std::map<std::string, std::string>& kv,
                              const std::string& key, const std::string& what) {
  const auto it = kv.find(key);
  if (it == kv.end())
    throw std::invalid_argument(what + ": missing parameter '" + key + "'");
  return it->second;
}

}  // namespace detail

// family:key=value,... e.g. "gaussian:sigma=0.5", "polynomial:c=1,p=3".
inline KernelSpec parse_kernel(const std::string& text) {
  const auto colon = text.find(':');
  const std::string family = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  const std::string what = "kernel '" + text + "'";
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_kv;
  using detail::require_kv;
  if (family == "gaussian" || family == "laplacian") {
    const auto kv = parse_kv(rest, {"sigma"}, what);
    const double sigma = parse_double(require_kv(kv, "sigma", what), what);
    return family == "gaussian" ? KernelSpec::gaussian(sigma) : KernelSpec::laplacian(sigma);
  }
  if (family == "polynomial") {
    const auto kv = parse_kv(rest, {"c", "p"}, what);
    return KernelSpec::polynomial(parse_double(require_kv(kv, "c", what), what),
                                  parse_int(require_kv(kv, "p", what), what));
  }
  if (family == "sigmoidal") {
    const auto kv = parse_kv(rest, {"a", "b"}, what);
    return KernelSpec::sigmoidal(parse_double(require_kv(kv, "a", what), what),
                                 parse_double(require_kv(kv, "b", what), what));
  }
  if (family == "truncated_parabolic" || family == "tparab") {
    const auto kv = parse_kv(rest, {"c"}, what);
    return KernelSpec::truncated_parabolic(parse_double(require_kv(kv, "c", what), what));
  }
  if (family == "rectangular") {
    const auto kv = parse_kv(rest, {"c"}, what);
    return KernelSpec::rectangular(parse_double(require_kv(kv, "c", what), what));
  }
  throw std::invalid_argument("unknown kernel family '" + family +
                              "' (expected gaussian, laplacian, polynomial, sigmoidal, "
                              "truncated_parabolic, or rectangular)");
}

inline std::string kernel_to_string(const KernelSpec& k) {
  using detail::format_g17;
  switch (k.family) {
    case KernelFamily::gaussian:
    case KernelFamily::laplacian:
      return k.name() + ":sigma=" + format_g17(k.sigma);
    case KernelFamily::polynomial:
      return k.name() + ":c=" + format_g17(k.c) + ",p=" + std::to_string(k.p);
    case KernelFamily::sigmoidal:
      return k.name() + ":a=" + format_g17(k.a) + ",b=" + format_g17(k.b);
    case KernelFamily::truncated_parabolic:
    case KernelFamily::rectangular:
      return k.name() + ":c=" + format_g17(k.c);
  }
  return k.name();
}

// e.g. "krr:lambda=0.1", "svr:c=250,eps=0.2".
inline EstimatorSpec parse_estimator(const std::string& text) {
  const auto colon = text.find(':');
  const std::string family = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  const std::string what = "estimator '" + text + "'";
  using detail::parse_double;
  using detail::parse_kv;
  using detail::require_kv;
  if (family == "krr" || family == "lssvc" || family == "klasso") {
    const auto kv = parse_kv(rest, {"lambda"}, what);
    const double lambda = parse_double(require_kv(kv, "lambda", what), what);
    if (family == "krr") return EstimatorSpec::krr(lambda);
    if (family == "lssvc") return EstimatorSpec::lssvc(lambda);
    return EstimatorSpec::klasso(lambda);
  }
  if (family == "svr") {
    const auto kv = parse_kv(rest, {"c", "eps"}, what);
    return EstimatorSpec::svr(parse_double(require_kv(kv, "c", what), what),
                              parse_double(require_kv(kv, "eps", what), what));
  }
  throw std::invalid_argument("unknown estimator '" + family +
                              "' (expected krr, lssvc, svr, or klasso)");
}

inline std::string estimator_to_string(const EstimatorSpec& e) {
  using detail::format_g17;
  switch (e.kind) {
    case EstimatorKind::krr:
    case EstimatorKind::lssvc:
    case EstimatorKind::klasso:
      return e.name() + ":lambda=" + format_g17(e.lambda);
    case EstimatorKind::svr:
      return e.name() + ":c=" + format_g17(e.c) + ",eps=" + format_g17(e.eps);
  }
  return e.name();
}

// Positional, colon separated: gaussian:STD, laplace:LOC:SCALE,
// uniform:HALF_WIDTH, binomial:TRIALS[:P]. Omitting P solves
// trials * p * (1 - p) = 1 for the unit-variance success probability.
inline NoiseSpec parse_noise(const std::string& text) {
  const auto parts = detail::split(text, ':');
  const std::string what = "noise '" + text + "'";
  const auto arity = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() - 1 < lo || parts.size() - 1 > hi)
      throw std::invalid_argument(what + ": wrong number of parameters");
  };
  using detail::parse_double;
  using detail::parse_int;
  if (parts[0] == "gaussian") {
    arity(1, 1);
    return NoiseSpec::gaussian(parse_double(parts[1], what));
  }
  if (parts[0] == "laplace") {
    arity(2, 2);
    return NoiseSpec::laplace(parse_double(parts[1], what), parse_double(parts[2], what));
  }
  if (parts[0] == "uniform") {
    arity(1, 1);
    return NoiseSpec::uniform(parse_double(parts[1], what));
  }
  if (parts[0] == "binomial") {
    arity(1, 2);
    const int trials = parse_int(parts[1], what);
    const double p = parts.size() == 3 ? parse_double(parts[2], what)
                                       : NoiseSpec::unit_variance_binomial_p(trials);
    return NoiseSpec::binomial_centered(trials, p);
  }
  throw std::invalid_argument("unknown noise family '" + parts[0] +
                              "' (expected gaussian, laplace, uniform, or binomial)");
}

inline std::string noise_to_string(const NoiseSpec& s) {
  using detail::format_g17;
  switch (s.family) {
    case NoiseFamily::gaussian: return "gaussian:" + format_g17(s.std_dev);
    case NoiseFamily::laplace:
      return "laplace:" + format_g17(s.location) + ":" + format_g17(s.scale);
    case NoiseFamily::uniform: return "uniform:" + format_g17(s.half_width);
    case NoiseFamily::binomial_centered:
      return "binomial:" + std::to_string(s.trials) + ":" + format_g17(s.success_prob);
  }
  return s.name();
}

inline GroupKind parse_group(const std::string& text) {
  if (text == "sign" || text == "sign_change") return GroupKind::sign_change;
  if (text == "perm" || text == "permutation") return GroupKind::permutation;
  throw std::invalid_argument("unknown transformation group '" + text +
                              "' (expected sign or perm)");
}

inline std::string group_to_string(GroupKind kind) {
  return kind == GroupKind::sign_change ? "sign" : "perm";
}

// Comma-separated confidence levels, e.g. "0.5,0.9,0.95".
inline std::vector<double> parse_levels(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("levels list is empty");
  std::vector<double> levels;
  for (const std::string& part : detail::split(text, ','))
    levels.push_back(detail::parse_double(part, "levels '" + text + "'"));
  return levels;
}

}  // namespace kuq
