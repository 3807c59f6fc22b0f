#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kuq/errors.hpp"
#include "kuq/rng.hpp"

namespace kuq {

// Input points (one per row), measured outputs, and for synthetic data the
// noise-free outputs the true function took at those points.
struct DataSample {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd outputs;
  std::optional<Eigen::VectorXd> true_outputs;

  int n() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }

  void validate() const {
    if (inputs.rows() < 1) throw DataError("data sample is empty");
    if (inputs.rows() != outputs.size())
      throw DataError("data sample has " + std::to_string(inputs.rows()) +
                      " inputs but " + std::to_string(outputs.size()) + " outputs");
    if (true_outputs && true_outputs->size() != outputs.size())
      throw DataError("true_outputs length does not match outputs");
  }

  bool inputs_distinct() const {
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if (inputs.row(i) == inputs.row(j)) return false;
    return true;
  }
};

enum class NoiseFamily { gaussian, laplace, uniform, binomial_centered };

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double std_dev = 1.0;       // gaussian
  double location = 0.0;      // laplace
  double scale = 1.0;         // laplace
  double half_width = 1.0;    // uniform
  int trials = 1;             // binomial_centered
  double success_prob = 0.5;  // binomial_centered

  static NoiseSpec gaussian(double std_dev) {
    if (!(std_dev > 0.0)) throw std::invalid_argument("gaussian noise requires std > 0");
    NoiseSpec s;
    s.family = NoiseFamily::gaussian;
    s.std_dev = std_dev;
    return s;
  }

  static NoiseSpec laplace(double location, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("laplace noise requires scale > 0");
    NoiseSpec s;
    s.family = NoiseFamily::laplace;
    s.location = location;
    s.scale = scale;
    return s;
  }

  static NoiseSpec uniform(double half_width) {
    if (!(half_width > 0.0)) throw std::invalid_argument("uniform noise requires half_width > 0");
    NoiseSpec s;
    s.family = NoiseFamily::uniform;
    s.half_width = half_width;
    return s;
  }

  static NoiseSpec binomial_centered(int trials, double success_prob) {
    if (trials < 1) throw std::invalid_argument("binomial noise requires trials >= 1");
    if (!(success_prob > 0.0 && success_prob < 1.0))
      throw std::invalid_argument("binomial noise requires success probability in (0, 1)");
    NoiseSpec s;
    s.family = NoiseFamily::binomial_centered;
    s.trials = trials;
    s.success_prob = success_prob;
    return s;
  }

  // Smaller root of trials * p * (1 - p) = 1, giving unit variance.
  static double unit_variance_binomial_p(int trials) {
    if (trials < 4)
      throw std::invalid_argument("unit-variance binomial needs trials >= 4");
    return (1.0 - std::sqrt(1.0 - 4.0 / trials)) / 2.0;
  }

  double draw(SplitMix64& gen) const {
    switch (family) {
      case NoiseFamily::gaussian: return std_dev * gen.gaussian();
      case NoiseFamily::laplace: return gen.laplace(location, scale);
      case NoiseFamily::uniform: return gen.uniform_sym(half_width);
      case NoiseFamily::binomial_centered:
        return gen.binomial(trials, success_prob) - trials * success_prob;
    }
    return 0.0;
  }

  std::string name() const {
    switch (family) {
      case NoiseFamily::gaussian: return "gaussian";
      case NoiseFamily::laplace: return "laplace";
      case NoiseFamily::uniform: return "uniform";
      case NoiseFamily::binomial_centered: return "binomial_centered";
    }
    return "unknown";
  }
};

// n independent draws from the noise substream of `seed`.
inline Eigen::VectorXd sample_noise(const NoiseSpec& spec, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_noise: n must be >= 1");
  auto gen = stream(seed, Stream::noise);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = spec.draw(gen);
  return out;
}

// n equidistant points on [lo, hi], both endpoints included; n = 1 gives lo.
inline Eigen::VectorXd equidistant(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("equidistant: n must be >= 1");
  if (!(lo < hi)) throw std::invalid_argument("equidistant: requires lo < hi");
  Eigen::VectorXd x(n);
  if (n == 1) {
    x[0] = lo;
    return x;
  }
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
  return x;
}

inline double x_sin_x(double x) { return x * std::sin(x); }

// Scalar-input synthetic sample: equidistant inputs, true outputs from f,
// measured outputs with additive noise drawn from the seed's noise stream.
inline DataSample generate_synthetic(const std::function<double(double)>& f, int n,
                                     double lo, double hi, const NoiseSpec& noise,
                                     std::uint64_t seed) {
  const Eigen::VectorXd x = equidistant(lo, hi, n);
  DataSample sample;
  sample.inputs = x;
  Eigen::VectorXd ystar(n);
  for (int i = 0; i < n; ++i) ystar[i] = f(x[i]);
  sample.true_outputs = ystar;
  sample.outputs = ystar + sample_noise(noise, n, seed);
  return sample;
}

namespace detail {

// Shortest decimal form that parses back to the same double.
inline std::string format_g17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec == std::errc{}) return std::string(buf, res.ptr);
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_field(const std::string& field, int row, int column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw DataError("csv row " + std::to_string(row) + ", column " +
                    std::to_string(column + 1) + ": non-numeric field '" + field + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

// CSV schema: header "x1,...,xd,y" with an optional trailing "y_star"
// column; values serialized with %.17g so a round trip is bit exact.
inline void save_csv(const DataSample& sample, const std::string& path) {
  sample.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (int j = 0; j < sample.dim(); ++j) out << "x" << (j + 1) << ",";
  out << "y";
  if (sample.true_outputs) out << ",y_star";
  out << "\n";
  for (int i = 0; i < sample.n(); ++i) {
    for (int j = 0; j < sample.dim(); ++j)
      out << detail::format_g17(sample.inputs(i, j)) << ",";
    out << detail::format_g17(sample.outputs[i]);
    if (sample.true_outputs) out << "," << detail::format_g17((*sample.true_outputs)[i]);
    out << "\n";
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

inline DataSample load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = detail::split_csv_line(line);
  bool has_true = !header.empty() && header.back() == "y_star";
  if (has_true) header.pop_back();
  if (header.empty() || header.back() != "y")
    throw DataError("'" + path + "': header must be x1,...,xd,y with optional y_star");
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw DataError("'" + path + "': no input columns in header");
  const int width = d + 1 + (has_true ? 1 : 0);

  std::vector<std::vector<double>> rows;
  int row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != width)
      throw DataError("csv row " + std::to_string(row_number) + ": expected " +
                      std::to_string(width) + " fields, got " +
                      std::to_string(fields.size()));
    std::vector<double> values(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j)
      values[j] = detail::parse_field(fields[j], row_number, static_cast<int>(j));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("'" + path + "': no data rows");

  DataSample sample;
  const int n = static_cast<int>(rows.size());
  sample.inputs.resize(n, d);
  sample.outputs.resize(n);
  Eigen::VectorXd ystar(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) sample.inputs(i, j) = rows[i][j];
    sample.outputs[i] = rows[i][d];
    if (has_true) ystar[i] = rows[i][d + 1];
  }
  if (has_true) sample.true_outputs = ystar;
  return sample;
}

}  // namespace kuq
