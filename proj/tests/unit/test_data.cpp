#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "kuq/data.hpp"
#include "kuq/errors.hpp"

using namespace kuq;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("kuq_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

double skewness(const VectorXd& v) {
  const double mean = v.mean();
  double m2 = 0.0, m3 = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double d = v[i] - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= v.size();
  m3 /= v.size();
  return m3 / std::pow(m2, 1.5);
}

}  // namespace

TEST_CASE("noise spec validation", "[data]") {
  CHECK_THROWS_AS(NoiseSpec::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::laplace(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::uniform(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::binomial_centered(0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::binomial_centered(10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::binomial_centered(10, 1.0), std::invalid_argument);
  CHECK(NoiseSpec::laplace(0.0, 0.5).name() == "laplace");
}

TEST_CASE("unit-variance binomial success probability", "[data]") {
  const double p = NoiseSpec::unit_variance_binomial_p(20);
  CHECK(p == Catch::Approx(0.05278640450004206).epsilon(1e-14));
  CHECK(20.0 * p * (1.0 - p) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(NoiseSpec::unit_variance_binomial_p(3), std::invalid_argument);
}

TEST_CASE("sample_noise is deterministic per seed", "[data]") {
  const NoiseSpec spec = NoiseSpec::laplace(0.25, 2.0);
  const VectorXd a = sample_noise(spec, 5, 77);
  const VectorXd b = sample_noise(spec, 5, 77);
  CHECK(a == b);
  CHECK(a != sample_noise(spec, 5, 78));
  CHECK_THROWS_AS(sample_noise(spec, 0, 1), std::invalid_argument);
}

TEST_CASE("laplace(0, 0.5) has variance 0.5", "[data]") {
  const VectorXd draws = sample_noise(NoiseSpec::laplace(0.0, 0.5), 1000000, 3);
  const double mean = draws.mean();
  const double var = (draws.array() - mean).square().mean();
  CHECK(var == Catch::Approx(0.5).epsilon(0.01));
}

TEST_CASE("the four unit-variance noise families really have unit variance", "[data]") {
  const NoiseSpec families[] = {
      NoiseSpec::gaussian(1.0),
      NoiseSpec::laplace(0.0, 1.0 / std::sqrt(2.0)),
      NoiseSpec::uniform(std::sqrt(3.0)),
      NoiseSpec::binomial_centered(20, NoiseSpec::unit_variance_binomial_p(20)),
  };
  const int n = 1000000;
  for (const auto& spec : families) {
    const VectorXd draws = sample_noise(spec, n, 11);
    const double mean = draws.mean();
    const double var = (draws.array() - mean).square().mean();
    INFO(spec.name());
    CHECK(var == Catch::Approx(1.0).epsilon(0.02));
    CHECK(mean == Catch::Approx(0.0).margin(4.0 / std::sqrt(static_cast<double>(n))));
  }
}

TEST_CASE("symmetric families are symmetric, binomial is centered but skewed", "[data]") {
  const int n = 1000000;
  CHECK(skewness(sample_noise(NoiseSpec::gaussian(1.0), n, 13)) ==
        Catch::Approx(0.0).margin(0.02));
  CHECK(skewness(sample_noise(NoiseSpec::uniform(2.0), n, 13)) ==
        Catch::Approx(0.0).margin(0.02));

  VectorXd lap = sample_noise(NoiseSpec::laplace(0.4, 1.0), n, 13);
  std::vector<double> values(lap.data(), lap.data() + n);
  std::nth_element(values.begin(), values.begin() + n / 2, values.end());
  CHECK(values[n / 2] == Catch::Approx(0.4).margin(0.01));

  const NoiseSpec binom =
      NoiseSpec::binomial_centered(20, NoiseSpec::unit_variance_binomial_p(20));
  const VectorXd draws = sample_noise(binom, n, 13);
  CHECK(draws.mean() == Catch::Approx(0.0).margin(3.0 / std::sqrt(static_cast<double>(n))));
  CHECK(skewness(draws) > 0.5);
}

TEST_CASE("generate_synthetic evaluates the true function exactly", "[data]") {
  const DataSample s =
      generate_synthetic(x_sin_x, 3, 0.0, 10.0, NoiseSpec::gaussian(1e-12), 1);
  REQUIRE(s.n() == 3);
  REQUIRE(s.dim() == 1);
  CHECK(s.inputs(0, 0) == 0.0);
  CHECK(s.inputs(1, 0) == 5.0);
  CHECK(s.inputs(2, 0) == 10.0);
  REQUIRE(s.true_outputs.has_value());
  CHECK((*s.true_outputs)[0] == 0.0);
  CHECK((*s.true_outputs)[1] == 5.0 * std::sin(5.0));
  CHECK((*s.true_outputs)[2] == 10.0 * std::sin(10.0));
  CHECK((s.outputs - *s.true_outputs).norm() < 1e-10);
}

TEST_CASE("generate_synthetic adds the seed's noise stream", "[data]") {
  const NoiseSpec noise = NoiseSpec::laplace(0.0, 0.5);
  const DataSample s = generate_synthetic(x_sin_x, 20, 0.0, 10.0, noise, 4);
  CHECK((s.outputs - *s.true_outputs).isApprox(sample_noise(noise, 20, 4)));
  const DataSample again = generate_synthetic(x_sin_x, 20, 0.0, 10.0, noise, 4);
  CHECK(s.outputs == again.outputs);
}

TEST_CASE("equidistant endpoints and the n = 1 degenerate case", "[data]") {
  const VectorXd x = equidistant(2.0, 6.0, 5);
  CHECK(x[0] == 2.0);
  CHECK(x[4] == 6.0);
  CHECK(x[2] == Catch::Approx(4.0));

  const VectorXd single = equidistant(3.0, 9.0, 1);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == 3.0);

  CHECK_THROWS_AS(equidistant(0.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(equidistant(1.0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("csv round trip preserves every bit", "[data]") {
  TempFile file("roundtrip.csv");
  DataSample s = generate_synthetic(x_sin_x, 20, 0.0, 10.0, NoiseSpec::laplace(0.0, 0.5), 9);
  save_csv(s, file.path);
  const DataSample r = load_csv(file.path);
  CHECK(r.inputs == s.inputs);
  CHECK(r.outputs == s.outputs);
  REQUIRE(r.true_outputs.has_value());
  CHECK(*r.true_outputs == *s.true_outputs);
}

TEST_CASE("csv parsing reports malformed content precisely", "[data]") {
  TempFile file("malformed.csv");

  SECTION("row with a missing column names the row") {
    std::ofstream(file.path) << "x1,x2,y\n1,2,3\n4,5\n";
    CHECK_THROWS_WITH(load_csv(file.path), Catch::Matchers::ContainsSubstring("row 3"));
  }

  SECTION("non-numeric field names row and column") {
    std::ofstream(file.path) << "x1,y\n1,2\n1,oops\n";
    CHECK_THROWS_AS(load_csv(file.path), DataError);
  }

  SECTION("bad header is rejected") {
    std::ofstream(file.path) << "a,b\n1,2\n";
    CHECK_THROWS_AS(load_csv(file.path), DataError);
  }

  SECTION("empty file is rejected") {
    std::ofstream(file.path) << "";
    CHECK_THROWS_AS(load_csv(file.path), DataError);
  }

  SECTION("missing file is a data error") {
    CHECK_THROWS_AS(load_csv("kuq_test_does_not_exist.csv"), DataError);
  }
}

TEST_CASE("csv without y_star loads without true outputs", "[data]") {
  TempFile file("plain.csv");
  std::ofstream(file.path) << "x1,y\n0.5,1.25\n1.5,-2\n";
  const DataSample s = load_csv(file.path);
  CHECK(s.n() == 2);
  CHECK(s.dim() == 1);
  CHECK_FALSE(s.true_outputs.has_value());
  CHECK(s.outputs[1] == -2.0);
}

TEST_CASE("format_g17 round-trips doubles through decimal text", "[data]") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-8, 1234.5678901234567, 0.0}) {
    CHECK(std::stod(detail::format_g17(v)) == v);
  }
  CHECK(detail::format_g17(0.1) == "0.1");
}
