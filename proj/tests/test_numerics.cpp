#include <doctest.h>

#include <cmath>

#include "finitebath/numerics.hpp"
#include "oracle_helpers.hpp"

using namespace finitebath;

TEST_CASE("gaussian interval mass matches quadrature near and far from the bulk") {
  testor::GaussLegendre gl(48);
  const double sigma = 2.5;
  auto pdf = [&](double x) { return normal_pdf(x, sigma); };
  for (double a : {-20.0, -8.0, -1.0, 0.0, 3.0, 14.0}) {
    const double b = a + 0.7;
    const double ref = gl.integrate(pdf, a, b, 4);
    const double got = gaussian_interval_mass(a, b, sigma);
    CHECK(got == doctest::Approx(ref).epsilon(1e-12));
  }
  // Deep tail keeps relative accuracy (naive erf differencing loses it).
  const double deep = gaussian_interval_mass(15.0 * sigma, 15.1 * sigma, sigma);
  CHECK(deep > 0.0);
  CHECK(std::isfinite(std::log(deep)));
}

TEST_CASE("bracketed solver finds monotone roots") {
  auto f = [](double x) { return x * x * x - 2.0; };
  const double r = solve_bracketed(f, 0.0, 2.0, 1e-14);
  CHECK(r == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
}

TEST_CASE("dopri5 integrates a two-state rate equation to tolerance") {
  Eigen::MatrixXd a(2, 2);
  a << -1.0, 0.5, 1.0, -0.5;  // zero column sums: conserves y0 + y1
  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  auto rhs = [&](double, const Eigen::VectorXd& v, Eigen::VectorXd& dv) {
    dv.noalias() = a * v;
  };
  integrate_dopri5(rhs, 0.0, 5.0, y);
  const double decay = std::exp(-1.5 * 5.0);
  CHECK(y[0] == doctest::Approx(1.0 / 3 + (2.0 / 3) * decay).epsilon(1e-8));
  CHECK(y.sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("normal sampler is deterministic and roughly standard normal") {
  NormalSampler s1(42), s2(42);
  double mean = 0.0, var = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double a = s1();
    const double b = s2();
    CHECK(a == b);
    mean += a;
    var += a * a;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("ks distance of genuinely normal samples is small") {
  NormalSampler s(1234);
  std::vector<double> xs(4000);
  for (auto& x : xs) x = 3.0 * s();
  CHECK(ks_distance_to_normal(xs, 3.0) < 0.03);
  CHECK(ks_distance_to_normal(xs, 6.0) > 0.1);  // wrong sigma is detected
}

TEST_CASE("g17 formatting round-trips") {
  for (double x : {1.0 / 3.0, 2.5e-17, -3.14159, 1e300}) {
    CHECK(std::stod(fmt_g17(x)) == x);
  }
}
