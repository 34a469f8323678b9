#include <doctest.h>

#include <cmath>

#include "finitebath/kernel.hpp"
#include "finitebath/numerics.hpp"

using namespace finitebath;

TEST_CASE("indicator weights: half-open windows") {
  const auto k = MeasurementKernel::indicator(1.0, 10.0);
  CHECK(k.weight(0.0, 0.0) == 1.0);
  CHECK(k.weight(0.0, 0.49999) == 1.0);
  // A point exactly on the upper edge belongs to the next bin.
  CHECK(k.weight(0.0, 0.5) == 0.0);
  CHECK(k.weight(1.0, 0.5) == 1.0);
  CHECK(k.weight(0.0, -0.5) == 1.0);
  CHECK(k.weight(-1.0, -0.5) == 0.0);
}

TEST_CASE("gaussian weight peak value") {
  const auto k = MeasurementKernel::gaussian(1.0, 10.0);
  CHECK(k.weight(3.0, 3.0) ==
        doctest::Approx(0.3989422804014327).epsilon(1e-12));
}

TEST_CASE("partition of unity on random inputs") {
  const auto ki = MeasurementKernel::indicator(1.0, 30.0);
  const auto kg = MeasurementKernel::gaussian(1.0, 30.0);
  NormalSampler rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const double ei = 6.0 * rng();
    double si = 0.0, sg = 0.0;
    for (std::size_t j = 0; j < ki.grid.size(); ++j)
      si += ki.output_weight(j) * ki.weight(ki.grid[j], ei);
    for (std::size_t j = 0; j < kg.grid.size(); ++j)
      sg += kg.output_weight(j) * kg.weight(kg.grid[j], ei);
    CHECK(si == 1.0);
    CHECK(sg == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("translation covariance: W depends on E - E_i only") {
  const auto ki = MeasurementKernel::indicator(1.0, 20.0);
  const auto kg = MeasurementKernel::gaussian(1.0, 20.0);
  NormalSampler rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double ei = 3.0 * rng();
    const double e = ki.bin_center(4.0 * rng());
    CHECK(ki.weight(e, ei) == ki.weight(e + 3.0, ei + 3.0));
    const double shift = rng();
    CHECK(kg.weight(e, ei) ==
          doctest::Approx(kg.weight(e + shift, ei + shift)).epsilon(1e-13));
  }
}

TEST_CASE("bias: gaussian unbiased, indicator bounded by delta_e/2") {
  const auto kg = MeasurementKernel::gaussian(1.0, 10.0);
  CHECK(kg.bias() < 1e-10);

  const auto ki = MeasurementKernel::indicator(1.0, 10.0);
  const double b = ki.bias();
  CHECK(b <= 0.5);
  CHECK(b == doctest::Approx(0.5).epsilon(1e-12));  // attained at the bin edge

  // Inputs on bin centers are reported exactly.
  CHECK(ki.bias({-3.0, 0.0, 2.0}) == 0.0);
}
