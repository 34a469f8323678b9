#include <doctest.h>

#include <cmath>

#include "finitebath/oracle.hpp"

using namespace finitebath;

namespace {
struct Tiny {
  SystemSpec system{0.5, 1.0};
  BathSpec bath;
  MeasurementKernel kernel;
  Tiny() {
    bath = sample_bath(6, {1.0, 0.2}, 1.0, 7);
    kernel = MeasurementKernel::indicator(1.0, 8.0 * bath.sigma_n());
  }
};
}  // namespace

TEST_CASE("free evolution keeps joint energy populations fixed") {
  Tiny t;
  ExactPropagator prop(t.system, t.bath, 0.0);
  const auto rho0 = thermal_product_state(1, 0.75, t.system, t.bath);
  std::vector<double> grid;
  for (double e : t.kernel.grid) grid.push_back(e);
  const auto p0 = measure_joint(prop.evolve(rho0, 0.0), t.kernel, grid);
  const auto p1 = measure_joint(prop.evolve(rho0, 37.5), t.kernel, grid);
  CHECK((p0.p - p1.p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trace and purity are preserved") {
  Tiny t;
  ExactPropagator prop(t.system, t.bath, 0.05);
  const auto rho0 = microcanonical_product_state(1, -1.0, t.system, t.bath,
                                                 t.kernel);
  CHECK(std::abs(rho0.trace().real() - 1.0) < 1e-12);
  const double purity0 = (rho0 * rho0).trace().real();
  for (double time : {5.0, 40.0}) {
    const auto st = prop.evolve(rho0, time);
    CHECK(std::abs(st.rho.trace().real() - 1.0) < 1e-12);
    const double purity = (st.rho * st.rho).trace().real();
    CHECK(purity == doctest::Approx(purity0).epsilon(1e-10));
    // Hermiticity.
    CHECK((st.rho - st.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("measure_joint: point masses and marginals") {
  Tiny t;
  const std::size_t nb = std::size_t{1} << t.bath.n_spins;
  // Pure product state |k0> (x) |bits>.
  const std::uint64_t bits = 0b010110;
  const int k0 = 1;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2 * nb, 2 * nb);
  const std::size_t idx = static_cast<std::size_t>(k0) * nb + bits;
  rho(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)) = 1.0;
  FullState st{t.system, t.bath, rho};
  std::vector<double> grid(t.kernel.grid.begin(), t.kernel.grid.end());
  const auto jd = measure_joint(st, t.kernel, grid);
  const double e_cfg = bath_config_energy(t.bath, bits);
  for (int k = 0; k < 2; ++k)
    for (std::size_t ie = 0; ie < grid.size(); ++ie) {
      const double expected =
          (k == k0 && t.kernel.bin_index(grid[ie]) == t.kernel.bin_index(e_cfg))
              ? 1.0
              : 0.0;
      CHECK(jd.at(k, ie) == expected);
    }

  // Marginal over E reproduces the partial-trace populations.
  const auto rho_th = thermal_product_state(0, 0.6, t.system, t.bath);
  FullState st2{t.system, t.bath, rho_th};
  const auto jd2 = measure_joint(st2, t.kernel, grid);
  const auto ps = jd2.system_marginal();
  CHECK(ps[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ps[1] == doctest::Approx(0.0).epsilon(1e-12));

  // Thermal bath: bin mass proportional to sum of exp(-beta E_i) in the bin.
  const auto pb = jd2.bath_marginal();
  double z = 0.0;
  std::vector<double> ref(grid.size(), 0.0);
  for (std::uint64_t b = 0; b < nb; ++b) {
    const double e = bath_config_energy(t.bath, b);
    const double w = std::exp(-0.6 * e);
    z += w;
    const long m = t.kernel.bin_index(e) - t.kernel.bin_index(grid.front());
    if (m >= 0 && m < static_cast<long>(grid.size()))
      ref[static_cast<std::size_t>(m)] += w;
  }
  for (std::size_t ie = 0; ie < grid.size(); ++ie)
    CHECK(pb[static_cast<Eigen::Index>(ie)] ==
          doctest::Approx(ref[ie] / z).epsilon(1e-12));
}

TEST_CASE("dimension guard") {
  SystemSpec sys{0.5, 1.0};
  const auto big = sample_bath(12, {1.0, 0.2}, 1.0, 7);
  CHECK_THROWS_AS(ExactPropagator(sys, big, 0.01), std::invalid_argument);
}
