#include "finitebath/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace finitebath {

namespace {
constexpr std::size_t kDimGuard = 4096;

std::complex<double> system_coupling(int k, int q, const SystemSpec& s) {
  // <k| 2 S^x |q>
  const double two_s = 2.0 * s.spin;
  if (q == k + 1) return std::sqrt((k + 1) * (two_s - k));
  if (q == k - 1) return std::sqrt(k * (two_s - k + 1));
  return 0.0;
}

}  // namespace

double bath_config_energy(const BathSpec& bath, std::uint64_t bits) {
  double e = 0.0;
  for (int r = 0; r < bath.n_spins; ++r) {
    const double half = 0.5 * bath.zeeman[static_cast<std::size_t>(r)];
    e += (bits >> r) & 1u ? half : -half;
  }
  return e;
}

ExactPropagator::ExactPropagator(const SystemSpec& system,
                                 const BathSpec& bath, double lambda)
    : system_(system), bath_(bath) {
  system.validate();
  bath.validate();
  const std::size_t nb = std::size_t{1} << bath.n_spins;
  const std::size_t d = static_cast<std::size_t>(system.dimension());
  const std::size_t dim = d * nb;
  if (dim > kDimGuard)
    throw std::invalid_argument(
        "ExactPropagator: joint dimension exceeds the 4096-state guard");

  // Basis: |k> (x) |bits>, system index major.
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    const int k = static_cast<int>(i / nb);
    const std::uint64_t bits = i % nb;
    h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
        system.level(k) + bath_config_energy(bath, bits);
  }
  // lambda (2 S^x) (x) sum_r c_r sigma^x_r: simultaneous system hop and
  // bath spin flip.
  for (std::size_t i = 0; i < dim; ++i) {
    const int k = static_cast<int>(i / nb);
    const std::uint64_t bits = i % nb;
    for (int q : {k - 1, k + 1}) {
      if (q < 0 || q >= system.dimension()) continue;
      const std::complex<double> s_elem = system_coupling(k, q, system);
      for (int r = 0; r < bath.n_spins; ++r) {
        const std::uint64_t flipped = bits ^ (std::uint64_t{1} << r);
        const std::size_t j = static_cast<std::size_t>(q) * nb + flipped;
        h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            lambda * bath.couplings[static_cast<std::size_t>(r)] * s_elem;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("ExactPropagator: eigensolve failed");
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
}

FullState ExactPropagator::evolve(const Eigen::MatrixXcd& rho0,
                                  double t) const {
  if (rho0.rows() != evals_.size() || rho0.cols() != evals_.size())
    throw std::invalid_argument("ExactPropagator: state dimension mismatch");
  // rho(t) = U e^{-iDt} U^dag rho0 U e^{+iDt} U^dag
  const Eigen::MatrixXcd a = evecs_.adjoint() * rho0 * evecs_;
  Eigen::MatrixXcd b(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double phase = -(evals_[i] - evals_[j]) * t;
      b(i, j) = a(i, j) * std::complex<double>(std::cos(phase), std::sin(phase));
    }
  FullState st;
  st.system = system_;
  st.bath = bath_;
  st.rho = evecs_ * b * evecs_.adjoint();
  return st;
}

Eigen::MatrixXcd microcanonical_product_state(int k0, double e,
                                              const SystemSpec& system,
                                              const BathSpec& bath,
                                              const MeasurementKernel& kernel) {
  if (kernel.kind != KernelKind::Indicator)
    throw std::invalid_argument("microcanonical_product_state: indicator kernel only");
  const std::size_t nb = std::size_t{1} << bath.n_spins;
  const std::size_t d = static_cast<std::size_t>(system.dimension());
  if (k0 < 0 || k0 >= system.dimension())
    throw std::out_of_range("microcanonical_product_state: level index");
  std::vector<std::uint64_t> members;
  for (std::uint64_t bits = 0; bits < nb; ++bits)
    if (kernel.weight(e, bath_config_energy(bath, bits)) > 0.0)
      members.push_back(bits);
  if (members.empty())
    throw std::domain_error("microcanonical_product_state: empty energy window");
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(
      static_cast<Eigen::Index>(d * nb), static_cast<Eigen::Index>(d * nb));
  const double w = 1.0 / static_cast<double>(members.size());
  for (std::uint64_t bits : members) {
    const std::size_t i = static_cast<std::size_t>(k0) * nb + bits;
    rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = w;
  }
  return rho;
}

Eigen::MatrixXcd thermal_product_state(int k0, double beta,
                                       const SystemSpec& system,
                                       const BathSpec& bath) {
  const std::size_t nb = std::size_t{1} << bath.n_spins;
  const std::size_t d = static_cast<std::size_t>(system.dimension());
  if (k0 < 0 || k0 >= system.dimension())
    throw std::out_of_range("thermal_product_state: level index");
  std::vector<double> w(nb);
  double z = 0.0;
  for (std::uint64_t bits = 0; bits < nb; ++bits) {
    w[bits] = std::exp(-beta * bath_config_energy(bath, bits));
    z += w[bits];
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(
      static_cast<Eigen::Index>(d * nb), static_cast<Eigen::Index>(d * nb));
  for (std::uint64_t bits = 0; bits < nb; ++bits) {
    const std::size_t i = static_cast<std::size_t>(k0) * nb + bits;
    rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = w[bits] / z;
  }
  return rho;
}

JointDistribution measure_joint(const FullState& state,
                                const MeasurementKernel& kernel,
                                const std::vector<double>& grid) {
  if (kernel.kind != KernelKind::Indicator)
    throw std::invalid_argument("measure_joint: indicator kernel only");
  const std::size_t nb = std::size_t{1} << state.bath.n_spins;
  const int d = state.system.dimension();
  JointDistribution jd;
  jd.grid = grid;
  jd.d_s = d;
  jd.p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size() * static_cast<std::size_t>(d)));
  // Bin lookup by index offset; the grid is uniform.
  const long m0 = kernel.bin_index(grid.front());
  for (int k = 0; k < d; ++k)
    for (std::uint64_t bits = 0; bits < nb; ++bits) {
      const std::size_t i = static_cast<std::size_t>(k) * nb + bits;
      const long m = kernel.bin_index(bath_config_energy(state.bath, bits));
      const long idx = m - m0;
      if (idx < 0 || idx >= static_cast<long>(grid.size())) continue;
      jd.p[static_cast<Eigen::Index>(static_cast<std::size_t>(k) * grid.size() +
                                     static_cast<std::size_t>(idx))] +=
          state.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))
              .real();
    }
  return jd;
}

}  // namespace finitebath
