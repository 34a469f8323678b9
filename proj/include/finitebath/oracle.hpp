#pragma once

// Brute-force ground truth for tiny instances: the closed system-plus-bath
// composite evolved unitarily by dense Hermitian eigendecomposition of
// H = H_S + H_B + lambda S (x) B. Basis ordering: system index major,
// bath bit-vector minor; bit r set means n_r = +1 (energy +Omega_r/2).
// Used by tests and the `validate` subcommand only.

#include <Eigen/Dense>
#include <complex>

#include "finitebath/bath.hpp"
#include "finitebath/dynamics.hpp"
#include "finitebath/kernel.hpp"
#include "finitebath/system.hpp"

namespace finitebath {

struct FullState {
  SystemSpec system;
  BathSpec bath;
  Eigen::MatrixXcd rho;
};

class ExactPropagator {
 public:
  // Guarded to joint dimension (2s+1) 2^N <= 4096.
  ExactPropagator(const SystemSpec& system, const BathSpec& bath,
                  double lambda);

  FullState evolve(const Eigen::MatrixXcd& rho0, double t) const;
  const SystemSpec& system() const { return system_; }
  const BathSpec& bath() const { return bath_; }
  std::size_t dim() const { return static_cast<std::size_t>(evals_.size()); }

 private:
  SystemSpec system_;
  BathSpec bath_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXcd evecs_;
};

// Bath eigenenergy of a bit-vector configuration.
double bath_config_energy(const BathSpec& bath, std::uint64_t bits);

// rho0 = |k0><k0| (x) omega_B(E): uniform mixture of the bath eigenstates
// in the indicator bin of e.
Eigen::MatrixXcd microcanonical_product_state(int k0, double e,
                                              const SystemSpec& system,
                                              const BathSpec& bath,
                                              const MeasurementKernel& kernel);
// rho0 = |k0><k0| (x) exp(-beta H_B)/Z.
Eigen::MatrixXcd thermal_product_state(int k0, double beta,
                                       const SystemSpec& system,
                                       const BathSpec& bath);

// p(k, E) = tr[rho (|k><k| (x) Pi(E))] on the indicator grid.
JointDistribution measure_joint(const FullState& state,
                                const MeasurementKernel& kernel,
                                const std::vector<double>& grid);

}  // namespace finitebath
