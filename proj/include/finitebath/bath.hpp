#pragma once

// Finite bath of N non-interacting spins-1/2 with Zeeman splittings
// Omega_r: spectrum, Gaussian density of states, measured volumes V(E),
// Boltzmann entropy/temperature, canonical ensemble quantities and the
// nonequilibrium inverse temperature solver (the beta with the same
// canonical mean energy as the bath).
//
// Units: all energies in delta_e, hbar = k_B = 1, time in 1/delta_e.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finitebath/kernel.hpp"

#include <json.hpp>

namespace finitebath {

struct ZeemanDistribution {
  double mean = 1.0;
  double std = 0.0;
};

struct BathSpec {
  int n_spins = 0;
  std::vector<double> zeeman;     // Omega_r > 0
  std::vector<double> couplings;  // c_r
  std::uint64_t seed = 0;
  ZeemanDistribution zeeman_dist;

  double sigma_n_sq() const;       // sum Omega_r^2 / 4
  double sigma_n() const;
  double max_total_energy() const; // sum Omega_r / 2
  void validate() const;

  nlohmann::json to_json() const;
  static BathSpec from_json(const nlohmann::json& j);
};

// Zeeman frequencies i.i.d. from N(mean, std), rejection-sampled to
// Omega > 0. Rejects distributions whose truncated mass exceeds 1%.
BathSpec sample_bath(int n_spins, ZeemanDistribution dist, double coupling,
                     std::uint64_t seed);

// All 2^N eigenenergies sum_r n_r Omega_r / 2, sorted. Guarded to N <= 24.
std::vector<double> enumerate_spectrum(const BathSpec& bath);

// Gaussian density of states g(e) = 2^N N(e, sigma_N).
struct DosModel {
  double sigma_n = 0.0;
  double log_total_states = 0.0;  // N log 2
  double density(double e) const;
  double normalized_density(double e) const;  // N(e, sigma_N)
};
DosModel dos_model(const BathSpec& bath);

// Measured volumes. Indicator: V_I(E) = 2^(N-1)[erf((E+dE/2)/sqrt(2)s) -
// erf((E-dE/2)/sqrt(2)s)] (a state count); Gaussian kernel: density
// 2^N N(E, sqrt(delta_e^2 + sigma_N^2)).
double volume(double e, const MeasurementKernel& kernel, const BathSpec& bath);
// V(E) / 2^N; the form used everywhere ratios appear, to keep N ~ 1000
// within double range.
double normalized_volume(double e, const MeasurementKernel& kernel,
                         const BathSpec& bath);
double log_volume(double e, const MeasurementKernel& kernel,
                  const BathSpec& bath);
// Exhaustive bin count (indicator kernel, N <= 24).
double volume_exact(double e, const MeasurementKernel& kernel,
                    const BathSpec& bath);

// S(E) = log(V(E) delta_e)
double boltzmann_entropy(double e, const MeasurementKernel& kernel,
                         const BathSpec& bath);
// beta(E) = dS/dE: centered finite difference on the indicator grid,
// closed form -E/(sigma_N^2 + delta_e^2) for the Gaussian kernel.
double boltzmann_beta(double e, const MeasurementKernel& kernel,
                      const BathSpec& bath);
// The small-delta_e linear relation beta(E) = -E / sigma_N^2.
double boltzmann_beta_linear(double e, const BathSpec& bath);
// C(E) = -beta(E)^2 / (d beta / dE); equals beta^2 sigma_N^2 for the
// Gaussian density of states.
double microcanonical_heat_capacity(double e, const MeasurementKernel& kernel,
                                    const BathSpec& bath);

// Canonical ensemble, closed forms over the exact spectrum:
//   <E>_beta = -sum (Omega_r/2) tanh(beta Omega_r/2)
//   log Z    =  sum log(2 cosh(beta Omega_r/2))
//   C(beta)  =  beta^2 sum (Omega_r/2)^2 sech^2(beta Omega_r/2)
double canonical_energy(double beta, const BathSpec& bath);
double log_partition(double beta, const BathSpec& bath);
double heat_capacity(double beta, const BathSpec& bath);
// d<E>/dbeta = -C/beta^2; stays finite at beta = 0.
double canonical_energy_derivative(double beta, const BathSpec& bath);

struct CanonicalEnsemble {
  double beta = 0.0;
  double mean_energy = 0.0;
  double partition_log = 0.0;
  double heat_capacity = 0.0;
};
CanonicalEnsemble canonical_ensemble(double beta, const BathSpec& bath);

// Grid variant of <E>_beta with weights V(E) exp(-beta E); agrees with the
// closed form at the benchmark sizes.
double canonical_energy_grid(double beta, const MeasurementKernel& kernel,
                             const BathSpec& bath);

// Unique root of <E>_beta = target. Errors outside the attainable band
// (-sum Omega/2, sum Omega/2); targets > 0 give beta < 0.
double solve_beta_star(double target_energy, const BathSpec& bath);

struct LindebergReport {
  double ratio = 0.0;         // max_r Omega_r / (2 sigma_N)
  double ks_statistic = -1.0; // vs N(0, sigma_N); -1 when N > 24
};
LindebergReport lindeberg_check(const BathSpec& bath);

}  // namespace finitebath
