#pragma once

// Bath correlation structure for the non-interacting spin bath coupled
// through B = sum_r c_r sigma^x_r:
//
//   f(E,E';Omega) = sum over complement configurations of
//                   W(E|e + Omega/2) W(E'|e - Omega/2),
//
// evaluated exactly (N <= 24) or through the Gaussian density of states
// (removing one spin halves g(e)). Dissipation rates follow as
// gamma_1(E,E';omega) = J(omega) f(E,E';omega) / V(E'), with the spectral
// density J continued evenly to negative frequencies. Also: marginalized
// rates kappa(E;omega) and their canonical averages, time-domain
// correlation functions, the local detailed balance (KMS) residual and
// the exact reduced state of a single bath spin in a microcanonical
// state.

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "finitebath/bath.hpp"
#include "finitebath/kernel.hpp"
#include "finitebath/system.hpp"

namespace finitebath {

struct SpectralDensity {
  double lambda = 0.0;  // interaction energy scale
  double c0 = 1.0;      // spin-independent coupling scale
  bool continuum = true;
  // Continuum form: J(Omega) = 2 pi lambda^2 c0^2 N p_Z(|Omega|).
  ZeemanDistribution p_z;
  int n_spins = 0;
  // Discrete form: 2 pi lambda^2 sum_r c_r^2 delta(Omega - Omega_r),
  // kept as the realized lines; deltas are broadened to the indicator
  // bin when rates are evaluated.
  std::vector<double> line_omega;
  std::vector<double> line_coupling;

  double j_value(double omega) const;  // continuum J(|omega|)
  void validate() const;
};

SpectralDensity make_spectral_density(const BathSpec& bath, double lambda,
                                      double c0, bool continuum);

// Exact f(E,E';+Omega_r) by enumeration of the 2^(N-1) complement
// configurations (N <= 24). Negative frequency via the exact symmetry
// f(E,E';-Omega) = f(E',E;+Omega).
double f_exact(double e, double e_prime, int r, const BathSpec& bath,
               const MeasurementKernel& kernel);

// DOS approximation, raw scale (comparable to f_exact):
// int de g(e)/2 W(E|e+Omega/2) W(E'|e-Omega/2); closed forms for both
// kernel kinds. Zero when the shifted windows are disjoint.
double f_approx(double e, double e_prime, double omega, const BathSpec& bath,
                const MeasurementKernel& kernel);
// Same divided by 2^N; used in every ratio so that N ~ 1000 is safe.
double f_approx_normalized(double e, double e_prime, double omega,
                           const BathSpec& bath,
                           const MeasurementKernel& kernel);

enum class RateMode { Continuum, Oracle };

// gamma_1(E,E';omega); Continuum uses the DOS f and continuum J, Oracle
// uses f_exact and the discrete lines broadened to the indicator bin.
double gamma1(double e, double e_prime, double omega,
              const SpectralDensity& spectral, const BathSpec& bath,
              const MeasurementKernel& kernel,
              RateMode mode = RateMode::Continuum);
// Indicator identity: gamma_2(E,E'';omega) = delta_{E,E''} kappa(E;omega).
double gamma2(double e, double e_pp, double omega,
              const SpectralDensity& spectral, const BathSpec& bath,
              const MeasurementKernel& kernel,
              RateMode mode = RateMode::Continuum);

// kappa(E;omega) = sum_{E'} gamma_1(E',E;omega) over the kernel grid.
double kappa(double e, double omega, const SpectralDensity& spectral,
             const BathSpec& bath, const MeasurementKernel& kernel,
             RateMode mode = RateMode::Continuum);
// <kappa(E;omega)>_p for a normalized distribution p over the grid.
double kappa_p_averaged(const std::vector<double>& p, double omega,
                        const SpectralDensity& spectral, const BathSpec& bath,
                        const MeasurementKernel& kernel);
// Thermal average with weights V(E) exp(-beta E).
double kappa_beta(double beta, double omega, const SpectralDensity& spectral,
                  const BathSpec& bath, const MeasurementKernel& kernel);

// <B(tau) P(E) B>_{E'} for fixed (E, E'); caches the per-spin f values so
// long tau scans stay cheap even for N ~ 1000.
class CorrelationEvaluator {
 public:
  CorrelationEvaluator(double e, double e_prime, const BathSpec& bath,
                       const MeasurementKernel& kernel,
                       bool exact_f = false);
  std::complex<double> operator()(double tau) const;
  const std::vector<double>& omegas() const { return omega_; }

 private:
  std::vector<double> omega_;
  std::vector<double> w_pos_;  // |c_r|^2 f(E,E';+Omega_r) / V(E')
  std::vector<double> w_neg_;  // |c_r|^2 f(E,E';-Omega_r) / V(E')
};

std::complex<double> correlation_time_domain(double tau, double e,
                                             double e_prime,
                                             const BathSpec& bath,
                                             const MeasurementKernel& kernel);

// gamma_1(E,E';omega) from the numeric Fourier transform of the
// time-domain correlation: trapezoid over tau in [-T, T].
std::vector<double> gamma1_numeric_ft(const CorrelationEvaluator& corr,
                                      double lambda,
                                      const std::vector<double>& omegas,
                                      double t_max, int n_samples,
                                      int threads = 1);

// |kappa(E;-omega)/kappa(E;omega) - exp(-beta(E) omega)| /
// exp(-beta(E) omega), the local detailed balance residual.
double kms_residual(double e, double omega, const SpectralDensity& spectral,
                    const BathSpec& bath, const MeasurementKernel& kernel);

// Exact reduced state of spin r conditioned on measured bath energy E
// (N <= 24), with the canonical prediction exp(-beta(E) e_n)/Z_r.
struct ReducedSpinState {
  double p_exact[2];      // populations of n = -1, +1 (energies -/+ Omega_r/2)
  double p_canonical[2];
};
ReducedSpinState reduced_microcanonical_state(int r, double e,
                                              const BathSpec& bath,
                                              const MeasurementKernel& kernel);

// Rates tabulated over (grid x grid x Bohr frequencies), exportable as CSV
// with columns (E, E_prime, omega, gamma1, gamma2).
struct RateTable {
  std::vector<double> grid;
  std::vector<double> omegas;
  std::vector<double> gamma1_v;  // [(ie * n + je) * n_w + iw]
  std::vector<double> gamma2_v;
  std::vector<double> kappa_v;   // [ie * n_w + iw]

  double gamma1_at(std::size_t ie, std::size_t je, std::size_t iw) const;
  double kappa_at(std::size_t ie, std::size_t iw) const;
  void write_csv(const std::string& path) const;
};

RateTable build_rate_table(const SystemSpec& system, const BathSpec& bath,
                           const MeasurementKernel& kernel,
                           const SpectralDensity& spectral,
                           RateMode mode = RateMode::Continuum,
                           int threads = 1);

}  // namespace finitebath
