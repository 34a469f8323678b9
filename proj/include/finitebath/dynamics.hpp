#pragma once

// The dynamical hierarchy. Top level: the extended microcanonical master
// equation restricted to populations, d/dt p = Lambda p over joint states
// (system level, bath energy bin). Middle: the Born-Markov-secular rate
// equation with a self-consistent time-dependent inverse temperature
// beta*(t) pinned to the current average bath energy. Bottom: the same
// equation at fixed beta_0. Plus stationary states per conserved
// total-energy shell and all trajectory observables (energies, heat flux,
// beta*, mutual information, Clausius rate).

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "finitebath/bath.hpp"
#include "finitebath/correlation.hpp"
#include "finitebath/kernel.hpp"
#include "finitebath/system.hpp"

namespace finitebath {

struct JointDistribution {
  std::vector<double> grid;  // bath bin centers
  int d_s = 0;
  Eigen::VectorXd p;         // flattened, index k * n_bins + ie

  double at(int k, std::size_t ie) const;
  double total() const;
  Eigen::VectorXd system_marginal() const;
  Eigen::VectorXd bath_marginal() const;
  void validate(double tol = 1e-9) const;
};

// p(E) proportional to V(E) exp(-beta E) on the grid.
Eigen::VectorXd canonical_bath_populations(double beta,
                                           const std::vector<double>& grid,
                                           const BathSpec& bath,
                                           const MeasurementKernel& kernel);

// Product initial states: system point mass or populations (x) canonical
// pi_B(beta) or microcanonical omega_B(E).
JointDistribution product_state(const Eigen::VectorXd& system_populations,
                                const Eigen::VectorXd& bath_populations,
                                const std::vector<double>& grid);

struct RateMatrix {
  SystemSpec system;
  std::vector<double> grid;
  std::vector<double> log_vol;   // log normalized volume per bin
  Eigen::MatrixXd lambda;        // generator, zero column sums
  bool exact_blocks = false;     // omega_s an integer multiple of delta_e
                                 // and every transition shell-preserving
  std::vector<long> shell_key;   // 2 (E + eps_k) / delta_e, rounded
  double delta_e = 1.0;

  std::size_t n_bins() const { return grid.size(); }
  std::size_t dim() const { return grid.size() * system.dimension(); }
  std::size_t index(int k, std::size_t ie) const {
    return static_cast<std::size_t>(k) * grid.size() + ie;
  }
};

// Off-diagonal Lambda(k,E; q,E') = |<k|S|q>|^2 gamma_1(E,E';eps_q-eps_k);
// diagonals fixed by zero column sums. Oracle mode (exact f, discrete
// lines, exact volumes) restricts the grid to populated bins.
RateMatrix build_rate_matrix(const SystemSpec& system, const BathSpec& bath,
                             const MeasurementKernel& kernel,
                             const SpectralDensity& spectral,
                             RateMode mode = RateMode::Continuum,
                             int threads = 1);

struct Observables {
  double u_s = 0.0;
  double u_b = 0.0;
  double u_tot = 0.0;
  double q_dot = 0.0;
  double beta_star = 0.0;
  double mutual_info = 0.0;
  double clausius_rate = 0.0;
};

struct TrajectoryPoint {
  double t = 0.0;
  Eigen::VectorXd system_populations;
  Eigen::VectorXd bath_populations;
  Observables obs;
};

struct Trajectory {
  std::vector<double> grid;
  std::vector<TrajectoryPoint> points;
  // Joint states per output time (EMME only).
  std::vector<Eigen::VectorXd> joint_states;
};

enum class EvolveMethod { Expm, Rk45 };

// Spectral propagator: Lambda is similar to a symmetric matrix through
// D = diag(V(E)), courtesy of detailed balance, so exp(Lambda t) comes
// from one self-adjoint eigensolve.
class EmmePropagator {
 public:
  explicit EmmePropagator(const RateMatrix& rm);
  Eigen::VectorXd apply(const Eigen::VectorXd& p0, double t) const;
  double slowest_nonzero_rate() const;  // largest |lambda| < 0 ... smallest decay

 private:
  Eigen::VectorXd sqrt_w_, inv_sqrt_w_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
};

Trajectory evolve_emme(const RateMatrix& rm, const JointDistribution& p0,
                       const std::vector<double>& times, const BathSpec& bath,
                       EvolveMethod method = EvolveMethod::Expm);

// kappa(E;+/-omega_s) tabulated on the grid plus canonical averaging;
// the ingredients of both BMS levels.
struct KappaGrid {
  std::vector<double> grid;
  std::vector<double> log_w;      // log normalized volume
  std::vector<double> kappa_pos;  // kappa(E;+omega_s)
  std::vector<double> kappa_neg;  // kappa(E;-omega_s)

  double average_beta(double beta, bool positive) const;
};
KappaGrid build_kappa_grid(const SystemSpec& system, const BathSpec& bath,
                           const MeasurementKernel& kernel,
                           const SpectralDensity& spectral);

Trajectory evolve_bms_fixed(const SystemSpec& system, double beta0,
                            const Eigen::VectorXd& p_s0,
                            const std::vector<double>& times,
                            const KappaGrid& kg, const BathSpec& bath);

enum class BetaUpdate { Resolve, Ode };

// BMS with beta*(t). Resolve re-solves <E>_beta = U_B(t) from the energy
// balance each step; Ode integrates d beta*/dt = beta*^2 Qdot / C(beta*).
Trajectory evolve_bms_adaptive(const SystemSpec& system, double beta0,
                               const Eigen::VectorXd& p_s0,
                               const std::vector<double>& times,
                               const KappaGrid& kg, const BathSpec& bath,
                               BetaUpdate update = BetaUpdate::Resolve);

struct StationaryResult {
  JointDistribution distribution;
  // Shells holding more than one connected component (resolved per
  // component, reported so callers can flag the multiplicity).
  std::vector<long> degenerate_shells;
};

// Per total-energy shell: the initial mass of the shell times its unique
// stationary vector (proportional to V(E) on a connected block). Requires
// exact block structure.
StationaryResult stationary_distribution(const RateMatrix& rm,
                                         const JointDistribution& p0);

double mutual_information(const JointDistribution& p);

// Total coarse energy distribution p_tot(E_tot = E + eps_k) over shells.
std::vector<std::pair<long, double>> shell_distribution(
    const RateMatrix& rm, const Eigen::VectorXd& p);

Observables observables_emme(const RateMatrix& rm, const Eigen::VectorXd& p,
                             const BathSpec& bath);

}  // namespace finitebath
