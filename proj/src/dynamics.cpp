#include "finitebath/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "finitebath/numerics.hpp"

namespace finitebath {

namespace {
constexpr double kTinyP = 1e-300;
}  // namespace

double JointDistribution::at(int k, std::size_t ie) const {
  return p[static_cast<Eigen::Index>(static_cast<std::size_t>(k) * grid.size() + ie)];
}

double JointDistribution::total() const { return p.sum(); }

Eigen::VectorXd JointDistribution::system_marginal() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d_s);
  const std::size_t n = grid.size();
  for (int k = 0; k < d_s; ++k)
    m[k] = p.segment(static_cast<Eigen::Index>(k * n), static_cast<Eigen::Index>(n)).sum();
  return m;
}

Eigen::VectorXd JointDistribution::bath_marginal() const {
  const std::size_t n = grid.size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (int k = 0; k < d_s; ++k)
    m += p.segment(static_cast<Eigen::Index>(k * n), static_cast<Eigen::Index>(n));
  return m;
}

void JointDistribution::validate(double tol) const {
  if (p.size() != static_cast<Eigen::Index>(grid.size() * static_cast<std::size_t>(d_s)))
    throw std::invalid_argument("JointDistribution: size mismatch");
  if (p.minCoeff() < -tol)
    throw std::invalid_argument("JointDistribution: negative probability");
  if (std::abs(total() - 1.0) > tol)
    throw std::invalid_argument("JointDistribution: not normalized");
}

Eigen::VectorXd canonical_bath_populations(double beta,
                                           const std::vector<double>& grid,
                                           const BathSpec& bath,
                                           const MeasurementKernel& kernel) {
  Eigen::VectorXd lw(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double v = normalized_volume(grid[j], kernel, bath);
    lw[static_cast<Eigen::Index>(j)] =
        (v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity()) -
        beta * grid[j];
  }
  const double m = lw.maxCoeff();
  Eigen::VectorXd p = (lw.array() - m).exp();
  p /= p.sum();
  return p;
}

JointDistribution product_state(const Eigen::VectorXd& system_populations,
                                const Eigen::VectorXd& bath_populations,
                                const std::vector<double>& grid) {
  JointDistribution jd;
  jd.grid = grid;
  jd.d_s = static_cast<int>(system_populations.size());
  const std::size_t n = grid.size();
  if (bath_populations.size() != static_cast<Eigen::Index>(n))
    throw std::invalid_argument("product_state: bath populations off the grid");
  jd.p.resize(static_cast<Eigen::Index>(n * static_cast<std::size_t>(jd.d_s)));
  for (int k = 0; k < jd.d_s; ++k)
    for (std::size_t ie = 0; ie < n; ++ie)
      jd.p[static_cast<Eigen::Index>(k * n + ie)] =
          system_populations[k] * bath_populations[static_cast<Eigen::Index>(ie)];
  jd.validate(1e-9);
  return jd;
}

RateMatrix build_rate_matrix(const SystemSpec& system, const BathSpec& bath,
                             const MeasurementKernel& kernel,
                             const SpectralDensity& spectral, RateMode mode,
                             int threads) {
  system.validate();
  bath.validate();
  if (kernel.kind != KernelKind::Indicator)
    throw std::invalid_argument("build_rate_matrix: dynamics use the indicator kernel");
  RateMatrix rm;
  rm.system = system;
  rm.delta_e = kernel.delta_e;

  if (mode == RateMode::Oracle) {
    // One sweep of the exact spectrum; keep populated bins only.
    auto spectrum = enumerate_spectrum(bath);
    std::vector<double> counts(kernel.grid.size(), 0.0);
    for (double e : spectrum) {
      const long m = kernel.bin_index(e);
      const long m0 = kernel.bin_index(kernel.grid.front());
      const long idx = m - m0;
      if (idx >= 0 && idx < static_cast<long>(kernel.grid.size()))
        counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (std::size_t j = 0; j < kernel.grid.size(); ++j) {
      if (counts[j] > 0.0) {
        rm.grid.push_back(kernel.grid[j]);
        rm.log_vol.push_back(std::log(counts[j]));
      }
    }
  } else {
    for (double e : kernel.grid) {
      const double v = normalized_volume(e, kernel, bath);
      if (v > 0.0) {
        rm.grid.push_back(e);
        rm.log_vol.push_back(std::log(v));
      }
    }
  }
  if (rm.grid.empty()) throw std::invalid_argument("build_rate_matrix: empty grid");

  const std::size_t n = rm.grid.size();
  const int d = system.dimension();
  const std::size_t dim = n * static_cast<std::size_t>(d);
  rm.lambda = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                    static_cast<Eigen::Index>(dim));
  const auto groups = bohr_frequencies(system);

  auto fill_rows = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ie = lo; ie < hi; ++ie)
      for (std::size_t je = 0; je < n; ++je)
        for (const auto& g : groups) {
          if (mode == RateMode::Continuum &&
              std::abs(rm.grid[ie] - rm.grid[je] - g.omega) >= kernel.delta_e)
            continue;
          double rate = -1.0;
          for (const auto& [k, q] : g.transitions) {
            const double elem = coupling_element(k, q, system);
            if (elem == 0.0) continue;
            if (rate < 0.0)
              rate = gamma1(rm.grid[ie], rm.grid[je], g.omega, spectral, bath,
                            kernel, mode);
            if (rate == 0.0) break;
            rm.lambda(static_cast<Eigen::Index>(rm.index(k, ie)),
                      static_cast<Eigen::Index>(rm.index(q, je))) = elem * rate;
          }
        }
  };
  if (threads > 1) {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      const std::size_t lo = std::min(n, chunk * static_cast<std::size_t>(t));
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(fill_rows, lo, hi);
    }
    for (auto& th : pool) th.join();
  } else {
    fill_rows(0, n);
  }

  // Zero column sums fix the diagonal and conserve probability.
  for (std::size_t j = 0; j < dim; ++j) {
    const Eigen::Index jj = static_cast<Eigen::Index>(j);
    rm.lambda(jj, jj) = 0.0;
    rm.lambda(jj, jj) = -rm.lambda.col(jj).sum();
  }

  // Total coarse energy shells: E + eps_k on a half-step lattice.
  rm.shell_key.resize(dim);
  for (int k = 0; k < d; ++k)
    for (std::size_t ie = 0; ie < n; ++ie)
      rm.shell_key[rm.index(k, ie)] = std::lround(
          2.0 * (rm.grid[ie] + system.level(k)) / kernel.delta_e);

  const double ratio = system.omega_s / kernel.delta_e;
  bool blocks = std::abs(ratio - std::lround(ratio)) < 1e-12;
  if (blocks) {
    for (std::size_t j = 0; j < dim && blocks; ++j)
      for (std::size_t i = 0; i < dim && blocks; ++i)
        if (i != j && rm.lambda(static_cast<Eigen::Index>(i),
                                static_cast<Eigen::Index>(j)) != 0.0 &&
            rm.shell_key[i] != rm.shell_key[j])
          blocks = false;
  }
  rm.exact_blocks = blocks;
  return rm;
}

EmmePropagator::EmmePropagator(const RateMatrix& rm) {
  const std::size_t n = rm.grid.size();
  const std::size_t dim = rm.dim();
  sqrt_w_.resize(static_cast<Eigen::Index>(dim));
  inv_sqrt_w_.resize(static_cast<Eigen::Index>(dim));
  for (int k = 0; k < rm.system.dimension(); ++k)
    for (std::size_t ie = 0; ie < n; ++ie) {
      const double half_log = 0.5 * rm.log_vol[ie];
      const Eigen::Index idx = static_cast<Eigen::Index>(rm.index(k, ie));
      sqrt_w_[idx] = std::exp(half_log);
      inv_sqrt_w_[idx] = std::exp(-half_log);
    }
  // Detailed balance with weights V(E) makes D^{-1/2} Lambda D^{1/2}
  // symmetric; symmetrize explicitly to absorb roundoff.
  Eigen::MatrixXd s = inv_sqrt_w_.asDiagonal() * rm.lambda *
                      sqrt_w_.asDiagonal();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1e-30, s.cwiseAbs().maxCoeff());
  if (asym > 1e-8 * scale)
    throw std::runtime_error(
        "EmmePropagator: generator is not balanced by the volume weights");
  s = 0.5 * (s + s.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("EmmePropagator: eigensolve failed");
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
}

Eigen::VectorXd EmmePropagator::apply(const Eigen::VectorXd& p0,
                                      double t) const {
  const Eigen::VectorXd y = evecs_.transpose() * (inv_sqrt_w_.asDiagonal() * p0);
  Eigen::VectorXd z(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    z[i] = y[i] * std::exp(std::min(0.0, evals_[i]) * t);
  return sqrt_w_.asDiagonal() * (evecs_ * z);
}

double EmmePropagator::slowest_nonzero_rate() const {
  double slowest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < evals_.size(); ++i) {
    const double r = -evals_[i];
    if (r > 1e-12 && r < slowest) slowest = r;
  }
  return slowest;
}

std::vector<std::pair<long, double>> shell_distribution(
    const RateMatrix& rm, const Eigen::VectorXd& p) {
  std::vector<std::pair<long, double>> acc;
  for (std::size_t j = 0; j < rm.dim(); ++j) {
    const long key = rm.shell_key[j];
    auto it = std::find_if(acc.begin(), acc.end(),
                           [&](const auto& kv) { return kv.first == key; });
    if (it == acc.end())
      acc.emplace_back(key, p[static_cast<Eigen::Index>(j)]);
    else
      it->second += p[static_cast<Eigen::Index>(j)];
  }
  std::sort(acc.begin(), acc.end());
  return acc;
}

double mutual_information(const JointDistribution& jd) {
  const Eigen::VectorXd ps = jd.system_marginal();
  const Eigen::VectorXd pb = jd.bath_marginal();
  double mi = 0.0;
  const std::size_t n = jd.grid.size();
  for (int k = 0; k < jd.d_s; ++k)
    for (std::size_t ie = 0; ie < n; ++ie) {
      const double pj = jd.p[static_cast<Eigen::Index>(k * n + ie)];
      if (pj <= kTinyP) continue;
      mi += pj * (std::log(pj) - std::log(ps[k]) -
                  std::log(pb[static_cast<Eigen::Index>(ie)]));
    }
  return mi;
}

namespace {

Observables make_observables(const RateMatrix& rm, const Eigen::VectorXd& p,
                             const Eigen::VectorXd& dp, const BathSpec& bath) {
  Observables o;
  const std::size_t n = rm.grid.size();
  const int d = rm.system.dimension();
  Eigen::VectorXd pk = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd dpk = Eigen::VectorXd::Zero(d);
  for (int k = 0; k < d; ++k)
    for (std::size_t ie = 0; ie < n; ++ie) {
      const Eigen::Index j = static_cast<Eigen::Index>(rm.index(k, ie));
      pk[k] += p[j];
      dpk[k] += dp[j];
      o.u_s += rm.system.level(k) * p[j];
      o.u_b += rm.grid[ie] * p[j];
      o.q_dot -= rm.grid[ie] * dp[j];
    }
  o.u_tot = o.u_s + o.u_b;
  try {
    o.beta_star = solve_beta_star(o.u_b, bath);
  } catch (const std::domain_error&) {
    o.beta_star = std::numeric_limits<double>::quiet_NaN();
  }
  JointDistribution jd;
  jd.grid = rm.grid;
  jd.d_s = d;
  jd.p = p.cwiseMax(0.0);
  o.mutual_info = mutual_information(jd);
  double ds_dt = 0.0;
  for (int k = 0; k < d; ++k)
    ds_dt -= dpk[k] * (1.0 + std::log(std::max(pk[k], kTinyP)));
  o.clausius_rate = ds_dt - o.beta_star * o.q_dot;
  return o;
}

TrajectoryPoint make_point(const RateMatrix& rm, double t,
                           const Eigen::VectorXd& p, const BathSpec& bath) {
  TrajectoryPoint tp;
  tp.t = t;
  const Eigen::VectorXd dp = rm.lambda * p;
  tp.obs = make_observables(rm, p, dp, bath);
  JointDistribution jd;
  jd.grid = rm.grid;
  jd.d_s = rm.system.dimension();
  jd.p = p;
  tp.system_populations = jd.system_marginal();
  tp.bath_populations = jd.bath_marginal();
  return tp;
}

}  // namespace

Observables observables_emme(const RateMatrix& rm, const Eigen::VectorXd& p,
                             const BathSpec& bath) {
  return make_observables(rm, p, rm.lambda * p, bath);
}

Trajectory evolve_emme(const RateMatrix& rm, const JointDistribution& p0,
                       const std::vector<double>& times, const BathSpec& bath,
                       EvolveMethod method) {
  p0.validate(1e-9);
  if (p0.grid != rm.grid || p0.d_s != rm.system.dimension())
    throw std::invalid_argument("evolve_emme: state does not match the generator grid");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("evolve_emme: times must be strictly increasing");

  Trajectory tr;
  tr.grid = rm.grid;
  tr.points.reserve(times.size());
  tr.joint_states.reserve(times.size());

  if (method == EvolveMethod::Expm) {
    EmmePropagator prop(rm);
    for (double t : times) {
      Eigen::VectorXd pt = t == 0.0 ? p0.p : prop.apply(p0.p, t);
      tr.points.push_back(make_point(rm, t, pt, bath));
      tr.joint_states.push_back(std::move(pt));
    }
  } else {
    Eigen::VectorXd y = p0.p;
    auto rhs = [&](double, const Eigen::VectorXd& p, Eigen::VectorXd& dp) {
      dp.noalias() = rm.lambda * p;
    };
    double t_prev = 0.0;
    for (double t : times) {
      if (t > t_prev) integrate_dopri5(rhs, t_prev, t, y);
      t_prev = t;
      tr.points.push_back(make_point(rm, t, y, bath));
      tr.joint_states.push_back(y);
    }
  }
  return tr;
}

KappaGrid build_kappa_grid(const SystemSpec& system, const BathSpec& bath,
                           const MeasurementKernel& kernel,
                           const SpectralDensity& spectral) {
  KappaGrid kg;
  kg.grid = kernel.grid;
  kg.log_w.resize(kernel.grid.size());
  kg.kappa_pos.resize(kernel.grid.size());
  kg.kappa_neg.resize(kernel.grid.size());
  for (std::size_t j = 0; j < kernel.grid.size(); ++j) {
    const double v = normalized_volume(kernel.grid[j], kernel, bath);
    kg.log_w[j] =
        v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    kg.kappa_pos[j] = kappa(kernel.grid[j], system.omega_s, spectral, bath, kernel);
    kg.kappa_neg[j] = kappa(kernel.grid[j], -system.omega_s, spectral, bath, kernel);
  }
  return kg;
}

double KappaGrid::average_beta(double beta, bool positive) const {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.size(); ++j)
    max_lw = std::max(max_lw, log_w[j] - beta * grid[j]);
  double num = 0.0, den = 0.0;
  const auto& k = positive ? kappa_pos : kappa_neg;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double w = std::exp(log_w[j] - beta * grid[j] - max_lw);
    den += w;
    num += w * k[j];
  }
  return num / den;
}

namespace {

// Population rate matrix of the BMS equation at inverse temperature beta.
Eigen::MatrixXd bms_generator(const SystemSpec& system, const KappaGrid& kg,
                              double beta) {
  const int d = system.dimension();
  const double k_plus = kg.average_beta(beta, true);    // omega = +omega_s
  const double k_minus = kg.average_beta(beta, false);  // omega = -omega_s
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int q : {k - 1, k + 1}) {
      if (q < 0 || q >= d) continue;
      const double elem = coupling_element(k, q, system);
      const double kap = (q > k) ? k_plus : k_minus;  // omega = eps_q - eps_k
      r(k, q) = elem * kap;
    }
  for (int q = 0; q < d; ++q) {
    r(q, q) = 0.0;
    r(q, q) = -r.col(q).sum();
  }
  return r;
}

struct BmsObservables {
  double u_b0 = 0.0;
  double u_s0 = 0.0;
};

TrajectoryPoint bms_point(const SystemSpec& system, double t,
                          const Eigen::VectorXd& p, double beta_star,
                          const Eigen::MatrixXd& r, const BmsObservables& ref) {
  TrajectoryPoint tp;
  tp.t = t;
  tp.system_populations = p;
  const int d = system.dimension();
  Observables o;
  const Eigen::VectorXd dp = r * p;
  for (int k = 0; k < d; ++k) o.u_s += system.level(k) * p[k];
  o.u_b = ref.u_b0 - (o.u_s - ref.u_s0);
  o.u_tot = o.u_s + o.u_b;
  o.q_dot = 0.0;
  for (int k = 0; k < d; ++k) o.q_dot += system.level(k) * dp[k];
  o.beta_star = beta_star;
  o.mutual_info = 0.0;  // product ansatz by construction
  double ds_dt = 0.0;
  for (int k = 0; k < d; ++k)
    ds_dt -= dp[k] * (1.0 + std::log(std::max(p[k], kTinyP)));
  o.clausius_rate = ds_dt - beta_star * o.q_dot;
  tp.obs = o;
  return tp;
}

}  // namespace

Trajectory evolve_bms_fixed(const SystemSpec& system, double beta0,
                            const Eigen::VectorXd& p_s0,
                            const std::vector<double>& times,
                            const KappaGrid& kg, const BathSpec& bath) {
  system.validate();
  if (!std::isfinite(beta0))
    throw std::invalid_argument("evolve_bms_fixed: beta0 must be finite");
  const Eigen::MatrixXd r = bms_generator(system, kg, beta0);
  BmsObservables ref;
  ref.u_b0 = canonical_energy(beta0, bath);
  for (int k = 0; k < system.dimension(); ++k)
    ref.u_s0 += system.level(k) * p_s0[k];

  Trajectory tr;
  tr.grid = kg.grid;
  Eigen::VectorXd y = p_s0;
  auto rhs = [&](double, const Eigen::VectorXd& p, Eigen::VectorXd& dp) {
    dp.noalias() = r * p;
  };
  double t_prev = 0.0;
  for (double t : times) {
    if (t > t_prev) integrate_dopri5(rhs, t_prev, t, y);
    t_prev = t;
    tr.points.push_back(bms_point(system, t, y, beta0, r, ref));
  }
  return tr;
}

Trajectory evolve_bms_adaptive(const SystemSpec& system, double beta0,
                               const Eigen::VectorXd& p_s0,
                               const std::vector<double>& times,
                               const KappaGrid& kg, const BathSpec& bath,
                               BetaUpdate update) {
  system.validate();
  const int d = system.dimension();
  BmsObservables ref;
  ref.u_b0 = canonical_energy(beta0, bath);
  for (int k = 0; k < d; ++k) ref.u_s0 += system.level(k) * p_s0[k];
  const double sigma2 = bath.sigma_n_sq();

  auto energy_variance = [&](double beta) {
    const double var = -canonical_energy_derivative(beta, bath);
    if (!(var > 1e-12 * sigma2))
      throw std::runtime_error(
          "evolve_bms_adaptive: canonical heat capacity vanished (beta* -> "
          "+/-inf); the bath cannot absorb the remaining heat");
    return var;
  };

  auto beta_from_populations = [&](const Eigen::VectorXd& p, double beta_guess) {
    double u_s = 0.0;
    for (int k = 0; k < d; ++k) u_s += system.level(k) * p[k];
    const double u_b = ref.u_b0 - (u_s - ref.u_s0);
    // Newton on <E>_beta = u_b with safe fallback.
    double beta = beta_guess;
    for (int it = 0; it < 50; ++it) {
      const double f = canonical_energy(beta, bath) - u_b;
      if (std::abs(f) <= 1e-12 * bath.sigma_n()) return beta;
      beta += f / energy_variance(beta);
    }
    return solve_beta_star(u_b, bath);
  };

  Trajectory tr;
  tr.grid = kg.grid;

  if (update == BetaUpdate::Resolve) {
    double beta_cache = beta0;
    auto rhs = [&](double, const Eigen::VectorXd& p, Eigen::VectorXd& dp) {
      beta_cache = beta_from_populations(p, beta_cache);
      dp.noalias() = bms_generator(system, kg, beta_cache) * p;
    };
    Eigen::VectorXd y = p_s0;
    double t_prev = 0.0;
    for (double t : times) {
      if (t > t_prev) integrate_dopri5(rhs, t_prev, t, y);
      t_prev = t;
      const double beta = beta_from_populations(y, beta_cache);
      const Eigen::MatrixXd r = bms_generator(system, kg, beta);
      tr.points.push_back(bms_point(system, t, y, beta, r, ref));
    }
    return tr;
  }

  // Ode mode: y = (populations, beta*); d beta*/dt = beta*^2 Qdot / C =
  // Qdot / Var_beta(E), which stays regular through beta* = 0.
  Eigen::VectorXd y(d + 1);
  y.head(d) = p_s0;
  y[d] = beta0;
  auto rhs = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
    const double beta = s[d];
    const Eigen::MatrixXd r = bms_generator(system, kg, beta);
    ds.head(d).noalias() = r * s.head(d);
    double q_dot = 0.0;
    for (int k = 0; k < d; ++k) q_dot += system.level(k) * ds[k];
    ds[d] = q_dot / energy_variance(beta);
  };
  double t_prev = 0.0;
  for (double t : times) {
    if (t > t_prev) integrate_dopri5(rhs, t_prev, t, y);
    t_prev = t;
    const double beta = y[d];
    const Eigen::MatrixXd r = bms_generator(system, kg, beta);
    tr.points.push_back(
        bms_point(system, t, y.head(d), beta, r, ref));
  }
  return tr;
}

StationaryResult stationary_distribution(const RateMatrix& rm,
                                         const JointDistribution& p0) {
  if (!rm.exact_blocks)
    throw std::invalid_argument(
        "stationary_distribution: requires exact total-energy block structure "
        "(omega_s must sit on the energy grid)");
  p0.validate(1e-9);
  const std::size_t dim = rm.dim();

  // Group states by shell.
  std::vector<long> keys;
  for (std::size_t j = 0; j < dim; ++j)
    if (std::find(keys.begin(), keys.end(), rm.shell_key[j]) == keys.end())
      keys.push_back(rm.shell_key[j]);
  std::sort(keys.begin(), keys.end());

  Eigen::VectorXd p_st = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  std::vector<long> degenerate;

  for (long key : keys) {
    std::vector<std::size_t> states;
    for (std::size_t j = 0; j < dim; ++j)
      if (rm.shell_key[j] == key) states.push_back(j);

    // Connected components inside the shell.
    std::vector<int> comp(states.size(), -1);
    int n_comp = 0;
    for (std::size_t s = 0; s < states.size(); ++s) {
      if (comp[s] >= 0) continue;
      std::vector<std::size_t> stack{s};
      comp[s] = n_comp;
      while (!stack.empty()) {
        const std::size_t a = stack.back();
        stack.pop_back();
        for (std::size_t b = 0; b < states.size(); ++b) {
          if (comp[b] >= 0 || a == b) continue;
          const Eigen::Index ia = static_cast<Eigen::Index>(states[a]);
          const Eigen::Index ib = static_cast<Eigen::Index>(states[b]);
          if (rm.lambda(ia, ib) != 0.0 || rm.lambda(ib, ia) != 0.0) {
            comp[b] = n_comp;
            stack.push_back(b);
          }
        }
      }
      ++n_comp;
    }
    if (n_comp > 1) degenerate.push_back(key);

    for (int c = 0; c < n_comp; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t s = 0; s < states.size(); ++s)
        if (comp[s] == c) members.push_back(states[s]);
      double mass = 0.0;
      for (std::size_t j : members) mass += p0.p[static_cast<Eigen::Index>(j)];
      if (mass <= 0.0) continue;

      if (members.size() == 1) {
        p_st[static_cast<Eigen::Index>(members[0])] += mass;
        continue;
      }
      // Smallest-magnitude eigenpair of the symmetrized block.
      const std::size_t m = members.size();
      Eigen::MatrixXd block(m, m);
      Eigen::VectorXd sw(m), isw(m);
      for (std::size_t a = 0; a < m; ++a) {
        const std::size_t bin_a = members[a] % rm.grid.size();
        sw[static_cast<Eigen::Index>(a)] = std::exp(0.5 * rm.log_vol[bin_a]);
        isw[static_cast<Eigen::Index>(a)] = std::exp(-0.5 * rm.log_vol[bin_a]);
      }
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              isw[static_cast<Eigen::Index>(a)] *
              rm.lambda(static_cast<Eigen::Index>(members[a]),
                        static_cast<Eigen::Index>(members[b])) *
              sw[static_cast<Eigen::Index>(b)];
      block = 0.5 * (block + block.transpose().eval());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
      // Eigenvalues ascending and <= 0; the stationary mode is the last.
      const Eigen::Index top = static_cast<Eigen::Index>(m) - 1;
      if (std::abs(es.eigenvalues()[top]) > 1e-12 * block.cwiseAbs().maxCoeff())
        throw std::runtime_error(
            "stationary_distribution: no zero mode found in a block");
      Eigen::VectorXd v = sw.asDiagonal() * es.eigenvectors().col(top);
      if (v.sum() < 0.0) v = -v;
      v = v.cwiseMax(0.0);
      v *= mass / v.sum();
      for (std::size_t a = 0; a < m; ++a)
        p_st[static_cast<Eigen::Index>(members[a])] += v[static_cast<Eigen::Index>(a)];
    }
  }

  StationaryResult res;
  res.distribution.grid = rm.grid;
  res.distribution.d_s = rm.system.dimension();
  res.distribution.p = p_st;
  res.degenerate_shells = std::move(degenerate);
  return res;
}

}  // namespace finitebath
