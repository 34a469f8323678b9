#include "finitebath/correlation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "finitebath/numerics.hpp"

namespace finitebath {

namespace {

void require_enumerable(int n, const char* who) {
  if (n > 24)
    throw std::invalid_argument(std::string(who) + ": guarded to N <= 24");
}

// Kahan-free plain accumulation is fine here; counts are exact integers
// for the indicator kernel.
template <typename F>
void for_each_complement_energy(const BathSpec& bath, int skip, F&& fn) {
  const int n = bath.n_spins;
  std::vector<double> omega;
  omega.reserve(static_cast<std::size_t>(n) - 1);
  for (int r = 0; r < n; ++r)
    if (r != skip) omega.push_back(bath.zeeman[static_cast<std::size_t>(r)]);
  const int m = static_cast<int>(omega.size());
  double energy = 0.0;
  for (double w : omega) energy -= 0.5 * w;
  fn(energy);
  if (m == 0) return;
  const std::uint64_t total = std::uint64_t{1} << m;
  std::uint64_t gray_prev = 0;
  for (std::uint64_t i = 1; i < total; ++i) {
    const std::uint64_t gray = i ^ (i >> 1);
    const std::uint64_t diff = gray ^ gray_prev;
    const int r = std::countr_zero(diff);
    const double w = omega[static_cast<std::size_t>(r)];
    energy += (gray & diff) ? w : -w;
    gray_prev = gray;
    fn(energy);
  }
}

}  // namespace

double SpectralDensity::j_value(double omega) const {
  if (!continuum)
    throw std::invalid_argument(
        "SpectralDensity: continuum J requested in discrete mode");
  if (!(p_z.std > 0.0))
    throw std::invalid_argument(
        "SpectralDensity: continuum J needs a spread of Zeeman energies; "
        "use the discrete form for sigma_Omega = 0");
  // Even continuation J(-Omega) = J(Omega).
  return 2.0 * kPi * lambda * lambda * c0 * c0 * n_spins *
         normal_pdf(std::abs(omega) - p_z.mean, p_z.std);
}

void SpectralDensity::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("SpectralDensity: lambda < 0");
  if (!continuum && line_omega.size() != line_coupling.size())
    throw std::invalid_argument("SpectralDensity: line arrays mismatch");
}

SpectralDensity make_spectral_density(const BathSpec& bath, double lambda,
                                      double c0, bool continuum) {
  SpectralDensity s;
  s.lambda = lambda;
  s.c0 = c0;
  s.continuum = continuum;
  s.p_z = bath.zeeman_dist;
  s.n_spins = bath.n_spins;
  s.line_omega = bath.zeeman;
  s.line_coupling = bath.couplings;
  s.validate();
  return s;
}

double f_exact(double e, double e_prime, int r, const BathSpec& bath,
               const MeasurementKernel& kernel) {
  require_enumerable(bath.n_spins, "f_exact");
  if (r < 0 || r >= bath.n_spins)
    throw std::out_of_range("f_exact: spin index out of range");
  const double half = 0.5 * bath.zeeman[static_cast<std::size_t>(r)];
  double acc = 0.0;
  for_each_complement_energy(bath, r, [&](double eb) {
    acc += kernel.weight(e, eb + half) * kernel.weight(e_prime, eb - half);
  });
  return acc;
}

double f_approx_normalized(double e, double e_prime, double omega,
                           const BathSpec& bath,
                           const MeasurementKernel& kernel) {
  const double s = bath.sigma_n();
  const double x1 = e - 0.5 * omega;
  const double x2 = e_prime + 0.5 * omega;
  if (kernel.kind == KernelKind::Indicator) {
    const double lo = std::max(x1, x2) - 0.5 * kernel.delta_e;
    const double hi = std::min(x1, x2) + 0.5 * kernel.delta_e;
    if (hi <= lo) return 0.0;  // disjoint windows
    return 0.5 * gaussian_interval_mass(lo, hi, s);
  }
  const double d = kernel.delta_e;
  const double diff = x1 - x2;
  const double mid = 0.5 * (x1 + x2);
  return 0.5 * normal_pdf(diff, kSqrt2 * d) *
         normal_pdf(mid, std::sqrt(s * s + 0.5 * d * d));
}

double f_approx(double e, double e_prime, double omega, const BathSpec& bath,
                const MeasurementKernel& kernel) {
  return std::ldexp(f_approx_normalized(e, e_prime, omega, bath, kernel),
                    bath.n_spins);
}

namespace {

double gamma1_oracle(double e, double e_prime, double omega,
                     const SpectralDensity& spectral, const BathSpec& bath,
                     const MeasurementKernel& kernel) {
  require_enumerable(bath.n_spins, "gamma1(oracle)");
  const double v = volume_exact(e_prime, kernel, bath);
  if (!(v > 0.0))
    throw std::domain_error("gamma1: zero-volume bin E' (excluded bin)");
  const double de = kernel.delta_e;
  double acc = 0.0;
  for (int r = 0; r < bath.n_spins; ++r) {
    const double w_r = bath.zeeman[static_cast<std::size_t>(r)];
    const double c_r = bath.couplings[static_cast<std::size_t>(r)];
    // Lines broadened to the indicator bin of |omega|.
    if (kernel.weight(std::abs(omega), w_r) == 0.0) continue;
    const double f = omega >= 0.0 ? f_exact(e, e_prime, r, bath, kernel)
                                  : f_exact(e_prime, e, r, bath, kernel);
    acc += c_r * c_r * f;
  }
  return 2.0 * kPi * spectral.lambda * spectral.lambda / de * acc / v;
}

}  // namespace

double gamma1(double e, double e_prime, double omega,
              const SpectralDensity& spectral, const BathSpec& bath,
              const MeasurementKernel& kernel, RateMode mode) {
  if (mode == RateMode::Oracle)
    return gamma1_oracle(e, e_prime, omega, spectral, bath, kernel);
  const double v = normalized_volume(e_prime, kernel, bath);
  if (!(v > 0.0))
    throw std::domain_error("gamma1: zero-volume bin E' (excluded bin)");
  const double f = f_approx_normalized(e, e_prime, omega, bath, kernel);
  if (f == 0.0) return 0.0;
  return spectral.j_value(omega) * f / v;
}

double kappa(double e, double omega, const SpectralDensity& spectral,
             const BathSpec& bath, const MeasurementKernel& kernel,
             RateMode mode) {
  double acc = 0.0;
  for (std::size_t j = 0; j < kernel.grid.size(); ++j) {
    const double ep = kernel.grid[j];
    if (mode == RateMode::Continuum && kernel.kind == KernelKind::Indicator &&
        std::abs(ep - e - omega) >= kernel.delta_e)
      continue;  // outside the overlap support
    acc += kernel.output_weight(j) *
           gamma1(ep, e, omega, spectral, bath, kernel, mode);
  }
  return acc;
}

double gamma2(double e, double e_pp, double omega,
              const SpectralDensity& spectral, const BathSpec& bath,
              const MeasurementKernel& kernel, RateMode mode) {
  if (kernel.kind != KernelKind::Indicator)
    throw std::invalid_argument("gamma2: indicator identity only");
  if (kernel.bin_index(e) != kernel.bin_index(e_pp)) return 0.0;
  return kappa(e, omega, spectral, bath, kernel, mode);
}

double kappa_p_averaged(const std::vector<double>& p, double omega,
                        const SpectralDensity& spectral, const BathSpec& bath,
                        const MeasurementKernel& kernel) {
  if (p.size() != kernel.grid.size())
    throw std::invalid_argument("kappa_p_averaged: p must live on the kernel grid");
  double norm = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] < 0.0)
      throw std::invalid_argument("kappa_p_averaged: negative probability");
    norm += kernel.output_weight(j) * p[j];
  }
  if (std::abs(norm - 1.0) > 1e-6)
    throw std::invalid_argument("kappa_p_averaged: p is not normalized");
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    acc += kernel.output_weight(j) * p[j] *
           kappa(kernel.grid[j], omega, spectral, bath, kernel);
  }
  return acc;
}

double kappa_beta(double beta, double omega, const SpectralDensity& spectral,
                  const BathSpec& bath, const MeasurementKernel& kernel) {
  // Canonical weights V(E) exp(-beta E), log-domain for stability.
  const auto& grid = kernel.grid;
  std::vector<double> lw(grid.size());
  double max_lw = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double v = normalized_volume(grid[j], kernel, bath);
    lw[j] = (v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity()) -
            beta * grid[j];
    max_lw = std::max(max_lw, lw[j]);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double w = std::exp(lw[j] - max_lw) * kernel.output_weight(j);
    if (w == 0.0) continue;
    den += w;
    num += w * kappa(grid[j], omega, spectral, bath, kernel);
  }
  return num / den;
}

CorrelationEvaluator::CorrelationEvaluator(double e, double e_prime,
                                           const BathSpec& bath,
                                           const MeasurementKernel& kernel,
                                           bool exact_f) {
  const int n = bath.n_spins;
  omega_.resize(static_cast<std::size_t>(n));
  w_pos_.resize(static_cast<std::size_t>(n));
  w_neg_.resize(static_cast<std::size_t>(n));
  double v;
  if (exact_f) {
    require_enumerable(n, "CorrelationEvaluator(exact)");
    v = volume_exact(e_prime, kernel, bath);
  } else {
    v = normalized_volume(e_prime, kernel, bath);
  }
  if (!(v > 0.0))
    throw std::domain_error("CorrelationEvaluator: zero volume at E'");
  for (int r = 0; r < n; ++r) {
    const std::size_t ir = static_cast<std::size_t>(r);
    const double c2 = bath.couplings[ir] * bath.couplings[ir];
    omega_[ir] = bath.zeeman[ir];
    if (exact_f) {
      w_pos_[ir] = c2 * f_exact(e, e_prime, r, bath, kernel) / v;
      w_neg_[ir] = c2 * f_exact(e_prime, e, r, bath, kernel) / v;
    } else {
      w_pos_[ir] =
          c2 * f_approx_normalized(e, e_prime, omega_[ir], bath, kernel) / v;
      w_neg_[ir] =
          c2 * f_approx_normalized(e, e_prime, -omega_[ir], bath, kernel) / v;
    }
  }
}

std::complex<double> CorrelationEvaluator::operator()(double tau) const {
  double re = 0.0, im = 0.0;
  for (std::size_t r = 0; r < omega_.size(); ++r) {
    const double c = std::cos(omega_[r] * tau);
    const double s = std::sin(omega_[r] * tau);
    // w_pos e^{-i w tau} + w_neg e^{+i w tau}
    re += (w_pos_[r] + w_neg_[r]) * c;
    im += (w_neg_[r] - w_pos_[r]) * s;
  }
  return {re, im};
}

std::complex<double> correlation_time_domain(double tau, double e,
                                             double e_prime,
                                             const BathSpec& bath,
                                             const MeasurementKernel& kernel) {
  return CorrelationEvaluator(e, e_prime, bath, kernel)(tau);
}

std::vector<double> gamma1_numeric_ft(const CorrelationEvaluator& corr,
                                      double lambda,
                                      const std::vector<double>& omegas,
                                      double t_max, int n_samples,
                                      int threads) {
  if (n_samples < 2) throw std::invalid_argument("gamma1_numeric_ft: n_samples < 2");
  const double h = 2.0 * t_max / (n_samples - 1);
  std::vector<double> tau(static_cast<std::size_t>(n_samples));
  std::vector<std::complex<double>> c(tau.size());
  for (int j = 0; j < n_samples; ++j)
    tau[static_cast<std::size_t>(j)] = -t_max + h * j;

  auto fill = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) c[j] = corr(tau[j]);
  };
  if (threads > 1) {
    std::vector<std::thread> pool;
    const std::size_t chunk = (c.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t lo = std::min(c.size(), chunk * t);
      const std::size_t hi = std::min(c.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(fill, lo, hi);
    }
    for (auto& th : pool) th.join();
  } else {
    fill(0, c.size());
  }

  std::vector<double> out(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const double w = omegas[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double trap = (j == 0 || j + 1 == c.size()) ? 0.5 : 1.0;
      // Re[e^{i w tau} C(tau)]; the odd imaginary part integrates to zero.
      acc += trap * (std::cos(w * tau[j]) * c[j].real() -
                     std::sin(w * tau[j]) * c[j].imag());
    }
    out[i] = lambda * lambda * h * acc;
  }
  return out;
}

double kms_residual(double e, double omega, const SpectralDensity& spectral,
                    const BathSpec& bath, const MeasurementKernel& kernel) {
  const double k_plus = kappa(e, omega, spectral, bath, kernel);
  if (!(k_plus > 0.0))
    throw std::domain_error("kms_residual: kappa(E;omega) must be > 0");
  const double k_minus = kappa(e, -omega, spectral, bath, kernel);
  const double expected = std::exp(-boltzmann_beta(e, kernel, bath) * omega);
  return std::abs(k_minus / k_plus - expected) / expected;
}

ReducedSpinState reduced_microcanonical_state(int r, double e,
                                              const BathSpec& bath,
                                              const MeasurementKernel& kernel) {
  require_enumerable(bath.n_spins, "reduced_microcanonical_state");
  if (r < 0 || r >= bath.n_spins)
    throw std::out_of_range("reduced_microcanonical_state: spin index");
  const double half = 0.5 * bath.zeeman[static_cast<std::size_t>(r)];
  double v_down = 0.0, v_up = 0.0;  // conditional volumes V(E|n_r)
  for_each_complement_energy(bath, r, [&](double eb) {
    v_down += kernel.weight(e, eb - half);
    v_up += kernel.weight(e, eb + half);
  });
  const double v = v_down + v_up;
  if (!(v > 0.0))
    throw std::domain_error("reduced_microcanonical_state: V(E) = 0");
  ReducedSpinState st;
  st.p_exact[0] = v_down / v;
  st.p_exact[1] = v_up / v;
  const double beta = boltzmann_beta_linear(e, bath);
  const double z = 2.0 * std::cosh(beta * half);
  st.p_canonical[0] = std::exp(beta * half) / z;   // energy -Omega_r/2
  st.p_canonical[1] = std::exp(-beta * half) / z;  // energy +Omega_r/2
  return st;
}

double RateTable::gamma1_at(std::size_t ie, std::size_t je,
                            std::size_t iw) const {
  return gamma1_v[(ie * grid.size() + je) * omegas.size() + iw];
}

double RateTable::kappa_at(std::size_t ie, std::size_t iw) const {
  return kappa_v[ie * omegas.size() + iw];
}

void RateTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("RateTable: cannot open " + path);
  out << "E,E_prime,omega,gamma1,gamma2\n";
  for (std::size_t ie = 0; ie < grid.size(); ++ie)
    for (std::size_t je = 0; je < grid.size(); ++je)
      for (std::size_t iw = 0; iw < omegas.size(); ++iw) {
        const double g1 = gamma1_at(ie, je, iw);
        const double g2 = (ie == je) ? kappa_at(ie, iw) : 0.0;
        if (g1 == 0.0 && g2 == 0.0) continue;  // sparse export
        out << fmt_g17(grid[ie]) << ',' << fmt_g17(grid[je]) << ','
            << fmt_g17(omegas[iw]) << ',' << fmt_g17(g1) << ',' << fmt_g17(g2)
            << '\n';
      }
}

RateTable build_rate_table(const SystemSpec& system, const BathSpec& bath,
                           const MeasurementKernel& kernel,
                           const SpectralDensity& spectral, RateMode mode,
                           int threads) {
  system.validate();
  RateTable t;
  t.grid = kernel.grid;
  t.omegas = {system.omega_s, -system.omega_s};
  const std::size_t n = t.grid.size();
  const std::size_t nw = t.omegas.size();
  t.gamma1_v.assign(n * n * nw, 0.0);
  t.gamma2_v.assign(n * n * nw, 0.0);
  t.kappa_v.assign(n * nw, 0.0);

  auto fill_rows = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ie = lo; ie < hi; ++ie)
      for (std::size_t je = 0; je < n; ++je)
        for (std::size_t iw = 0; iw < nw; ++iw) {
          const double w = t.omegas[iw];
          if (mode == RateMode::Continuum &&
              kernel.kind == KernelKind::Indicator &&
              std::abs(t.grid[ie] - t.grid[je] - w) >= kernel.delta_e)
            continue;
          t.gamma1_v[(ie * n + je) * nw + iw] =
              gamma1(t.grid[ie], t.grid[je], w, spectral, bath, kernel, mode);
        }
  };
  if (threads > 1) {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (int th = 0; th < threads; ++th) {
      const std::size_t lo = std::min(n, chunk * th);
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(fill_rows, lo, hi);
    }
    for (auto& th : pool) th.join();
  } else {
    fill_rows(0, n);
  }

  for (std::size_t je = 0; je < n; ++je)
    for (std::size_t iw = 0; iw < nw; ++iw) {
      double acc = 0.0;
      for (std::size_t ie = 0; ie < n; ++ie)
        acc += kernel.output_weight(ie) * t.gamma1_v[(ie * n + je) * nw + iw];
      t.kappa_v[je * nw + iw] = acc;
      t.gamma2_v[(je * n + je) * nw + iw] = acc;
    }
  return t;
}

}  // namespace finitebath
