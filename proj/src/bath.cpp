#include "finitebath/bath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "finitebath/numerics.hpp"

namespace finitebath {

namespace {
constexpr int kEnumerationGuard = 24;

void require_enumerable(int n, const char* who) {
  if (n > kEnumerationGuard)
    throw std::invalid_argument(std::string(who) +
                                ": exhaustive enumeration guarded to N <= 24; "
                                "use the density-of-states model instead");
}
}  // namespace

double BathSpec::sigma_n_sq() const {
  double s = 0.0;
  for (double w : zeeman) s += 0.25 * w * w;
  return s;
}

double BathSpec::sigma_n() const { return std::sqrt(sigma_n_sq()); }

double BathSpec::max_total_energy() const {
  double s = 0.0;
  for (double w : zeeman) s += 0.5 * w;
  return s;
}

void BathSpec::validate() const {
  if (n_spins < 1) throw std::invalid_argument("BathSpec: n_spins must be >= 1");
  if (zeeman.size() != static_cast<std::size_t>(n_spins) ||
      couplings.size() != static_cast<std::size_t>(n_spins))
    throw std::invalid_argument("BathSpec: zeeman/couplings length mismatch");
  for (double w : zeeman)
    if (!(w > 0.0)) throw std::invalid_argument("BathSpec: all Omega_r must be > 0");
  if (!(sigma_n_sq() > 0.0))
    throw std::invalid_argument("BathSpec: sigma_N^2 must be > 0");
}

nlohmann::json BathSpec::to_json() const {
  return nlohmann::json{{"n_spins", n_spins},
                        {"zeeman", zeeman},
                        {"couplings", couplings},
                        {"seed", seed},
                        {"zeeman_dist",
                         {{"mean", zeeman_dist.mean}, {"std", zeeman_dist.std}}}};
}

BathSpec BathSpec::from_json(const nlohmann::json& j) {
  BathSpec b;
  b.n_spins = j.at("n_spins").get<int>();
  b.zeeman = j.at("zeeman").get<std::vector<double>>();
  b.couplings = j.at("couplings").get<std::vector<double>>();
  b.seed = j.at("seed").get<std::uint64_t>();
  b.zeeman_dist.mean = j.at("zeeman_dist").at("mean").get<double>();
  b.zeeman_dist.std = j.at("zeeman_dist").at("std").get<double>();
  b.validate();
  return b;
}

BathSpec sample_bath(int n_spins, ZeemanDistribution dist, double coupling,
                     std::uint64_t seed) {
  if (n_spins < 1) throw std::invalid_argument("sample_bath: n_spins must be >= 1");
  if (dist.std < 0.0) throw std::invalid_argument("sample_bath: std must be >= 0");
  if (!(dist.mean > 0.0)) throw std::invalid_argument("sample_bath: mean must be > 0");
  if (dist.std > 0.0) {
    // Positive splittings come from rejection on Omega <= 0; refuse
    // distributions that would discard more than 1% of the mass.
    const double discarded = normal_cdf(-dist.mean / dist.std);
    if (discarded > 0.01)
      throw std::invalid_argument(
          "sample_bath: P(Omega <= 0) exceeds 1%; the Zeeman distribution is unphysical");
  }
  BathSpec b;
  b.n_spins = n_spins;
  b.seed = seed;
  b.zeeman_dist = dist;
  b.zeeman.reserve(n_spins);
  b.couplings.assign(n_spins, coupling);
  NormalSampler normal(seed);
  while (b.zeeman.size() < static_cast<std::size_t>(n_spins)) {
    const double w = dist.mean + dist.std * normal();
    if (w > 0.0) b.zeeman.push_back(w);
  }
  b.validate();
  return b;
}

std::vector<double> enumerate_spectrum(const BathSpec& bath) {
  require_enumerable(bath.n_spins, "enumerate_spectrum");
  std::vector<double> e{0.0};
  e.reserve(std::size_t{1} << bath.n_spins);
  for (int r = 0; r < bath.n_spins; ++r) {
    const double half = 0.5 * bath.zeeman[static_cast<std::size_t>(r)];
    const std::size_t sz = e.size();
    for (std::size_t i = 0; i < sz; ++i) {
      const double base = e[i];
      e[i] = base - half;
      e.push_back(base + half);
    }
  }
  std::sort(e.begin(), e.end());
  return e;
}

DosModel dos_model(const BathSpec& bath) {
  DosModel d;
  d.sigma_n = bath.sigma_n();
  d.log_total_states = bath.n_spins * std::log(2.0);
  return d;
}

double DosModel::normalized_density(double e) const {
  return normal_pdf(e, sigma_n);
}

double DosModel::density(double e) const {
  return std::exp(log_total_states) * normalized_density(e);
}

double normalized_volume(double e, const MeasurementKernel& kernel,
                         const BathSpec& bath) {
  const double s = bath.sigma_n();
  if (kernel.kind == KernelKind::Indicator)
    return gaussian_interval_mass(e - 0.5 * kernel.delta_e,
                                  e + 0.5 * kernel.delta_e, s);
  const double sg = std::sqrt(s * s + kernel.delta_e * kernel.delta_e);
  return normal_pdf(e, sg);
}

double volume(double e, const MeasurementKernel& kernel, const BathSpec& bath) {
  return std::ldexp(normalized_volume(e, kernel, bath), bath.n_spins);
}

double log_volume(double e, const MeasurementKernel& kernel,
                  const BathSpec& bath) {
  const double v = normalized_volume(e, kernel, bath);
  if (!(v > 0.0))
    throw std::domain_error("log_volume: V(E) vanished; entropy undefined");
  return bath.n_spins * std::log(2.0) + std::log(v);
}

double volume_exact(double e, const MeasurementKernel& kernel,
                    const BathSpec& bath) {
  require_enumerable(bath.n_spins, "volume_exact");
  if (kernel.kind != KernelKind::Indicator)
    throw std::invalid_argument("volume_exact: indicator kernel only");
  const double lo = e - 0.5 * kernel.delta_e;
  const double hi = e + 0.5 * kernel.delta_e;
  const std::uint64_t total = std::uint64_t{1} << bath.n_spins;
  // Gray-code walk: one spin flip per step keeps the energy update O(1).
  double energy = -bath.max_total_energy();
  std::uint64_t gray_prev = 0;
  std::uint64_t count = 0;
  if (energy >= lo && energy < hi) ++count;
  for (std::uint64_t i = 1; i < total; ++i) {
    const std::uint64_t gray = i ^ (i >> 1);
    const std::uint64_t diff = gray ^ gray_prev;
    const int r = std::countr_zero(diff);
    const double w = bath.zeeman[static_cast<std::size_t>(r)];
    energy += (gray & diff) ? w : -w;
    gray_prev = gray;
    if (energy >= lo && energy < hi) ++count;
  }
  return static_cast<double>(count);
}

double boltzmann_entropy(double e, const MeasurementKernel& kernel,
                         const BathSpec& bath) {
  return log_volume(e, kernel, bath) + std::log(kernel.delta_e);
}

double boltzmann_beta(double e, const MeasurementKernel& kernel,
                      const BathSpec& bath) {
  if (kernel.kind == KernelKind::Gaussian) {
    const double s2 = bath.sigma_n_sq() + kernel.delta_e * kernel.delta_e;
    return -e / s2;
  }
  const double h = kernel.delta_e;
  return (log_volume(e + h, kernel, bath) - log_volume(e - h, kernel, bath)) /
         (2.0 * h);
}

double boltzmann_beta_linear(double e, const BathSpec& bath) {
  return -e / bath.sigma_n_sq();
}

double microcanonical_heat_capacity(double e, const MeasurementKernel& kernel,
                                    const BathSpec& bath) {
  const double h = kernel.delta_e;
  const double beta = boltzmann_beta(e, kernel, bath);
  const double dbeta = (boltzmann_beta(e + h, kernel, bath) -
                        boltzmann_beta(e - h, kernel, bath)) /
                       (2.0 * h);
  if (dbeta == 0.0)
    throw std::domain_error("microcanonical_heat_capacity: flat beta(E)");
  return -beta * beta / dbeta;
}

double canonical_energy(double beta, const BathSpec& bath) {
  double u = 0.0;
  for (double w : bath.zeeman) u -= 0.5 * w * std::tanh(0.5 * beta * w);
  return u;
}

double log_partition(double beta, const BathSpec& bath) {
  double lz = 0.0;
  for (double w : bath.zeeman) {
    // log(2 cosh x) without overflow for large |x|.
    const double x = std::abs(0.5 * beta * w);
    lz += x + std::log1p(std::exp(-2.0 * x));
  }
  return lz;
}

double canonical_energy_derivative(double beta, const BathSpec& bath) {
  double d = 0.0;
  for (double w : bath.zeeman) {
    const double c = std::cosh(0.5 * beta * w);
    const double sech = 1.0 / c;
    d -= 0.25 * w * w * sech * sech;
  }
  return d;
}

double heat_capacity(double beta, const BathSpec& bath) {
  return -beta * beta * canonical_energy_derivative(beta, bath);
}

CanonicalEnsemble canonical_ensemble(double beta, const BathSpec& bath) {
  return CanonicalEnsemble{beta, canonical_energy(beta, bath),
                           log_partition(beta, bath),
                           heat_capacity(beta, bath)};
}

double canonical_energy_grid(double beta, const MeasurementKernel& kernel,
                             const BathSpec& bath) {
  // Weights V(E) exp(-beta E) handled in log space.
  double max_lw = -std::numeric_limits<double>::infinity();
  std::vector<double> lw(kernel.grid.size());
  for (std::size_t i = 0; i < kernel.grid.size(); ++i) {
    const double e = kernel.grid[i];
    const double v = normalized_volume(e, kernel, bath);
    lw[i] = (v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity()) -
            beta * e;
    max_lw = std::max(max_lw, lw[i]);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < kernel.grid.size(); ++i) {
    const double w = std::exp(lw[i] - max_lw) * kernel.output_weight(i);
    num += kernel.grid[i] * w;
    den += w;
  }
  return num / den;
}

double solve_beta_star(double target_energy, const BathSpec& bath) {
  const double e_max = bath.max_total_energy();
  if (!(std::abs(target_energy) < e_max))
    throw std::domain_error(
        "solve_beta_star: target energy outside the attainable canonical band");
  if (target_energy == 0.0) return 0.0;
  const double f_tol = 1e-10 * bath.sigma_n();
  auto f = [&](double beta) { return canonical_energy(beta, bath) - target_energy; };
  // <E>_beta is strictly decreasing; expand a bracket around the linear
  // guess beta ~ -U / sigma_N^2.
  double guess = -target_energy / bath.sigma_n_sq();
  double half_width = std::max(1.0, std::abs(guess));
  double lo = guess - half_width, hi = guess + half_width;
  for (int i = 0; i < 200 && f(lo) < 0.0; ++i) lo -= half_width;
  for (int i = 0; i < 200 && f(hi) > 0.0; ++i) hi += half_width;
  // f is decreasing: f(lo) >= 0 >= f(hi). Flip the sign so the generic
  // solver sees an increasing function.
  auto g = [&](double beta) { return -f(beta); };
  return solve_bracketed(g, lo, hi, f_tol);
}

LindebergReport lindeberg_check(const BathSpec& bath) {
  LindebergReport rep;
  double wmax = 0.0;
  for (double w : bath.zeeman) wmax = std::max(wmax, w);
  rep.ratio = 0.5 * wmax / bath.sigma_n();
  if (bath.n_spins <= kEnumerationGuard) {
    auto spectrum = enumerate_spectrum(bath);
    rep.ks_statistic = ks_distance_to_normal(std::move(spectrum), bath.sigma_n());
  }
  return rep;
}

}  // namespace finitebath
