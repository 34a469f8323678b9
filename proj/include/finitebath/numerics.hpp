#pragma once

// Shared numerical helpers: stable Gaussian tail masses, a bracketed root
// solver, an adaptive Dormand-Prince 5(4) integrator and small statistics
// utilities. Everything works in the natural units of the library
// (energies in delta_e, k_B = hbar = 1).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace finitebath {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;

inline double normal_pdf(double x, double sigma) {
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * kPi) * sigma);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// P[a <= X < b] for X ~ N(0, sigma). Uses erfc on the side away from the
// bulk so the result keeps full relative accuracy deep in the tails.
double gaussian_interval_mass(double a, double b, double sigma);

// Root of a strictly monotone function on [lo, hi] with f(lo), f(hi) of
// opposite sign. Safeguarded secant/bisection; stops when |f| <= f_tol.
double solve_bracketed(const std::function<double(double)>& f, double lo,
                       double hi, double f_tol, int max_iter = 200);

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_init = 0.0;  // 0 -> automatic
  double h_max = 0.0;   // 0 -> span
};

// Adaptive Dormand-Prince 5(4). Integrates y' = rhs(t, y) from t0 to t1 in
// place. rhs writes the derivative into its third argument, sized like y.
void integrate_dopri5(
    const std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>& rhs,
    double t0, double t1, Eigen::VectorXd& y, const OdeOptions& opt = {});

// Kolmogorov-Smirnov distance between the empirical CDF of samples and
// N(0, sigma). Samples need not be sorted.
double ks_distance_to_normal(std::vector<double> samples, double sigma);

// Deterministic standard normal: Box-Muller over mt19937_64. The engine's
// output sequence is fixed by the standard, so realizations are
// reproducible for a given seed.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
  double operator()();

 private:
  double uniform01();
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// "%.17g" formatting; round-trips doubles exactly and keeps CSV output
// bit-identical across runs.
std::string fmt_g17(double x);

}  // namespace finitebath
