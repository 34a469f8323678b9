#include "finitebath/numerics.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace finitebath {

double gaussian_interval_mass(double a, double b, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_interval_mass: sigma must be > 0");
  if (b <= a) return 0.0;
  const double ra = a / (sigma * kSqrt2);
  const double rb = b / (sigma * kSqrt2);
  if (ra >= 0.0) return 0.5 * (std::erfc(ra) - std::erfc(rb));
  if (rb <= 0.0) return 0.5 * (std::erfc(-rb) - std::erfc(-ra));
  return 0.5 * (std::erf(rb) - std::erf(ra));
}

double solve_bracketed(const std::function<double(double)>& f, double lo,
                       double hi, double f_tol, int max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0)
    throw std::invalid_argument("solve_bracketed: endpoints do not bracket a root");
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    // Secant proposal, clipped to the bracket; bisection fallback.
    double xs = hi - fhi * (hi - lo) / (fhi - flo);
    if (!(xs > lo && xs < hi)) xs = 0.5 * (lo + hi);
    x = xs;
    const double fx = f(x);
    if (std::abs(fx) <= f_tol) return x;
    if (flo * fx < 0.0) {
      hi = x;
      fhi = fx;
    } else {
      lo = x;
      flo = fx;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       (std::abs(lo) + std::abs(hi) + 1.0))
      return 0.5 * (lo + hi);
  }
  return x;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = 35.0 / 384 - 5179.0 / 57600,
                 kE3 = 500.0 / 1113 - 7571.0 / 16695,
                 kE4 = 125.0 / 192 - 393.0 / 640,
                 kE5 = -2187.0 / 6784 + 92097.0 / 339200,
                 kE6 = 11.0 / 84 - 187.0 / 2100, kE7 = -1.0 / 40;
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;

}  // namespace

void integrate_dopri5(
    const std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>& rhs,
    double t0, double t1, Eigen::VectorXd& y, const OdeOptions& opt) {
  if (t1 == t0) return;
  if (t1 < t0) throw std::invalid_argument("integrate_dopri5: t1 < t0");
  const auto n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
      ynew(n), err(n);
  double t = t0;
  const double span = t1 - t0;
  const double h_max = opt.h_max > 0.0 ? opt.h_max : span;
  rhs(t, y, k1);
  double h = opt.h_init > 0.0 ? opt.h_init : std::min(h_max, span / 100.0);
  h = std::min(h, span);
  int rejected_in_row = 0;
  for (int step = 0; step < 10'000'000; ++step) {
    if (t >= t1) return;
    h = std::min(h, t1 - t);
    ytmp = y + h * kA21 * k1;
    rhs(t + kC2 * h, ytmp, k2);
    ytmp = y + h * (kA31 * k1 + kA32 * k2);
    rhs(t + kC3 * h, ytmp, k3);
    ytmp = y + h * (kA41 * k1 + kA42 * k2 + kA43 * k3);
    rhs(t + kC4 * h, ytmp, k4);
    ytmp = y + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4);
    rhs(t + kC5 * h, ytmp, k5);
    ytmp = y + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
    rhs(t + h, ytmp, k6);
    ynew = y + h * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
    rhs(t + h, ynew, k7);
    err = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale =
          opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double e = err[i] / scale;
      err_norm += e * e;
    }
    err_norm = std::sqrt(err_norm / static_cast<double>(n));

    if (err_norm <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);  // FSAL
      rejected_in_row = 0;
      const double factor =
          err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
      h = std::min(h * std::clamp(factor, 0.2, 5.0), h_max);
    } else {
      ++rejected_in_row;
      if (rejected_in_row > 60)
        throw std::runtime_error("integrate_dopri5: step size underflow");
      const double factor = 0.9 * std::pow(err_norm, -0.2);
      h *= std::clamp(factor, 0.1, 0.9);
      if (!(h > 1e-14 * span))
        throw std::runtime_error("integrate_dopri5: step size underflow");
    }
  }
  throw std::runtime_error("integrate_dopri5: step budget exhausted");
}

double ks_distance_to_normal(std::vector<double> samples, double sigma) {
  if (samples.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = normal_cdf(samples[i] / sigma);
    const double hi = (static_cast<double>(i) + 1.0) / n - cdf;
    const double lo = cdf - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

double NormalSampler::uniform01() {
  // 53-bit mantissa in (0, 1].
  const std::uint64_t u = engine_();
  return (static_cast<double>(u >> 11) + 1.0) * 0x1.0p-53;
}

double NormalSampler::operator()() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * kPi * u2;
  spare_ = r * std::sin(phi);
  have_spare_ = true;
  return r * std::cos(phi);
}

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace finitebath
