#pragma once

// Test-only oracles, independent of the library's evaluation paths:
// Gauss-Legendre quadrature for the volume / correlation integrals and a
// brute-force pair enumeration for f(E,E';Omega).

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "finitebath/bath.hpp"
#include "finitebath/kernel.hpp"

namespace testor {

struct GaussLegendre {
  std::vector<double> x, w;  // nodes and weights on [-1, 1]
  explicit GaussLegendre(int n) : x(n), w(n) {
    const double eps = 1e-15;
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0, p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) < eps) break;
      }
      x[i] = -z;
      x[n - 1 - i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
      w[n - 1 - i] = w[i];
    }
  }
  double integrate(const std::function<double(double)>& f, double a,
                   double b) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      acc += w[i] * f(mid + half * x[i]);
    return acc * half;
  }
  // Composite rule over n_panels equal panels.
  double integrate(const std::function<double(double)>& f, double a, double b,
                   int n_panels) const {
    double acc = 0.0;
    const double h = (b - a) / n_panels;
    for (int p = 0; p < n_panels; ++p)
      acc += integrate(f, a + p * h, a + (p + 1) * h);
    return acc;
  }
};

// Quadrature of V(E) = int de W(E|e) g(e) with g the Gaussian DOS.
inline double volume_by_quadrature(double e, const finitebath::MeasurementKernel& k,
                                   const finitebath::BathSpec& bath) {
  const double s = bath.sigma_n();
  const double norm = std::ldexp(1.0, bath.n_spins) / (std::sqrt(2.0 * M_PI) * s);
  auto g = [&](double x) { return norm * std::exp(-0.5 * x * x / (s * s)); };
  GaussLegendre gl(32);
  if (k.kind == finitebath::KernelKind::Indicator) {
    return gl.integrate([&](double x) { return g(x); }, e - 0.5 * k.delta_e,
                        e + 0.5 * k.delta_e, 4);
  }
  return gl.integrate([&](double x) { return k.weight(e, x) * g(x); },
                      e - 10.0 * (s + k.delta_e), e + 10.0 * (s + k.delta_e), 64);
}

// Quadrature of f(E,E';Omega) = int de g(e)/2 W(E|e+O/2) W(E'|e-O/2).
inline double f_by_quadrature(double e, double ep, double omega,
                              const finitebath::MeasurementKernel& k,
                              const finitebath::BathSpec& bath) {
  const double s = bath.sigma_n();
  const double norm = std::ldexp(1.0, bath.n_spins - 1) / (std::sqrt(2.0 * M_PI) * s);
  auto g2 = [&](double x) { return norm * std::exp(-0.5 * x * x / (s * s)); };
  GaussLegendre gl(32);
  if (k.kind == finitebath::KernelKind::Indicator) {
    // Integrand is g/2 on the overlap of the two shifted windows.
    const double lo = std::max(e - 0.5 * omega, ep + 0.5 * omega) - 0.5 * k.delta_e;
    const double hi = std::min(e - 0.5 * omega, ep + 0.5 * omega) + 0.5 * k.delta_e;
    if (hi <= lo) return 0.0;
    return gl.integrate(g2, lo, hi, 4);
  }
  return gl.integrate(
      [&](double x) {
        return g2(x) * k.weight(e, x + 0.5 * omega) * k.weight(ep, x - 0.5 * omega);
      },
      -10.0 * (s + k.delta_e) + std::min(e, ep),
      10.0 * (s + k.delta_e) + std::max(e, ep), 96);
}

// Brute-force f(E,E';+Omega_r): loop over all pairs (i, j) of full bath
// configurations connected by a flip of spin r with the spin up in i.
inline double f_by_pair_enumeration(double e, double ep, int r,
                                    const finitebath::BathSpec& bath,
                                    const finitebath::MeasurementKernel& k) {
  const int n = bath.n_spins;
  const std::uint64_t total = std::uint64_t{1} << n;
  double acc = 0.0;
  for (std::uint64_t i = 0; i < total; ++i) {
    if (!((i >> r) & 1u)) continue;  // spin r must be up in i
    const std::uint64_t j = i ^ (std::uint64_t{1} << r);
    double ei = 0.0, ej = 0.0;
    for (int b = 0; b < n; ++b) {
      const double half = 0.5 * bath.zeeman[static_cast<std::size_t>(b)];
      ei += ((i >> b) & 1u) ? half : -half;
      ej += ((j >> b) & 1u) ? half : -half;
    }
    acc += k.weight(e, ei) * k.weight(ep, ej);
  }
  return acc;
}

}  // namespace testor
