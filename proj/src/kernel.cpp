#include "finitebath/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "finitebath/numerics.hpp"

namespace finitebath {

void MeasurementKernel::validate() const {
  if (!(delta_e > 0.0))
    throw std::invalid_argument("MeasurementKernel: delta_e must be > 0");
  if (grid.size() < 2)
    throw std::invalid_argument("MeasurementKernel: grid too small");
}

MeasurementKernel MeasurementKernel::indicator(double delta_e, double e_max) {
  if (!(delta_e > 0.0))
    throw std::invalid_argument("MeasurementKernel: delta_e must be > 0");
  MeasurementKernel k;
  k.kind = KernelKind::Indicator;
  k.delta_e = delta_e;
  const long m = static_cast<long>(std::ceil(e_max / delta_e));
  k.grid.reserve(static_cast<std::size_t>(2 * m + 1));
  for (long i = -m; i <= m; ++i) k.grid.push_back(static_cast<double>(i) * delta_e);
  return k;
}

MeasurementKernel MeasurementKernel::gaussian(double delta_e, double e_max) {
  if (!(delta_e > 0.0))
    throw std::invalid_argument("MeasurementKernel: delta_e must be > 0");
  MeasurementKernel k;
  k.kind = KernelKind::Gaussian;
  k.delta_e = delta_e;
  const double h = delta_e / 8.0;
  const long m = static_cast<long>(std::ceil((e_max + 8.0 * delta_e) / h));
  k.grid.reserve(static_cast<std::size_t>(2 * m + 1));
  for (long i = -m; i <= m; ++i) k.grid.push_back(static_cast<double>(i) * h);
  return k;
}

long MeasurementKernel::bin_index(double e_in) const {
  return static_cast<long>(std::floor(e_in / delta_e + 0.5));
}

double MeasurementKernel::bin_center(double e_in) const {
  return static_cast<double>(bin_index(e_in)) * delta_e;
}

double MeasurementKernel::weight(double e_out, double e_in) const {
  if (kind == KernelKind::Indicator) {
    // Half-open window [E - dE/2, E + dE/2).
    const double d = e_in - e_out;
    return (d >= -0.5 * delta_e && d < 0.5 * delta_e) ? 1.0 : 0.0;
  }
  return normal_pdf(e_out - e_in, delta_e);
}

double MeasurementKernel::output_weight(std::size_t grid_idx) const {
  if (kind == KernelKind::Indicator) return 1.0;
  const double h = grid[1] - grid[0];
  return (grid_idx == 0 || grid_idx + 1 == grid.size()) ? 0.5 * h : h;
}

double MeasurementKernel::bias(const std::vector<double>& probes) const {
  double sup = 0.0;
  for (double ei : probes) {
    double mean;
    if (kind == KernelKind::Indicator) {
      mean = bin_center(ei);
    } else {
      double acc = 0.0;
      for (std::size_t j = 0; j < grid.size(); ++j)
        acc += output_weight(j) * grid[j] * weight(grid[j], ei);
      mean = acc;
    }
    sup = std::max(sup, std::abs(mean - ei));
  }
  return sup;
}

double MeasurementKernel::bias() const {
  // One bin period suffices: W depends on E - E_i only. The endpoint
  // -dE/2 is where the indicator bias attains dE/2.
  std::vector<double> probes;
  const int n = 1000;
  probes.reserve(n);
  for (int j = 0; j < n; ++j)
    probes.push_back((-0.5 + static_cast<double>(j) / n) * delta_e);
  return bias(probes);
}

}  // namespace finitebath
