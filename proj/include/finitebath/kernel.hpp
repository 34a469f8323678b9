#pragma once

// Imperfect energy measurement layer: weighting functions W(E|E_i) with
// either sharp (indicator) binning into non-overlapping windows of width
// delta_e, or Gaussian blur of the same scale. Indicator bins are
// half-open, [E - delta_e/2, E + delta_e/2), so the windows tile the line
// exactly and the weights sum to one for every input energy.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace finitebath {

enum class KernelKind { Indicator, Gaussian };

struct MeasurementKernel {
  KernelKind kind = KernelKind::Indicator;
  double delta_e = 1.0;
  // Indicator: bin centers m * delta_e. Gaussian: quadrature grid with
  // spacing delta_e / 8; all integrals over outputs use the trapezoid rule
  // on this grid.
  std::vector<double> grid;

  // Grid wide enough to hold energies up to |E| <= e_max.
  static MeasurementKernel indicator(double delta_e, double e_max);
  static MeasurementKernel gaussian(double delta_e, double e_max);

  // W(E|E_i)
  double weight(double e_out, double e_in) const;

  // Indicator helpers: half-open bin membership.
  long bin_index(double e_in) const;   // m with e_in in bin m*delta_e
  double bin_center(double e_in) const;

  // Trapezoid weight for output integrals (Gaussian kernel); indicator
  // sums carry weight 1.
  double output_weight(std::size_t grid_idx) const;

  // sup over probes of |int dE E W(E|E_i) - E_i|. Defaults to a dense
  // probe of one bin period (where the sup is attained by translation
  // covariance).
  double bias() const;
  double bias(const std::vector<double>& probes) const;

  void validate() const;
};

}  // namespace finitebath
