#include "finitebath/system.hpp"

#include <cmath>
#include <stdexcept>

namespace finitebath {

int SystemSpec::dimension() const {
  return static_cast<int>(std::lround(2.0 * spin)) + 1;
}

double SystemSpec::level(int k) const { return (k - spin) * omega_s; }

void SystemSpec::validate() const {
  const double two_s = 2.0 * spin;
  if (std::abs(two_s - std::lround(two_s)) > 1e-12 || std::lround(two_s) < 1)
    throw std::invalid_argument("SystemSpec: spin must be in {1/2, 1, 3/2, ...}");
  if (!(omega_s > 0.0))
    throw std::invalid_argument("SystemSpec: omega_s must be > 0 (degenerate levels rejected)");
}

double coupling_element(int k, int q, const SystemSpec& spec) {
  const int d = spec.dimension();
  if (k < 0 || q < 0 || k >= d || q >= d)
    throw std::out_of_range("coupling_element: level index out of range");
  const double two_s = 2.0 * spec.spin;
  if (q == k + 1) return (k + 1) * (two_s - k);
  if (q == k - 1) return k * (two_s - k + 1);
  return 0.0;
}

std::vector<BohrGroup> bohr_frequencies(const SystemSpec& spec) {
  spec.validate();
  BohrGroup up, down;
  up.omega = spec.omega_s;     // eps_q - eps_k with q = k + 1
  down.omega = -spec.omega_s;  // q = k - 1
  const int d = spec.dimension();
  for (int k = 0; k + 1 < d; ++k) up.transitions.emplace_back(k, k + 1);
  for (int k = 1; k < d; ++k) down.transitions.emplace_back(k, k - 1);
  return {up, down};
}

}  // namespace finitebath
