#pragma once

// Central spin-s system: H_S = omega_s S^z with equally spaced levels
// eps_k = (k - s) omega_s, coupled through S = 2 S^x. The Bohr
// decomposition of S has exactly the two frequencies +/- omega_s.

#include <utility>
#include <vector>

namespace finitebath {

struct SystemSpec {
  double spin = 0.5;     // s in {1/2, 1, 3/2, ...}
  double omega_s = 1.0;  // level splitting, delta_e units

  int dimension() const;            // 2s + 1
  double level(int k) const;        // eps_k = (k - s) omega_s
  void validate() const;
};

// |<k|S|q>|^2 for S = 2 S^x: (k+1)(2s-k) for q = k+1, k(2s-k+1) for
// q = k-1, zero otherwise.
double coupling_element(int k, int q, const SystemSpec& spec);

struct BohrGroup {
  double omega = 0.0;                            // eps_q - eps_k
  std::vector<std::pair<int, int>> transitions;  // (k, q) pairs
};
// Two groups, {+omega_s, -omega_s}, each with 2s transitions.
std::vector<BohrGroup> bohr_frequencies(const SystemSpec& spec);

}  // namespace finitebath
