#pragma once

#include <vector>

#include "hinfstab/lti.hpp"

namespace hinfstab {

inline constexpr double kDefaultNormRtol = 1e-7;

struct NormResult {
  double value = 0.0;
  // Frequency (rad/time) where the peak is attained. +inf when the supremum
  // is only approached as omega -> infinity.
  double peak_omega = 0.0;
  bool attained_at_infinity = false;
};

/// Largest singular value of the frequency response with its singular
/// vectors. The phase of v is fixed so that its first nonzero entry is real
/// and positive.
struct SingularTriple {
  double value = 0.0;
  CVector u;
  CVector v;
};

/// H-infinity norm of a stable realization. The returned value is attained
/// at `peak_omega` and lies within `rtol` (relative) of the supremum.
/// Throws UnstableSystem if A is not Hurwitz.
NormResult hinf_norm(const StateSpaceSystem& sys, double rtol = kDefaultNormRtol);

SingularTriple sigma_max_at(const StateSpaceSystem& sys, double omega);

/// All singular values of the frequency response, descending.
Vector singular_values_at(const StateSpaceSystem& sys, double omega);

/// Hamiltonian whose imaginary-axis eigenvalues i*omega are exactly the
/// frequencies where gamma is a singular value of G(i*omega).
/// Requires gamma > sigma_max(D).
Matrix level_set_hamiltonian(const StateSpaceSystem& sys, double gamma);

/// Nonnegative frequencies where gamma is (to 1e-8 relative) a singular
/// value of G(i*omega), located through the Hamiltonian spectrum. Empty iff
/// gamma lies above the H-infinity norm.
std::vector<double> level_crossings(const StateSpaceSystem& sys, double gamma);

}  // namespace hinfstab
