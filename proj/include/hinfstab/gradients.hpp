#pragma once

#include <string>

#include "hinfstab/hinf_norm.hpp"
#include "hinfstab/lti.hpp"

namespace hinfstab {

// Spectral abscissa of A_CL or of A_K.
enum class SpectralTarget { ClosedLoop, Controller };

// H-infinity norm of T_zw or of the controller itself.
enum class NormTarget { ClosedLoop, Controller };

/// What produced a gradient: the active eigenvalue for spectral abscissa
/// objectives, or the peak frequency and singular value for norms.
struct ActiveCertificate {
  Complex eigenvalue{0.0, 0.0};
  double peak_omega = 0.0;
  bool attained_at_infinity = false;
  double sigma = 0.0;
  // False at a detected nonsmooth point; the gradient is then one element of
  // the Clarke subdifferential (or a surrogate for it).
  bool smooth = true;
  std::string note;
};

struct GradEval {
  double value = 0.0;
  Vector grad;
  ActiveCertificate certificate;
};

struct GradOptions {
  double tol_cluster = 1e-8;
  double norm_rtol = kDefaultNormRtol;
  // Throw DefectiveEigenvalue / MultiplePeaks instead of returning a
  // subgradient surrogate.
  bool strict = false;
  // Look for a second peak of the norm within the norm tolerance, and
  // differentiate at the lowest-frequency one.
  bool resolve_multiple_peaks = true;
};

/// Gradient of alpha(A_CL) or alpha(A_K) with respect to K.theta(). For
/// n_K = 0 and the Controller target the value is -inf and the gradient zero.
GradEval grad_spectral_abscissa(const GeneralizedPlant& plant, const ControllerParams& K,
                                SpectralTarget which, const GradOptions& opts = {});

/// Gradient of ||T_zw||_inf or ||K||_inf with respect to K.theta().
/// Throws UnstableSystem when the differentiated system is not stable.
GradEval grad_hinf(const GeneralizedPlant& plant, const ControllerParams& K, NormTarget which,
                   const GradOptions& opts = {});

/// Perturbation factors that express the controller itself as a function of
/// its stacked matrix (identity embedding), in the same form as interconnect().
Interconnection controller_self_map(const ControllerParams& K);

}  // namespace hinfstab
