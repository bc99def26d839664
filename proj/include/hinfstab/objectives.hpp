#pragma once

#include "hinfstab/gradients.hpp"
#include "hinfstab/lti.hpp"

namespace hinfstab {

enum class Phase { Stabilize, Performance };

struct ObjectiveSpec {
  GeneralizedPlant plant;
  Index order = 0;
  double epsilon = 1e-3;
  Phase phase = Phase::Performance;
  GradOptions grad_options{};

  /// Throws Error unless epsilon is in (0, 1] and order >= 0.
  void validate() const;
};

/// max(alpha(A_CL), epsilon * alpha(A_K)) and the gradient of the achieving
/// term. alpha(A_K) is -inf for a static controller. An ill-posed loop
/// evaluates to +inf.
GradEval eval_stabilize(const ObjectiveSpec& spec, const ControllerParams& K);

/// +inf when max(alpha(A_CL), alpha(A_K)) >= 0 (empty gradient), otherwise
/// max(||T_zw||_inf, epsilon * ||K||_inf) with the gradient of the achieving
/// term. On an exact tie the first term wins.
GradEval eval_performance(const ObjectiveSpec& spec, const ControllerParams& K);

/// Dispatches on spec.phase.
GradEval evaluate(const ObjectiveSpec& spec, const ControllerParams& K);

}  // namespace hinfstab
