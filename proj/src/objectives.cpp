#include "hinfstab/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace hinfstab {

namespace {

bool tied(double first, double second) {
  return std::abs(first - second) <= 1e-12 * std::max(1.0, std::abs(std::max(first, second)));
}

GradEval infinite(const char* why) {
  GradEval out;
  out.value = kInf;
  out.grad = Vector(0);
  out.certificate.smooth = false;
  out.certificate.note = why;
  return out;
}

GradEval scaled(GradEval g, double factor) {
  g.value *= factor;
  g.grad *= factor;
  return g;
}

// Max of two evaluated terms; the first wins ties.
GradEval pick_max(GradEval first, GradEval second) {
  if (first.value >= second.value || tied(first.value, second.value)) {
    first.value = std::max(first.value, second.value);
    return first;
  }
  return second;
}

}  // namespace

void ObjectiveSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error("objective epsilon must lie in (0, 1], got " + std::to_string(epsilon));
  }
  if (order < 0) throw Error("controller order must be nonnegative");
}

GradEval eval_stabilize(const ObjectiveSpec& spec, const ControllerParams& K) {
  if (spec.phase != Phase::Stabilize) throw Error("eval_stabilize needs a Stabilize spec");
  GradEval closed;
  try {
    closed = grad_spectral_abscissa(spec.plant, K, SpectralTarget::ClosedLoop, spec.grad_options);
  } catch (const WellPosednessError&) {
    return infinite("ill-posed interconnection");
  }
  if (K.order() == 0) return closed;
  GradEval own = grad_spectral_abscissa(spec.plant, K, SpectralTarget::Controller,
                                        spec.grad_options);
  return pick_max(std::move(closed), scaled(std::move(own), spec.epsilon));
}

GradEval eval_performance(const ObjectiveSpec& spec, const ControllerParams& K) {
  if (spec.phase != Phase::Performance) throw Error("eval_performance needs a Performance spec");
  std::optional<StateSpaceSystem> cl;
  try {
    cl = close_loop(spec.plant, K);
  } catch (const WellPosednessError&) {
    return infinite("ill-posed interconnection");
  }
  const double alpha_cl = spectral_abscissa(cl->A());
  const double alpha_k = K.order() == 0 ? -kInf : spectral_abscissa(K.AK());
  if (std::max(alpha_cl, alpha_k) >= 0.0) {
    return infinite("closed loop or controller not stable");
  }
  GradEval tzw = grad_hinf(spec.plant, K, NormTarget::ClosedLoop, spec.grad_options);
  GradEval own = grad_hinf(spec.plant, K, NormTarget::Controller, spec.grad_options);
  return pick_max(std::move(tzw), scaled(std::move(own), spec.epsilon));
}

GradEval evaluate(const ObjectiveSpec& spec, const ControllerParams& K) {
  return spec.phase == Phase::Stabilize ? eval_stabilize(spec, K) : eval_performance(spec, K);
}

}  // namespace hinfstab
