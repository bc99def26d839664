#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "hinfstab/lti.hpp"

namespace hinfstab {

/// Oracle output. A non-finite value means "infeasible"; grad is then unused.
struct Evaluation {
  double value = 0.0;
  Vector grad;
};

/// Must be deterministic for a fixed argument.
using OracleFn = std::function<Evaluation(const Vector&)>;

/// Wall-clock deadline; the default never expires.
class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;
  static Deadline after(double seconds);
  static Deadline at(Clock::time_point when) { return Deadline(when); }

  bool expired() const { return limited_ && Clock::now() >= when_; }
  bool limited() const noexcept { return limited_; }
  Clock::time_point when() const noexcept { return when_; }

 private:
  explicit Deadline(Clock::time_point when) : when_(when), limited_(true) {}
  Clock::time_point when_{};
  bool limited_ = false;
};

enum class Termination {
  GradTol,
  MaxIter,
  TimeBudget,
  LineSearchFail,
  SamplingStationary,
  TargetReached,
};

std::string_view to_string(Termination t);

struct OptReport {
  Vector theta_best;
  double f_best = kInf;
  Vector grad_best;
  int iterations = 0;
  int evaluations = 0;
  Termination termination = Termination::MaxIter;
  // Norm of the min-norm convex combination from the last sampling round, or
  // the last gradient norm for BFGS.
  double stationarity_measure = kInf;
  // Objective value at the start and after every accepted step.
  std::vector<double> trace;
};

struct LineSearchOptions {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_bisect = 50;
  int max_expand = 50;
};

enum class LineSearchStatus {
  Wolfe,       // sufficient decrease and curvature
  ArmijoOnly,  // sufficient decrease only; bracket exhausted
  Failed,      // no point with sufficient decrease
};

struct LineSearchResult {
  LineSearchStatus status = LineSearchStatus::Failed;
  double step = 0.0;
  double f_new = kInf;
  Vector g_new;
  Vector theta_new;
  int evaluations = 0;
};

/// Bracketing weak Wolfe search (doubling, then bisection). Infinite values
/// shrink the bracket and are never returned. Throws NotDescent when
/// g0' * dir >= 0.
LineSearchResult weak_wolfe_search(const OracleFn& f, const Vector& theta, const Vector& dir,
                                   double f0, const Vector& g0,
                                   const LineSearchOptions& opts = {});

struct BfgsOptions {
  double tol = 1e-6;
  int max_iter = 1000;
  // Stop as soon as f < target.
  double target = -kInf;
  // Scale the initial inverse Hessian by s'y / y'y before the first update.
  bool scale_first = true;
  LineSearchOptions line_search{};
};

/// BFGS with weak Wolfe line search. Throws InfiniteStart if f(theta0) is
/// not finite.
OptReport bfgs_minimize(const OracleFn& f, const Vector& theta0, const Deadline& budget = {},
                        const BfgsOptions& opts = {});

struct MinNormResult {
  Vector weights;  // on the unit simplex
  Vector g;        // sum_i weights_i * G_i
};

/// Minimum-norm point of the convex hull of the given vectors (Wolfe's
/// algorithm on the Gram matrix).
MinNormResult min_norm_convex_combination(const std::vector<Vector>& G);

struct SamplingOptions {
  // Decreasing sampling radii; empty means {1e-3, 1e-4, 1e-5} * (1 + |theta0|).
  std::vector<double> radii;
  // 0 means 2 * dim(theta).
  int samples_per_iter = 0;
  double tol_stat = 1e-6;
  int max_iter_per_radius = 100;
  // Redraws of an infinite sample before it is dropped.
  int max_resample = 10;
  double target = -kInf;
  std::uint64_t seed = 0;
  LineSearchOptions line_search{1e-4, 0.5, 50, 50};
};

/// Gradient sampling refinement. Throws InfiniteStart if f(theta0) is not
/// finite.
OptReport gradient_sampling(const OracleFn& f, const Vector& theta0, const Deadline& budget = {},
                            const SamplingOptions& opts = {});

std::vector<double> default_sampling_radii(const Vector& theta0);

}  // namespace hinfstab
