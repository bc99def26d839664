#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hinfstab/nonsmooth_opt.hpp"
#include "hinfstab/objectives.hpp"

namespace hinfstab {

struct SynthesisTolerances {
  double norm_rtol = kDefaultNormRtol;
  double bfgs_tol = 1e-6;
  int bfgs_max_iter = 1000;
  bool gradient_sampling = true;
  double sampling_tol = 1e-6;
  int sampling_max_iter = 100;  // per radius
};

struct SynthesisConfig {
  Index order = 0;
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  int runs_per_epsilon = 10;
  double cpumax = 300.0;  // seconds, soft budget for the whole sweep
  std::uint64_t seed = 0;
  // Extra starts, run once per epsilon ahead of the random starts.
  std::vector<ControllerParams> init_controllers;
  SynthesisTolerances tolerances{};
  int workers = 1;

  void validate() const;
};

enum class RunOutcome { Success, StabilizationFailed, Error, Skipped };

std::string_view to_string(RunOutcome o);

struct RunRecord {
  Index epsilon_index = 0;
  double epsilon = 0.0;
  int run_index = 0;       // position within the epsilon group
  bool warm_start = false;  // started from one of init_controllers
  std::uint64_t seed = 0;
  RunOutcome outcome = RunOutcome::Skipped;
  double stabilize_value = kInf;
  int stabilize_iterations = 0;
  Termination stabilize_termination = Termination::MaxIter;
  double final_f = kInf;
  double gamma = kInf;
  int performance_iterations = 0;
  double wall_seconds = 0.0;
  std::string message;
};

struct SynthesisResult {
  ControllerParams best_K;
  double gamma = kInf;
  bool controller_stable = false;
  bool closed_loop_stable = false;
  double best_epsilon = 0.0;
  std::uint64_t best_seed = 0;
  std::vector<RunRecord> per_run;
};

struct StabilizeResult {
  bool success = false;
  // On success the stabilizing controller; otherwise the best point found.
  ControllerParams controller;
  // Stabilization objective at `controller`.
  double value = kInf;
  int iterations = 0;
  Termination termination = Termination::MaxIter;
};

struct PerformanceResult {
  ControllerParams controller;
  double f = kInf;
  int iterations = 0;
};

/// Minimizes max(alpha(A_CL), epsilon * alpha(A_K)) from theta0 until it is
/// negative. Success is certified on the unscaled abscissas.
StabilizeResult stabilize_phase(const GeneralizedPlant& plant, const SynthesisConfig& cfg,
                                const Vector& theta0, double epsilon,
                                const Deadline& budget = {});

/// Local minimization of the performance objective starting from a
/// controller with finite objective. Never returns a worse controller.
PerformanceResult performance_phase(const GeneralizedPlant& plant, const SynthesisConfig& cfg,
                                    const ControllerParams& K_stab, double epsilon,
                                    const Deadline& budget = {});

/// Full multi-start sweep over cfg.epsilons. Throws AllRunsFailed when no run
/// produces a stable, stabilizing controller.
SynthesisResult synthesize(const GeneralizedPlant& plant, const SynthesisConfig& cfg);

/// Standard normal entries, then A_K shifted so that alpha(A_K) = -0.1.
ControllerParams random_stable_controller(ControllerDims dims, std::mt19937_64& rng);

/// Appends decoupled fast stable states (pole at -10 * (1 + |A_K|_2)).
ControllerParams pad_controller(const ControllerParams& K, Index new_order);

/// Seed of run `run` within epsilon group `eps_index`.
std::uint64_t run_seed(std::uint64_t base, Index eps_index, int run);

/// Deterministic text rendering of the per-run trace (no timing fields).
std::string format_trace(const SynthesisResult& result);

}  // namespace hinfstab
