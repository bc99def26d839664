#include "hinfstab/synthesis.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "hinfstab/hinf_norm.hpp"

namespace hinfstab {

namespace {

OracleFn make_oracle(const ObjectiveSpec& spec, ControllerDims dims) {
  return [spec, dims](const Vector& theta) {
    GradEval g = evaluate(spec, ControllerParams(dims, theta));
    return Evaluation{g.value, std::move(g.grad)};
  };
}

ObjectiveSpec make_spec(const GeneralizedPlant& plant, const SynthesisConfig& cfg, double epsilon,
                        Phase phase) {
  ObjectiveSpec spec{plant, cfg.order, epsilon, phase, {}};
  spec.grad_options.norm_rtol = cfg.tolerances.norm_rtol;
  spec.validate();
  return spec;
}

double unscaled_abscissa(const GeneralizedPlant& plant, const ControllerParams& K) {
  try {
    const double cl = spectral_abscissa(close_loop(plant, K).A());
    const double own = K.order() == 0 ? -kInf : spectral_abscissa(K.AK());
    return std::max(cl, own);
  } catch (const WellPosednessError&) {
    return kInf;
  }
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::string_view to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::Success: return "Success";
    case RunOutcome::StabilizationFailed: return "StabilizationFailed";
    case RunOutcome::Error: return "Error";
    case RunOutcome::Skipped: return "Skipped";
  }
  return "Unknown";
}

void SynthesisConfig::validate() const {
  if (order < 0) throw Error("controller order must be nonnegative");
  if (epsilons.empty()) throw Error("epsilon list is empty");
  for (double e : epsilons) {
    if (!(e > 0.0 && e <= 1.0)) throw Error("epsilon must lie in (0, 1], got " + shortest(e));
  }
  if (runs_per_epsilon < 1 && init_controllers.empty()) {
    throw Error("runs_per_epsilon must be at least 1");
  }
  if (runs_per_epsilon < 0) throw Error("runs_per_epsilon must be nonnegative");
  if (!(cpumax > 0.0)) throw Error("cpumax must be positive");
  if (workers < 1) throw Error("workers must be at least 1");
}

std::uint64_t run_seed(std::uint64_t base, Index eps_index, int run) {
  return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(eps_index) << 32 ^
                                      static_cast<std::uint64_t>(run)));
}

ControllerParams random_stable_controller(ControllerDims dims, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector theta(dims.parameter_count());
  for (Index i = 0; i < theta.size(); ++i) theta[i] = normal(rng);
  ControllerParams K(dims, theta);
  if (dims.order == 0) return K;
  Matrix AK = K.AK();
  AK.diagonal().array() -= spectral_abscissa(AK) + 0.1;
  return ControllerParams::from_matrices(AK, K.BK(), K.CK(), K.DK());
}

ControllerParams pad_controller(const ControllerParams& K, Index new_order) {
  const ControllerDims d = K.dims();
  if (new_order < d.order) throw Error("pad_controller cannot reduce the order");
  const Index extra = new_order - d.order;
  const Matrix AK = K.AK();
  const double norm = AK.size() == 0 ? 0.0 : Eigen::JacobiSVD<Matrix>(AK).singularValues()[0];
  Matrix A = Matrix::Zero(new_order, new_order);
  A.topLeftCorner(d.order, d.order) = AK;
  A.bottomRightCorner(extra, extra).diagonal().setConstant(-10.0 * (1.0 + norm));
  Matrix B = Matrix::Zero(new_order, d.inputs);
  B.topRows(d.order) = K.BK();
  Matrix C = Matrix::Zero(d.outputs, new_order);
  C.leftCols(d.order) = K.CK();
  return ControllerParams::from_matrices(A, B, C, K.DK());
}

StabilizeResult stabilize_phase(const GeneralizedPlant& plant, const SynthesisConfig& cfg,
                                const Vector& theta0, double epsilon, const Deadline& budget) {
  const ControllerDims dims = ControllerParams::dims_for(plant, cfg.order);
  if (theta0.size() != dims.parameter_count()) {
    throw DimensionError("stabilize_phase: start vector has the wrong length");
  }
  const ObjectiveSpec spec = make_spec(plant, cfg, epsilon, Phase::Stabilize);
  const OracleFn oracle = make_oracle(spec, dims);

  StabilizeResult out;
  out.controller = ControllerParams(dims, theta0);
  const Evaluation start = oracle(theta0);
  out.value = start.value;
  // -inf is a success (nothing to stabilize); +inf means an ill-posed start.
  if (!(start.value < kInf)) {
    out.termination = Termination::LineSearchFail;
    return out;
  }

  Vector best = theta0;
  if (!(start.value < 0.0)) {
    BfgsOptions bopts;
    bopts.tol = cfg.tolerances.bfgs_tol;
    bopts.max_iter = cfg.tolerances.bfgs_max_iter;
    bopts.target = 0.0;
    OptReport rep = bfgs_minimize(oracle, theta0, budget, bopts);
    out.iterations += rep.iterations;
    out.termination = rep.termination;
    if (!(rep.f_best < 0.0) && cfg.tolerances.gradient_sampling && !budget.expired()) {
      SamplingOptions sopts;
      sopts.tol_stat = cfg.tolerances.sampling_tol;
      sopts.max_iter_per_radius = cfg.tolerances.sampling_max_iter;
      sopts.target = 0.0;
      sopts.seed = cfg.seed;
      OptReport gs = gradient_sampling(oracle, rep.theta_best, budget, sopts);
      out.iterations += gs.iterations;
      if (gs.f_best <= rep.f_best) {
        rep = std::move(gs);
        out.termination = rep.termination;
      }
    }
    best = rep.theta_best;
    out.value = rep.f_best;
  } else {
    out.termination = Termination::TargetReached;
  }
  out.controller = ControllerParams(dims, best);
  out.success = out.value < 0.0 && unscaled_abscissa(plant, out.controller) < 0.0;
  return out;
}

PerformanceResult performance_phase(const GeneralizedPlant& plant, const SynthesisConfig& cfg,
                                    const ControllerParams& K_stab, double epsilon,
                                    const Deadline& budget) {
  const ControllerDims dims = K_stab.dims();
  const ObjectiveSpec spec = make_spec(plant, cfg, epsilon, Phase::Performance);
  const OracleFn oracle = make_oracle(spec, dims);

  BfgsOptions bopts;
  bopts.tol = cfg.tolerances.bfgs_tol;
  bopts.max_iter = cfg.tolerances.bfgs_max_iter;
  OptReport rep = bfgs_minimize(oracle, K_stab.theta(), budget, bopts);
  PerformanceResult out{ControllerParams(dims, rep.theta_best), rep.f_best, rep.iterations};
  if (cfg.tolerances.gradient_sampling && !budget.expired()) {
    SamplingOptions sopts;
    sopts.tol_stat = cfg.tolerances.sampling_tol;
    sopts.max_iter_per_radius = cfg.tolerances.sampling_max_iter;
    sopts.seed = splitmix64(cfg.seed);
    const OptReport gs = gradient_sampling(oracle, rep.theta_best, budget, sopts);
    out.iterations += gs.iterations;
    if (gs.f_best <= out.f) {
      out.controller = ControllerParams(dims, gs.theta_best);
      out.f = gs.f_best;
    }
  }
  return out;
}

SynthesisResult synthesize(const GeneralizedPlant& plant, const SynthesisConfig& cfg) {
  cfg.validate();
  const ControllerDims dims = ControllerParams::dims_for(plant, cfg.order);
  std::vector<ControllerParams> inits;
  for (const ControllerParams& K : cfg.init_controllers) {
    if (K.dims().inputs != dims.inputs || K.dims().outputs != dims.outputs ||
        K.order() > dims.order) {
      throw DimensionError("initial controller does not fit the plant and order");
    }
    inits.push_back(K.order() < dims.order ? pad_controller(K, dims.order) : K);
  }

  struct Job {
    Index eps_index;
    int run_index;
    const ControllerParams* init;
  };
  std::vector<Job> jobs;
  const Index n_eps = static_cast<Index>(cfg.epsilons.size());
  for (Index e = 0; e < n_eps; ++e) {
    int r = 0;
    for (const ControllerParams& K : inits) jobs.push_back({e, r++, &K});
    for (int k = 0; k < cfg.runs_per_epsilon; ++k) jobs.push_back({e, r++, nullptr});
  }

  const auto start = Deadline::Clock::now();
  std::vector<Deadline> slice_end;
  for (Index e = 0; e < n_eps; ++e) {
    const double seconds = cfg.cpumax * static_cast<double>(e + 1) / static_cast<double>(n_eps);
    slice_end.push_back(Deadline::at(
        start + std::chrono::duration_cast<Deadline::Clock::duration>(
                    std::chrono::duration<double>(seconds))));
  }

  std::vector<RunRecord> records(jobs.size());
  std::vector<ControllerParams> finals(jobs.size());

  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    RunRecord& rec = records[i];
    rec.epsilon_index = job.eps_index;
    rec.epsilon = cfg.epsilons[static_cast<std::size_t>(job.eps_index)];
    rec.run_index = job.run_index;
    rec.warm_start = job.init != nullptr;
    rec.seed = run_seed(cfg.seed, job.eps_index, job.run_index);
    const Deadline& budget = slice_end[static_cast<std::size_t>(job.eps_index)];
    if (budget.expired()) {
      rec.outcome = RunOutcome::Skipped;
      rec.message = "time budget exhausted before start";
      return;
    }
    const auto t0 = Deadline::Clock::now();
    SynthesisConfig run_cfg = cfg;
    run_cfg.seed = rec.seed;
    try {
      std::mt19937_64 rng(rec.seed);
      const ControllerParams K0 = job.init ? *job.init : random_stable_controller(dims, rng);
      const StabilizeResult st = stabilize_phase(plant, run_cfg, K0.theta(), rec.epsilon, budget);
      rec.stabilize_value = st.value;
      rec.stabilize_iterations = st.iterations;
      rec.stabilize_termination = st.termination;
      if (!st.success) {
        rec.outcome = RunOutcome::StabilizationFailed;
        rec.message = "no stable stabilizing controller found";
      } else {
        const PerformanceResult perf =
            performance_phase(plant, run_cfg, st.controller, rec.epsilon, budget);
        rec.final_f = perf.f;
        rec.performance_iterations = perf.iterations;
        rec.gamma = hinf_norm(close_loop(plant, perf.controller), cfg.tolerances.norm_rtol).value;
        finals[i] = perf.controller;
        // The optimizer minimizes f, not gamma; when the eps*|K| term is active
        // a warm start could end with a larger gamma than it began with.
        if (job.init) {
          const double g0 =
              hinf_norm(close_loop(plant, st.controller), cfg.tolerances.norm_rtol).value;
          if (g0 < rec.gamma) {
            rec.gamma = g0;
            finals[i] = st.controller;
            rec.message = "kept warm start";
          }
        }
        rec.outcome = RunOutcome::Success;
      }
    } catch (const Error& err) {
      rec.outcome = RunOutcome::Error;
      rec.message = err.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(Deadline::Clock::now() - t0).count();
  };

  if (cfg.workers <= 1 || jobs.size() <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), jobs.size());
    for (std::size_t w = 0; w < n; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  // Lowest gamma; ties go to the earliest (epsilon index, run index).
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].outcome != RunOutcome::Success || !std::isfinite(records[i].gamma)) continue;
    if (!best || records[i].gamma < records[*best].gamma) best = i;
  }
  SynthesisResult result;
  result.per_run = std::move(records);
  if (!best) {
    throw AllRunsFailed("no run produced a stable controller that stabilizes the closed loop");
  }
  const RunRecord& win = result.per_run[*best];
  result.best_K = finals[*best];
  result.gamma = win.gamma;
  result.best_epsilon = win.epsilon;
  result.best_seed = win.seed;
  result.controller_stable = result.best_K.order() == 0 || is_stable(result.best_K.AK());
  result.closed_loop_stable = is_stable(close_loop(plant, result.best_K).A());
  return result;
}

std::string format_trace(const SynthesisResult& result) {
  std::ostringstream os;
  for (const RunRecord& r : result.per_run) {
    os << "run eps_index=" << r.epsilon_index << " eps=" << shortest(r.epsilon)
       << " index=" << r.run_index << " warm=" << (r.warm_start ? 1 : 0) << " seed=" << r.seed
       << " outcome=" << to_string(r.outcome) << " stabilize=" << shortest(r.stabilize_value)
       << " stabilize_iters=" << r.stabilize_iterations
       << " stabilize_stop=" << to_string(r.stabilize_termination)
       << " f=" << shortest(r.final_f) << " gamma=" << shortest(r.gamma)
       << " perf_iters=" << r.performance_iterations << '\n';
  }
  os << "best gamma=" << shortest(result.gamma) << " eps=" << shortest(result.best_epsilon)
     << " seed=" << result.best_seed << " theta=";
  for (Index i = 0; i < result.best_K.theta().size(); ++i) {
    os << (i ? "," : "") << shortest(result.best_K.theta()[i]);
  }
  os << '\n';
  return os.str();
}

}  // namespace hinfstab
