#include "hinfstab/nonsmooth_opt.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace hinfstab {

Deadline Deadline::after(double seconds) {
  const auto span = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(std::max(0.0, seconds)));
  return Deadline(Clock::now() + span);
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::GradTol: return "GradTol";
    case Termination::MaxIter: return "MaxIter";
    case Termination::TimeBudget: return "TimeBudget";
    case Termination::LineSearchFail: return "LineSearchFail";
    case Termination::SamplingStationary: return "SamplingStationary";
    case Termination::TargetReached: return "TargetReached";
  }
  return "Unknown";
}

namespace {

bool finite(double v) { return std::isfinite(v); }

Evaluation checked_eval(const OracleFn& f, const Vector& theta, Index dim) {
  Evaluation e = f(theta);
  if (finite(e.value) && e.grad.size() != dim) {
    throw DimensionError("oracle returned a gradient of length " + std::to_string(e.grad.size()) +
                         ", expected " + std::to_string(dim));
  }
  return e;
}

}  // namespace

LineSearchResult weak_wolfe_search(const OracleFn& f, const Vector& theta, const Vector& dir,
                                   double f0, const Vector& g0, const LineSearchOptions& opts) {
  const double slope0 = g0.dot(dir);
  if (!(slope0 < 0.0)) {
    throw NotDescent("line search direction is not a descent direction (g'd = " +
                     std::to_string(slope0) + ")");
  }
  LineSearchResult out;
  LineSearchResult armijo;  // last point with sufficient decrease but weak curvature
  double lo = 0.0;
  double hi = kInf;
  double t = 1.0;
  int bisections = 0;
  int expansions = 0;
  for (;;) {
    const Vector x = theta + t * dir;
    const Evaluation e = checked_eval(f, x, theta.size());
    ++out.evaluations;
    const bool decrease = finite(e.value) && e.value < f0 + opts.c1 * t * slope0 && e.value < f0;
    if (!decrease) {
      hi = t;
    } else if (e.grad.dot(dir) < opts.c2 * slope0) {
      lo = t;
      armijo.status = LineSearchStatus::ArmijoOnly;
      armijo.step = t;
      armijo.f_new = e.value;
      armijo.g_new = e.grad;
      armijo.theta_new = x;
    } else {
      out.status = LineSearchStatus::Wolfe;
      out.step = t;
      out.f_new = e.value;
      out.g_new = e.grad;
      out.theta_new = x;
      return out;
    }
    if (std::isfinite(hi)) {
      if (bisections >= opts.max_bisect) break;
      t = 0.5 * (lo + hi);
      ++bisections;
    } else {
      if (expansions >= opts.max_expand) break;
      t *= 2.0;
      ++expansions;
    }
  }
  armijo.evaluations = out.evaluations;
  return armijo;
}

OptReport bfgs_minimize(const OracleFn& f, const Vector& theta0, const Deadline& budget,
                        const BfgsOptions& opts) {
  const Index dim = theta0.size();
  OptReport rep;
  Evaluation cur = checked_eval(f, theta0, dim);
  rep.evaluations = 1;
  if (!finite(cur.value)) throw InfiniteStart("BFGS start point has infinite objective");
  Vector x = theta0;
  rep.trace.push_back(cur.value);
  Matrix H = Matrix::Identity(dim, dim);
  bool updated = false;

  auto finish = [&](Termination why) {
    rep.termination = why;
    rep.theta_best = x;
    rep.f_best = cur.value;
    rep.grad_best = cur.grad;
    rep.stationarity_measure = cur.grad.norm();
    return rep;
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    if (cur.value < opts.target) return finish(Termination::TargetReached);
    if (cur.grad.norm() <= opts.tol) return finish(Termination::GradTol);
    if (budget.expired()) return finish(Termination::TimeBudget);

    Vector dir = -H * cur.grad;
    if (!(cur.grad.dot(dir) < 0.0)) {
      H.setIdentity();
      updated = false;
      dir = -cur.grad;
    }
    const LineSearchResult ls = weak_wolfe_search(f, x, dir, cur.value, cur.grad, opts.line_search);
    rep.evaluations += ls.evaluations;
    if (ls.status == LineSearchStatus::Failed) return finish(Termination::LineSearchFail);

    const Vector s = ls.theta_new - x;
    const Vector y = ls.g_new - cur.grad;
    x = ls.theta_new;
    cur.value = ls.f_new;
    cur.grad = ls.g_new;
    rep.trace.push_back(cur.value);
    ++rep.iterations;
    if (ls.status == LineSearchStatus::ArmijoOnly) return finish(Termination::LineSearchFail);

    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (!updated && opts.scale_first) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Vector Hy = H * y;
      // H+ = (I - rho s y') H (I - rho y s') + rho s s'
      H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
      updated = true;
    }
  }
  if (cur.value < opts.target) return finish(Termination::TargetReached);
  if (cur.grad.norm() <= opts.tol) return finish(Termination::GradTol);
  return finish(Termination::MaxIter);
}

namespace {

// Minimizer of |sum_i v_i G_i|^2 over the affine hull of the corral.
Vector affine_minimizer(const Matrix& Q, const std::vector<Index>& corral) {
  const Index s = static_cast<Index>(corral.size());
  Matrix kkt = Matrix::Zero(s + 1, s + 1);
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) kkt(i, j) = Q(corral[i], corral[j]);
    kkt(i, s) = 1.0;
    kkt(s, i) = 1.0;
  }
  Vector rhs = Vector::Zero(s + 1);
  rhs[s] = 1.0;
  const Eigen::FullPivLU<Matrix> lu(kkt);
  Vector sol = lu.solve(rhs);
  sol += lu.solve(rhs - kkt * sol);  // one step of iterative refinement
  return sol.head(s);
}

}  // namespace

MinNormResult min_norm_convex_combination(const std::vector<Vector>& G) {
  if (G.empty()) throw Error("min_norm_convex_combination needs at least one vector");
  const Index k = static_cast<Index>(G.size());
  const Index d = G.front().size();
  Matrix Gm(d, k);
  for (Index i = 0; i < k; ++i) {
    if (G[i].size() != d) throw DimensionError("gradient bundle has vectors of unequal length");
    Gm.col(i) = G[i];
  }
  const double scale = Gm.colwise().squaredNorm().maxCoeff();
  MinNormResult out;
  out.weights = Vector::Zero(k);
  if (k == 1 || scale == 0.0) {
    out.weights[0] = 1.0;
    out.g = Gm.col(0);
    return out;
  }
  // Work on the normalized Gram matrix.
  const Matrix Q = (Gm.transpose() * Gm) / scale;

  Vector& w = out.weights;
  std::vector<Index> corral;
  {
    Index i0 = 0;
    Q.diagonal().minCoeff(&i0);
    corral.push_back(i0);
    w[i0] = 1.0;
  }
  const double gap_tol = 1e-15;
  for (int major = 0; major < 50 * k; ++major) {
    const Vector Qw = Q * w;
    const double xx = w.dot(Qw);
    Index j = 0;
    Qw.minCoeff(&j);
    if (xx - Qw[j] <= gap_tol) break;
    if (std::find(corral.begin(), corral.end(), j) != corral.end()) break;
    corral.push_back(j);

    for (int minor = 0; minor <= k; ++minor) {
      const Vector v = affine_minimizer(Q, corral);
      if ((v.array() > 0.0).all()) {
        for (std::size_t i = 0; i < corral.size(); ++i) w[corral[i]] = v[static_cast<Index>(i)];
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < corral.size(); ++i) {
        const double wi = w[corral[i]];
        const double vi = v[static_cast<Index>(i)];
        if (vi <= 0.0 && wi - vi > 0.0) theta = std::min(theta, wi / (wi - vi));
      }
      std::vector<Index> kept;
      for (std::size_t i = 0; i < corral.size(); ++i) {
        const Index c = corral[i];
        w[c] += theta * (v[static_cast<Index>(i)] - w[c]);
        if (w[c] > 1e-15) {
          kept.push_back(c);
        } else {
          w[c] = 0.0;
        }
      }
      corral.swap(kept);
      if (corral.empty()) throw Error("min-norm point iteration lost its support");
    }
  }
  w = w.cwiseMax(0.0);
  w /= w.sum();
  out.g = Gm * w;
  return out;
}

std::vector<double> default_sampling_radii(const Vector& theta0) {
  const double s = 1.0 + theta0.norm();
  return {1e-3 * s, 1e-4 * s, 1e-5 * s};
}

OptReport gradient_sampling(const OracleFn& f, const Vector& theta0, const Deadline& budget,
                            const SamplingOptions& opts) {
  const Index dim = theta0.size();
  OptReport rep;
  Evaluation cur = checked_eval(f, theta0, dim);
  rep.evaluations = 1;
  if (!finite(cur.value)) throw InfiniteStart("gradient sampling start point has infinite objective");
  Vector x = theta0;
  rep.trace.push_back(cur.value);
  rep.stationarity_measure = cur.grad.norm();

  const std::vector<double> radii = opts.radii.empty() ? default_sampling_radii(theta0) : opts.radii;
  const int samples = opts.samples_per_iter > 0 ? opts.samples_per_iter : static_cast<int>(2 * dim);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  auto sample_ball = [&](double r) {
    Vector u(dim);
    for (Index i = 0; i < dim; ++i) u[i] = normal(rng);
    const double nu = u.norm();
    if (nu == 0.0) return Vector(x);
    const double rho = r * std::pow(uniform(rng), 1.0 / static_cast<double>(dim));
    return Vector(x + (rho / nu) * u);
  };

  auto finish = [&](Termination why) {
    rep.termination = why;
    rep.theta_best = x;
    rep.f_best = cur.value;
    rep.grad_best = cur.grad;
    return rep;
  };

  if (dim == 0) {
    rep.stationarity_measure = 0.0;
    return finish(Termination::SamplingStationary);
  }

  bool stationary_at_last = false;
  bool line_search_failed = false;
  for (double r : radii) {
    stationary_at_last = false;
    for (int it = 0; it < opts.max_iter_per_radius; ++it) {
      if (cur.value < opts.target) return finish(Termination::TargetReached);
      if (budget.expired()) return finish(Termination::TimeBudget);

      std::vector<Vector> bundle{cur.grad};
      for (int k = 0; k < samples; ++k) {
        for (int attempt = 0; attempt <= opts.max_resample; ++attempt) {
          const Evaluation e = checked_eval(f, sample_ball(r), dim);
          ++rep.evaluations;
          if (finite(e.value)) {
            bundle.push_back(e.grad);
            break;
          }
        }
      }
      const MinNormResult mn = min_norm_convex_combination(bundle);
      rep.stationarity_measure = mn.g.norm();
      if (rep.stationarity_measure <= opts.tol_stat) {
        stationary_at_last = true;
        break;
      }
      const Vector dir = -mn.g;
      if (!(cur.grad.dot(dir) < 0.0)) break;
      const LineSearchResult ls = weak_wolfe_search(f, x, dir, cur.value, cur.grad, opts.line_search);
      rep.evaluations += ls.evaluations;
      if (ls.status == LineSearchStatus::Failed) {
        line_search_failed = true;
        break;
      }
      x = ls.theta_new;
      cur.value = ls.f_new;
      cur.grad = ls.g_new;
      rep.trace.push_back(cur.value);
      ++rep.iterations;
    }
  }
  if (cur.value < opts.target) return finish(Termination::TargetReached);
  if (stationary_at_last) return finish(Termination::SamplingStationary);
  return finish(line_search_failed ? Termination::LineSearchFail : Termination::MaxIter);
}

}  // namespace hinfstab
