#include "hinfstab/hinf_norm.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace hinfstab {

namespace {

constexpr int kGridPoints = 64;
constexpr int kMaxMidpointIterations = 50;
constexpr int kMaxBisections = 200;

double sigma_max_of(const StateSpaceSystem& sys, double omega) {
  const CMatrix G = freq_response(sys, omega);
  if (G.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMatrix>(G).singularValues()[0];
}

double sigma_max_real(const Matrix& D) {
  if (D.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(D).singularValues()[0];
}

// Imaginary parts (>= 0) of the near-imaginary eigenvalues of H(gamma).
std::vector<double> candidate_frequencies(const StateSpaceSystem& sys, double gamma) {
  const Matrix H = level_set_hamiltonian(sys, gamma);
  Eigen::EigenSolver<Matrix> es(H, false);
  if (es.info() != Eigen::Success) {
    throw HamiltonianEigenFailure("Hamiltonian eigenvalue iteration did not converge");
  }
  const double scale = H.cwiseAbs().colwise().sum().maxCoeff();
  std::vector<double> out;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex lambda = es.eigenvalues()[i];
    const double tol = 1e-6 * std::max(1.0, std::abs(lambda)) + 1e-9 * scale;
    if (std::abs(lambda.real()) <= tol && lambda.imag() >= 0.0) {
      out.push_back(lambda.imag());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct Probe {
  double value = -1.0;
  double omega = 0.0;
};

// Evaluates sigma_max at every crossing frequency and at the midpoints of the
// intervals they delimit (starting from DC).
Probe probe_level(const StateSpaceSystem& sys, double gamma) {
  const std::vector<double> crossings = candidate_frequencies(sys, gamma);
  Probe best;
  if (crossings.empty()) return best;
  std::vector<double> points;
  double previous = 0.0;
  points.push_back(0.0);
  for (double w : crossings) {
    points.push_back(w);
    points.push_back(0.5 * (previous + w));
    previous = w;
  }
  for (double w : points) {
    double s;
    try {
      s = sigma_max_of(sys, w);
    } catch (const SingularFrequency&) {
      continue;
    }
    if (s > best.value) best = {s, w};
  }
  return best;
}

std::vector<double> grid_frequencies(const Matrix& A) {
  const CVector poles = eigenvalues(A);
  double lo = kInf;
  double hi = 0.0;
  std::vector<double> out{0.0};
  for (Index i = 0; i < poles.size(); ++i) {
    const double mag = std::abs(poles[i]);
    if (mag > 0.0) {
      lo = std::min(lo, mag);
      hi = std::max(hi, mag);
    }
    out.push_back(mag);
    out.push_back(std::abs(poles[i].imag()));
  }
  if (!(hi > 0.0)) {
    lo = 1.0;
    hi = 1.0;
  }
  const double a = std::log10(lo) - 1.0;
  const double b = std::log10(hi) + 1.0;
  for (int k = 0; k < kGridPoints; ++k) {
    out.push_back(std::pow(10.0, a + (b - a) * k / (kGridPoints - 1)));
  }
  return out;
}

}  // namespace

Matrix level_set_hamiltonian(const StateSpaceSystem& sys, double gamma) {
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix& C = sys.C();
  const Matrix& D = sys.D();
  const Index n = sys.states();
  const double g2 = gamma * gamma;
  if (!(gamma > sigma_max_real(D))) {
    throw Error("level gamma must exceed sigma_max(D)");
  }
  const Matrix R = D.transpose() * D - g2 * Matrix::Identity(D.cols(), D.cols());
  const Matrix S = D * D.transpose() - g2 * Matrix::Identity(D.rows(), D.rows());
  const Eigen::LDLT<Matrix> Rf(R);
  const Eigen::LDLT<Matrix> Sf(S);
  const Matrix RinvDtC = Rf.solve(D.transpose() * C);
  const Matrix RinvBt = Rf.solve(B.transpose());

  Matrix H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = A - B * RinvDtC;
  H.topRightCorner(n, n) = -gamma * B * RinvBt;
  H.bottomLeftCorner(n, n) = gamma * C.transpose() * Sf.solve(C);
  H.bottomRightCorner(n, n) = -A.transpose() + C.transpose() * D * RinvBt;
  return H;
}

std::vector<double> level_crossings(const StateSpaceSystem& sys, double gamma) {
  std::vector<double> out;
  for (double w : candidate_frequencies(sys, gamma)) {
    Vector s;
    try {
      s = singular_values_at(sys, w);
    } catch (const SingularFrequency&) {
      continue;
    }
    for (Index i = 0; i < s.size(); ++i) {
      if (std::abs(s[i] - gamma) <= 1e-8 * gamma) {
        out.push_back(w);
        break;
      }
    }
  }
  return out;
}

Vector singular_values_at(const StateSpaceSystem& sys, double omega) {
  const CMatrix G = freq_response(sys, omega);
  if (G.size() == 0) return Vector(0);
  return Eigen::JacobiSVD<CMatrix>(G).singularValues();
}

SingularTriple sigma_max_at(const StateSpaceSystem& sys, double omega) {
  const CMatrix G = freq_response(sys, omega);
  SingularTriple out;
  if (G.size() == 0) {
    out.u = CVector::Zero(G.rows());
    out.v = CVector::Zero(G.cols());
    return out;
  }
  const Eigen::JacobiSVD<CMatrix> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.value = svd.singularValues()[0];
  out.u = svd.matrixU().col(0);
  out.v = svd.matrixV().col(0);
  const double vnorm = out.v.norm();
  for (Index i = 0; i < out.v.size(); ++i) {
    const double mag = std::abs(out.v[i]);
    if (mag > 1e-12 * vnorm) {
      const Complex phase = std::conj(out.v[i]) / mag;
      out.v *= phase;
      out.u *= phase;
      out.v[i] = mag;
      break;
    }
  }
  return out;
}

NormResult hinf_norm(const StateSpaceSystem& sys, double rtol) {
  if (!(rtol > 0.0)) throw Error("hinf_norm: rtol must be positive");
  const double alpha = spectral_abscissa(sys.A());
  if (!(alpha < 0.0)) {
    throw UnstableSystem("hinf_norm: system is not stable (spectral abscissa " +
                         std::to_string(alpha) + ")");
  }
  NormResult best{sigma_max_real(sys.D()), kInf, true};
  if (sys.states() == 0 || sys.inputs() == 0 || sys.outputs() == 0) return best;

  // A pole within rounding of i*w makes that grid point unusable; the level
  // iteration still sees the (huge) peak next to it.
  for (double w : grid_frequencies(sys.A())) {
    double s;
    try {
      s = sigma_max_of(sys, w);
    } catch (const SingularFrequency&) {
      continue;
    }
    if (s > best.value) best = {s, w, false};
  }
  if (best.value == 0.0) return {0.0, 0.0, false};

  auto raise_to = [&](const Probe& p) {
    if (p.value > best.value) best = {p.value, p.omega, false};
  };

  // Level-set iteration with midpoint acceleration. A genuine crossing at
  // gamma = best * (1 + rtol) evaluates to at least gamma, so failing to beat
  // best * (1 + rtol / 2) certifies that the supremum is below gamma.
  bool converged = false;
  for (int it = 0; it < kMaxMidpointIterations; ++it) {
    const double gamma = best.value * (1.0 + rtol);
    const Probe p = probe_level(sys, gamma);
    if (!(p.value > best.value * (1.0 + 0.5 * rtol))) {
      converged = true;
      break;
    }
    raise_to(p);
  }

  if (!converged) {
    // Plain bisection on a doubled bracket.
    double lo = best.value;
    double hi = 2.0 * lo;
    for (int k = 0; k < 64; ++k) {
      const Probe p = probe_level(sys, hi);
      if (!(p.value >= hi * (1.0 - 1e-9))) break;
      raise_to(p);
      lo = best.value;
      hi *= 2.0;
    }
    for (int k = 0; k < kMaxBisections && hi > lo * (1.0 + rtol); ++k) {
      const double mid = std::sqrt(lo * hi);
      const Probe p = probe_level(sys, mid);
      if (p.value >= mid * (1.0 - 1e-9)) {
        raise_to(p);
        lo = best.value;
      } else {
        hi = mid;
      }
    }
  }

  if (!best.attained_at_infinity) {
    // Local polish of the peak; the level iteration only pins the value.
    const double w0 = best.peak_omega;
    const double halfwidth = 1e-3 * w0 + 1e-9;
    const double a = std::max(0.0, w0 - halfwidth);
    const double b = w0 + halfwidth;
    std::uintmax_t max_iter = 100;
    auto neg_sigma = [&](double w) {
      try {
        return -sigma_max_of(sys, w);
      } catch (const SingularFrequency&) {
        return 0.0;
      }
    };
    const auto [w, neg] = boost::math::tools::brent_find_minima(
        neg_sigma, a, b, std::numeric_limits<double>::digits / 2, max_iter);
    if (-neg > best.value) best = {-neg, w, false};
  }
  return best;
}

}  // namespace hinfstab
