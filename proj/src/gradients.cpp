#include "hinfstab/gradients.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace hinfstab {

namespace {

// d f / d K~(r, c) = Re(a_r * b_c), packed into theta order.
Vector pack_outer(const CVector& a, const CVector& b, const ControllerDims& dims) {
  const Matrix G = (a * b.transpose()).real();
  return ControllerParams::pack_stacked(G, dims);
}

struct ActiveEigen {
  Complex lambda;
  CVector right;  // unit norm
  CVector left;   // scaled so that left^H right = 1
  bool smooth = true;
  std::string note;
};

ActiveEigen active_eigenpair(const Matrix& M, double tol_cluster) {
  if (!M.allFinite()) throw EigenFailure("matrix has non-finite entries");
  Eigen::EigenSolver<Matrix> es(M, true);
  if (es.info() != Eigen::Success) throw EigenFailure("real Schur iteration did not converge");
  const CVector& ev = es.eigenvalues();

  double alpha = -kInf;
  for (Index i = 0; i < ev.size(); ++i) alpha = std::max(alpha, ev[i].real());
  // Among eigenvalues tied for the abscissa, take the largest imaginary part
  // (the +Im member of a conjugate pair).
  Index active = -1;
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev[i].real() >= alpha - tol_cluster * std::max(1.0, std::abs(alpha))) {
      if (active < 0 || ev[i].imag() > ev[active].imag()) active = i;
    }
  }
  ActiveEigen out;
  out.lambda = ev[active];
  out.right = es.eigenvectors().col(active);
  out.right.normalize();

  const double radius = tol_cluster * std::max(1.0, std::abs(out.lambda));
  int multiplicity = 0;
  for (Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i] - out.lambda) <= radius) ++multiplicity;
  }

  // Left eigenvector from the transpose: M^T z = lambda z gives y = conj(z).
  Eigen::EigenSolver<Matrix> est(M.transpose(), true);
  if (est.info() != Eigen::Success) throw EigenFailure("real Schur iteration did not converge");
  Index nearest = 0;
  for (Index i = 1; i < est.eigenvalues().size(); ++i) {
    if (std::abs(est.eigenvalues()[i] - out.lambda) <
        std::abs(est.eigenvalues()[nearest] - out.lambda)) {
      nearest = i;
    }
  }
  CVector y = est.eigenvectors().col(nearest).conjugate();
  y.normalize();
  const Complex s = y.dot(out.right);  // y^H x
  if (multiplicity > 1 || std::abs(s) < tol_cluster) {
    out.smooth = false;
    out.note = multiplicity > 1 ? "active eigenvalue is multiple" : "active eigenvalue is defective";
  }
  if (std::abs(s) > 1e-14) {
    out.left = y / std::conj(s);
  } else {
    out.left = y;
  }
  return out;
}

GradEval spectral_gradient(const Matrix& M, const Interconnection& factors,
                           const ControllerDims& dims, const GradOptions& opts) {
  GradEval out;
  const ActiveEigen e = active_eigenpair(M, opts.tol_cluster);
  if (!e.smooth && opts.strict) throw DefectiveEigenvalue(e.note);
  out.value = e.lambda.real();
  out.certificate.eigenvalue = e.lambda;
  out.certificate.smooth = e.smooth;
  out.certificate.note = e.note;
  // d alpha = Re(y^H dM x) with dM = state_in * dK * state_out.
  const CVector a = factors.state_in.cast<Complex>().transpose() * e.left.conjugate();
  const CVector b = factors.state_out.cast<Complex>() * e.right;
  out.grad = pack_outer(a, b, dims);
  return out;
}

double sigma_max_safe(const StateSpaceSystem& sys, double omega) {
  try {
    return sigma_max_at(sys, omega).value;
  } catch (const SingularFrequency&) {
    return 0.0;
  }
}

// Peak frequency to differentiate at. Detects a second near-peak region
// within the norm tolerance and prefers the lowest-frequency one.
double choose_peak(const StateSpaceSystem& sys, const NormResult& nr, const GradOptions& opts,
                   ActiveCertificate& cert) {
  if (!opts.resolve_multiple_peaks || nr.attained_at_infinity) return nr.peak_omega;
  const double level = nr.value * (1.0 - 10.0 * opts.norm_rtol);
  const double sd =
      sys.D().size() == 0 ? 0.0 : Eigen::JacobiSVD<Matrix>(sys.D()).singularValues()[0];
  if (!(level > sd) || sys.states() == 0) return nr.peak_omega;

  std::vector<double> cuts = level_crossings(sys, level);
  if (cuts.empty()) return nr.peak_omega;
  cuts.insert(cuts.begin(), 0.0);
  // Maximal runs of consecutive intervals lying above the level.
  std::vector<std::pair<double, double>> regions;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    if (sigma_max_safe(sys, mid) >= level) {
      if (!regions.empty() && regions.back().second == cuts[i]) {
        regions.back().second = cuts[i + 1];
      } else {
        regions.emplace_back(cuts[i], cuts[i + 1]);
      }
    }
  }
  if (regions.size() < 2) return nr.peak_omega;

  cert.smooth = false;
  cert.note = "norm attained at " + std::to_string(regions.size()) + " separate peaks";
  if (opts.strict) throw MultiplePeaks(cert.note);
  const auto [lo, hi] = regions.front();
  if (nr.peak_omega >= lo && nr.peak_omega <= hi) return nr.peak_omega;
  std::uintmax_t max_iter = 200;
  const auto best = boost::math::tools::brent_find_minima(
      [&](double w) { return -sigma_max_safe(sys, w); }, lo, hi,
      std::numeric_limits<double>::digits / 2, max_iter);
  return best.first;
}

GradEval norm_gradient(const Interconnection& factors, const ControllerDims& dims,
                       const GradOptions& opts) {
  const StateSpaceSystem& sys = factors.closed_loop;
  const NormResult nr = hinf_norm(sys, opts.norm_rtol);
  GradEval out;
  out.value = nr.value;
  out.certificate.attained_at_infinity = nr.attained_at_infinity;

  const CMatrix Pz = factors.output_in.cast<Complex>();
  const CMatrix Qd = factors.input_out.cast<Complex>();
  if (nr.attained_at_infinity) {
    out.certificate.peak_omega = kInf;
    out.certificate.sigma = nr.value;
    if (sys.D().size() == 0 || nr.value == 0.0) {
      out.grad = Vector::Zero(dims.parameter_count());
      return out;
    }
    const Eigen::JacobiSVD<Matrix> svd(sys.D(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector s = svd.singularValues();
    if (s.size() > 1 && s[0] - s[1] <= opts.tol_cluster * s[0]) {
      out.certificate.smooth = false;
      out.certificate.note = "largest singular value of D is multiple";
    }
    const CVector u = svd.matrixU().col(0).cast<Complex>();
    const CVector v = svd.matrixV().col(0).cast<Complex>();
    out.grad = pack_outer(Pz.transpose() * u.conjugate(), Qd * v, dims);
    return out;
  }

  const double omega = choose_peak(sys, nr, opts, out.certificate);
  out.certificate.peak_omega = omega;
  const SingularTriple t = sigma_max_at(sys, omega);
  out.certificate.sigma = t.value;
  const Vector s = singular_values_at(sys, omega);
  if (s.size() > 1 && s[0] - s[1] <= opts.tol_cluster * s[0]) {
    out.certificate.smooth = false;
    out.certificate.note = "largest singular value is multiple at the peak";
    if (opts.strict) throw MultiplePeaks(out.certificate.note);
  }

  // dG = (Pz + C Phi P) dK (Qc Phi B + Qd), Phi = (i omega I - A)^{-1}.
  CVector a = Pz.transpose() * t.u.conjugate();
  CVector b = Qd * t.v;
  if (sys.states() > 0) {
    CMatrix shifted = -sys.A().cast<Complex>();
    shifted.diagonal().array() += Complex(0.0, omega);
    const CVector phi_Bv = shifted.partialPivLu().solve(sys.B().cast<Complex>() * t.v);
    // u^H C Phi = w^H with Phi^H C^H u = w.
    const CVector w =
        shifted.adjoint().partialPivLu().solve(sys.C().cast<Complex>().adjoint() * t.u);
    a += factors.state_in.cast<Complex>().transpose() * w.conjugate();
    b += factors.state_out.cast<Complex>() * phi_Bv;
  }
  out.grad = pack_outer(a, b, dims);
  return out;
}

}  // namespace

Interconnection controller_self_map(const ControllerParams& K) {
  const ControllerDims d = K.dims();
  const Index nk = d.order;
  Matrix state_in = Matrix::Zero(nk, nk + d.outputs);
  state_in.leftCols(nk).setIdentity();
  Matrix output_in = Matrix::Zero(d.outputs, nk + d.outputs);
  output_in.rightCols(d.outputs).setIdentity();
  Matrix state_out = Matrix::Zero(nk + d.inputs, nk);
  state_out.topRows(nk).setIdentity();
  Matrix input_out = Matrix::Zero(nk + d.inputs, d.inputs);
  input_out.bottomRows(d.inputs).setIdentity();
  return Interconnection{K.as_system(), std::move(state_in), std::move(output_in),
                         std::move(state_out), std::move(input_out)};
}

GradEval grad_spectral_abscissa(const GeneralizedPlant& plant, const ControllerParams& K,
                                SpectralTarget which, const GradOptions& opts) {
  if (which == SpectralTarget::Controller) {
    if (K.order() == 0) {
      GradEval out;
      out.value = -kInf;
      out.grad = Vector::Zero(K.dims().parameter_count());
      out.certificate.note = "static controller";
      return out;
    }
    const Interconnection self = controller_self_map(K);
    return spectral_gradient(self.closed_loop.A(), self, K.dims(), opts);
  }
  const Interconnection ic = interconnect(plant, K);
  if (ic.closed_loop.states() == 0) {
    GradEval out;
    out.value = -kInf;
    out.grad = Vector::Zero(K.dims().parameter_count());
    out.certificate.note = "static closed loop";
    return out;
  }
  return spectral_gradient(ic.closed_loop.A(), ic, K.dims(), opts);
}

GradEval grad_hinf(const GeneralizedPlant& plant, const ControllerParams& K, NormTarget which,
                   const GradOptions& opts) {
  if (which == NormTarget::Controller) {
    return norm_gradient(controller_self_map(K), K.dims(), opts);
  }
  return norm_gradient(interconnect(plant, K), K.dims(), opts);
}

}  // namespace hinfstab
