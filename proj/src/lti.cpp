#include "hinfstab/lti.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <string>

namespace hinfstab {

namespace {

std::string shape(const Matrix& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

void expect_shape(const char* name, const Matrix& M, Index rows, Index cols) {
  if (M.rows() != rows || M.cols() != cols) {
    throw DimensionMismatch(name, "expected " + std::to_string(rows) + "x" +
                                      std::to_string(cols) + ", got " + shape(M));
  }
}

}  // namespace

StateSpaceSystem::StateSpaceSystem(Matrix A, Matrix B, Matrix C, Matrix D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
  if (A_.rows() != A_.cols()) {
    throw DimensionError("A must be square, got " + shape(A_));
  }
  const Index n = A_.rows();
  if (B_.rows() != n || C_.cols() != n || D_.rows() != C_.rows() ||
      D_.cols() != B_.cols()) {
    throw DimensionError("incompatible realization: A " + shape(A_) + ", B " +
                         shape(B_) + ", C " + shape(C_) + ", D " + shape(D_));
  }
}

StateSpaceSystem StateSpaceSystem::gain(const Matrix& D) {
  return StateSpaceSystem(Matrix(0, 0), Matrix(0, D.cols()), Matrix(D.rows(), 0), D);
}

GeneralizedPlant::GeneralizedPlant(PlantMatrices m) : m_(std::move(m)) {
  dims_.n = m_.A.rows();
  dims_.m1 = m_.B1.cols();
  dims_.m2 = m_.B2.cols();
  dims_.p1 = m_.C1.rows();
  dims_.p2 = m_.C2.rows();
  const auto& d = dims_;
  expect_shape("A", m_.A, d.n, d.n);
  expect_shape("B1", m_.B1, d.n, d.m1);
  expect_shape("B2", m_.B2, d.n, d.m2);
  expect_shape("C1", m_.C1, d.p1, d.n);
  expect_shape("C2", m_.C2, d.p2, d.n);
  expect_shape("D11", m_.D11, d.p1, d.m1);
  expect_shape("D12", m_.D12, d.p1, d.m2);
  expect_shape("D21", m_.D21, d.p2, d.m1);
  expect_shape("D22", m_.D22, d.p2, d.m2);
}

StateSpaceSystem GeneralizedPlant::performance_channel() const {
  return StateSpaceSystem(m_.A, m_.B1, m_.C1, m_.D11);
}

ControllerParams::ControllerParams(ControllerDims dims, Vector theta)
    : dims_(dims), theta_(std::move(theta)) {
  if (dims_.order < 0 || dims_.inputs < 0 || dims_.outputs < 0) {
    throw DimensionError("negative controller dimension");
  }
  if (theta_.size() != dims_.parameter_count()) {
    throw DimensionError("controller parameter vector has length " +
                         std::to_string(theta_.size()) + ", expected " +
                         std::to_string(dims_.parameter_count()));
  }
}

ControllerParams ControllerParams::zero(ControllerDims dims) {
  return ControllerParams(dims, Vector::Zero(dims.parameter_count()));
}

ControllerDims ControllerParams::dims_for(const GeneralizedPlant& plant, Index order) {
  return ControllerDims{order, plant.dims().p2, plant.dims().m2};
}

ControllerParams ControllerParams::from_matrices(const Matrix& AK, const Matrix& BK,
                                                 const Matrix& CK, const Matrix& DK) {
  const ControllerDims dims{AK.rows(), DK.cols(), DK.rows()};
  expect_shape("AK", AK, dims.order, dims.order);
  expect_shape("BK", BK, dims.order, dims.inputs);
  expect_shape("CK", CK, dims.outputs, dims.order);
  expect_shape("DK", DK, dims.outputs, dims.inputs);
  Matrix stacked(dims.order + dims.outputs, dims.order + dims.inputs);
  stacked << AK, BK, CK, DK;
  return ControllerParams(dims, pack_stacked(stacked, dims));
}

namespace {

// Offsets of the four blocks inside theta.
struct BlockLayout {
  Index a, b, c, d;
};

BlockLayout layout(const ControllerDims& k) {
  const Index a = 0;
  const Index b = a + k.order * k.order;
  const Index c = b + k.order * k.inputs;
  const Index d = c + k.outputs * k.order;
  return {a, b, c, d};
}

Matrix unpack(const Vector& theta, Index offset, Index rows, Index cols) {
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) M(i, j) = theta[offset + i * cols + j];
  }
  return M;
}

}  // namespace

Matrix ControllerParams::AK() const {
  return unpack(theta_, layout(dims_).a, dims_.order, dims_.order);
}
Matrix ControllerParams::BK() const {
  return unpack(theta_, layout(dims_).b, dims_.order, dims_.inputs);
}
Matrix ControllerParams::CK() const {
  return unpack(theta_, layout(dims_).c, dims_.outputs, dims_.order);
}
Matrix ControllerParams::DK() const {
  return unpack(theta_, layout(dims_).d, dims_.outputs, dims_.inputs);
}

Matrix ControllerParams::stacked() const {
  const Index nk = dims_.order;
  Matrix S(nk + dims_.outputs, nk + dims_.inputs);
  S.topLeftCorner(nk, nk) = AK();
  S.topRightCorner(nk, dims_.inputs) = BK();
  S.bottomLeftCorner(dims_.outputs, nk) = CK();
  S.bottomRightCorner(dims_.outputs, dims_.inputs) = DK();
  return S;
}

Vector ControllerParams::pack_stacked(const Matrix& S, ControllerDims k) {
  expect_shape("stacked controller", S, k.order + k.outputs, k.order + k.inputs);
  Vector theta(k.parameter_count());
  Index pos = 0;
  auto put = [&](const Matrix& block) {
    for (Index i = 0; i < block.rows(); ++i) {
      for (Index j = 0; j < block.cols(); ++j) theta[pos++] = block(i, j);
    }
  };
  put(S.topLeftCorner(k.order, k.order));
  put(S.topRightCorner(k.order, k.inputs));
  put(S.bottomLeftCorner(k.outputs, k.order));
  put(S.bottomRightCorner(k.outputs, k.inputs));
  return theta;
}

StateSpaceSystem ControllerParams::as_system() const {
  return StateSpaceSystem(AK(), BK(), CK(), DK());
}

Interconnection interconnect(const GeneralizedPlant& plant, const ControllerParams& K) {
  const PlantDims d = plant.dims();
  const ControllerDims kd = K.dims();
  if (kd.inputs != d.p2 || kd.outputs != d.m2) {
    throw DimensionError("controller maps " + std::to_string(kd.inputs) + " inputs to " +
                         std::to_string(kd.outputs) + " outputs, plant needs " +
                         std::to_string(d.p2) + " -> " + std::to_string(d.m2));
  }
  const Index nk = kd.order;
  const Index nc = d.n + nk;

  // Augmented plant with controller state absorbed: u~ = [xK'; u], y~ = [xK; y].
  Matrix A_aug = Matrix::Zero(nc, nc);
  A_aug.topLeftCorner(d.n, d.n) = plant.A();
  Matrix B1_aug = Matrix::Zero(nc, d.m1);
  B1_aug.topRows(d.n) = plant.B1();
  Matrix B2_aug = Matrix::Zero(nc, nk + d.m2);
  B2_aug.bottomLeftCorner(nk, nk).setIdentity();
  B2_aug.topRightCorner(d.n, d.m2) = plant.B2();
  Matrix C1_aug = Matrix::Zero(d.p1, nc);
  C1_aug.leftCols(d.n) = plant.C1();
  Matrix D12_aug = Matrix::Zero(d.p1, nk + d.m2);
  D12_aug.rightCols(d.m2) = plant.D12();
  Matrix C2_aug = Matrix::Zero(nk + d.p2, nc);
  C2_aug.topRightCorner(nk, nk).setIdentity();
  C2_aug.bottomLeftCorner(d.p2, d.n) = plant.C2();
  Matrix D21_aug = Matrix::Zero(nk + d.p2, d.m1);
  D21_aug.bottomRows(d.p2) = plant.D21();
  Matrix D22_aug = Matrix::Zero(nk + d.p2, nk + d.m2);
  D22_aug.bottomRightCorner(d.p2, d.m2) = plant.D22();

  const Matrix Kt = K.stacked();

  // Only the I - D_K D22 block of I - K~ D22~ can be singular.
  if (d.m2 > 0) {
    const Matrix loop = Matrix::Identity(d.m2, d.m2) - K.DK() * plant.D22();
    const Eigen::FullPivLU<Matrix> lu(loop);
    if (!lu.isInvertible() || !(lu.rcond() > kTolSingular)) {
      throw WellPosednessError("I - D_K * D22 is singular (rcond " +
                               std::to_string(lu.rcond()) + ")");
    }
  }
  const Index nu = nk + d.m2;
  const Index ny = nk + d.p2;
  const Matrix L = (Matrix::Identity(nu, nu) - Kt * D22_aug).partialPivLu().inverse();
  const Matrix R = (Matrix::Identity(ny, ny) - D22_aug * Kt).partialPivLu().inverse();
  const Matrix M = L * Kt;

  Interconnection out{
      StateSpaceSystem(A_aug + B2_aug * M * C2_aug, B1_aug + B2_aug * M * D21_aug,
                       C1_aug + D12_aug * M * C2_aug, plant.D11() + D12_aug * M * D21_aug),
      B2_aug * L, D12_aug * L, R * C2_aug, R * D21_aug};
  return out;
}

StateSpaceSystem close_loop(const GeneralizedPlant& plant, const ControllerParams& K) {
  return interconnect(plant, K).closed_loop;
}

CVector eigenvalues(const Matrix& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("eigenvalues of a non-square matrix " + shape(M));
  }
  if (M.size() == 0) return CVector(0);
  if (!M.allFinite()) throw EigenFailure("matrix has non-finite entries");
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw EigenFailure("real Schur iteration did not converge");
  }
  return es.eigenvalues();
}

double spectral_abscissa(const Matrix& M) {
  const CVector ev = eigenvalues(M);
  double alpha = -kInf;
  for (Index i = 0; i < ev.size(); ++i) alpha = std::max(alpha, ev[i].real());
  return alpha;
}

bool is_stable(const Matrix& M, double margin) {
  return spectral_abscissa(M) < -margin;
}

CMatrix freq_response(const StateSpaceSystem& sys, double omega) {
  const Index n = sys.states();
  CMatrix G = sys.D().cast<Complex>();
  if (n == 0) return G;
  CMatrix shifted = -sys.A().cast<Complex>();
  shifted.diagonal().array() += Complex(0.0, omega);
  const Eigen::PartialPivLU<CMatrix> lu(shifted);
  if (!(lu.rcond() > 1e-14)) {
    throw SingularFrequency("i*omega is numerically an eigenvalue of A at omega = " +
                            std::to_string(omega));
  }
  G.noalias() += sys.C().cast<Complex>() * lu.solve(sys.B().cast<Complex>());
  return G;
}

}  // namespace hinfstab
