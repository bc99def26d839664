#pragma once

#include <Eigen/Dense>

#include <complex>
#include <limits>

#include "hinfstab/errors.hpp"

namespace hinfstab {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative singularity threshold for I - D_K * D22 (reciprocal condition).
inline constexpr double kTolSingular = 1e-12;

/// Continuous-time realization (A, B, C, D). A state dimension of zero is
/// allowed and describes the static gain D.
class StateSpaceSystem {
 public:
  StateSpaceSystem(Matrix A, Matrix B, Matrix C, Matrix D);

  static StateSpaceSystem gain(const Matrix& D);

  const Matrix& A() const noexcept { return A_; }
  const Matrix& B() const noexcept { return B_; }
  const Matrix& C() const noexcept { return C_; }
  const Matrix& D() const noexcept { return D_; }

  Index states() const noexcept { return A_.rows(); }
  Index inputs() const noexcept { return D_.cols(); }
  Index outputs() const noexcept { return D_.rows(); }

 private:
  Matrix A_, B_, C_, D_;
};

struct PlantDims {
  Index n = 0;   // states
  Index m1 = 0;  // exogenous inputs w
  Index m2 = 0;  // control inputs u
  Index p1 = 0;  // regulated outputs z
  Index p2 = 0;  // measured outputs y

  friend bool operator==(const PlantDims&, const PlantDims&) = default;
};

struct PlantMatrices {
  Matrix A, B1, B2, C1, C2, D11, D12, D21, D22;
};

/// Partitioned plant
///   x' = A x  + B1 w  + B2 u
///   z  = C1 x + D11 w + D12 u
///   y  = C2 x + D21 w + D22 u
class GeneralizedPlant {
 public:
  /// Throws DimensionMismatch naming the first inconsistent block.
  explicit GeneralizedPlant(PlantMatrices m);

  const PlantMatrices& matrices() const noexcept { return m_; }
  const Matrix& A() const noexcept { return m_.A; }
  const Matrix& B1() const noexcept { return m_.B1; }
  const Matrix& B2() const noexcept { return m_.B2; }
  const Matrix& C1() const noexcept { return m_.C1; }
  const Matrix& C2() const noexcept { return m_.C2; }
  const Matrix& D11() const noexcept { return m_.D11; }
  const Matrix& D12() const noexcept { return m_.D12; }
  const Matrix& D21() const noexcept { return m_.D21; }
  const Matrix& D22() const noexcept { return m_.D22; }

  PlantDims dims() const noexcept { return dims_; }

  /// The open-loop w -> z channel (A, B1, C1, D11).
  StateSpaceSystem performance_channel() const;

 private:
  PlantMatrices m_;
  PlantDims dims_;
};

struct ControllerDims {
  Index order = 0;    // n_K
  Index inputs = 0;   // measured outputs of the plant (p2)
  Index outputs = 0;  // control inputs of the plant (m2)

  Index parameter_count() const noexcept {
    return order * order + order * inputs + outputs * order + outputs * inputs;
  }

  friend bool operator==(const ControllerDims&, const ControllerDims&) = default;
};

/// Fixed-order controller
///   xK' = A_K xK + B_K y
///   u   = C_K xK + D_K y
/// stored as a flat parameter vector: A_K, B_K, C_K, D_K, each row-major.
class ControllerParams {
 public:
  /// Empty static controller (no states, no channels).
  ControllerParams() = default;
  ControllerParams(ControllerDims dims, Vector theta);

  static ControllerParams zero(ControllerDims dims);
  static ControllerParams from_matrices(const Matrix& AK, const Matrix& BK,
                                        const Matrix& CK, const Matrix& DK);
  /// Dimensions matching `plant` for a controller of the given order.
  static ControllerDims dims_for(const GeneralizedPlant& plant, Index order);

  const ControllerDims& dims() const noexcept { return dims_; }
  Index order() const noexcept { return dims_.order; }
  const Vector& theta() const noexcept { return theta_; }

  Matrix AK() const;
  Matrix BK() const;
  Matrix CK() const;
  Matrix DK() const;

  /// [[A_K, B_K], [C_K, D_K]], shape (n_K + m2) x (n_K + p2).
  Matrix stacked() const;
  /// Inverse of stacked(): row-major packing of the four blocks.
  static Vector pack_stacked(const Matrix& stacked, ControllerDims dims);

  StateSpaceSystem as_system() const;

  friend bool operator==(const ControllerParams& a, const ControllerParams& b) {
    return a.dims_ == b.dims_ && a.theta_ == b.theta_;
  }

 private:
  ControllerDims dims_{};
  Vector theta_{Vector(0)};
};

/// Closed loop together with the factors that map a perturbation dK of the
/// stacked controller matrix onto the closed-loop realization:
///   dA_CL = state_in  * dK * state_out
///   dB_CL = state_in  * dK * input_out
///   dC_CL = output_in * dK * state_out
///   dD_CL = output_in * dK * input_out
struct Interconnection {
  StateSpaceSystem closed_loop;
  Matrix state_in;
  Matrix output_in;
  Matrix state_out;
  Matrix input_out;
};

/// Lower linear-fractional closure of `plant` with `K`, honoring D22.
/// Throws WellPosednessError when I - D_K * D22 is numerically singular.
Interconnection interconnect(const GeneralizedPlant& plant, const ControllerParams& K);

/// Realization of T_zw with n + n_K states; its A-block is A_CL.
StateSpaceSystem close_loop(const GeneralizedPlant& plant, const ControllerParams& K);

/// All eigenvalues of a real square matrix, in no particular order.
CVector eigenvalues(const Matrix& M);

/// max Re(lambda) over the spectrum; -inf for an empty matrix.
double spectral_abscissa(const Matrix& M);

/// spectral_abscissa(M) < -margin.
bool is_stable(const Matrix& M, double margin = 0.0);

/// C (i omega I - A)^{-1} B + D.
CMatrix freq_response(const StateSpaceSystem& sys, double omega);

}  // namespace hinfstab
