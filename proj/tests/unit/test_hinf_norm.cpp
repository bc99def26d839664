#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <iomanip>

#include "hinfstab/hinf_norm.hpp"
#include "oracles.hpp"

using namespace hinfstab;
namespace ht = hinfstab::testing;

namespace {

Matrix S(double v) { return Matrix::Constant(1, 1, v); }

StateSpaceSystem resonant() {
  Matrix A(2, 2);
  A << 0, 1, -1, -0.1;
  Matrix B(2, 1);
  B << 0, 1;
  Matrix C(1, 2);
  C << 1, 0;
  return StateSpaceSystem(A, B, C, S(0));
}

}  // namespace

TEST(HinfNorm, PureGainIsAttainedAtInfinity) {
  const NormResult r = hinf_norm(StateSpaceSystem::gain(S(3)));
  EXPECT_DOUBLE_EQ(r.value, 3.0);
  EXPECT_TRUE(r.attained_at_infinity);
  EXPECT_EQ(r.peak_omega, kInf);
}

TEST(HinfNorm, FirstOrderLagPeaksAtDc) {
  const NormResult r = hinf_norm(StateSpaceSystem(S(-1), S(1), S(1), S(0)));
  EXPECT_NEAR(r.value, 1.0, 1e-12);
  EXPECT_EQ(r.peak_omega, 0.0);
  EXPECT_FALSE(r.attained_at_infinity);
}

TEST(HinfNorm, LightlyDampedResonance) {
  const StateSpaceSystem sys = resonant();
  const NormResult r = hinf_norm(sys);
  double w_grid = 0.0;
  const double grid = ht::grid_hinf_dense(sys, 1e-3, 1e3, 1000000, &w_grid);
  EXPECT_NEAR(r.value, 10.0125, 1e-4);
  EXPECT_NEAR(r.value / grid - 1.0, 0.0, 1e-4);
  EXPECT_GE(r.value, grid * (1.0 - 1e-12));
  EXPECT_NEAR(r.peak_omega, std::sqrt(0.995), 1e-5);  // sqrt(1 - 2 zeta^2)
  EXPECT_NEAR(r.peak_omega, w_grid, 1e-4);
}

TEST(HinfNorm, HighPassPeaksAtInfinity) {
  // s / (s + 1) = 1 - 1 / (s + 1): supremum 1 approached as w -> infinity.
  const NormResult r = hinf_norm(StateSpaceSystem(S(-1), S(1), S(-1), S(1)));
  EXPECT_NEAR(r.value, 1.0, 1e-12);
  EXPECT_TRUE(r.attained_at_infinity);
}

TEST(HinfNorm, UnstableThrows) {
  EXPECT_THROW(hinf_norm(StateSpaceSystem(S(1), S(1), S(1), S(0))), UnstableSystem);
  Matrix osc(2, 2);
  osc << 0, 1, -1, 0;
  EXPECT_THROW(hinf_norm(StateSpaceSystem(osc, Matrix::Ones(2, 1), Matrix::Ones(1, 2), S(0))),
               UnstableSystem);
}

TEST(HinfNorm, EmptyChannels) {
  const StateSpaceSystem sys(S(-1), Matrix(1, 0), Matrix(1, 1), Matrix(1, 0));
  EXPECT_EQ(hinf_norm(sys).value, 0.0);
}

TEST(HinfNorm, RandomSystemsAgainstGrid) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const ht::ModalSystem m = ht::random_modal_system(rng, 2 + trial % 7, 1 + trial % 3,
                                                      1 + (trial / 3) % 3);
    const double grid = ht::grid_hinf(m, 1e-4, 1e5, 200000);
    const double v = hinf_norm(m.sys).value;
    EXPECT_NEAR(v / grid - 1.0, 0.0, 1e-4) << "trial " << trial;
    // The grid is a lower bound on the supremum; the result may sit up to rtol below it.
    EXPECT_GE(v, grid * (1.0 - kDefaultNormRtol)) << std::setprecision(17) << v << " " << grid;
  }
}

TEST(HinfNorm, LevelSetCertificate) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const ht::ModalSystem m = ht::random_modal_system(rng, 4, 2, 2);
    const NormResult r = hinf_norm(m.sys, 1e-7);
    EXPECT_TRUE(level_crossings(m.sys, r.value * (1.0 + 1e-6)).empty());
    if (!r.attained_at_infinity) {
      EXPECT_FALSE(level_crossings(m.sys, r.value * (1.0 - 1e-6)).empty());
    }
  }
}

TEST(SigmaMaxAt, Examples) {
  const SingularTriple t = sigma_max_at(StateSpaceSystem::gain(S(3)), 2.0);
  EXPECT_DOUBLE_EQ(t.value, 3.0);
  EXPECT_NEAR(std::abs(t.u[0]), 1.0, 1e-15);
  EXPECT_EQ(t.v[0], Complex(1.0, 0.0));

  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 2, 5;
  const SingularTriple d = sigma_max_at(StateSpaceSystem::gain(D), 0.0);
  EXPECT_DOUBLE_EQ(d.value, 5.0);
  EXPECT_NEAR(std::abs(d.u[1]), 1.0, 1e-15);
  EXPECT_EQ(d.v[1], Complex(1.0, 0.0));
  EXPECT_EQ(d.v[0], Complex(0.0, 0.0));
}

TEST(SigmaMaxAt, MatchesFullSvd) {
  std::mt19937_64 rng(23);
  const ht::ModalSystem m = ht::random_modal_system(rng, 4, 2, 2);
  const SingularTriple t = sigma_max_at(m.sys, 1.0);
  const CMatrix G = freq_response(m.sys, 1.0);
  const Eigen::JacobiSVD<CMatrix> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
  EXPECT_NEAR(t.value, svd.singularValues()[0], 1e-10);
  EXPECT_LE((G * t.v - t.value * t.u).norm(), 1e-10);
  EXPECT_NEAR(t.u.norm(), 1.0, 1e-12);
  EXPECT_NEAR(t.v.norm(), 1.0, 1e-12);
}

TEST(LevelSetHamiltonian, ImaginaryEigenvaluesAreCrossings) {
  const StateSpaceSystem sys = resonant();
  const double gamma = 5.0;
  const Matrix H = level_set_hamiltonian(sys, gamma);
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(H, false).eigenvalues();
  int crossings = 0;
  for (Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i].real()) < 1e-9 && ev[i].imag() > 0) {
      ++crossings;
      EXPECT_NEAR(singular_values_at(sys, ev[i].imag())[0], gamma, 1e-8);
    }
  }
  EXPECT_EQ(crossings, 2);
  EXPECT_EQ(level_crossings(sys, gamma).size(), 2u);
}

TEST(LevelSetHamiltonian, RequiresGammaAboveFeedthrough) {
  EXPECT_THROW(level_set_hamiltonian(StateSpaceSystem(S(-1), S(1), S(1), S(2)), 1.5), Error);
}
