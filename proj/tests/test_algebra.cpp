#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <random>

#include "oracles.hpp"
#include "qhm/algebra.hpp"

using namespace qhm;

namespace {

const ManifoldParams kDesk = ManifoldParams::desk();
const Grid kGrid = Grid::desk();

Element rnd(std::uint64_t seed, double decay = 1.0, int support = -1) {
  RandomOptions o;
  o.support = support;
  return random_element(kDesk, kGrid, seed, decay, o);
}

/// Direct coefficient sum; at the desk config hbar mu = dx and hbar nu = dy, so every shift is one index.
Element star_direct(const Element& a, const Element& b) {
  const int P = kGrid.p_max;
  Element out(kDesk, kGrid);
  for (int n = -P; n <= P; ++n)
    for (int i = 0; i < kGrid.nx; ++i)
      for (int j = 0; j < kGrid.ny; ++j) {
        cd acc = 0.0;
        for (int q = -P; q <= P; ++q) {
          if (n - q < -P || n - q > P) continue;
          acc += oracle::grid_value(a, q, i + (n - q), j + (n - q)) * oracle::grid_value(b, n - q, i - q, j - q);
        }
        out.at(n, i, j) = acc;
      }
  return out;
}

double rel(const Element& a, const Element& b) { return (a - b).max_abs() / std::max(a.max_abs(), b.max_abs()); }

}  // namespace

TEST(Star, MatchesDirectCoefficientSum) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Element a = rnd(100 + s), b = rnd(200 + s);
    EXPECT_LT(rel(star(a, b), star_direct(a, b)), 1e-13);
  }
}

TEST(Star, IdentityIsTwoSidedUnit) {
  const Element one = identity_element(kDesk, kGrid);
  const Element a = rnd(3);
  EXPECT_LT((star(one, a) - a).max_abs(), 1e-15);
  EXPECT_LT((star(a, one) - a).max_abs(), 1e-15);
}

TEST(Star, ReportsDiscardedModulus) {
  const StarReport small = star_with_report(rnd(4, 1.0, 2), rnd(5, 1.0, 2));
  EXPECT_EQ(small.discarded, 0.0);
  const StarReport full = star_with_report(rnd(4), rnd(5));
  EXPECT_GT(full.discarded, 0.0);
  EXPECT_LT((full.product - star(rnd(4), rnd(5))).max_abs(), 1e-15);
}

TEST(Star, ComposedBlocksOnWidenedBand) {
  const Element a = rnd(6, 1.0, 2), b = rnd(7, 1.0, 2);
  BlockOperator A(a, 2), B(b, 2), C(star(a, b), 2);
  const BlockOperator AB = A * B;
  for (int i = 0; i < kGrid.nx; ++i)
    for (int j = 0; j < kGrid.ny; ++j) EXPECT_LT((C.central(i, j) - AB.central(i, j)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Adjoint, IsInvolutiveAndMatchesMatrixAdjoint) {
  const Element a = rnd(8);
  EXPECT_LT((adjoint(adjoint(a)) - a).max_abs(), 1e-15);
  const BlockOperator A(a), As(adjoint(a));
  for (std::size_t n = 0; n < A.fibers().size(); ++n)
    EXPECT_LT((As.fibers()[n] - A.fibers()[n].adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  const Element one = identity_element(kDesk, kGrid);
  EXPECT_EQ((adjoint(one) - one).max_abs(), 0.0);
}

TEST(Apply, IdentityActsTrivially) {
  const Element one = identity_element(kDesk, kGrid);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const StateVector xi = random_state(kDesk, kGrid, 50 + s);
    EXPECT_LT((apply(one, xi) - xi).max_abs(), 1e-15);
  }
}

TEST(Apply, CompositionIsStarProduct) {
  // Elements of support 2 keep every intermediate inside the band.
  const Element a = rnd(9, 1.0, 2), b = rnd(10, 1.0, 2);
  RandomOptions o;
  o.support = 0;
  const StateVector xi = random_field<StateTag>(kDesk, kGrid, 11, 1.0, o);
  const StateVector lhs = apply(star(a, b), xi), rhs = apply(a, apply(b, xi));
  EXPECT_LT(norm(lhs - rhs) / norm(lhs), 1e-13);
}

TEST(OpNorm, SingleSliceEqualsSupNorm) {
  for (int p : {0, 1, -3}) {
    const Element a = rnd(20 + p);
    Element s(kDesk, kGrid);
    std::copy(a.slice(p).begin(), a.slice(p).end(), s.slice(p).begin());
    // M*M is diagonal with near-tied entries here, the slow case for power iteration
    EXPECT_NEAR(op_norm(s), s.slice_max_abs(p), 1e-9 * s.slice_max_abs(p)) << "p = " << p;
    EXPECT_LE(op_norm(s), s.slice_max_abs(p) * (1.0 + 1e-14)) << "p = " << p;
  }
}

TEST(OpNorm, IdentityAndHomogeneity) {
  EXPECT_NEAR(op_norm(identity_element(kDesk, kGrid)), 1.0, 1e-12);
  const Element a = rnd(30);
  const cd lam(-1.3, 0.7);
  EXPECT_NEAR(op_norm(a * lam), std::abs(lam) * op_norm(a), 1e-9 * op_norm(a));
  EXPECT_EQ(op_norm(Element(kDesk, kGrid)), 0.0);
}

TEST(SpectralNorm, MatchesSingularValueDecomposition) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int n = 0; n < 20; ++n) {
    Eigen::MatrixXcd M(9, 9);
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) M(r, c) = cd(nd(rng), nd(rng));
    const double svd = Eigen::JacobiSVD<Eigen::MatrixXcd>(M).singularValues()(0);
    const NormEstimate est = spectral_norm(M);
    EXPECT_NEAR(est.value, svd, 1e-9 * svd);
  }
}

TEST(SpectralNorm, FlagsNonConvergence) {
  // Two singular values equal up to 1e-9: power iteration cannot settle in 3 steps.
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(3, 3);
  M(0, 0) = 1.0;
  M(1, 1) = 1.0 - 1e-9;
  M(2, 2) = 0.5;
  const NormEstimate est = spectral_norm(M, 1e-14, 3);
  EXPECT_FALSE(est.converged);
  EXPECT_NEAR(est.value, 1.0, 1e-12);
}

TEST(BlockOperator, RejectsMismatchedOperands) {
  ManifoldParams other = kDesk;
  other.hbar = 2.0;
  const BlockOperator A(rnd(1)), B(random_element(other, kGrid, 1, 1.0));
  EXPECT_THROW(A * B, Mismatch);
  EXPECT_THROW(BlockOperator(rnd(1), -1), InvalidArgument);
}
