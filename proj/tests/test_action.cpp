#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qhm/action.hpp"

using namespace qhm;

namespace {

const ManifoldParams kDesk = ManifoldParams::desk();
const Grid kGrid = Grid::desk();

Element rnd(std::uint64_t seed, double decay = 1.0) { return random_element(kDesk, kGrid, seed, decay); }

cd probe_f(double x, double y) { return cd(std::cos(x), std::sin(two_pi * y)); }

}  // namespace

TEST(Fejer, MatchesWeightedExponentialSum) {
  for (int N : {1, 4, 16, 32})
    for (double t : {0.0, 1e-9, 1e-4, 0.3, 2.0, oracle::pi, two_pi - 1e-7, two_pi, -5.0})
      EXPECT_NEAR(fejer_kernel(N, t), oracle::fejer_direct(N, t), 1e-10 * (N + 1)) << "N=" << N << " t=" << t;
}

TEST(Fejer, HasUnitMeanAndIsNonnegative) {
  const int M = 4096, N = 7;
  double mean = 0.0;
  for (int k = 0; k < M; ++k) {
    const double t = -oracle::pi + two_pi * k / M;
    const double v = fejer_kernel(N, t);
    EXPECT_GE(v, -1e-12);
    mean += v / M;
  }
  EXPECT_NEAR(mean, 1.0, 1e-12);
}

TEST(Flows, AlphaByGridStepIsIndexShift) {
  const Element e = rnd(1);
  const Element s = alpha(e, 2 * kGrid.dx());
  for (int p = -4; p <= 4; ++p)
    for (int i = 0; i < kGrid.nx; ++i)
      for (int j = 0; j < kGrid.ny; ++j)
        ASSERT_NEAR(std::abs(s.at(p, i, j) - oracle::grid_value(e, p, i - 2, j)), 0.0, 1e-14);
}

TEST(Flows, BetaCarriesTheMomentumPhase) {
  const Element e = rnd(2);
  const double s = 3 * kGrid.dy();
  const Element b = beta(e, s);
  for (int p = -4; p <= 4; ++p)
    for (int i = 0; i < kGrid.nx; ++i)
      for (int j = 0; j < kGrid.ny; ++j) {
        const cd expect = std::polar(1.0, p * s * kDesk.c * kGrid.x(i)) * oracle::grid_value(e, p, i, j - 3);
        ASSERT_NEAR(std::abs(b.at(p, i, j) - expect), 0.0, 1e-14);
      }
}

TEST(Flows, GammaIsSlicePhase) {
  const Element e = rnd(3);
  const Element g = gamma(e, 0.7);
  for (int p = -4; p <= 4; ++p)
    for (std::size_t k = 0; k < kGrid.slice_size(); ++k)
      EXPECT_NEAR(std::abs(g.slice(p)[k] - std::polar(1.0, 0.7 * p) * e.slice(p)[k]), 0.0, 1e-15);
}

TEST(Flows, ActComposesInDocumentedOrder) {
  const Element e = rnd(4);
  const GroupPoint g{0.3, -0.2, 1.1};
  EXPECT_LT((act(e, g) - gamma(alpha(beta(e, g.s), g.r), g.t)).max_abs(), 1e-15);
  EXPECT_THROW(alpha(e, std::nan("")), InvalidArgument);
}

TEST(Unitary, InverseUndoes) {
  const StateVector xi = random_state(kDesk, kGrid, 5);
  for (const GroupPoint& g : {GroupPoint{kGrid.dx(), 0, 0}, GroupPoint{-2 * kGrid.dx(), 3 * kGrid.dy(), 0.4},
                              GroupPoint{0.37, 0, 0}, GroupPoint{0, 0.21, 1.0}}) {
    EXPECT_LT(norm(unitary_L_inverse(unitary_L(xi, g), g) - xi) / norm(xi), 1e-12);
    EXPECT_NEAR(norm(unitary_L(xi, g)), norm(xi), 1e-12 * norm(xi));
  }
  // generic shifts in both directions: the x and y interpolants commute only up to the
  // alias tails of the random atoms (about 1e-9)
  const GroupPoint g{0.37, 0.21, -1.0};
  EXPECT_LT(norm(unitary_L_inverse(unitary_L(xi, g), g) - xi) / norm(xi), 1e-8);
}

TEST(Fourier, CoefficientsIsolateSlices) {
  const Element e = rnd(6);
  for (int n = -4; n <= 4; ++n) {
    const Element a = fourier_coeff(e, n);
    for (int p = -4; p <= 4; ++p) EXPECT_EQ(a.slice_max_abs(p), p == n ? e.slice_max_abs(p) : 0.0);
    EXPECT_LT((fourier_coeff_quadrature(e, n, 16) - a).max_abs(), 1e-13);
  }
  EXPECT_THROW(fourier_coeff(e, 7), InvalidArgument);
  EXPECT_THROW(fourier_coeff_quadrature(e, 0, 0), InvalidArgument);
}

TEST(Fourier, CesaroWeights) {
  const Element e = rnd(7);
  const Element s = cesaro(e, 3);
  for (int p = -4; p <= 4; ++p) {
    const double w = std::max(0.0, 1.0 - std::abs(p) / 4.0);
    EXPECT_NEAR(s.slice_max_abs(p), w * e.slice_max_abs(p), 1e-14);
  }
  EXPECT_LT((cesaro(e, 0) - fourier_coeff(e, 0)).max_abs(), 1e-15);
  EXPECT_THROW(cesaro(e, -1), InvalidArgument);
}

TEST(Commutant, ElementsCommuteWithProbesAndCorruptionIsCaught) {
  const Element e = rnd(8);
  const auto r = commutant_residuals(e, probe_f, 1, 1, 4, 9);
  EXPECT_LT(r.v_f, 1e-12);
  EXPECT_LT(r.w_k, 1e-12);
  EXPECT_LT(r.x_r, 1e-12);
  const auto bad = commutant_residuals(corrupted_operator(e, 1e-2, 10), probe_f, 1, 1, 4, 9);
  EXPECT_GT(bad.w_k, 1e-3);
}

TEST(Commutant, RejectsBadProbeCount) { EXPECT_THROW(commutant_residuals(rnd(1), probe_f, 1, 1, 0, 1), InvalidArgument); }

TEST(Smoothing, AdmissibilityIsReported) {
  const Element e = rnd(11);
  EXPECT_THROW(twisted_smooth(e, 0), InvalidArgument);
  try {
    twisted_smooth(e, 16);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& err) {
    EXPECT_NE(std::string(err.what()).find("largest admissible m is 15"), std::string::npos) << err.what();
  }
  EXPECT_NO_THROW(twisted_smooth(e, 15));
}

TEST(Smoothing, PreservesConstantsAndMatchesPointwiseForm) {
  const Element one = identity_element(kDesk, kGrid);
  EXPECT_LT((twisted_smooth(one, 2) - one).max_abs(), 1e-14);
  const Element e = rnd(12);
  const Element s = twisted_smooth(e, 2);
  EXPECT_NEAR(std::abs(twisted_smooth_at(e, 2, kGrid.x(3), kGrid.y(5), 1) - s.at(1, 3, 5)), 0.0, 1e-13);
}
