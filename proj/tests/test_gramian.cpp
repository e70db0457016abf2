#include "fsis/gramian.hpp"
#include "fsis/scenario.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fsis;
using dsl::GeneratorSpec;

namespace {

const Scenario& nonclosed_sum() {
  static const Scenario s = load_scenario(std::filesystem::path(FSIS_SCENARIO_DIR) / "nonclosed_sum.json");
  return s;
}

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) m(k, k) = x, ++k;
  return m;
}

}  // namespace

TEST(Gramian, NonclosedSumSuppliedFrames) {
  const auto phi = nonclosed_sum().subspace_generators("Phi");
  const auto phi_prime = nonclosed_sum().subspace_generators("PhiPrime");
  const auto window = merge_windows(fiber_window(phi), fiber_window(phi_prime));
  for (const auto& node : midpoint_grid(1, 64).nodes) {
    const auto f = fiberize(phi, node, window);
    const auto fp = fiberize(phi_prime, node, window);
    EXPECT_LT((gramian_fiber(f).matrix - Matrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LT(std::abs(gramian_fiber(fp).matrix(0, 0) - 1.0), 1e-12);
    const Matrix cross = cross_gramian_fiber(f, fp).matrix;
    ASSERT_EQ(cross.rows(), 1);
    ASSERT_EQ(cross.cols(), 2);
    EXPECT_NEAR(cross(0, 0).real(), std::cos(2 * std::numbers::pi * node.omega[0]), 1e-12);
    EXPECT_EQ(cross(0, 1), Complex(0.0, 0.0));
  }
}

TEST(Gramian, ZeroColumnGivesZeroRowAndColumn) {
  Matrix f(3, 2);
  f << 1, 0, 2, 0, 3, 0;
  const FiberMatrix fm{GridNode{0, 1, {0.5}}, FiberWindow{1, {{0}, {1}, {2}}}, f};
  const Matrix g = gramian_fiber(fm).matrix;
  EXPECT_EQ(g(0, 0), Complex(14.0, 0.0));
  EXPECT_TRUE(g.row(1).isZero(0.0));
  EXPECT_TRUE(g.col(1).isZero(0.0));
}

TEST(Gramian, CrossGramianEntries) {
  oracle::Rng rng(41);
  const FiberWindow w{1, {{0}, {1}, {2}, {3}, {4}}};
  for (int t = 0; t < 50; ++t) {
    const FiberMatrix phi{GridNode{0, 1, {0.5}}, w, oracle::random_matrix(rng, 5, 3)};
    const FiberMatrix psi{GridNode{0, 1, {0.5}}, w, oracle::random_matrix(rng, 5, 4)};
    const Matrix g = cross_gramian_fiber(phi, psi).matrix;
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) EXPECT_LT(std::abs(g(i, j) - psi.entries.col(i).dot(phi.entries.col(j))), 1e-12);
    EXPECT_LT((cross_gramian_fiber(phi, phi).matrix - gramian_fiber(phi).matrix).norm(), 1e-12);
    EXPECT_LT((gramian_fiber(phi).matrix - phi.entries.adjoint() * phi.entries).norm(), 1e-12);
  }
}

TEST(Gramian, CrossGramianRankBound) {
  oracle::Rng rng(42);
  for (int t = 0; t < 50; ++t) {
    const Matrix a = oracle::random_matrix(rng, 6, 2) * oracle::random_matrix(rng, 2, 4);
    const Matrix b = oracle::random_matrix(rng, 6, 3);
    const FiberWindow w{1, {{0}, {1}, {2}, {3}, {4}, {5}}};
    const FiberMatrix fa{GridNode{0, 1, {0.5}}, w, a}, fb{GridNode{0, 1, {0.5}}, w, b};
    EXPECT_LE(oracle::rank_of(cross_gramian_fiber(fa, fb).matrix), std::min(oracle::rank_of(a), oracle::rank_of(b)));
  }
}

TEST(Gramian, MismatchedFibersRejected) {
  const FiberMatrix a{GridNode{0, 1, {0.5}}, FiberWindow{1, {{0}}}, Matrix::Ones(1, 1)};
  const FiberMatrix b{GridNode{0, 1, {0.5}}, FiberWindow{1, {{1}}}, Matrix::Ones(1, 1)};
  const FiberMatrix c{GridNode{1, 1, {0.7}}, FiberWindow{1, {{0}}}, Matrix::Ones(1, 1)};
  EXPECT_THROW(cross_gramian_fiber(a, b), Error);
  EXPECT_THROW(cross_gramian_fiber(a, c), Error);
}

TEST(Spectrum, KnownMatrices) {
  const RealVector id = hermitian_spectrum(Matrix::Identity(2, 2));
  EXPECT_EQ(id(0), 1.0);
  EXPECT_EQ(id(1), 1.0);
  const RealVector d = hermitian_spectrum(diag({4, 0, 0.25}));
  EXPECT_NEAR(d(0), 0.0, 1e-15);
  EXPECT_NEAR(d(1), 0.25, 1e-15);
  EXPECT_NEAR(d(2), 4.0, 1e-15);
  const double theta = 0.7;
  Matrix row(1, 2);
  row << std::cos(theta), 0.0;
  const RealVector r = psd_spectrum(row.adjoint() * row);
  EXPECT_NEAR(r(0), 0.0, 1e-15);
  EXPECT_NEAR(r(1), std::cos(theta) * std::cos(theta), 1e-15);
}

TEST(Spectrum, RejectsNonHermitianAndNegative) {
  Matrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(hermitian_spectrum(m), NumericalError);
  EXPECT_THROW(psd_spectrum(diag({1, -1e-6})), NumericalError);
  const RealVector clamped = psd_spectrum(diag({1, -1e-14}));
  EXPECT_EQ(clamped(0), 0.0);
}

TEST(Spectrum, TransferBetweenProducts) {
  oracle::Rng rng(43);
  for (int t = 0; t < 100; ++t) {
    const Matrix g = oracle::random_matrix(rng, 5, 2) * oracle::random_matrix(rng, 2, 3);
    const auto a = oracle::nonzero_eigenvalues(g * g.adjoint(), 1e-10);
    const auto b = oracle::nonzero_eigenvalues(g.adjoint() * g, 1e-10);
    ASSERT_EQ(a.size(), b.size());
    const RealVector la = psd_spectrum(g * g.adjoint()), lb = psd_spectrum(g.adjoint() * g);
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_NEAR(la(la.size() - 1 - static_cast<Eigen::Index>(k)), lb(lb.size() - 1 - static_cast<Eigen::Index>(k)), 1e-10 * la(la.size() - 1));
    }
  }
}

TEST(PinvSqrt, Basics) {
  EXPECT_LT((pinv_sqrt(Matrix::Identity(3, 3), 1e-10) - Matrix::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LT((pinv_sqrt(diag({4, 0}), 1e-10) - diag({0.5, 0})).norm(), 1e-15);
}

TEST(PinvSqrt, ProjectsOntoRange) {
  oracle::Rng rng(44);
  for (int t = 0; t < 100; ++t) {
    const Matrix b = oracle::random_matrix(rng, 6, 3);
    const Matrix g = b * b.adjoint();
    const Matrix s = pinv_sqrt(g, 1e-10);
    const Matrix q = oracle::orth(b);
    EXPECT_LT((s * g * s - q * q.adjoint()).norm(), 1e-10);
  }
}

TEST(Parseval, OrthonormalColumnsUnchanged) {
  const auto u = nonclosed_sum().subspace_generators("U");
  const auto grid = midpoint_grid(1, 16);
  const auto window = fiber_window(u);
  const auto tilde = canonical_parseval(u, grid, 1e-10);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_LT((tilde[i].entries - fiberize(u, grid.nodes[i], window).entries).norm(), 1e-12);
}

TEST(Parseval, HalfIntervalGenerator) {
  const Scenario s = load_scenario(std::filesystem::path(FSIS_SCENARIO_DIR) / "no_riesz.json");
  const auto grid = midpoint_grid(1, 8);
  const auto tilde = canonical_parseval(s.generators, grid, 1e-10);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Complex expected = grid.nodes[i].omega[0] < 0.5 ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
    EXPECT_LT(std::abs(tilde[i].entries(0, 0) - expected), 1e-15);
  }
}

TEST(Parseval, RandomSetsGiveProjections) {
  oracle::Rng rng(45);
  const auto grid = midpoint_grid(1, 32);
  for (int t = 0; t < 20; ++t) {
    const auto gens = oracle::random_sampled_set(rng, 32, 4, 2, 0);
    const auto window = fiber_window(gens);
    const auto tilde = canonical_parseval(gens, grid, 1e-10);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Matrix g = gramian_fiber(tilde[i]).matrix;
      EXPECT_LT((g * g - g).norm(), 1e-10);
      EXPECT_LT((fiber_projection(tilde[i], 1e-10) - fiber_projection(fiberize(gens, grid.nodes[i], window), 1e-10)).norm(), 1e-10);
    }
  }
}

TEST(Parseval, MatchesPinvSqrtForm) {
  oracle::Rng rng(46);
  for (int t = 0; t < 50; ++t) {
    const Matrix f = oracle::redundant_frame(rng, oracle::random_matrix(rng, 6, 2), 1);
    const Matrix via_gramian = f * pinv_sqrt(f.adjoint() * f, 1e-10);
    EXPECT_LT((parseval_frame(f, 1e-10) - via_gramian).norm(), 1e-9);
  }
}

TEST(FrameAnalysis, NoRiesz) {
  const Scenario s = load_scenario(std::filesystem::path(FSIS_SCENARIO_DIR) / "no_riesz.json");
  const auto fa = frame_analysis(s.generators, midpoint_grid(1, 512), 1e-10, 1e-10);
  EXPECT_EQ(fa.frame_lower, 1.0);
  EXPECT_EQ(fa.bessel_bound, 1.0);
  EXPECT_TRUE(fa.is_frame_sequence);
  EXPECT_FALSE(fa.is_riesz);
  EXPECT_EQ(fa.length_estimate, 1u);
}

TEST(FrameAnalysis, NonclosedSumUIsRiesz) {
  const auto fa = frame_analysis(nonclosed_sum().subspace_generators("U"), midpoint_grid(1, 64), 1e-10, 1e-10);
  EXPECT_NEAR(fa.frame_lower, 1.0, 1e-12);
  EXPECT_NEAR(fa.bessel_bound, 1.0, 1e-12);
  EXPECT_TRUE(fa.is_riesz);
  EXPECT_EQ(fa.length_estimate, 3u);
}

TEST(FrameAnalysis, EmptySet) {
  const auto fa = frame_analysis({}, midpoint_grid(1, 8), 1e-10, 1e-10);
  EXPECT_FALSE(fa.is_frame_sequence);
  EXPECT_FALSE(fa.is_riesz);
  EXPECT_FALSE(fa.has_lower_bound);
  EXPECT_EQ(fa.length_estimate, 0u);
}

TEST(FrameAnalysis, BoundsOrderedAndFlagsInvariantUnderMixing) {
  oracle::Rng rng(47);
  const auto grid = midpoint_grid(1, 32);
  for (int t = 0; t < 10; ++t) {
    const auto gens = oracle::random_sampled_set(rng, 32, 4, 2, 0);
    const Matrix mix = oracle::random_matrix(rng, 2, 2);
    std::vector<GeneratorSpec> mixed;
    for (Eigen::Index j = 0; j < 2; ++j) {
      Matrix v = Matrix::Zero(4, 32);
      for (Eigen::Index i = 0; i < 2; ++i) v += mix(i, j) * std::get<dsl::SampledFibers>(gens[static_cast<std::size_t>(i)].body).values;
      mixed.push_back(oracle::sampled_generator("m" + std::to_string(j), 0, v, 32));
    }
    const auto a = frame_analysis(gens, grid, 1e-10, 1e-10);
    const auto b = frame_analysis(mixed, grid, 1e-10, 1e-10);
    EXPECT_LE(a.frame_lower, a.bessel_bound);
    EXPECT_GT(a.frame_lower, 0.0);
    EXPECT_EQ(a.dim_fn.values, b.dim_fn.values);
    EXPECT_EQ(a.is_riesz, b.is_riesz);
  }
}
