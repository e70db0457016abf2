#include "fsis/scenario.hpp"
#include "fsis/subspaces.hpp"
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

Matrix projector(const Matrix& basis) {
  const Matrix q = oracle::orth(basis);
  return q * q.adjoint();
}

Matrix column(std::initializer_list<Complex> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index k = 0;
  for (auto x : v) m(k++, 0) = x;
  return m;
}

}  // namespace

TEST(SumClosure, NonclosedSum) {
  const auto u = nonclosed_sum().subspace_generators("U");
  const auto v = nonclosed_sum().subspace_generators("V");
  const auto sum = sum_closure_generators(u, v);
  EXPECT_EQ(sum.size(), 5u);
  const auto grid = midpoint_grid(1, 64);
  const auto window = fiber_window(sum);
  for (const auto& node : grid.nodes) EXPECT_EQ(oracle::rank_of(fiberize(sum, node, window).entries), 4);
  EXPECT_EQ(sum_closure_generators(u, {}).size(), 3u);
  EXPECT_THROW(sum_closure_generators(u, u), Error);

  auto renamed = u;
  for (auto& g : renamed) g.name += "_copy";
  EXPECT_EQ(dimension_function(sum_closure_generators(u, renamed), grid, 1e-10).values, dimension_function(u, grid, 1e-10).values);
}

TEST(Intersection, TrivialCases) {
  const Matrix p = projector(column({1, 1, 0}));
  const auto same = intersection_projector_fiber(p, p, 1e-10, 100);
  ASSERT_TRUE(same.converged);
  EXPECT_EQ(same.iterations, 1);
  EXPECT_LT((same.projector - p).norm(), 1e-12);

  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  b(1, 1) = 1.0;
  const auto perp = intersection_projector_fiber(a, b, 1e-10, 100);
  ASSERT_TRUE(perp.converged);
  EXPECT_LT(perp.projector.norm(), 1e-12);
}

TEST(Intersection, PlanesInC3) {
  oracle::Rng rng(51);
  for (int t = 0; t < 50; ++t) {
    const Matrix q = oracle::random_orthonormal(rng, 3, 3);
    Matrix u(3, 2), v(3, 2);
    u << q.col(0), q.col(1);
    v << q.col(0), (q.col(1) + q.col(2)) / std::sqrt(2.0);
    const auto r = intersection_projector_fiber(projector(u), projector(v), 1e-10, 10000);
    ASSERT_TRUE(r.converged);
    EXPECT_LT((r.projector - q.col(0) * q.col(0).adjoint()).norm(), 1e-8);
    EXPECT_LT(r.residual, 1e-8);
  }
}

TEST(Intersection, OutputIsCommonProjection) {
  oracle::Rng rng(52);
  for (int t = 0; t < 50; ++t) {
    const Matrix shared = oracle::random_matrix(rng, 6, 2);
    Matrix u(6, 3), v(6, 4);
    u << shared, oracle::random_matrix(rng, 6, 1);
    v << shared, oracle::random_matrix(rng, 6, 2);
    const Matrix pu = projector(u), pv = projector(v);
    const auto r = intersection_projector_fiber(pu, pv, 1e-10, 100000);
    ASSERT_TRUE(r.converged);
    const Matrix& q = r.projector;
    EXPECT_LT((q * q - q).norm(), 1e-9);
    EXPECT_LT((q - q.adjoint()).norm(), 1e-9);
    EXPECT_LT((pu * q - q).norm(), 1e-9);
    EXPECT_LT((pv * q - q).norm(), 1e-9);
    EXPECT_NEAR(q.trace().real(), 2.0, 1e-9);
  }
}

TEST(Intersection, NearParallelIsUnconverged) {
  const double c = 1.0 - 1e-7;
  Matrix u(3, 1), v(3, 1);
  u << 1, 0, 0;
  v << c, std::sqrt(1 - c * c), 0;
  const auto r = intersection_projector_fiber(projector(u), projector(v), 1e-10, 10000);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.projector.size(), 0);
}

TEST(Intersection, RejectsNonProjections) {
  EXPECT_THROW(intersection_projector_fiber(Matrix::Identity(2, 2) * 2.0, Matrix::Identity(2, 2), 1e-10, 10), Error);
}

TEST(Ominus, NonclosedSumMatchesHandBuiltGenerators) {
  const auto u = nonclosed_sum().subspace_generators("U");
  const auto v = nonclosed_sum().subspace_generators("V");
  const auto phi = nonclosed_sum().subspace_generators("Phi");
  const auto window = fiber_window(sum_closure_generators(u, v));
  const Tolerances tol{.max_iter = 1000000};
  for (const auto& node : midpoint_grid(1, 32).nodes) {
    const auto r = ominus_fiber(fiberize(u, node, window), fiberize(v, node, window), tol);
    ASSERT_TRUE(r.determinate);
    EXPECT_EQ(r.rank, 2u);
    EXPECT_LT((r.basis * r.basis.adjoint() - fiber_projection(fiberize(phi, node, window), 1e-10)).norm(), 1e-9);
  }
}

TEST(Ominus, DegenerateSides) {
  oracle::Rng rng(53);
  const Matrix u = oracle::random_matrix(rng, 5, 2);
  const auto none = ominus_fiber(u, Matrix::Zero(5, 1), 1e-10, 1e-10, 1000);
  ASSERT_TRUE(none.determinate);
  EXPECT_EQ(none.rank, 2u);
  EXPECT_LT((none.basis * none.basis.adjoint() - projector(u)).norm(), 1e-12);

  Matrix v(5, 3);
  v << u, oracle::random_matrix(rng, 5, 1);
  const auto all = ominus_fiber(u, v, 1e-10, 1e-10, 100000);
  ASSERT_TRUE(all.determinate);
  EXPECT_EQ(all.rank, 0u);
}

TEST(Ominus, EnlargingVNeverGrowsComplement) {
  oracle::Rng rng(54);
  for (int t = 0; t < 30; ++t) {
    const Matrix shared = oracle::random_matrix(rng, 6, 1);
    Matrix u(6, 3), v(6, 2), v_big(6, 3);
    u << shared, oracle::random_matrix(rng, 6, 2);
    v << shared, oracle::random_matrix(rng, 6, 1);
    v_big << v, u.col(1);
    const auto small = ominus_fiber(u, v, 1e-10, 1e-10, 1000000);
    const auto big = ominus_fiber(u, v_big, 1e-10, 1e-10, 1000000);
    ASSERT_TRUE(small.determinate && big.determinate);
    EXPECT_LE(big.rank, small.rank);
  }
}

TEST(Dixmier, KnownAngles) {
  const Matrix e0 = column({1, 0}), e1 = column({0, 1});
  EXPECT_EQ(dixmier_fiber(e0, e0), 1.0);
  EXPECT_EQ(dixmier_fiber(e0, e1), 0.0);
  for (double theta : {0.1, 0.7, 1.3, 2.9}) {
    const Matrix line = column({std::cos(theta), std::sin(theta)});
    EXPECT_NEAR(dixmier_fiber(e0, line), std::abs(std::cos(theta)), 1e-12);
  }
  EXPECT_EQ(dixmier_fiber(e0, Matrix(2, 0)), 0.0);
}

TEST(Friedrichs, NonclosedSumPerNode) {
  const auto u = nonclosed_sum().subspace_generators("U");
  const auto v = nonclosed_sum().subspace_generators("V");
  const auto window = fiber_window(sum_closure_generators(u, v));
  const Tolerances tol{.max_iter = 1000000};
  for (const auto& node : midpoint_grid(1, 64).nodes) {
    const auto f = friedrichs_fiber(fiberize(u, node, window), fiberize(v, node, window), tol);
    ASSERT_TRUE(f.determinate);
    EXPECT_NEAR(f.friedrichs, std::abs(std::cos(2 * std::numbers::pi * node.omega[0])), 1e-9);
    EXPECT_EQ(f.intersection_rank, 1u);
    EXPECT_NEAR(f.dixmier, 1.0, 1e-12);
  }
}

TEST(Friedrichs, TrivialIntersectionEqualsDixmier) {
  oracle::Rng rng(55);
  for (int t = 0; t < 50; ++t) {
    const Matrix u = oracle::random_matrix(rng, 6, 2), v = oracle::random_matrix(rng, 6, 2);
    const auto f = friedrichs_fiber(u, v, Tolerances{.max_iter = 1000000});
    ASSERT_TRUE(f.determinate);
    EXPECT_NEAR(f.friedrichs, f.dixmier, 1e-9);
  }
}

TEST(Friedrichs, RandomAgainstPrincipalAngles) {
  oracle::Rng rng(56);
  for (int t = 0; t < 200; ++t) {
    const Matrix shared = oracle::random_matrix(rng, 8, t % 3);
    Matrix u(8, shared.cols() + 2), v(8, shared.cols() + 3);
    u << shared, oracle::random_matrix(rng, 8, 2);
    v << shared, oracle::random_matrix(rng, 8, 3);
    const Matrix fu = oracle::redundant_frame(rng, u, 1), fv = oracle::redundant_frame(rng, v, 2);
    const auto f = friedrichs_fiber(fu, fv, Tolerances{.max_iter = 1000000});
    ASSERT_TRUE(f.determinate);
    EXPECT_NEAR(f.friedrichs, oracle::friedrichs_cosine(fu, fv), 1e-9);
    EXPECT_LE(f.friedrichs, f.dixmier);
    const auto swapped = friedrichs_fiber(fv, fu, Tolerances{.max_iter = 1000000});
    EXPECT_NEAR(swapped.friedrichs, f.friedrichs, 1e-10);
    EXPECT_NEAR(swapped.dixmier, f.dixmier, 1e-10);
  }
}

TEST(Friedrichs, FrameFormulaIsFrameIndependent) {
  oracle::Rng rng(57);
  for (int t = 0; t < 100; ++t) {
    const Matrix x = oracle::random_matrix(rng, 6, 2), xp = oracle::random_matrix(rng, 6, 2);
    const Matrix tx = oracle::random_matrix(rng, 2, 3), txp = oracle::random_matrix(rng, 2, 2);
    EXPECT_NEAR(friedrichs_frame_formula(x, xp, 1e-10), friedrichs_frame_formula(x * tx, xp * txp, 1e-10), 1e-9);
  }
}

TEST(Verdict, Thresholds) {
  EXPECT_EQ(closedness_verdict(0.5, 1e-4).verdict, Verdict::closed);
  EXPECT_EQ(closedness_verdict(0.9999811752826011, 1e-4).verdict, Verdict::not_closed);
  EXPECT_EQ(closedness_verdict(1.0 - 5e-5, 1e-4).verdict, Verdict::not_closed);
  EXPECT_EQ(closedness_verdict(0.9999811752826011, 1e-4).caveat, "grid max >= 1 - eps: ess-sup likely 1");
  EXPECT_STREQ(to_string(Verdict::indeterminate), "Indeterminate");
}

TEST(AngleReport, NonclosedSumAggregate) {
  SubspacePair pair{nonclosed_sum().subspace_generators("U"), nonclosed_sum().subspace_generators("V")};
  const auto r = friedrichs_angle(pair, midpoint_grid(1, 512), nonclosed_sum().tolerances);
  EXPECT_NEAR(r.friedrichs, 0.9999811752826011, 1e-9);  // cos(pi/512)
  EXPECT_EQ(r.verdict.verdict, Verdict::not_closed);
  double max_node = 0.0;
  for (const auto& n : r.nodes) max_node = std::max(max_node, n.fiber.friedrichs);
  EXPECT_EQ(r.friedrichs, max_node);
}

TEST(AngleReport, DefaultIterationCapIsIndeterminate) {
  SubspacePair pair{nonclosed_sum().subspace_generators("U"), nonclosed_sum().subspace_generators("V")};
  const auto r = friedrichs_angle(pair, midpoint_grid(1, 512), Tolerances{});
  EXPECT_EQ(r.verdict.verdict, Verdict::indeterminate);
  EXPECT_FALSE(r.indeterminate_nodes.empty());
}

TEST(AngleReport, DisjointAndEqualSubspacesAreClosed) {
  const auto grid = midpoint_grid(1, 16);
  const auto& s = nonclosed_sum();
  SubspacePair disjoint{{s.generator("phi2")}, {s.generator("phi0")}};
  const auto a = friedrichs_angle(disjoint, grid, s.tolerances);
  EXPECT_EQ(a.friedrichs, 0.0);
  EXPECT_EQ(a.verdict.verdict, Verdict::closed);

  SubspacePair same{s.subspace_generators("U"), s.subspace_generators("U")};
  const auto b = friedrichs_angle(same, grid, s.tolerances);
  EXPECT_EQ(b.friedrichs, 0.0);
  EXPECT_EQ(b.verdict.verdict, Verdict::closed);
}
