// Independent reference computations and random instance builders shared by
// the unit tests and the acceptance suite. Nothing here calls the code under
// test; every oracle is a direct SVD / eigen computation.
#pragma once

#include "fsis/common.hpp"
#include "fsis/dsl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using fsis::Matrix;
using fsis::RealVector;
using Rng = std::mt19937_64;

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = fsis::Complex(n(rng), n(rng));
  return m;
}

/// Orthonormal columns spanning a random subspace of the given dimension.
inline Matrix random_orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  if (cols == 0) return Matrix(rows, 0);
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, rows, cols));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

inline Matrix random_unitary(Rng& rng, Eigen::Index n) { return random_orthonormal(rng, n, n); }

/// Redundant spanning set of range(basis): `extra` more columns than
/// basis.cols(), mixed by a random full-rank matrix.
inline Matrix redundant_frame(Rng& rng, const Matrix& basis, Eigen::Index extra) {
  return basis * random_matrix(rng, basis.cols(), basis.cols() + extra);
}

/// Rank with cut `tol` relative to the largest singular value.
inline Eigen::Index rank_of(const Matrix& a, double tol = 1e-9) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const RealVector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > tol * s(0)) ++r;
  return r;
}

/// Orthonormal basis of the range.
inline Matrix orth(const Matrix& a, double tol = 1e-9) {
  if (a.cols() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(rank_of(a, tol));
}

/// Orthonormal basis of the kernel of a (as a map C^cols -> C^rows).
inline Matrix kernel(const Matrix& a, double tol = 1e-9) {
  if (a.rows() == 0) return Matrix::Identity(a.cols(), a.cols());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Eigen::Index r = rank_of(a, tol);
  return svd.matrixV().rightCols(a.cols() - r);
}

/// Brute force: the sampling map x -> Psi* x is injective on range(Phi)
/// iff ker(Psi*) meets range(Phi) only in 0, i.e. the two subspaces have
/// independent bases.
inline bool kernel_trivial_on(const Matrix& phi, const Matrix& psi) {
  const Matrix s = orth(phi);
  const Matrix k = kernel(psi.adjoint());
  if (s.cols() == 0 || k.cols() == 0) return true;
  Matrix both(s.rows(), s.cols() + k.cols());
  both << s, k;
  return rank_of(both) == s.cols() + k.cols();
}

struct Bounds {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Optimal bounds of alpha|x|^2 <= |Psi* x|^2 <= beta|x|^2 on range(Phi),
/// from the compression of Psi Psi* to an orthonormal basis of the range.
inline Bounds projected_frame_bounds(const Matrix& phi, const Matrix& psi) {
  const Matrix q = orth(phi);
  if (q.cols() == 0) return {};
  const Matrix compressed = q.adjoint() * psi * psi.adjoint() * q;
  Eigen::SelfAdjointEigenSolver<Matrix> eig((compressed + compressed.adjoint()) * 0.5);
  return {eig.eigenvalues()(0), eig.eigenvalues()(eig.eigenvalues().size() - 1)};
}

/// Cosines of the principal angles between range(a) and range(b), descending.
inline RealVector principal_cosines(const Matrix& a, const Matrix& b) {
  const Matrix qa = orth(a), qb = orth(b);
  if (qa.cols() == 0 || qb.cols() == 0) return RealVector();
  return Eigen::JacobiSVD<Matrix>(qa.adjoint() * qb).singularValues();
}

/// Friedrichs cosine from principal angles: the largest cosine once the
/// angles equal to 0 (the intersection) are dropped.
inline double friedrichs_cosine(const Matrix& a, const Matrix& b, double one_tol = 1e-8) {
  const RealVector c = principal_cosines(a, b);
  for (Eigen::Index k = 0; k < c.size(); ++k)
    if (c(k) < 1.0 - one_tol) return c(k);
  return 0.0;
}

/// Nonzero eigenvalues (above tol * max) of a Hermitian PSD matrix, ascending.
inline std::vector<double> nonzero_eigenvalues(const Matrix& h, double tol) {
  std::vector<double> out;
  if (h.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> eig((h + h.adjoint()) * 0.5, Eigen::EigenvaluesOnly);
  const RealVector& l = eig.eigenvalues();
  const double cut = tol * std::max(1.0, l(l.size() - 1));
  for (Eigen::Index k = 0; k < l.size(); ++k)
    if (l(k) > cut) out.push_back(l(k));
  return out;
}

/// Generator with fibers given directly on a one-dimensional grid.
inline fsis::dsl::GeneratorSpec sampled_generator(std::string name, std::int64_t first_k, const Matrix& values, std::size_t grid_size) {
  fsis::dsl::SampledFibers body;
  body.dimension = 1;
  body.grid_size = grid_size;
  for (Eigen::Index r = 0; r < values.rows(); ++r) body.window.push_back({first_k + r});
  body.values = values;
  body.source = "<memory>";
  return {std::move(name), std::move(body)};
}

/// Random fiber-valued generator set on a 1-D grid with controllable rank
/// deficiency: `dependent` generators are node-dependent combinations of the
/// independent ones, and each independent generator vanishes on a random
/// stretch of nodes with probability 1/2.
inline std::vector<fsis::dsl::GeneratorSpec> random_sampled_set(Rng& rng, std::size_t grid_size, Eigen::Index window, std::size_t independent,
                                                           std::size_t dependent) {
  const auto nodes = static_cast<Eigen::Index>(grid_size);
  std::vector<Matrix> cols;
  std::uniform_int_distribution<Eigen::Index> pick(0, nodes - 1);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t j = 0; j < independent; ++j) {
    Matrix v = random_matrix(rng, window, nodes);
    if (coin(rng)) {
      const Eigen::Index a = pick(rng), len = pick(rng) / 2;
      for (Eigen::Index t = 0; t < len; ++t) v.col((a + t) % nodes).setZero();
    }
    cols.push_back(std::move(v));
  }
  for (std::size_t j = 0; j < dependent && independent > 0; ++j) {
    Matrix v = Matrix::Zero(window, nodes);
    for (Eigen::Index n = 0; n < nodes; ++n) {
      const Matrix mix = random_matrix(rng, static_cast<Eigen::Index>(independent), 1);
      for (std::size_t i = 0; i < independent; ++i) v.col(n) += mix(static_cast<Eigen::Index>(i), 0) * cols[i].col(n);
    }
    cols.push_back(std::move(v));
  }
  std::vector<fsis::dsl::GeneratorSpec> out;
  for (std::size_t j = 0; j < cols.size(); ++j) out.push_back(sampled_generator("g" + std::to_string(j), 0, cols[j], grid_size));
  return out;
}

}  // namespace oracle
