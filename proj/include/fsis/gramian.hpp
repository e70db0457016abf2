// Gramian and cross-correlation fibers, Hermitian spectra, pseudo-inverse
// square roots, frame bounds and canonical Parseval frames.
#pragma once

#include "fsis/common.hpp"
#include "fsis/fibers.hpp"
#include "fsis/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace fsis {

struct GramianFiber {
  GridNode node;
  Matrix matrix;  // d x d, (i,j) = <fiber_j, fiber_i>
};

struct CrossGramianFiber {
  GridNode node;
  Matrix matrix;  // #Psi x d, (i,j) = <phi fiber_j, psi fiber_i>
};

inline GramianFiber gramian_fiber(const FiberMatrix& f) { return {f.node, f.entries.adjoint() * f.entries}; }

inline CrossGramianFiber cross_gramian_fiber(const FiberMatrix& phi, const FiberMatrix& psi) {
  if (!(phi.window == psi.window)) throw Error("cross gramian of fibers on different windows");
  if (phi.node.index != psi.node.index || phi.node.omega != psi.node.omega)
    throw Error("cross gramian of fibers at different nodes");
  return {phi.node, psi.entries.adjoint() * phi.entries};
}

/// Real eigenvalues of a Hermitian matrix, ascending. Inputs further than
/// 1e-10 (relative to max(1, |G|_max)) from Hermitian are rejected.
inline RealVector hermitian_spectrum(const Matrix& g) {
  if (g.rows() != g.cols()) throw NumericalError("spectrum of a non-square matrix");
  if (g.size() == 0) return RealVector();
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw NumericalError("matrix is not Hermitian");
  return Eigen::SelfAdjointEigenSolver<Matrix>(g, Eigen::EigenvaluesOnly).eigenvalues();
}

namespace detail {

/// Eigenvalues of a PSD matrix with roundoff negatives clamped to 0.
/// Anything below -1e-12 * max(1, lambda_max) signals an upstream bug.
inline void clamp_psd(RealVector& lambda) {
  if (lambda.size() == 0) return;
  const double floor = -1e-12 * std::max(1.0, std::abs(lambda(lambda.size() - 1)));
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda(k) < floor)
      throw NumericalError("Gramian eigenvalue " + format_double(lambda(k)) + " is negative beyond tolerance");
    if (lambda(k) < 0.0) lambda(k) = 0.0;
  }
}

}  // namespace detail

/// Clamped ascending spectrum of a Gramian (PSD by construction).
inline RealVector psd_spectrum(const Matrix& g) {
  RealVector lambda = hermitian_spectrum(g);
  detail::clamp_psd(lambda);
  return lambda;
}

/// (G^dagger)^{1/2}: eigenvalues at or below spec_tol * lambda_max count as 0.
inline Matrix pinv_sqrt(const Matrix& g, double spec_tol) {
  if (g.size() == 0) return g;
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw NumericalError("pinv_sqrt of a non-Hermitian matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  RealVector lambda = eig.eigenvalues();
  detail::clamp_psd(lambda);
  const double cut = spec_tol * lambda(lambda.size() - 1);
  RealVector inv(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) inv(k) = (lambda(k) > cut && lambda(k) > 0.0) ? 1.0 / std::sqrt(lambda(k)) : 0.0;
  const Matrix& u = eig.eigenvectors();
  Matrix out = u * inv.asDiagonal() * u.adjoint();
  return (out + out.adjoint()) * 0.5;
}

/// F (G^dagger)^{1/2} with G = F*F, computed from the SVD F = U S V* as
/// U_r V_r*. r is the numerical rank at rank_tol, so the result agrees with
/// dimension_function. Its Gramian is the projection V_r V_r*.
inline Matrix parseval_frame(const Matrix& f, double rank_tol) {
  if (f.rows() == 0 || f.cols() == 0) return Matrix::Zero(f.rows(), f.cols());
  Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& s = svd.singularValues();
  const double cut = rank_tol * (s(0) > 0.0 ? s(0) : 1.0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return svd.matrixU().leftCols(r) * svd.matrixV().leftCols(r).adjoint();
}

/// Canonical Parseval transform of every node's fiber matrix.
inline std::vector<FiberMatrix> canonical_parseval(std::span<const GeneratorSpec> generators, const FrequencyGrid& grid, double rank_tol) {
  const FiberWindow window = fiber_window(generators);
  return parallel_map(grid.size(), [&](std::size_t i) {
    FiberMatrix f = fiberize(generators, grid.nodes[i], window);
    f.entries = parseval_frame(f.entries, rank_tol);
    return f;
  });
}

/// Spectral summary of one Gramian fiber.
struct NodeSpectrum {
  double lambda_max = 0.0;
  double lambda_min_nonzero = 0.0;  // 0 when no eigenvalue clears the cut
  std::size_t nonzero = 0;
  std::size_t rank = 0;
};

struct FrameAnalysis {
  std::size_t generator_count = 0;
  double bessel_bound = 0.0;         // beta
  double frame_lower = 0.0;          // alpha; 0 when no positive bound was found
  bool has_lower_bound = false;
  bool is_frame_sequence = false;
  bool is_riesz = false;
  double gap_ratio = 0.0;            // alpha / beta
  DimensionFunction dim_fn;
  std::size_t length_estimate = 0;   // max of dim_fn
  std::vector<NodeSpectrum> nodes;
};

/// Frame bounds of the integer translates from the Gramian spectra on the
/// grid. The zero cut is spec_tol times the grid-wide largest eigenvalue.
inline FrameAnalysis frame_analysis(std::span<const GeneratorSpec> generators, const FrequencyGrid& grid, double rank_tol, double spec_tol) {
  FrameAnalysis out;
  out.generator_count = generators.size();
  const FiberWindow window = fiber_window(generators);

  struct Raw {
    RealVector lambda;
    std::size_t rank;
  };
  const auto raw = parallel_map(grid.size(), [&](std::size_t i) {
    const FiberMatrix f = fiberize(generators, grid.nodes[i], window);
    return Raw{psd_spectrum(gramian_fiber(f).matrix), numerical_rank(f.entries, rank_tol)};
  });

  for (const auto& r : raw)
    if (r.lambda.size() > 0) out.bessel_bound = std::max(out.bessel_bound, r.lambda(r.lambda.size() - 1));
  const double cut = spec_tol * out.bessel_bound;

  double alpha = std::numeric_limits<double>::infinity();
  bool riesz = !generators.empty();
  out.nodes.reserve(raw.size());
  out.dim_fn.values.reserve(raw.size());
  for (const auto& r : raw) {
    NodeSpectrum ns;
    ns.rank = r.rank;
    for (Eigen::Index k = 0; k < r.lambda.size(); ++k) {
      if (r.lambda(k) > cut && out.bessel_bound > 0.0) {
        if (ns.nonzero == 0) ns.lambda_min_nonzero = r.lambda(k);
        ++ns.nonzero;
      }
    }
    if (r.lambda.size() > 0) ns.lambda_max = r.lambda(r.lambda.size() - 1);
    if (ns.nonzero > 0) alpha = std::min(alpha, ns.lambda_min_nonzero);
    if (ns.nonzero != generators.size()) riesz = false;
    out.dim_fn.values.push_back(r.rank);
    out.nodes.push_back(ns);
  }

  out.length_estimate = out.dim_fn.max();
  out.has_lower_bound = std::isfinite(alpha);
  out.frame_lower = out.has_lower_bound ? alpha : 0.0;
  out.is_frame_sequence = out.has_lower_bound;
  out.gap_ratio = out.has_lower_bound ? out.frame_lower / out.bessel_bound : 0.0;
  out.is_riesz = riesz && out.is_frame_sequence && out.dim_fn.is_constant();
  return out;
}

}  // namespace fsis
