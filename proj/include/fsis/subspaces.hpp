// Subspace algebra of shift-invariant spaces through their fibers:
// closures of sums, intersections by alternating projections, relative
// orthogonal complements, Dixmier and Friedrichs angles, and closedness of
// sums.
#pragma once

#include "fsis/common.hpp"
#include "fsis/fibers.hpp"
#include "fsis/gramian.hpp"
#include "fsis/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace fsis {

/// Generators of the closure of S(phi) + S(phi'), i.e. phi followed by phi'.
inline std::vector<GeneratorSpec> sum_closure_generators(std::span<const GeneratorSpec> phi, std::span<const GeneratorSpec> phi_prime) {
  std::vector<GeneratorSpec> out(phi.begin(), phi.end());
  std::set<std::string> names;
  for (const auto& g : phi) names.insert(g.name);
  for (const auto& g : phi_prime) {
    if (!names.insert(g.name).second) throw Error("duplicate generator name '" + g.name + "' in sum of subspaces");
    out.push_back(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Intersections
// ---------------------------------------------------------------------------

struct IntersectionResult {
  bool converged = false;
  Matrix projector;      // valid only when converged
  int iterations = 0;
  double residual = 0.0; // last ||Q_{t+1} - Q_t||_F
};

namespace detail {

inline void require_projection(const Matrix& p, const char* name) {
  if (p.rows() != p.cols()) throw Error(std::string(name) + " is not square");
  if ((p - p.adjoint()).norm() > 1e-10) throw Error(std::string(name) + " is not Hermitian");
  if ((p * p - p).norm() > 1e-10) throw Error(std::string(name) + " is not idempotent");
}

/// Projection onto the eigenvectors of a (nearly) projection-valued
/// Hermitian matrix with eigenvalue above 1/2, with those eigenvectors.
inline Matrix round_to_projection(const Matrix& q, Matrix* basis = nullptr) {
  if (q.size() == 0) {
    if (basis) *basis = Matrix(q.rows(), 0);
    return q;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig((q + q.adjoint()) * 0.5);
  const RealVector& lambda = eig.eigenvalues();
  Eigen::Index first = 0;
  while (first < lambda.size() && lambda(first) <= 0.5) ++first;
  Matrix v = eig.eigenvectors().rightCols(lambda.size() - first);
  Matrix p = v * v.adjoint();
  if (basis) *basis = std::move(v);
  return (p + p.adjoint()) * 0.5;
}

}  // namespace detail

/// Projection onto range(P_U) ∩ range(P_V) as the limit of
/// Q_t = (P_U P_V P_U)^t. Convergence is geometric with ratio c^2, c the
/// Friedrichs cosine, so cosines near 1 exhaust max_iter and come back
/// unconverged. A limit that is not fixed by both projections (stalled
/// iteration) is also reported unconverged.
inline IntersectionResult intersection_projector_fiber(const Matrix& p_u, const Matrix& p_v, double conv_eps, int max_iter) {
  detail::require_projection(p_u, "P_U");
  detail::require_projection(p_v, "P_V");
  if (p_u.rows() != p_v.rows()) throw Error("projections of different size");

  IntersectionResult out;
  const Matrix t_raw = p_u * p_v * p_u;
  const Matrix t = (t_raw + t_raw.adjoint()) * 0.5;
  Matrix q = p_u;
  Matrix next(q.rows(), q.cols());
  for (int it = 1; it <= max_iter; ++it) {
    next.noalias() = t * q;
    next = (next + next.adjoint()).eval() * 0.5;
    out.residual = (next - q).norm();
    q.swap(next);
    out.iterations = it;
    if (out.residual < conv_eps) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) return out;

  out.projector = detail::round_to_projection(q);
  if ((p_u * out.projector - out.projector).norm() > 1e-9 || (p_v * out.projector - out.projector).norm() > 1e-9) {
    out.converged = false;
    out.projector = Matrix();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relative orthogonal complements
// ---------------------------------------------------------------------------

struct OminusResult {
  bool determinate = false;
  Matrix basis;  // orthonormal columns spanning J_U ⊖ J_V
  std::size_t rank = 0;
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

/// Orthonormal basis of range(P_U (I - P_cap)).
inline Matrix ominus_basis(const Matrix& p_u, const Matrix& p_cap) {
  const Matrix eye = Matrix::Identity(p_u.rows(), p_u.cols());
  Matrix basis;
  round_to_projection(p_u * (eye - p_cap), &basis);
  return basis;
}

}  // namespace detail

/// J_U(ω) ⊖ J_V(ω) = J_U ∩ (J_U ∩ J_V)^⊥ from the two fiber matrices.
inline OminusResult ominus_fiber(const Matrix& f_u, const Matrix& f_v, double rank_tol, double conv_eps, int max_iter) {
  if (f_u.rows() != f_v.rows()) throw Error("ominus of fibers on different windows");
  const Matrix p_u = fiber_projection(f_u, rank_tol);
  const Matrix p_v = fiber_projection(f_v, rank_tol);
  const IntersectionResult cap = intersection_projector_fiber(p_u, p_v, conv_eps, max_iter);
  OminusResult out;
  out.iterations = cap.iterations;
  out.residual = cap.residual;
  out.determinate = cap.converged;
  if (!cap.converged) return out;
  out.basis = detail::ominus_basis(p_u, cap.projector);
  out.rank = static_cast<std::size_t>(out.basis.cols());
  return out;
}

inline OminusResult ominus_fiber(const FiberMatrix& f_u, const FiberMatrix& f_v, const Tolerances& tol) {
  if (!(f_u.window == f_v.window)) throw Error("ominus of fibers on different windows");
  return ominus_fiber(f_u.entries, f_v.entries, tol.rank_tol, tol.conv_eps, tol.max_iter);
}

// ---------------------------------------------------------------------------
// Angles
// ---------------------------------------------------------------------------

/// Dixmier cosine of two spans given by orthonormal columns: ||A* B||.
inline double dixmier_fiber(const Matrix& a_basis, const Matrix& b_basis) {
  if (a_basis.cols() == 0 || b_basis.cols() == 0) return 0.0;
  const RealVector s = singular_values(a_basis.adjoint() * b_basis);
  return std::clamp(s(0), 0.0, 1.0);
}

/// ||(G_{X'}^†)^{1/2} G_{X,X'} (G_X^†)^{1/2}|| for frames X, X' (columns).
inline double friedrichs_frame_formula(const Matrix& x, const Matrix& x_prime, double spec_tol) {
  if (x.cols() == 0 || x_prime.cols() == 0) return 0.0;
  const Matrix g_x = x.adjoint() * x;
  const Matrix g_xp = x_prime.adjoint() * x_prime;
  if (g_x.cwiseAbs().maxCoeff() == 0.0 || g_xp.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Matrix cross = x_prime.adjoint() * x;
  const RealVector s = singular_values(pinv_sqrt(g_xp, spec_tol) * cross * pinv_sqrt(g_x, spec_tol));
  return s.size() == 0 ? 0.0 : s(0);
}

struct FriedrichsFiber {
  bool determinate = false;
  double friedrichs = 0.0;          // c(ω), frame formula on projected generators
  double friedrichs_ominus = 0.0;   // c(ω), Dixmier cosine of the ominus bases
  double dixmier = 0.0;             // c0(ω) of J_U, J_V
  std::size_t intersection_rank = 0;
  std::size_t u_ominus_rank = 0;
  std::size_t v_ominus_rank = 0;
  int iterations = 0;
  double residual = 0.0;
  Matrix u_ominus_basis;            // orthonormal basis of J_U ⊖ J_V
  Matrix v_ominus_basis;            // orthonormal basis of J_V ⊖ J_U
};

/// Friedrichs cosine of J_U(ω), J_V(ω) by two routes: the frame formula
/// evaluated on X = P_{U⊖V} F_U and X' = P_{V⊖U} F_V, and the Dixmier
/// cosine of orthonormal bases of the two ominus spaces. The routes must
/// agree within 1e-9.
inline FriedrichsFiber friedrichs_fiber(const Matrix& f_u, const Matrix& f_v, const Tolerances& tol) {
  if (f_u.rows() != f_v.rows()) throw Error("friedrichs angle of fibers on different windows");
  FriedrichsFiber out;
  const Matrix q_u = range_basis(f_u, tol.rank_tol);
  const Matrix q_v = range_basis(f_v, tol.rank_tol);
  out.dixmier = dixmier_fiber(q_u, q_v);

  const Matrix p_u = q_u * q_u.adjoint();
  const Matrix p_v = q_v * q_v.adjoint();
  const IntersectionResult cap =
      intersection_projector_fiber((p_u + p_u.adjoint()) * 0.5, (p_v + p_v.adjoint()) * 0.5, tol.conv_eps, tol.max_iter);
  out.iterations = cap.iterations;
  out.residual = cap.residual;
  if (!cap.converged) return out;
  out.determinate = true;
  out.intersection_rank = static_cast<std::size_t>(std::lround(cap.projector.trace().real()));

  const Matrix x_basis = detail::ominus_basis(p_u, cap.projector);
  const Matrix xp_basis = detail::ominus_basis(p_v, cap.projector);
  out.u_ominus_rank = static_cast<std::size_t>(x_basis.cols());
  out.v_ominus_rank = static_cast<std::size_t>(xp_basis.cols());
  out.friedrichs_ominus = dixmier_fiber(x_basis, xp_basis);
  out.u_ominus_basis = x_basis;
  out.v_ominus_basis = xp_basis;

  if (x_basis.cols() == 0 || xp_basis.cols() == 0) {
    out.friedrichs = 0.0;
  } else {
    const Matrix x = x_basis * (x_basis.adjoint() * f_u);
    const Matrix x_prime = xp_basis * (xp_basis.adjoint() * f_v);
    out.friedrichs = friedrichs_frame_formula(x, x_prime, tol.spec_tol);
  }
  if (std::abs(out.friedrichs - out.friedrichs_ominus) > 1e-9)
    throw NumericalError("Friedrichs cosine routes disagree: frame formula " + format_double(out.friedrichs) +
                         " vs ominus bases " + format_double(out.friedrichs_ominus));
  // c <= c0 holds exactly; only roundoff can push past it.
  out.friedrichs = std::clamp(out.friedrichs, 0.0, out.dixmier);
  return out;
}

inline FriedrichsFiber friedrichs_fiber(const FiberMatrix& f_u, const FiberMatrix& f_v, const Tolerances& tol) {
  if (!(f_u.window == f_v.window)) throw Error("friedrichs angle of fibers on different windows");
  return friedrichs_fiber(f_u.entries, f_v.entries, tol);
}

enum class Verdict { closed, not_closed, indeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::closed: return "Closed";
    case Verdict::not_closed: return "NotClosed";
    case Verdict::indeterminate: return "Indeterminate";
  }
  return "?";
}

struct ClosednessVerdict {
  Verdict verdict = Verdict::indeterminate;
  std::string caveat;
};

/// Numerical certificate for closedness of U + V from the grid maximum of
/// the Friedrichs cosine. Never a proof: a grid cannot witness an ess-sup.
inline ClosednessVerdict closedness_verdict(double c, double close_eps) {
  if (c < 1.0 - close_eps)
    return {Verdict::closed, "grid max < 1 - eps: numerical certificate on a finite grid, not a proof"};
  return {Verdict::not_closed, "grid max >= 1 - eps: ess-sup likely 1"};
}

struct SubspacePair {
  std::vector<GeneratorSpec> u;
  std::vector<GeneratorSpec> v;

  FiberWindow window() const { return merge_windows(fiber_window(u), fiber_window(v)); }
};

struct AngleNode {
  double omega = 0.0;  // first coordinate, for 1-D tables
  FriedrichsFiber fiber;
};

struct AngleReport {
  std::vector<AngleNode> nodes;
  double friedrichs = 0.0;  // max over determinate nodes
  double dixmier = 0.0;     // max over all nodes
  ClosednessVerdict verdict;
  double close_eps = 0.0;
  std::vector<std::size_t> indeterminate_nodes;
};

/// Per-node Friedrichs and Dixmier cosines and their grid maxima. A wider
/// window than the pair's own may be supplied to align the ominus bases
/// with other fiber data.
inline AngleReport friedrichs_angle(const SubspacePair& pair, const FrequencyGrid& grid, const Tolerances& tol,
                                    const FiberWindow* wider = nullptr) {
  FiberWindow window = pair.window();
  if (wider) {
    if (!wider->contains_all(window)) throw Error("supplied window does not cover the subspace pair");
    window = *wider;
  }
  AngleReport out;
  out.close_eps = tol.close_eps;
  out.nodes = parallel_map(grid.size(), [&](std::size_t i) {
    const auto& node = grid.nodes[i];
    const FiberMatrix fu = fiberize(pair.u, node, window);
    const FiberMatrix fv = fiberize(pair.v, node, window);
    return AngleNode{node.omega.empty() ? 0.0 : node.omega[0], friedrichs_fiber(fu, fv, tol)};
  });
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    const auto& f = out.nodes[i].fiber;
    out.dixmier = std::max(out.dixmier, f.dixmier);
    if (f.determinate)
      out.friedrichs = std::max(out.friedrichs, f.friedrichs);
    else
      out.indeterminate_nodes.push_back(i);
  }
  if (!out.indeterminate_nodes.empty()) {
    out.verdict = {Verdict::indeterminate, "alternating projections did not converge at " +
                                               std::to_string(out.indeterminate_nodes.size()) + " node(s)"};
  } else {
    out.verdict = closedness_verdict(out.friedrichs, tol.close_eps);
  }
  return out;
}

}  // namespace fsis
