// Injectivity and stability of sampling operators on single subspaces and
// on unions of subspaces.
//
// Finite-dimensional mode works on basis matrices in C^N. Shift-invariant
// mode works on generator lists and decides everything fiber by fiber on a
// frequency grid. In both modes a union is analysed through all pairwise
// sums S_γ + S_θ, diagonal included.
#pragma once

#include "fsis/common.hpp"
#include "fsis/fibers.hpp"
#include "fsis/gramian.hpp"
#include "fsis/parallel.hpp"
#include "fsis/subspaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fsis {

/// Stability bounds α, β of a sampling operator on a subspace.
struct StabilityBounds {
  bool stable = false;
  bool has_bounds = false;  // false for the zero subspace (bounds are vacuous)
  double alpha = 0.0;
  double beta = 0.0;
  std::string reason;       // why stability failed, empty otherwise
};

namespace detail {

inline double spectral_norm(const Matrix& a) {
  const RealVector s = singular_values(a);
  return s.size() == 0 ? 0.0 : s(0);
}

/// Rank of Psi* Phi with the cut scaled by ||Psi|| ||Phi||, so a cross
/// gramian that is small only because the fibers nearly miss each other is
/// not promoted to full rank.
inline std::size_t cross_rank(const Matrix& cross, const Matrix& phi, const Matrix& psi, double rank_tol) {
  return numerical_rank(cross, rank_tol, spectral_norm(phi) * spectral_norm(psi));
}

/// Squared singular values, ascending.
inline RealVector sigma_squared(const Matrix& g) {
  RealVector s = singular_values(g);
  std::reverse(s.data(), s.data() + s.size());
  return s.array().square().matrix();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Finite-dimensional mode
// ---------------------------------------------------------------------------

/// A is one-to-one on range(Φ) iff rank(Ψ*Φ) = rank(Φ).
inline bool fd_injectivity(const Matrix& phi, const Matrix& psi, double rank_tol) {
  if (phi.rows() != psi.rows()) throw Error("subspace basis and sampling vectors live in different spaces");
  const std::size_t dim = numerical_rank(phi, rank_tol);
  if (dim == 0) return true;
  if (psi.cols() == 0) return false;
  return detail::cross_rank(psi.adjoint() * phi, phi, psi, rank_tol) == dim;
}

struct FdStability {
  StabilityBounds bounds;
  bool injective = false;
  bool canonicalized = false;  // Φ was replaced by its canonical Parseval frame
  RealVector sigma2;           // ascending
};

/// Stability bounds from σ²(G_{Φ,Ψ}) ⊆ {0} ∪ [α, β] with Φ a Parseval
/// frame of S. A non-Parseval Φ is canonicalized when allowed.
inline FdStability fd_stability(const Matrix& phi_in, const Matrix& psi, const Tolerances& tol, bool auto_canonicalize = true) {
  if (phi_in.rows() != psi.rows()) throw Error("subspace basis and sampling vectors live in different spaces");
  FdStability out;
  Matrix phi = phi_in;
  const Matrix frame_op = phi * phi.adjoint();
  if ((frame_op * frame_op - frame_op).norm() > 1e-10) {
    if (!auto_canonicalize) throw Error("subspace frame is not Parseval");
    phi = parseval_frame(phi, tol.rank_tol);
    out.canonicalized = true;
  }
  out.injective = fd_injectivity(phi, psi, tol.rank_tol);
  const Matrix cross = psi.adjoint() * phi;
  out.sigma2 = detail::sigma_squared(cross);
  if (!out.injective) {
    out.bounds.reason = "rank(G_{Phi,Psi}) < dim(S)";
    return out;
  }
  out.bounds.stable = true;
  if (out.sigma2.size() == 0 || out.sigma2(out.sigma2.size() - 1) <= 0.0) return out;  // S = {0}
  out.bounds.beta = out.sigma2(out.sigma2.size() - 1);
  const double cut = tol.spec_tol * out.bounds.beta;
  for (Eigen::Index k = 0; k < out.sigma2.size(); ++k)
    if (out.sigma2(k) > cut) {
      out.bounds.alpha = out.sigma2(k);
      break;
    }
  out.bounds.has_bounds = true;
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// How a negative injectivity verdict on a closure transfers to the sum.
enum class InjectivityScope { sufficient_only, necessary_and_sufficient };

inline const char* to_string(InjectivityScope s) {
  return s == InjectivityScope::necessary_and_sufficient ? "NECESSARY-AND-SUFFICIENT" : "SUFFICIENT-ONLY";
}

struct PairNode {
  double omega = 0.0;
  std::size_t rank = 0;              // rank of the cross gramian
  std::size_t dim = 0;               // dimension of the pair's fiber space
  double sigma2_min_nonzero = 0.0;
  double sigma2_max = 0.0;
};

struct PairRecord {
  std::size_t gamma = 0;
  std::size_t theta = 0;
  std::string name;                        // "U+V" or "U" on the diagonal
  std::vector<std::string> closure_generators;
  std::size_t dimension = 0;               // dim of S_γθ (fd) or len of its closure (SIS)
  bool injective = false;
  std::vector<std::size_t> failing_nodes;  // SIS witnesses of the rank test
  StabilityBounds stability;
  InjectivityScope scope = InjectivityScope::sufficient_only;
  Verdict sum_verdict = Verdict::indeterminate;
  double friedrichs = 0.0;                 // grid max, SIS off-diagonal pairs only
  std::vector<PairNode> nodes;             // SIS only
};

struct SamplingReport {
  std::vector<PairRecord> pairs;
  bool injective = false;
  bool stable = false;
  bool has_bounds = false;
  double alpha = 0.0;
  double beta = 0.0;
  InjectivityScope scope = InjectivityScope::sufficient_only;
  std::size_t sample_count = 0;      // #I
  std::size_t required_samples = 0;  // max pair dimension / closure length
  bool meets_lower_bound = false;
  double sampling_bessel_bound = 0.0;
  std::vector<std::string> notes;
};

namespace detail {

inline void aggregate(SamplingReport& r) {
  r.injective = !r.pairs.empty();
  r.stable = !r.pairs.empty();
  r.alpha = std::numeric_limits<double>::infinity();
  r.beta = 0.0;
  r.has_bounds = false;
  bool all_certified = !r.pairs.empty();
  for (const auto& p : r.pairs) {
    r.injective = r.injective && p.injective;
    r.stable = r.stable && p.stability.stable;
    all_certified = all_certified && p.scope == InjectivityScope::necessary_and_sufficient;
    r.required_samples = std::max(r.required_samples, p.dimension);
    if (p.stability.has_bounds) {
      r.has_bounds = true;
      r.alpha = std::min(r.alpha, p.stability.alpha);
      r.beta = std::max(r.beta, p.stability.beta);
    }
  }
  if (!r.has_bounds) r.alpha = 0.0;
  r.scope = all_certified ? InjectivityScope::necessary_and_sufficient : InjectivityScope::sufficient_only;
  r.meets_lower_bound = r.sample_count >= r.required_samples;
  if (!r.meets_lower_bound)
    r.notes.push_back("lower-bound violation: " + std::to_string(r.sample_count) + " samples < " +
                      std::to_string(r.required_samples) + " required");
}

}  // namespace detail

struct FdUnionModel {
  std::vector<std::string> names;
  std::vector<Matrix> bases;  // N x d_γ
};

/// Pairwise analysis of a union of subspaces of C^N. Each pair sum is
/// spanned by the concatenated bases and canonicalized to a Parseval frame.
inline SamplingReport fd_union_report(const FdUnionModel& model, const Matrix& psi, const Tolerances& tol) {
  if (model.bases.empty()) throw Error("union model needs at least one subspace");
  if (model.names.size() != model.bases.size()) throw Error("union model names and bases differ in length");
  SamplingReport out;
  out.sample_count = static_cast<std::size_t>(psi.cols());
  for (std::size_t g = 0; g < model.bases.size(); ++g) {
    for (std::size_t t = g; t < model.bases.size(); ++t) {
      PairRecord p;
      p.gamma = g;
      p.theta = t;
      p.name = g == t ? model.names[g] : model.names[g] + "+" + model.names[t];
      Matrix span = model.bases[g];
      if (t != g) {
        span.conservativeResize(Eigen::NoChange, model.bases[g].cols() + model.bases[t].cols());
        span.rightCols(model.bases[t].cols()) = model.bases[t];
      }
      const Matrix phi = parseval_frame(span, tol.rank_tol);
      p.dimension = numerical_rank(span, tol.rank_tol);
      const FdStability st = fd_stability(phi, psi, tol);
      p.injective = st.injective;
      p.stability = st.bounds;
      p.scope = InjectivityScope::necessary_and_sufficient;  // sums in C^N are closed
      p.sum_verdict = Verdict::closed;
      out.pairs.push_back(std::move(p));
    }
  }
  detail::aggregate(out);
  return out;
}

// ---------------------------------------------------------------------------
// Shift-invariant mode
// ---------------------------------------------------------------------------

struct SisInjectivity {
  bool injective = false;
  std::vector<std::size_t> witness_nodes;  // nodes failing the rank test
  std::vector<std::size_t> ranks;          // rank of the cross gramian per node
  std::vector<std::size_t> dims;           // dim_S per node
  double sampling_bessel_bound = 0.0;
};

namespace detail {

inline double validate_bessel(std::span<const GeneratorSpec> psi, const FrequencyGrid& grid, const Tolerances& tol) {
  const FrameAnalysis fa = frame_analysis(psi, grid, tol.rank_tol, tol.spec_tol);
  if (!std::isfinite(fa.bessel_bound)) throw Error("sampling set is not Bessel on the grid");
  return fa.bessel_bound;
}

}  // namespace detail

/// A is one-to-one on S iff rank G_{Φ,Ψ}(ω) = dim_S(ω) at every node.
inline SisInjectivity sis_injectivity(std::span<const GeneratorSpec> s_gens, std::span<const GeneratorSpec> psi_gens,
                                      const FrequencyGrid& grid, const Tolerances& tol) {
  SisInjectivity out;
  out.sampling_bessel_bound = detail::validate_bessel(psi_gens, grid, tol);
  const FiberWindow window = merge_windows(fiber_window(s_gens), fiber_window(psi_gens));
  struct Ranks {
    std::size_t rank, dim;
  };
  const auto per_node = parallel_map(grid.size(), [&](std::size_t i) {
    const FiberMatrix fs = fiberize(s_gens, grid.nodes[i], window);
    const FiberMatrix fp = fiberize(psi_gens, grid.nodes[i], window);
    const Matrix cross = cross_gramian_fiber(fs, fp).matrix;
    return Ranks{detail::cross_rank(cross, fs.entries, fp.entries, tol.rank_tol), numerical_rank(fs.entries, tol.rank_tol)};
  });
  out.injective = true;
  for (std::size_t i = 0; i < per_node.size(); ++i) {
    out.ranks.push_back(per_node[i].rank);
    out.dims.push_back(per_node[i].dim);
    if (per_node[i].rank != per_node[i].dim) {
      out.injective = false;
      out.witness_nodes.push_back(i);
    }
  }
  return out;
}

struct SisStability {
  StabilityBounds bounds;
  std::vector<std::size_t> witness_nodes;
  std::vector<PairNode> nodes;
  double sampling_bessel_bound = 0.0;
};

/// Stability bounds from σ²(G_{Φ,Ψ}(ω)) ⊆ {0} ∪ [α, β] with Φ replaced by
/// its canonical Parseval frame at every node.
inline SisStability sis_stability(std::span<const GeneratorSpec> s_gens, std::span<const GeneratorSpec> psi_gens,
                                  const FrequencyGrid& grid, const Tolerances& tol) {
  SisStability out;
  out.sampling_bessel_bound = detail::validate_bessel(psi_gens, grid, tol);
  const FiberWindow window = merge_windows(fiber_window(s_gens), fiber_window(psi_gens));
  struct Raw {
    std::size_t rank, dim;
    RealVector sigma2;
  };
  const auto raw = parallel_map(grid.size(), [&](std::size_t i) {
    const FiberMatrix fs = fiberize(s_gens, grid.nodes[i], window);
    const FiberMatrix fp = fiberize(psi_gens, grid.nodes[i], window);
    const Matrix parseval = parseval_frame(fs.entries, tol.rank_tol);
    const Matrix cross = fp.entries.adjoint() * parseval;
    return Raw{detail::cross_rank(cross, parseval, fp.entries, tol.rank_tol), numerical_rank(fs.entries, tol.rank_tol),
               detail::sigma_squared(cross)};
  });

  double beta = 0.0;
  for (const auto& r : raw)
    if (r.sigma2.size() > 0) beta = std::max(beta, r.sigma2(r.sigma2.size() - 1));
  const double cut = tol.spec_tol * beta;
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& r = raw[i];
    PairNode n{grid.nodes[i].omega.empty() ? 0.0 : grid.nodes[i].omega[0], r.rank, r.dim, 0.0, 0.0};
    if (r.sigma2.size() > 0) n.sigma2_max = r.sigma2(r.sigma2.size() - 1);
    for (Eigen::Index k = 0; k < r.sigma2.size(); ++k)
      if (beta > 0.0 && r.sigma2(k) > cut) {
        n.sigma2_min_nonzero = r.sigma2(k);
        alpha = std::min(alpha, n.sigma2_min_nonzero);
        break;
      }
    if (r.rank != r.dim) out.witness_nodes.push_back(i);
    out.nodes.push_back(n);
  }

  if (!out.witness_nodes.empty()) {
    out.bounds.reason = "rank(G_{Phi,Psi}(w)) < dim_S(w) at " + std::to_string(out.witness_nodes.size()) + " node(s)";
    return out;
  }
  out.bounds.stable = true;
  if (std::isfinite(alpha)) {
    out.bounds.has_bounds = true;
    out.bounds.alpha = alpha;
    out.bounds.beta = beta;
  }
  return out;
}

struct SisUnionModel {
  std::vector<std::string> names;
  std::vector<std::vector<GeneratorSpec>> generators;
};

/// Pairwise analysis of a union of finitely generated SISs. Each pair is
/// analysed on the closure of its sum, whose generators are the union of
/// both generator lists. Off-diagonal pairs also get a Friedrichs angle so
/// the injectivity verdict can be labelled: a certified closed sum makes the
/// closure test necessary and sufficient, otherwise it is sufficient only.
inline SamplingReport sis_union_report(const SisUnionModel& model, std::span<const GeneratorSpec> psi_gens,
                                       const FrequencyGrid& grid, const Tolerances& tol) {
  if (model.generators.empty()) throw Error("union model needs at least one subspace");
  if (model.names.size() != model.generators.size()) throw Error("union model names and generator lists differ in length");
  SamplingReport out;
  out.sample_count = psi_gens.size();
  out.sampling_bessel_bound = detail::validate_bessel(psi_gens, grid, tol);
  out.notes.push_back("closure length is the grid max of the dimension function (ess-sup of dim)");

  for (std::size_t g = 0; g < model.generators.size(); ++g) {
    for (std::size_t t = g; t < model.generators.size(); ++t) {
      PairRecord p;
      p.gamma = g;
      p.theta = t;
      p.name = g == t ? model.names[g] : model.names[g] + "+" + model.names[t];
      const std::vector<GeneratorSpec> gens =
          g == t ? model.generators[g] : sum_closure_generators(model.generators[g], model.generators[t]);
      for (const auto& x : gens) p.closure_generators.push_back(x.name);

      const SisInjectivity inj = sis_injectivity(gens, psi_gens, grid, tol);
      SisStability st = sis_stability(gens, psi_gens, grid, tol);
      p.injective = inj.injective;
      p.failing_nodes = inj.witness_nodes;
      p.stability = st.bounds;
      if (p.stability.stable && !p.injective) {
        p.stability = StabilityBounds{};
        p.stability.reason = "rank test failed on the original generators";
      }
      p.nodes = std::move(st.nodes);
      for (const auto& n : p.nodes) p.dimension = std::max(p.dimension, n.dim);

      if (g == t) {
        p.sum_verdict = Verdict::closed;
        p.scope = InjectivityScope::necessary_and_sufficient;
      } else {
        const AngleReport angle = friedrichs_angle(SubspacePair{model.generators[g], model.generators[t]}, grid, tol);
        p.sum_verdict = angle.verdict.verdict;
        p.friedrichs = angle.friedrichs;
        p.scope = angle.verdict.verdict == Verdict::closed ? InjectivityScope::necessary_and_sufficient
                                                           : InjectivityScope::sufficient_only;
      }
      out.pairs.push_back(std::move(p));
    }
  }
  detail::aggregate(out);
  return out;
}

}  // namespace fsis
