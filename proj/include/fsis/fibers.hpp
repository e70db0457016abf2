// Fiberization on a finite frequency grid: fiber windows, fiber matrices,
// dimension functions and fiber projections.
#pragma once

#include "fsis/common.hpp"
#include "fsis/dsl.hpp"
#include "fsis/parallel.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace fsis {

using dsl::GeneratorSpec;
using dsl::Index;

struct GridNode {
  std::size_t index = 0;       // lexicographic position, first axis slowest
  std::size_t grid_size = 0;   // nodes per axis of the owning grid
  std::vector<double> omega;   // point of [0,1)^n
};

/// Midpoint grid over the torus. Nodes are (m + 1/2) / M componentwise.
struct FrequencyGrid {
  std::size_t dimension = 1;
  std::size_t per_axis = 0;
  std::vector<GridNode> nodes;

  std::size_t size() const { return nodes.size(); }
};

inline FrequencyGrid midpoint_grid(std::size_t dimension, std::size_t per_axis) {
  if (dimension == 0) throw Error("grid dimension must be positive");
  if (per_axis == 0) throw Error("grid needs at least one node per axis");
  FrequencyGrid grid{dimension, per_axis, {}};
  const std::size_t total = dsl::grid_node_count(dimension, per_axis);
  grid.nodes.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    GridNode node{idx, per_axis, std::vector<double>(dimension)};
    std::size_t rest = idx;
    for (std::size_t d = dimension; d-- > 0;) {
      const std::size_t m = rest % per_axis;
      rest /= per_axis;
      node.omega[d] = (static_cast<double>(m) + 0.5) / static_cast<double>(per_axis);
    }
    grid.nodes.push_back(std::move(node));
  }
  return grid;
}

/// Finite set of integer translation indices, sorted lexicographically.
struct FiberWindow {
  std::size_t dimension = 1;
  std::vector<Index> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }

  /// Row of index k, or -1 when k is outside the window.
  std::ptrdiff_t row_of(const Index& k) const {
    auto it = std::lower_bound(indices.begin(), indices.end(), k, dsl::detail::index_less);
    if (it == indices.end() || *it != k) return -1;
    return it - indices.begin();
  }

  bool contains_all(const FiberWindow& other) const {
    return std::includes(indices.begin(), indices.end(), other.indices.begin(), other.indices.end(), dsl::detail::index_less);
  }

  friend bool operator==(const FiberWindow&, const FiberWindow&) = default;
};

inline FiberWindow merge_windows(const FiberWindow& a, const FiberWindow& b) {
  if (!a.empty() && !b.empty() && a.dimension != b.dimension) throw Error("cannot merge fiber windows of different dimension");
  FiberWindow out{a.empty() ? b.dimension : a.dimension, {}};
  std::set_union(a.indices.begin(), a.indices.end(), b.indices.begin(), b.indices.end(), std::back_inserter(out.indices),
                 dsl::detail::index_less);
  return out;
}

/// Smallest window outside of which every generator's fibers vanish.
/// For piecewise generators this is every k whose cell [k, k+1) meets a
/// piece, so truncating fibers to the window is exact.
inline FiberWindow fiber_window(std::span<const GeneratorSpec> generators) {
  FiberWindow out{generators.empty() ? 1 : generators.front().dimension(), {}};
  for (const auto& g : generators) {
    if (g.dimension() != out.dimension) throw Error("generators of mixed dimension");
    FiberWindow w{out.dimension, {}};
    if (const auto* spec = std::get_if<dsl::PiecewiseSpec>(&g.body)) {
      for (const auto& piece : spec->pieces)
        for (std::int64_t k = dsl::floor_of(piece.lo); k < dsl::ceil_of(piece.hi); ++k) w.indices.push_back(Index{k});
      std::sort(w.indices.begin(), w.indices.end(), dsl::detail::index_less);
      w.indices.erase(std::unique(w.indices.begin(), w.indices.end()), w.indices.end());
    } else {
      w.indices = std::get<dsl::SampledFibers>(g.body).window;
    }
    out = merge_windows(out, w);
  }
  return out;
}

/// |W| x d matrix whose column j is the fiber of generator j at one node.
struct FiberMatrix {
  GridNode node;
  FiberWindow window;
  Matrix entries;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

/// Fibers (ghat_j(omega + k))_{k in W} as columns. W must contain the
/// generators' own window.
inline FiberMatrix fiberize(std::span<const GeneratorSpec> generators, const GridNode& node, const FiberWindow& window) {
  FiberMatrix out{node, window, Matrix::Zero(static_cast<Eigen::Index>(window.size()), static_cast<Eigen::Index>(generators.size()))};
  for (std::size_t j = 0; j < generators.size(); ++j) {
    const GeneratorSpec& g = generators[j];
    if (g.dimension() != node.omega.size())
      throw Error("generator '" + g.name + "' has dimension " + std::to_string(g.dimension()) + " but the grid has " +
                  std::to_string(node.omega.size()));
    if (!window.contains_all(fiber_window(std::span(&g, 1))))
      throw Error("fiber window does not cover the support of generator '" + g.name + "'");
    const auto col = static_cast<Eigen::Index>(j);
    if (g.is_piecewise()) {
      for (std::size_t r = 0; r < window.size(); ++r)
        out.entries(static_cast<Eigen::Index>(r), col) =
            dsl::evaluate_fourier(g, node.omega[0] + static_cast<double>(window.indices[r][0]));
    } else {
      const auto& sampled = std::get<dsl::SampledFibers>(g.body);
      if (sampled.grid_size != node.grid_size)
        throw Error("generator '" + g.name + "' is sampled on a grid of " + std::to_string(sampled.grid_size) +
                    " nodes per axis, analysis grid has " + std::to_string(node.grid_size));
      for (std::size_t r = 0; r < sampled.window.size(); ++r) {
        const auto row = window.row_of(sampled.window[r]);
        out.entries(row, col) = sampled.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(node.index));
      }
    }
  }
  return out;
}

/// Moves nodes that coincide with a piece endpoint (after shifting by a
/// window index) by +1e-9 and returns one warning per moved node. Midpoint
/// grids with M a power of two only collide with endpoints of denominator 2M.
inline std::vector<std::string> separate_from_breakpoints(FrequencyGrid& grid, std::span<const GeneratorSpec> generators) {
  std::vector<std::string> warnings;
  const FiberWindow window = fiber_window(generators);
  for (auto& node : grid.nodes) {
    if (node.omega.size() != 1) continue;
    bool hit = false;
    for (const auto& g : generators) {
      const auto* spec = std::get_if<dsl::PiecewiseSpec>(&g.body);
      if (!spec) continue;
      for (const auto& piece : spec->pieces)
        for (const auto& k : window.indices) {
          const double xi = node.omega[0] + static_cast<double>(k[0]);
          if (piece.lo.compare_to(xi) == 0 || piece.hi.compare_to(xi) == 0) hit = true;
        }
    }
    if (hit) {
      warnings.push_back("grid node " + std::to_string(node.index) + " (omega=" + format_double(node.omega[0]) +
                         ") lies on a breakpoint; perturbed by +1e-9");
      node.omega[0] += 1e-9;
    }
  }
  return warnings;
}

/// Singular values, descending.
inline RealVector singular_values(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return RealVector();
  return Eigen::JacobiSVD<Matrix>(a).singularValues();
}

/// Number of singular values above rank_tol * scale. With scale <= 0 the
/// scale is the largest singular value, or 1 when the matrix is zero.
inline std::size_t numerical_rank(const Matrix& a, double rank_tol, double scale = 0.0) {
  const RealVector s = singular_values(a);
  if (s.size() == 0) return 0;
  if (scale <= 0.0) scale = s(0) > 0.0 ? s(0) : 1.0;
  const double cut = rank_tol * scale;
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > cut) ++rank;
  return rank;
}

/// Orthonormal basis of the column space (left singular vectors above the cut).
inline Matrix range_basis(const Matrix& a, double rank_tol) {
  if (a.rows() == 0 || a.cols() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const RealVector& s = svd.singularValues();
  const double cut = rank_tol * (s(0) > 0.0 ? s(0) : 1.0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return svd.matrixU().leftCols(r);
}

/// Orthogonal projection onto the column space, Hermitian by construction.
inline Matrix fiber_projection(const Matrix& a, double rank_tol) {
  const Matrix q = range_basis(a, rank_tol);
  Matrix p = q * q.adjoint();
  return (p + p.adjoint()) * 0.5;
}

inline Matrix fiber_projection(const FiberMatrix& f, double rank_tol) { return fiber_projection(f.entries, rank_tol); }

struct DimensionFunction {
  std::vector<std::size_t> values;  // one per grid node

  std::size_t max() const { return values.empty() ? 0 : *std::max_element(values.begin(), values.end()); }
  bool is_constant() const { return std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) == values.end(); }
};

/// Rank of the fiber matrix at every node.
inline DimensionFunction dimension_function(std::span<const GeneratorSpec> generators, const FrequencyGrid& grid, double rank_tol) {
  const FiberWindow window = fiber_window(generators);
  DimensionFunction out;
  out.values = parallel_map(grid.size(), [&](std::size_t i) {
    return numerical_rank(fiberize(generators, grid.nodes[i], window).entries, rank_tol);
  });
  return out;
}

}  // namespace fsis
