#pragma once

// Cartesian lattice over the fundamental octagon with a group-wrapped ghost band.

#include <cstdint>
#include <memory>
#include <vector>

#include "geoflow/mobius.hpp"

namespace geoflow {

enum class NodeKind : std::uint8_t { Interior, Ghost, Unused };

/// Ghost nodes are kept up to this Chebyshev distance from the closed octagon.
inline constexpr int kGhostBand = 5;

class Lattice {
 public:
  /// grid_spacing h; nodes at (i - c) h with a node at the origin, covering
  /// |x|, |y| <= vertex_radius + margin.
  Lattice(SurfaceAtlas atlas, double grid_spacing, double margin);

  const SurfaceAtlas& atlas() const { return atlas_; }
  double spacing() const { return h_; }
  double margin() const { return margin_; }
  int per_side() const { return n_; }
  int center_index() const { return c_; }
  double extent() const { return c_ * h_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  int index(int i, int j) const { return j * n_ + i; }
  int col(int idx) const { return idx % n_; }
  int row(int idx) const { return idx / n_; }
  double coord(int i) const { return (i - c_) * h_; }
  Complex node(int idx) const { return {coord(col(idx)), coord(row(idx))}; }

  NodeKind kind(int idx) const { return kind_[idx]; }
  /// 0 for interior nodes, 1..kGhostBand for ghosts, -1 otherwise.
  int band(int idx) const { return band_[idx]; }

  const std::vector<int>& interior_nodes() const { return interior_; }
  /// Ghost nodes with band <= b, ordered by band.
  const std::vector<int>& ghosts_up_to(int b) const { return ghosts_by_band_[b]; }

  /// Integral of the hyperbolic area density over each node's cell cut by the
  /// octagon. Zero for cells that miss the octagon.
  const std::vector<double>& area_weights() const { return weights_; }
  /// Nodes with non-zero area weight.
  const std::vector<int>& weighted_nodes() const { return weighted_; }
  /// Sum of all area weights; the discrete stand-in for 4 pi.
  double reference_area() const { return reference_area_; }

  /// Overwrites ghost values up to `max_band` from interior values, using the
  /// precomputed least-squares stencils at the reduced ghost positions.
  void fill_ghosts(std::vector<double>& values, int max_band = kGhostBand) const;

  /// Pairwise (fixed-tree) sum of weights[k] * f[k] over weighted nodes.
  double weighted_sum(const std::vector<double>& f) const;

 private:
  void classify();
  void build_weights();
  void build_stencils();

  SurfaceAtlas atlas_;
  double h_;
  double margin_;
  int n_ = 0;
  int c_ = 0;
  std::vector<NodeKind> kind_;
  std::vector<std::int8_t> band_;
  std::vector<int> interior_;
  std::vector<std::vector<int>> ghosts_by_band_;
  std::vector<double> weights_;
  std::vector<int> weighted_;
  double reference_area_ = 0.0;

  struct Stencil {
    int target;
    int begin;
    int end;
  };
  std::vector<Stencil> stencils_;  // ordered by band, aligned with ghosts_by_band_.back()
  std::vector<int> stencil_src_;
  std::vector<double> stencil_coef_;
};

std::shared_ptr<const Lattice> make_lattice(double grid_spacing = 2.0 / 256.0, double margin = 0.15);

/// Sum in a fixed binary-tree order, independent of how the input was produced.
double pairwise_sum(const double* x, std::size_t n);
inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

}  // namespace geoflow
