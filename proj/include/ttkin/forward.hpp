/*
 * Copyright 2026 The ttkin Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Forward model: unit-speed geodesics of g = rho dx^2, the boundary-normal
// chart gamma(x', t) and travel-time solvers.

#include <functional>
#include <queue>
#include <vector>

#include "ttkin/boundary.hpp"
#include "ttkin/geometry.hpp"

namespace ttkin {

/// nu = nu0 / sqrt(rho(x')), the g-unit inward normal.
Vec inward_normal(const ConformalFactorField& rho, const BoundaryGeometry& bg, int node);

struct GeodesicPath {
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> v;
  bool truncated = false;   // left the bounding box before t_max
  double max_speed_drift = 0.0;  // max |rho |x'|^2 - 1| over samples
};

/// Integrates x'' + Gamma^k_ij x'^i x'^j = 0 with classical RK4 at fixed step
/// dt (the last step is shortened to land on t_max). Samples every
/// `record_every` steps plus the final state.
///
/// Throws kPrecondition unless |rho(x0)|xi0|^2 - 1| <= 1e-10.
GeodesicPath geodesic_shoot(const ConformalFactorField& rho, const Vec& x0, const Vec& xi0,
                            double t_max, double dt, int record_every = 1);

struct ChartOptions {
  double jacobian_threshold = 0.05;  // relative to the column's boundary value
  double max_step = 1e-3;            // geodesic substep bound
  unsigned threads = 0;
};

/// gamma sampled on D together with Jacobian determinants and truncated
/// extents. Arrays are indexed by `grid` (the truncated grid), node-major.
struct NormalChart {
  DGrid grid;
  std::vector<double> gamma;       // node_count * n
  std::vector<double> jacobian;    // det(d gamma / dy)
  std::vector<double> relative_jacobian;
  std::vector<double> extent;      // T(x') per column
  int truncated_by_jacobian = 0;
  int truncated_by_collision = 0;
  int truncated_by_exit = 0;
  double max_speed_drift = 0.0;
  double min_relative_jacobian = 1.0;

  Vec point(std::size_t node) const;
};

/// Shoots the normal geodesic from every boundary node, tabulates gamma on
/// the requested grid and truncates each column at the first sample where the
/// relative Jacobian drops below the threshold, adjacent columns collide or
/// the geodesic leaves the box. Throws kDegenerateBoundary if the Jacobian is
/// already degenerate at t = 0.
NormalChart build_normal_chart(const ConformalFactorField& rho, const BoundaryGeometry& bg,
                               const DGrid& grid, const ChartOptions& options = {});

/// Scalar field on a uniform Cartesian lattice covering a box.
struct CartesianGrid {
  Vec origin;
  double h = 0.0;
  std::vector<int> dims;
  std::vector<double> values;  // row-major, last axis fastest

  int dim() const { return static_cast<int>(dims.size()); }
  std::size_t size() const { return values.size(); }
  Vec node(std::size_t flat) const;
  /// Multilinear interpolation; throws kDomain outside the lattice.
  double interpolate(const Vec& x) const;
};

/// Lattice of spacing h covering rho's box (nodes may overhang hi by < h).
CartesianGrid make_lattice(const ConformalFactorField& rho, double h);

/// First-order fast marching for |grad tau| = sqrt(rho) from a point source.
/// Nodes within ten cells of the source are seeded with the straight-ray
/// travel time. Throws kDomain if the source is outside the box.
CartesianGrid eikonal_solve(const ConformalFactorField& rho, const Vec& source, double grid_h);

struct DijkstraOptions {
  /// Neighbour offsets span [-radius, radius]^n with primitive directions;
  /// radius 2 is the 16-neighbour stencil in 2D.
  int stencil_radius = 2;
  /// Lattice nodes for which this returns false are removed from the graph.
  std::function<bool(const Vec&)> passable;
};

/// Shortest path between a and b on the weighted lattice graph; edge weight
/// is Euclidean length times the mean of sqrt(rho) at its endpoints.
/// Off-lattice endpoints connect to the corners of their cell by straight
/// segments. Throws kUnreachable when b cannot be reached.
double dijkstra_distance(const ConformalFactorField& rho, const Vec& a, const Vec& b, double grid_h,
                         const DijkstraOptions& options = {});

}  // namespace ttkin
