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

#include "json.hpp"

#include <optional>
#include <vector>

#include "ttkin/boundary.hpp"
#include "ttkin/forward.hpp"
#include "ttkin/geometry.hpp"

namespace ttkin {

/// Known forward quantities embedded for scoring, stored on valid nodes of
/// the dataset grid (node-major, same order as lambda without the source
/// axis).
struct GroundTruth {
  std::vector<double> gamma;  // valid_node_count * n
  std::vector<double> rho;    // rho(gamma(y)), valid_node_count
};

/// Travel-time data: lambda(y, x'') = tau(gamma(y), x'') for every node y of
/// D and every source x'' in the per-column source list U(x').
struct TravelTimeDataset {
  int n = 0;
  BoundaryGeometry boundary;
  DGrid grid;
  std::vector<std::vector<int>> sources;  // per boundary node
  std::vector<double> lambda;             // node-major, NaN = missing
  nlohmann::json meta = nlohmann::json::object();
  std::optional<GroundTruth> truth;

  /// Start of column b inside `lambda`.
  std::size_t column_offset(int b) const { return offsets_.at(static_cast<std::size_t>(b)); }
  double lambda_at(int b, int k, int j) const;
  double& lambda_at(int b, int k, int j);
  /// Position of source node s in column b's list, or -1.
  int source_slot(int b, int s) const;

  /// Recomputes offsets and sizes `lambda` (NaN-filled if it was empty).
  void finalize_layout();
  /// Index of valid node (b, k) in valid-node order.
  std::size_t valid_index(int b, int k) const { return valid_offsets_.at(static_cast<std::size_t>(b)) + static_cast<std::size_t>(k); }

  Vec truth_gamma(int b, int k) const;
  double truth_rho(int b, int k) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> valid_offsets_;
};

enum class TauMode { kEikonal, kAnalytic };

struct SynthesisOptions {
  int sources_per_node = 0;    // 0 = n(n+1)/2 + 4
  double source_radius = 0.0;  // parameter distance; 0 = 10 boundary spacings
  int source_stride = 0;       // lattice stride of source nodes; 0 = widest that fits
  double source_min_distance = 0.0;  // prefer sources at least this far from the block
  double fmm_h = 1.0 / 128.0;
  TauMode tau_mode = TauMode::kEikonal;
  bool embed_truth = true;
  ChartOptions chart;
  unsigned threads = 0;
};

/// Deterministic U(x') stencil. Boundary axes are cut into blocks of three
/// nodes (the remainder joins the last block); every node of a block gets
/// the same K sources, taken from the source lattice (every `stride`-th node
/// along each axis) in order of distance to the block centre, ties by flat
/// index. A candidate is skipped while it would leave the first n(n+1)/2
/// sources on a common quadric of parameter space. Candidates closer than
/// `min_distance` to some node of the block are used only as a last resort. Constant lists per block
/// guarantee order-2 stencil coverage of every (node, source) pair; the
/// lattice offset makes lists asymmetric about most x'.
///
/// Throws kInsufficientSources if K sources cannot be found within `radius`
/// (parameter distance) of every node of a block.
std::vector<std::vector<int>> select_sources(const DGrid& grid, int k, double radius, int stride,
                                            double min_distance = 0.0);

/// Widest stride for which select_sources succeeds (searching downwards).
int widest_source_stride(const DGrid& grid, int k, double radius, double min_distance = 0.0);

/// Builds Omega(D): normal chart, one travel-time solve per distinct source
/// (eikonal or closed form for constant rho), lambda sampled at gamma(y).
/// The returned grid carries the chart's truncated extents T(x').
TravelTimeDataset synthesize_dataset(const ConformalFactorField& rho, const BoundaryGeometry& bg,
                                     const DGrid& grid, const SynthesisOptions& options = {});

/// Closed-form tau for constant rho: sqrt(c) |x - x''|.
double analytic_travel_time(const ConformalFactorField& rho, const Vec& x, const Vec& source);

}  // namespace ttkin
