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

// Recovery of the semigeodesic copy g~ from lambda data and of rho on the
// boundary from the pullback relation.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ttkin/boundary.hpp"
#include "ttkin/dataset.hpp"
#include "ttkin/geometry.hpp"

namespace ttkin {

struct EikonalSystemRow {
  int source = -1;
  Vec gradient;        // d lambda / dy, t last
  double rhs = 1.0;
  double error_estimate = 0.0;  // truncation estimate of |gradient error|
  double lambda = 0.0;          // travel time to the source
};

/// d lambda / dy for every (node, source slot), same layout as the lambda
/// table with n components per entry. Missing entries are NaN.
struct LambdaGradients {
  int n = 0;
  std::vector<double> values;
  std::vector<double> error_estimate;
  std::vector<int> covered;  // finite gradients per node (DGrid::index)

  /// Rows available at node (b, k).
  std::vector<EikonalSystemRow> rows(const TravelTimeDataset& ds, int b, int k) const;
};

/// Differentiates each source's lambda column with grid_gradient. A node
/// whose stencil footprint is not covered by a source gets NaN for that
/// source; nothing is extrapolated.
LambdaGradients lambda_gradients(const TravelTimeDataset& ds, unsigned threads = 0);

enum class RecoveryMode { kFull, kReduced };

struct MetricPoint {
  Mat contravariant;
  double condition = 0.0;  // cond(A^T A) of the solved system
  double residual = 0.0;   // RMS residual of the fitted rows
  int rows_used = 0;
};

/// Unknowns of the per-node least-squares system: n(n+1)/2 (FULL) or
/// n(n-1)/2 (REDUCED).
int unknown_count(int n, RecoveryMode mode);

/// Least-squares fit of g~^{ij} from rows g~^{ij} p_i p_j = 1. REDUCED fixes
/// g~^{nn} = 1, g~^{an} = 0 and fits g~^{ab} against 1 - p_n^2.
///
/// Throws kGenericity when cond(A^T A) > kappa_max, kDefiniteness when the
/// fitted tensor is not SPD, kInsufficientSources when there are too few rows.
MetricPoint recover_metric_point(const std::vector<EikonalSystemRow>& rows, RecoveryMode mode,
                                 double kappa_max = 1e8, const std::string& where = {});

struct RecoveryOptions {
  RecoveryMode mode = RecoveryMode::kReduced;
  double kappa_max = 1e8;
  double max_failed_fraction = 0.05;
  /// Rows whose gradient error estimate exceeds this are dropped while at
  /// least `unknown_count + 1` rows remain. Infinity keeps every row.
  double row_error_tol = std::numeric_limits<double>::infinity();
  /// Rows closer than this travel time to their source are dropped, keeping
  /// the farthest `unknown_count + 1` when too few remain.
  double min_lambda = 0.0;
  unsigned threads = 0;
};

struct MetricRecovery {
  MetricFieldOnD field;
  std::vector<double> condition;  // per node, NaN where not solved
  std::vector<double> residual;
  std::vector<double> row_error;  // largest error estimate among used rows
  std::vector<std::uint8_t> failed;  // per node, 1 = solve failed and filled
  int solved = 0;
  int failed_count = 0;
  int rows_rejected = 0;
};

/// Solves every interior node (t > 0), fills failed nodes from their layer
/// neighbours, extrapolates the t = 0 layer quadratically in t and inverts
/// for the covariant field. Throws FieldFailure when more than
/// max_failed_fraction of the interior nodes fail.
MetricRecovery recover_metric_field(const TravelTimeDataset& ds, const RecoveryOptions& options = {});

/// Sets g~^{nn} = 1 and g~^{an} = 0 at every usable node, keeping g~^{ab}.
MetricFieldOnD project_semigeodesic(const MetricFieldOnD& g);

/// Ground-truth g~ = rho(gamma) J^T J from the dataset's embedded chart, with
/// J = d gamma / dy by grid_gradient. Throws kUnavailable without truth.
MetricFieldOnD truth_metric(const TravelTimeDataset& ds);

struct BoundaryRhoTrace {
  std::vector<double> rho;
  std::vector<double> residual;
};

/// rho(x') = sum g~_ab I_ab / sum I_ab^2 per boundary node, with I the first
/// fundamental form of the parametrization. `g_boundary` holds the covariant
/// boundary-layer tensors (n x n or (n-1) x (n-1)).
BoundaryRhoTrace recover_boundary_rho(const std::vector<Mat>& g_boundary, const BoundaryGeometry& bg);
BoundaryRhoTrace recover_boundary_rho(const MetricFieldOnD& g, const BoundaryGeometry& bg);

}  // namespace ttkin
