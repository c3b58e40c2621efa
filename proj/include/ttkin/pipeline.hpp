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

// Phantom presets, the synthesize -> reconstruct -> score driver and its
// JSON report.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttkin/ckf.hpp"
#include "ttkin/dataset.hpp"
#include "ttkin/recovery.hpp"

namespace ttkin {

/// Solver settings for the reconstruction stages.
struct SolverConfig {
  RecoveryMode mode = RecoveryMode::kReduced;
  double kappa_max = 1e8;
  double max_failed_fraction = 0.05;
  double min_lambda = 0.0;
  double row_error_tol = std::numeric_limits<double>::infinity();
  double smooth_width = 0.0;    // march filter; 0 = off
  double metric_smooth_y = 4.0; // used only when the march filter is on
  double metric_smooth_t = 8.0;
  bool guard = true;
  double guard_factor = 10.0;
  double guard_floor = 1e-3;
  double eps_v = 1e-8;
  unsigned threads = 0;

  nlohmann::json to_json() const;
  /// Overrides fields present in `j`; unknown keys raise kParse.
  void update(const nlohmann::json& j);
};

/// Pass thresholds applied to a round-trip report; NaN disables a check.
struct Thresholds {
  double metric_max_rel = kNaN;
  double boundary_rho_max_rel = kNaN;
  double gamma_sup = kNaN;
  double rho_max_rel = kNaN;
  double constraint_max = kNaN;

  nlohmann::json to_json() const;
};

/// A phantom with its boundary patch, requested grid and recommended
/// synthesis and solver settings.
struct PhantomSpec {
  std::string id;
  ConformalFactorField rho;
  BoundaryGeometry boundary;
  DGrid grid;
  SynthesisOptions synthesis;
  SolverConfig solver;
  Thresholds thresholds;
  double requested_T = 0.0;

  nlohmann::json describe() const;
};

/// Preset names: flat-constant, gaussian-bump, disk, flat-constant-3d, radial.
std::vector<std::string> phantom_names();
/// Throws kInvalidArgument for unknown names.
PhantomSpec make_phantom(const std::string& name);

struct StageErrors {
  double metric_max_rel = kNaN;
  double metric_mean_rel = kNaN;
  double boundary_rho_max_rel = kNaN;
  double gamma_sup = kNaN;
  double rho_max_rel = kNaN;
  double rho_mean_rel = kNaN;
  int scored_nodes = 0;
  int excluded_nodes = 0;

  nlohmann::json to_json() const;
};

/// Scores a reconstruction against the dataset's ground truth over nodes
/// where both are available; relative errors use truth denominators with
/// floor 1e-12. Nodes whose metric was filled after a failed solve are
/// excluded and counted. Throws kUnavailable without ground truth.
StageErrors report_errors(const TravelTimeDataset& ds, const ReconstructionResult& rec,
                          const MetricFieldOnD& g_rec, const BoundaryRhoTrace& trace);

/// Outcome of the reconstruction stages; fields are filled up to the first
/// failing stage.
struct Reconstruction {
  std::optional<MetricRecovery> metric;
  std::optional<BoundaryRhoTrace> trace;
  std::optional<MarchResult> march;
  std::optional<ReconstructionResult> result;
  std::string failed_stage;  // empty on success
  ErrorCode error = ErrorCode::kOk;
  std::string message;

  bool ok() const { return failed_stage.empty(); }
};

Reconstruction reconstruct_dataset(const TravelTimeDataset& ds, const SolverConfig& config);

/// Deterministic JSON report (no timings) of a reconstruction, with error
/// metrics when the dataset carries ground truth.
nlohmann::json build_report(const TravelTimeDataset& ds, const Reconstruction& rec, const SolverConfig& config,
                            const Thresholds& thresholds, const nlohmann::json& phantom = nullptr);

/// Synthesizes the phantom's dataset and records its id as meta.preset.
TravelTimeDataset synthesize_phantom(const PhantomSpec& phantom, unsigned threads = 0);

struct RoundTrip {
  std::optional<TravelTimeDataset> dataset;
  Reconstruction reconstruction;
  nlohmann::json report;
  bool pass = false;
};

/// synthesize -> recover g~ -> rho|Gamma -> Cauchy data -> march ->
/// gamma, rho -> score. Stage errors are captured in the report.
RoundTrip run_roundtrip(const PhantomSpec& phantom, const SolverConfig& config);

struct ValidationResult {
  bool ok = true;
  std::vector<std::string> issues;
  nlohmann::json checks = nlohmann::json::object();
};

/// Dataset invariants: boundary geometry, lambda >= 0, lambda(x', 0; x') = 0,
/// lambda(x', t; x') = t and boundary-layer symmetry within the synthesis
/// tolerance recorded in meta (1e-2 when absent).
ValidationResult validate_dataset(const TravelTimeDataset& ds);

}  // namespace ttkin
