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
#include "ttkin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ttkin {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double max_finite(const std::vector<double>& v) {
  double m = kNaN;
  for (double x : v) {
    if (std::isfinite(x) && !(x <= m)) m = x;
  }
  return m;
}

Box make_box(std::vector<double> lo, std::vector<double> hi) {
  return Box{Eigen::Map<Vec>(lo.data(), static_cast<Eigen::Index>(lo.size())),
             Eigen::Map<Vec>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

json SolverConfig::to_json() const {
  return {
      {"mode", mode == RecoveryMode::kFull ? "full" : "reduced"},
      {"kappa_max", kappa_max},
      {"max_failed_fraction", max_failed_fraction},
      {"min_lambda", min_lambda},
      {"row_error_tol", number_or_null(row_error_tol)},
      {"smooth_width", smooth_width},
      {"metric_smooth_y", metric_smooth_y},
      {"metric_smooth_t", metric_smooth_t},
      {"guard", guard},
      {"guard_factor", guard_factor},
      {"guard_floor", guard_floor},
      {"eps_v", eps_v},
  };
}

void SolverConfig::update(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kParse, "$: solver config must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = "$." + key;
    auto num = [&]() {
      if (value.is_null()) return std::numeric_limits<double>::infinity();
      if (!value.is_number()) fail(ErrorCode::kParse, path + ": expected a number");
      return value.get<double>();
    };
    if (key == "mode") {
      const auto m = value.is_string() ? value.get<std::string>() : "";
      if (m == "full") mode = RecoveryMode::kFull;
      else if (m == "reduced") mode = RecoveryMode::kReduced;
      else fail(ErrorCode::kParse, path + ": expected \"full\" or \"reduced\"");
    } else if (key == "kappa_max") kappa_max = num();
    else if (key == "max_failed_fraction") max_failed_fraction = num();
    else if (key == "min_lambda") min_lambda = num();
    else if (key == "row_error_tol") row_error_tol = num();
    else if (key == "smooth_width") smooth_width = num();
    else if (key == "metric_smooth_y") metric_smooth_y = num();
    else if (key == "metric_smooth_t") metric_smooth_t = num();
    else if (key == "guard") {
      if (!value.is_boolean()) fail(ErrorCode::kParse, path + ": expected a boolean");
      guard = value.get<bool>();
    } else if (key == "guard_factor") guard_factor = num();
    else if (key == "guard_floor") guard_floor = num();
    else if (key == "eps_v") eps_v = num();
    else fail(ErrorCode::kParse, path + ": unknown solver setting");
  }
}

json Thresholds::to_json() const {
  return {
      {"metric_max_rel", number_or_null(metric_max_rel)},
      {"boundary_rho_max_rel", number_or_null(boundary_rho_max_rel)},
      {"gamma_sup", number_or_null(gamma_sup)},
      {"rho_max_rel", number_or_null(rho_max_rel)},
      {"constraint_max", number_or_null(constraint_max)},
  };
}

json PhantomSpec::describe() const {
  json j;
  j["id"] = id;
  j["rho"] = rho.id();
  j["boundary"] = boundary.kind;
  j["param_shape"] = grid.boundary_shape();
  j["dt"] = grid.dt();
  j["T"] = requested_T;
  j["tau_mode"] = synthesis.tau_mode == TauMode::kAnalytic ? "analytic" : "eikonal";
  j["fmm_h"] = synthesis.fmm_h;
  j["sources_per_node"] = synthesis.sources_per_node;
  j["source_radius"] = synthesis.source_radius;
  return j;
}

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> phantom_names() {
  return {"flat-constant", "gaussian-bump", "disk", "flat-constant-3d", "radial"};
}

PhantomSpec make_phantom(const std::string& name) {
  PhantomSpec p{name, ConformalFactorField::constant(make_box({-1.0, 0.0}, {2.0, 1.5}), 1.0), {}, {}, {}, {}, {}, 0.0};
  auto segment = [&](double T) {
    p.boundary = BoundaryGeometry::flat(2, {64}, {0.0}, {1.0});
    p.requested_T = T;
    p.grid = DGrid::uniform({64}, {1.0 / 63.0}, T / 63.0, T);
    p.synthesis.sources_per_node = 7;
    p.synthesis.source_radius = 1.0;
    p.solver.min_lambda = 0.4;
    p.solver.metric_smooth_y = 4.0;
    p.solver.metric_smooth_t = 8.0;
  };
  if (name == "flat-constant") {
    p.rho = ConformalFactorField::constant(make_box({-1.0, 0.0}, {2.0, 1.5}), 2.25);
    segment(0.5);
    p.synthesis.tau_mode = TauMode::kAnalytic;
    p.solver.smooth_width = 3.0;
    p.solver.guard_floor = 5e-3;
    p.thresholds.metric_max_rel = 1e-3;
    p.thresholds.boundary_rho_max_rel = 1e-3;
    p.thresholds.gamma_sup = 1e-3;
    p.thresholds.rho_max_rel = 2e-3;
  } else if (name == "gaussian-bump" || name == "radial") {
    if (name == "gaussian-bump") {
      p.rho = ConformalFactorField::gaussian_bump(make_box({-1.0, 0.0}, {2.0, 1.5}), 1.0, 0.3,
                                                  (Vec(2) << 0.5, 0.3).finished(), 0.08);
    } else {
      p.rho = ConformalFactorField::radial(make_box({-1.0, 0.0}, {2.0, 1.5}), 1.0, 0.2,
                                           (Vec(2) << 0.5, 0.8).finished());
    }
    segment(0.3);
    p.synthesis.tau_mode = TauMode::kEikonal;
    p.synthesis.fmm_h = 1.0 / 128.0;
    p.solver.smooth_width = 2.0;
    if (name == "radial") {
      p.solver.smooth_width = 3.0;
      p.solver.guard_floor = 1e-2;
    }
    p.thresholds.rho_max_rel = 5e-2;
    p.thresholds.gamma_sup = 1e-2;
    p.thresholds.constraint_max = 5e-2;
  } else if (name == "disk") {
    p.rho = ConformalFactorField::constant(make_box({-1.25, -1.25}, {1.25, 1.25}), 1.0);
    p.boundary = BoundaryGeometry::full_circle(64, 1.0, Vec::Zero(2));
    p.requested_T = 1.2;
    p.grid = DGrid::uniform(p.boundary.param_shape, p.boundary.dy, 1.0 / 32.0, p.requested_T, p.boundary.y0);
    p.synthesis.tau_mode = TauMode::kAnalytic;
    p.synthesis.sources_per_node = 7;
    p.synthesis.source_radius = std::numbers::pi;
    p.solver.min_lambda = 0.4;
    p.solver.smooth_width = 3.0;
    p.solver.metric_smooth_t = 0.0;
  } else if (name == "flat-constant-3d") {
    p.rho = ConformalFactorField::constant(make_box({-1.0, -1.0, 0.0}, {2.0, 2.0, 1.5}), 2.25);
    p.boundary = BoundaryGeometry::flat(3, {16, 16}, {0.0, 0.0}, {1.0, 1.0});
    p.requested_T = 0.5;
    p.grid = DGrid::uniform({16, 16}, {1.0 / 15.0, 1.0 / 15.0}, 0.5 / 23.0, 0.5);
    p.synthesis.tau_mode = TauMode::kAnalytic;
    p.synthesis.sources_per_node = 6;
    p.synthesis.source_radius = 1.5;
    p.solver.mode = RecoveryMode::kFull;
    p.solver.smooth_width = 3.0;
    p.solver.metric_smooth_y = 4.0;
    p.solver.metric_smooth_t = 8.0;
    p.thresholds.metric_max_rel = 1e-2;
    p.thresholds.boundary_rho_max_rel = 1e-2;
    p.thresholds.gamma_sup = 1e-2;
    p.thresholds.rho_max_rel = 1e-2;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown phantom '" + name + "'");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Scoring

json StageErrors::to_json() const {
  return {
      {"metric", {{"max_rel", number_or_null(metric_max_rel)}, {"mean_rel", number_or_null(metric_mean_rel)}}},
      {"boundary_rho", {{"max_rel", number_or_null(boundary_rho_max_rel)}}},
      {"gamma", {{"sup", number_or_null(gamma_sup)}}},
      {"rho", {{"max_rel", number_or_null(rho_max_rel)}, {"mean_rel", number_or_null(rho_mean_rel)}}},
      {"scored_nodes", scored_nodes},
      {"excluded_nodes", excluded_nodes},
  };
}

StageErrors report_errors(const TravelTimeDataset& ds, const ReconstructionResult& rec, const MetricFieldOnD& g_rec,
                          const BoundaryRhoTrace& trace) {
  if (!ds.truth) fail(ErrorCode::kUnavailable, "dataset has no ground truth");
  const DGrid& grid = ds.grid;
  const int n = grid.dim();
  const MetricFieldOnD truth_g = truth_metric(ds);
  constexpr double kFloor = 1e-12;
  auto rel = [&](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), kFloor); };

  StageErrors e;
  e.metric_max_rel = e.gamma_sup = e.rho_max_rel = 0.0;
  double metric_sum = 0.0, rho_sum = 0.0;
  int metric_count = 0;
  for (int b = 0; b < grid.boundary_count(); ++b) {
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = grid.index(b, k);
      const bool failed = k > 0 && g_rec.status(node) == MetricFieldOnD::NodeStatus::kFilled;
      const Vec x = Eigen::Map<const Vec>(rec.gamma.data() + node * static_cast<std::size_t>(n), n);
      if (failed || !g_rec.usable(node) || !x.allFinite() || !std::isfinite(rec.rho[node])) {
        ++e.excluded_nodes;
        continue;
      }
      ++e.scored_nodes;
      if (truth_g.usable(node)) {
        const Mat gt = truth_g.covariant(node);
        const double m = (g_rec.covariant(node) - gt).norm() / std::max(gt.norm(), kFloor);
        e.metric_max_rel = std::max(e.metric_max_rel, m);
        metric_sum += m;
        ++metric_count;
      }
      e.gamma_sup = std::max(e.gamma_sup, (x - ds.truth_gamma(b, k)).cwiseAbs().maxCoeff());
      const double r = rel(rec.rho[node], ds.truth_rho(b, k));
      e.rho_max_rel = std::max(e.rho_max_rel, r);
      rho_sum += r;
    }
  }
  e.metric_mean_rel = metric_count > 0 ? metric_sum / metric_count : kNaN;
  if (metric_count == 0) e.metric_max_rel = kNaN;
  e.rho_mean_rel = e.scored_nodes > 0 ? rho_sum / e.scored_nodes : kNaN;
  if (e.scored_nodes == 0) e.gamma_sup = e.rho_max_rel = kNaN;
  if (static_cast<int>(trace.rho.size()) == grid.boundary_count()) {
    e.boundary_rho_max_rel = 0.0;
    for (int b = 0; b < grid.boundary_count(); ++b) {
      e.boundary_rho_max_rel = std::max(e.boundary_rho_max_rel, rel(trace.rho[static_cast<std::size_t>(b)], ds.truth_rho(b, 0)));
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Driver

Reconstruction reconstruct_dataset(const TravelTimeDataset& ds, const SolverConfig& config) {
  Reconstruction out;
  std::string stage;
  try {
    stage = "metric-recovery";
    RecoveryOptions ro;
    ro.mode = config.mode;
    ro.kappa_max = config.kappa_max;
    ro.max_failed_fraction = config.max_failed_fraction;
    ro.min_lambda = config.min_lambda;
    ro.row_error_tol = config.row_error_tol;
    ro.threads = config.threads;
    out.metric = recover_metric_field(ds, ro);

    stage = "boundary-rho";
    MetricFieldOnD g = config.mode == RecoveryMode::kFull ? project_semigeodesic(out.metric->field) : out.metric->field;
    if (config.smooth_width > 0.0) g = smooth_metric(g, config.metric_smooth_y, config.metric_smooth_t);
    out.trace = recover_boundary_rho(g, ds.boundary);

    stage = "cauchy-data";
    const CauchyData cauchy = assemble_cauchy_data(*out.trace, ds.boundary);

    stage = "cke-march";
    MarchOptions mo;
    mo.smooth_width = config.smooth_width;
    mo.guard = config.guard;
    mo.guard_factor = config.guard_factor;
    mo.guard_floor = config.guard_floor;
    mo.threads = config.threads;
    out.march = cke_march(g, cauchy, mo);

    stage = "reconstruction";
    out.result = reconstruct_gamma_rho(out.march->family, ds.boundary, config.eps_v);
    out.result->constraint_by_layer = out.march->constraint_by_layer;
  } catch (const Error& e) {
    out.failed_stage = stage;
    out.error = e.code();
    out.message = e.what();
  }
  return out;
}

namespace {

json condition_histogram(const std::vector<double>& cond) {
  json h = json::object();
  std::vector<int> bins(10, 0);
  for (double c : cond) {
    if (!std::isfinite(c)) continue;
    const int d = std::clamp(static_cast<int>(std::floor(std::log10(std::max(c, 1.0)))), 0, 9);
    ++bins[static_cast<std::size_t>(d)];
  }
  for (int d = 0; d < 10; ++d) h["1e" + std::to_string(d)] = bins[static_cast<std::size_t>(d)];
  return h;
}

json check(double value, double limit) {
  const bool pass = !std::isfinite(limit) || (std::isfinite(value) && value <= limit);
  return {{"value", number_or_null(value)}, {"limit", number_or_null(limit)}, {"pass", pass}};
}

}  // namespace

json build_report(const TravelTimeDataset& ds, const Reconstruction& rec, const SolverConfig& config,
                  const Thresholds& thresholds, const json& phantom) {
  const DGrid& grid = ds.grid;
  json r;
  r["format"] = "ttkin-report";
  r["version"] = 1;
  if (!phantom.is_null()) r["phantom"] = phantom;
  r["config"] = config.to_json();
  r["thresholds"] = thresholds.to_json();

  std::size_t max_sources = 0;
  for (const auto& s : ds.sources) max_sources = std::max(max_sources, s.size());
  r["dataset"] = {{"n", ds.n},
                  {"boundary_nodes", grid.boundary_count()},
                  {"valid_nodes", grid.valid_node_count()},
                  {"max_t_count", grid.max_t_count()},
                  {"sources_per_node", max_sources},
                  {"meta", ds.meta}};

  const std::vector<std::string> stages = {"metric-recovery", "boundary-rho", "cauchy-data", "cke-march",
                                           "reconstruction"};
  json st = json::object();
  bool reached_failure = false;
  for (const auto& s : stages) {
    if (reached_failure) st[s] = "skipped";
    else if (s == rec.failed_stage) {
      st[s] = "failed";
      reached_failure = true;
    } else st[s] = "ok";
  }
  r["stages"] = st;
  r["failure"] = rec.ok() ? json(nullptr)
                          : json{{"stage", rec.failed_stage},
                                 {"code", std::string(error_code_name(rec.error))},
                                 {"message", rec.message}};

  if (rec.metric) {
    r["metric_recovery"] = {{"solved", rec.metric->solved},
                            {"failed", rec.metric->failed_count},
                            {"rows_rejected", rec.metric->rows_rejected},
                            {"condition_max", number_or_null(max_finite(rec.metric->condition))},
                            {"condition_histogram", condition_histogram(rec.metric->condition)}};
  }
  double constraint_max = kNaN;
  if (rec.march) {
    json layers = json::array();
    for (double v : rec.march->constraint_by_layer) layers.push_back(number_or_null(v));
    constraint_max = max_finite(rec.march->constraint_by_layer);
    r["march"] = {{"initial_residual", rec.march->initial_residual},
                  {"guard_threshold", rec.march->guard_threshold},
                  {"constraint_max", number_or_null(constraint_max)},
                  {"constraint_by_layer", std::move(layers)}};
  }
  if (rec.result) {
    double jmin = kNaN;
    for (double v : rec.result->jacobian) {
      if (std::isfinite(v) && !(v >= jmin)) jmin = v;
    }
    r["reconstruction"] = {{"min_speed2", rec.result->min_speed2}, {"jacobian_min", number_or_null(jmin)}};
  }

  json notes = json::array();
  if (ds.meta.contains("chart")) {
    const json& c = ds.meta["chart"];
    const int jac = c.value("truncated_by_jacobian", 0);
    const int col = c.value("truncated_by_collision", 0);
    const int ext = c.value("truncated_by_exit", 0);
    if (jac + col > 0) {
      double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
      for (int b = 0; b < grid.boundary_count(); ++b) {
        tmin = std::min(tmin, grid.extent(b));
        tmax = std::max(tmax, grid.extent(b));
      }
      std::ostringstream os;
      os << "chart degeneration: " << jac + col << " of " << grid.boundary_count()
         << " columns truncated (" << jac << " by Jacobian, " << col << " by collision); T(x') in [" << tmin << ", "
         << tmax << "]";
      notes.push_back(os.str());
    }
    if (ext > 0) notes.push_back(std::to_string(ext) + " columns truncated where geodesics leave the box");
  }
  if (rec.metric && rec.metric->failed_count > 0) {
    notes.push_back(std::to_string(rec.metric->failed_count) + " interior nodes failed the metric solve and were filled");
  }

  bool pass = rec.ok();
  json checks = json::object();
  if (rec.ok() && ds.truth) {
    const StageErrors e = report_errors(ds, *rec.result, rec.metric->field, *rec.trace);
    r["errors"] = e.to_json();
    checks["metric_max_rel"] = check(e.metric_max_rel, thresholds.metric_max_rel);
    checks["boundary_rho_max_rel"] = check(e.boundary_rho_max_rel, thresholds.boundary_rho_max_rel);
    checks["gamma_sup"] = check(e.gamma_sup, thresholds.gamma_sup);
    checks["rho_max_rel"] = check(e.rho_max_rel, thresholds.rho_max_rel);
  }
  if (rec.ok()) checks["constraint_max"] = check(constraint_max, thresholds.constraint_max);
  for (const auto& [k, v] : checks.items()) pass = pass && v["pass"].get<bool>();
  r["checks"] = checks;
  r["notes"] = notes;
  r["pass"] = pass;
  return r;
}

TravelTimeDataset synthesize_phantom(const PhantomSpec& phantom, unsigned threads) {
  SynthesisOptions so = phantom.synthesis;
  so.threads = threads;
  TravelTimeDataset ds = synthesize_dataset(phantom.rho, phantom.boundary, phantom.grid, so);
  ds.meta["preset"] = phantom.id;
  return ds;
}

RoundTrip run_roundtrip(const PhantomSpec& phantom, const SolverConfig& config) {
  RoundTrip out;
  json description = phantom.describe();
  try {
    out.dataset = synthesize_phantom(phantom, config.threads);
  } catch (const Error& e) {
    out.report = {{"format", "ttkin-report"},
                  {"version", 1},
                  {"phantom", description},
                  {"config", config.to_json()},
                  {"thresholds", phantom.thresholds.to_json()},
                  {"stages", {{"synthesis", "failed"}}},
                  {"failure", {{"stage", "synthesis"}, {"code", std::string(error_code_name(e.code()))}, {"message", e.what()}}},
                  {"pass", false}};
    out.reconstruction.failed_stage = "synthesis";
    out.reconstruction.error = e.code();
    out.reconstruction.message = e.what();
    return out;
  }
  out.reconstruction = reconstruct_dataset(*out.dataset, config);
  out.report = build_report(*out.dataset, out.reconstruction, config, phantom.thresholds, description);
  out.report["stages"]["synthesis"] = "ok";
  out.pass = out.report["pass"].get<bool>();
  return out;
}

// ---------------------------------------------------------------------------
// Validation

ValidationResult validate_dataset(const TravelTimeDataset& ds) {
  ValidationResult v;
  auto issue = [&](const std::string& s) {
    v.ok = false;
    if (v.issues.size() < 50) v.issues.push_back(s);
  };
  try {
    ds.boundary.validate();
  } catch (const Error& e) {
    issue(std::string("boundary: ") + e.what());
  }
  double tol = 1e-2;
  if (ds.meta.contains("synthesis") && ds.meta["synthesis"].contains("tolerance") &&
      ds.meta["synthesis"]["tolerance"].is_number()) {
    tol = ds.meta["synthesis"]["tolerance"].get<double>();
  }
  const DGrid& grid = ds.grid;
  std::size_t missing = 0, negative = 0;
  double own_column = 0.0, own_zero = 0.0, symmetry = 0.0;
  for (int b = 0; b < grid.boundary_count(); ++b) {
    const auto& list = ds.sources[static_cast<std::size_t>(b)];
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      for (std::size_t j = 0; j < list.size(); ++j) {
        const double l = ds.lambda_at(b, k, static_cast<int>(j));
        if (!std::isfinite(l)) {
          ++missing;
          continue;
        }
        if (l < -tol) {
          ++negative;
          std::ostringstream os;
          os << "negative lambda " << l << " at node (" << b << ", " << k << "), source " << list[j];
          issue(os.str());
        }
        if (list[j] == b) {
          const double d = std::abs(l - k * grid.dt());
          own_column = std::max(own_column, d);
          if (k == 0) own_zero = std::max(own_zero, std::abs(l));
        }
        if (k == 0) {
          const int back = ds.source_slot(list[j], b);
          if (back >= 0) {
            const double other = ds.lambda_at(list[j], 0, back);
            if (std::isfinite(other)) symmetry = std::max(symmetry, std::abs(l - other));
          }
        }
      }
    }
  }
  if (own_column > tol) {
    std::ostringstream os;
    os << "lambda along own normal geodesic deviates from t by " << own_column << " (tolerance " << tol << ")";
    issue(os.str());
  }
  if (own_zero > tol) issue("lambda(x', 0; x') is not zero");
  if (symmetry > tol) {
    std::ostringstream os;
    os << "boundary travel times are not symmetric (max difference " << symmetry << ")";
    issue(os.str());
  }
  if (ds.truth) {
    for (double r : ds.truth->rho) {
      if (!(r > 0.0)) {
        issue("ground-truth rho is not positive");
        break;
      }
    }
  }
  v.checks = {{"tolerance", tol},
              {"missing_lambda", missing},
              {"negative_lambda", negative},
              {"own_column_max_deviation", own_column},
              {"own_source_max_lambda", own_zero},
              {"boundary_symmetry_max", symmetry}};
  return v;
}

}  // namespace ttkin
