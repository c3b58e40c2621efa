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
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_support.hpp"
#include "ttkin/pipeline.hpp"
#include "ttkin/recovery.hpp"

using namespace ttkin;
using namespace ttkin::test;

namespace {

/// Exact gradient of lambda = sqrt(|y - s|^2 + t^2) in the flat half-space.
EikonalSystemRow flat_row(const Vec& y, const Vec& s) {
  const int n = static_cast<int>(y.size());
  Vec d = y;
  d.head(n - 1) -= s;
  EikonalSystemRow r;
  r.lambda = d.norm();
  r.gradient = d / r.lambda;
  return r;
}

RecoveryOptions recovery_options(const SolverConfig& c) {
  RecoveryOptions o;
  o.mode = c.mode;
  o.kappa_max = c.kappa_max;
  o.max_failed_fraction = c.max_failed_fraction;
  o.min_lambda = c.min_lambda;
  o.row_error_tol = c.row_error_tol;
  return o;
}

double relative_frobenius(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("unknown counts") {
  CHECK(unknown_count(2, RecoveryMode::kFull) == 3);
  CHECK(unknown_count(3, RecoveryMode::kFull) == 6);
  CHECK(unknown_count(2, RecoveryMode::kReduced) == 1);
  CHECK(unknown_count(3, RecoveryMode::kReduced) == 3);
}

TEST_CASE("FULL recovery from exact flat gradients") {
  const Vec y = v2(0.4, 0.3);
  const std::vector<EikonalSystemRow> rows{flat_row(y, Vec::Constant(1, 0.0)), flat_row(y, Vec::Constant(1, 0.9)),
                                           flat_row(y, Vec::Constant(1, 0.2))};
  const MetricPoint p = recover_metric_point(rows, RecoveryMode::kFull);
  CHECK((p.contravariant - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(p.rows_used == 3);
  CHECK(p.condition < 1e8);

  const Vec y3 = v3(0.4, 0.5, 0.3);
  std::vector<EikonalSystemRow> rows3;
  for (const Vec& s : {v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1), v2(0.5, 0.0), v2(0.0, 0.7)}) rows3.push_back(flat_row(y3, s));
  const MetricPoint p3 = recover_metric_point(rows3, RecoveryMode::kFull);
  CHECK((p3.contravariant - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);

  const MetricPoint r = recover_metric_point(rows, RecoveryMode::kReduced);
  CHECK((r.contravariant - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("FULL recovery rejects collinear sources") {
  const Vec y = v2(0.5, 0.3);
  const Vec dir = v2(0.6, 0.8);
  std::vector<EikonalSystemRow> rows;
  for (double d : {0.3, 0.5, 0.7, 0.9}) {
    EikonalSystemRow r;
    r.gradient = dir;
    r.lambda = d;
    rows.push_back(r);
  }
  try {
    recover_metric_point(rows, RecoveryMode::kFull);
    FAIL("collinear configuration accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGenericity);
  }
  try {
    recover_metric_point({rows[0], rows[1]}, RecoveryMode::kFull);
    FAIL("two rows accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientSources);
  }
}

TEST_CASE("non-definite fits are rejected") {
  // Rows consistent with diag(1, -1): p = (cosh s, sinh s).
  std::vector<EikonalSystemRow> rows;
  for (double s : {0.1, 0.5, 0.9, 1.3}) {
    EikonalSystemRow r;
    r.gradient = v2(std::cosh(s), std::sinh(s));
    r.lambda = 1.0;
    rows.push_back(r);
  }
  try {
    recover_metric_point(rows, RecoveryMode::kFull);
    FAIL("indefinite metric accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDefiniteness);
  }
}

TEST_CASE("flat-constant field recovery") {
  const PhantomSpec ph = make_phantom("flat-constant");
  const TravelTimeDataset ds = synthesize_phantom(ph);
  const MetricRecovery rec = recover_metric_field(ds, recovery_options(ph.solver));
  CHECK(rec.failed_count == 0);
  const MetricFieldOnD truth = truth_metric(ds);
  double worst = 0.0;
  for (int b = 0; b < ds.grid.boundary_count(); ++b) {
    for (int k = 0; k < ds.grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = ds.grid.index(b, k);
      REQUIRE(rec.field.usable(node));
      worst = std::max(worst, relative_frobenius(rec.field.covariant(node), truth.covariant(node)));
    }
  }
  CHECK(worst <= 1e-3);
  const BoundaryRhoTrace trace = recover_boundary_rho(rec.field, ds.boundary);
  for (double r : trace.rho) CHECK(r == doctest::Approx(2.25).epsilon(1e-3));
}

TEST_CASE("bump REDUCED recovery against the pushed-forward metric") {
  const PhantomSpec ph = make_phantom("gaussian-bump");
  const TravelTimeDataset ds = synthesize_phantom(ph);
  const MetricRecovery rec = recover_metric_field(ds, recovery_options(ph.solver));
  const MetricFieldOnD truth = truth_metric(ds);
  double interior = 0.0, layer0 = 0.0;
  for (int b = 0; b < ds.grid.boundary_count(); ++b) {
    for (int k = 0; k < ds.grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = ds.grid.index(b, k);
      if (rec.failed[node] || !truth.usable(node)) continue;
      const double e = relative_frobenius(rec.field.covariant(node), truth.covariant(node));
      (k == 0 ? layer0 : interior) = std::max(k == 0 ? layer0 : interior, e);
    }
  }
  MESSAGE("bump metric error: interior ", interior, ", t = 0 layer ", layer0);
  CHECK(interior <= 0.05);
  CHECK(layer0 <= 3 * interior);
}

TEST_CASE("semigeodesic projection") {
  const DGrid g = DGrid::uniform({3}, {0.5}, 0.5, 1.0);
  std::vector<double> con;
  for (std::size_t node = 0; node < g.node_count(); ++node) con.insert(con.end(), {2.0, 0.1, 0.1, 1.2});
  const auto field = MetricFieldOnD::from_contravariant(g, con);
  const auto p = project_semigeodesic(field);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const Mat c = p.contravariant(node);
    CHECK(c(0, 0) == 2.0);
    CHECK(c(0, 1) == 0.0);
    CHECK(c(1, 1) == 1.0);
    CHECK(p.covariant(node)(0, 0) == doctest::Approx(0.5));
  }
}

TEST_CASE("boundary rho from the first fundamental form") {
  const auto flat = BoundaryGeometry::flat(2, {4}, {0.0}, {1.0});
  std::vector<Mat> g(4, Mat::Constant(1, 1, 4.0));
  for (double r : recover_boundary_rho(g, flat).rho) CHECK(r == doctest::Approx(4.0));

  // Full n x n tensors use their tangential block.
  Mat full(2, 2);
  full << 4.0, 0.0, 0.0, 1.0;
  for (double r : recover_boundary_rho(std::vector<Mat>(4, full), flat).rho) CHECK(r == doctest::Approx(4.0));

  const double radius = 2.0;
  const auto circle = BoundaryGeometry::circle_arc(5, radius, v2(0, 0), 0.0, 1.0, false);
  for (double r : recover_boundary_rho(std::vector<Mat>(5, Mat::Constant(1, 1, 3.0 * radius * radius)), circle).rho) {
    CHECK(r == doctest::Approx(3.0));
  }

  const auto b3 = BoundaryGeometry::flat(3, {3, 3}, {0.0, 0.0}, {1.0, 1.0});
  for (double r : recover_boundary_rho(std::vector<Mat>(9, 1.7 * Mat::Identity(2, 2)), b3).rho) {
    CHECK(r == doctest::Approx(1.7));
  }
  CHECK_THROWS_AS(recover_boundary_rho(std::vector<Mat>(9, -Mat::Identity(2, 2)), b3), Error);
}

TEST_CASE("disk boundary layer with arclength parameter") {
  const auto rho = ConformalFactorField::constant(box2(-1.25, -1.25, 1.25, 1.25), 1.0);
  const auto bg = BoundaryGeometry::circle_arc(33, 1.0, v2(0, 0), 0.0, std::numbers::pi / 2, true);
  const DGrid grid(bg.param_shape, bg.dy, 1.0 / 32, std::vector<int>(33, 9), bg.y0);
  SynthesisOptions opt;
  opt.tau_mode = TauMode::kAnalytic;
  opt.source_radius = 0.8;
  const TravelTimeDataset ds = synthesize_dataset(rho, bg, grid, opt);
  RecoveryOptions ro;
  ro.min_lambda = 0.2;
  const MetricRecovery rec = recover_metric_field(ds, ro);
  for (int b = 0; b < ds.grid.boundary_count(); ++b) {
    const std::size_t node = ds.grid.index(b, 0);
    if (!rec.field.usable(node)) continue;
    CHECK(rec.field.covariant(node)(0, 0) == doctest::Approx(1.0).epsilon(1e-2));
  }
  // Polar pullback: g~_11 = (1 - t)^2.
  const int k = 6;
  const double t = k * ds.grid.dt();
  CHECK(rec.field.covariant(ds.grid.index(16, k))(0, 0) == doctest::Approx((1 - t) * (1 - t)).epsilon(1e-2));
}

TEST_CASE("truth_metric requires ground truth") {
  PhantomSpec ph = make_phantom("flat-constant");
  ph.synthesis.embed_truth = false;
  const TravelTimeDataset ds = synthesize_phantom(ph);
  try {
    truth_metric(ds);
    FAIL("missing truth accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnavailable);
  }
}
