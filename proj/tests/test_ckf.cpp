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
#include "ttkin/ckf.hpp"
#include "ttkin/pipeline.hpp"

using namespace ttkin;
using namespace ttkin::test;

namespace {

MetricFieldOnD scaled_identity(const DGrid& g, double c = 1.0) {
  const int n = g.dim();
  std::vector<double> cov;
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const Mat m = c * Mat::Identity(n, n);
    cov.insert(cov.end(), m.data(), m.data() + n * n);
  }
  return MetricFieldOnD::from_covariant(g, cov);
}

template <typename F>
CovectorField covector(const DGrid& g, F f) {
  const int n = g.dim();
  CovectorField u(g.node_count() * static_cast<std::size_t>(n), kNaN);
  for (int b = 0; b < g.boundary_count(); ++b) {
    for (int k = 0; k < g.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const Vec v = f(g.coords(b, k));
      for (int i = 0; i < n; ++i) u[g.index(b, k) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = v[i];
    }
  }
  return u;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) m = std::max(m, std::abs(x));
  }
  return m;
}

}  // namespace

TEST_CASE("Euclidean CKF closed forms") {
  EuclideanCKFParams t;
  t.c = v3(1, 0, 0);
  CHECK(euclidean_ckf_eval(t, v3(0.3, -2, 5), 3) == v3(1, 0, 0));
  EuclideanCKFParams d;
  d.a0 = 1.0;
  CHECK(euclidean_ckf_eval(d, v3(1, 2, 3), 3) == v3(1, 2, 3));
  EuclideanCKFParams s;
  s.b = v3(1, 0, 0);
  CHECK(euclidean_ckf_eval(s, v3(1, 1, 0), 3) == v3(0, 2, 0));
  EuclideanCKFParams bad;
  bad.A = Mat::Identity(3, 3);
  try {
    euclidean_ckf_eval(bad, v3(1, 1, 1), 3);
    FAIL("symmetric A accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParameter);
  }
  bad = EuclideanCKFParams{};
  bad.c = v2(1, 0);
  CHECK_THROWS_AS(euclidean_ckf_eval(bad, v3(1, 1, 1), 3), Error);
}

TEST_CASE("planar catalog satisfies Cauchy-Riemann") {
  const double e = 1e-6;
  for (auto kind : {PlanarCKF::kTranslationX, PlanarCKF::kTranslationY, PlanarCKF::kRotation, PlanarCKF::kDilation,
                    PlanarCKF::kSquare, PlanarCKF::kCube, PlanarCKF::kExp}) {
    const Vec x = v2(0.3, -0.7);
    const Vec dx = (planar_ckf_eval(kind, x + v2(e, 0)) - planar_ckf_eval(kind, x - v2(e, 0))) / (2 * e);
    const Vec dy = (planar_ckf_eval(kind, x + v2(0, e)) - planar_ckf_eval(kind, x - v2(0, e))) / (2 * e);
    CHECK(std::abs(dx[0] - dy[1]) < 1e-8);
    CHECK(std::abs(dy[0] + dx[1]) < 1e-8);
  }
  CHECK(planar_ckf_eval(PlanarCKF::kSquare, v2(1, 2)) == v2(-3, 4));
}

TEST_CASE("CKE operator on hand-evaluated fields") {
  const DGrid g = DGrid::uniform({9}, {0.125}, 0.125, 1.0);
  const auto id = scaled_identity(g);
  const auto k0 = cke_operator(id, covector(g, [](const Vec&) { return v2(0.7, -1.3); }));
  CHECK(max_abs(k0) < 1e-14);

  const auto k1 = cke_operator(id, covector(g, [](const Vec& y) { return v2(y[0], 0.0); }));
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    CHECK(k1[node * 4 + 0] == doctest::Approx(0.5));
    CHECK(k1[node * 4 + 3] == doctest::Approx(-0.5));
    CHECK(std::abs(k1[node * 4 + 1]) < 1e-13);
    CHECK(std::abs(k1[node * 4 + 2]) < 1e-13);
  }
}

TEST_CASE("CKE operator residual on Euclidean CKFs") {
  SUBCASE("affine and quadratic families are resolved exactly") {
    EuclideanCKFParams p;
    p.a0 = 1.0;
    p.A = Mat::Zero(3, 3);
    p.A(0, 1) = 1.0;
    p.A(1, 0) = -1.0;
    p.b = v3(0.3, -0.1, 0.2);
    p.c = v3(1, 2, 0);
    const DGrid g({9, 9}, {0.125, 0.125}, 0.125, std::vector<int>(81, 9));
    CHECK(max_abs(cke_operator(scaled_identity(g), covector(g, [&](const Vec& y) { return euclidean_ckf_eval(p, y, 3); }))) < 1e-12);
  }
  SUBCASE("non-polynomial planar fields converge at second order") {
    auto residual = [](int cells, PlanarCKF kind) {
      const double h = 1.0 / cells;
      const DGrid g = DGrid::uniform({cells + 1}, {h}, h, 1.0 + 1e-12);
      return max_abs(cke_operator(scaled_identity(g), covector(g, [&](const Vec& y) { return planar_ckf_eval(kind, y); })));
    };
    for (auto kind : {PlanarCKF::kCube, PlanarCKF::kExp}) {
      CHECK(order(residual(16, kind), residual(32, kind)) >= 1.9);
    }
  }
}

TEST_CASE("Cauchy data on flat and circular boundaries") {
  const auto flat = BoundaryGeometry::flat(2, {5}, {0.0}, {1.0});
  const CauchyData one = assemble_cauchy_data(BoundaryRhoTrace{std::vector<double>(5, 1.0), {}}, flat);
  const CauchyData four = assemble_cauchy_data(BoundaryRhoTrace{std::vector<double>(5, 4.0), {}}, flat);
  for (int b = 0; b < 5; ++b) {
    CHECK(one.value(b, 0, 0) == 1.0);
    CHECK(one.value(b, 0, 1) == 0.0);
    CHECK(one.value(b, 1, 0) == 0.0);
    CHECK(one.value(b, 1, 1) == 1.0);
    CHECK(four.value(b, 0, 0) == 4.0);
    CHECK(four.value(b, 1, 1) == 2.0);
  }

  const double r = 1.5;
  const auto arc = BoundaryGeometry::circle_arc(7, r, v2(0, 0), 0.0, 1.0, false);
  const CauchyData c = assemble_cauchy_data(BoundaryRhoTrace{std::vector<double>(7, 1.0), {}}, arc);
  for (int b = 0; b < 7; ++b) {
    const double th = arc.y0[0] + b * arc.dy[0];
    CHECK(c.value(b, 0, 0) == doctest::Approx(-r * std::sin(th)));
    CHECK(c.value(b, 1, 0) == doctest::Approx(r * std::cos(th)));
    CHECK(c.value(b, 0, 1) == doctest::Approx(-std::cos(th)));
    CHECK(c.value(b, 1, 1) == doctest::Approx(-std::sin(th)));
  }
  CHECK_THROWS_AS(assemble_cauchy_data(BoundaryRhoTrace{std::vector<double>(5, -1.0), {}}, flat), Error);
}

TEST_CASE("flat march keeps translation fields constant") {
  const auto bg = BoundaryGeometry::flat(2, {17}, {0.0}, {1.0});
  const DGrid g = DGrid::uniform({17}, {1.0 / 16}, 1.0 / 32, 0.5);
  const CauchyData data = assemble_cauchy_data(BoundaryRhoTrace{std::vector<double>(17, 1.0), {}}, bg);
  const MarchResult m = cke_march(scaled_identity(g), data);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) CHECK(m.family.value(node, j, i) == doctest::Approx(i == j ? 1.0 : 0.0));
    }
  }
  CHECK(max_abs(m.constraint_by_layer) < 1e-13);

  const ReconstructionResult rec = reconstruct_gamma_rho(m.family, bg);
  for (int b = 0; b < g.boundary_count(); ++b) {
    for (int k = 0; k < g.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      CHECK((rec.gamma_at(g.index(b, k)) - g.coords(b, k)).norm() < 1e-13);
      CHECK(rec.rho[g.index(b, k)] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("march requires a semigeodesic metric") {
  const auto bg = BoundaryGeometry::flat(2, {9}, {0.0}, {1.0});
  const DGrid g = DGrid::uniform({9}, {0.125}, 0.125, 0.5);
  const CauchyData data = assemble_cauchy_data(BoundaryRhoTrace{std::vector<double>(9, 4.0), {}}, bg);
  try {
    cke_march(scaled_identity(g, 4.0), data);
    FAIL("non-semigeodesic metric accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPrecondition);
  }
}

TEST_CASE("march is linear in the Cauchy data") {
  const PhantomSpec ph = make_phantom("gaussian-bump");
  const TravelTimeDataset ds = synthesize_phantom(ph);
  const MetricFieldOnD g = project_semigeodesic(truth_metric(ds));
  const int B = ds.grid.boundary_count();
  CauchyData u, w, mix;
  u.n = w.n = mix.n = 2;
  for (int b = 0; b < B; ++b) {
    const double s = b * ds.grid.dy()[0];
    for (double x : {1.0 + s, 0.3 * s, -0.2, 1.0 - 0.5 * s}) u.values.push_back(x);
    for (double x : {std::sin(3 * s), 0.5, std::cos(2 * s), 0.1 * s}) w.values.push_back(x);
  }
  for (std::size_t i = 0; i < u.values.size(); ++i) mix.values.push_back(2.0 * u.values[i] - 0.7 * w.values[i]);
  MarchOptions opt;
  opt.guard = false;
  const MarchResult mu = cke_march(g, u, opt), mw = cke_march(g, w, opt), mm = cke_march(g, mix, opt);
  // The unfiltered march amplifies rounding differences layer by layer, so
  // the comparison covers the first layers.
  double worst = 0.0, scale = 0.0;
  for (int b = 0; b < B; ++b) {
    for (int k = 0; k <= 8; ++k) {
      const std::size_t base = ds.grid.index(b, k) * 4;
      for (std::size_t c = 0; c < 4; ++c) {
        const double lin = 2.0 * mu.family.values[base + c] - 0.7 * mw.family.values[base + c];
        worst = std::max(worst, std::abs(mm.family.values[base + c] - lin));
        scale = std::max(scale, std::abs(lin));
      }
    }
  }
  MESSAGE("linearity defect over 8 layers ", worst / scale);
  CHECK(worst <= 1e-12 * scale);
}

TEST_CASE("bump march against the chart's covector fields") {
  const PhantomSpec ph = make_phantom("gaussian-bump");
  const TravelTimeDataset ds = synthesize_phantom(ph);
  const Reconstruction rec = reconstruct_dataset(ds, ph.solver);
  REQUIRE(rec.ok());
  const CovectorFamilyOnD& u = rec.march->family;
  // u^(j)_i = rho(gamma) d gamma^j / dy^i.
  std::vector<std::vector<double>> comps(2, std::vector<double>(ds.grid.node_count(), kNaN));
  for (int b = 0; b < ds.grid.boundary_count(); ++b) {
    for (int k = 0; k < ds.grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const Vec x = ds.truth_gamma(b, k);
      comps[0][ds.grid.index(b, k)] = x[0];
      comps[1][ds.grid.index(b, k)] = x[1];
    }
  }
  double worst = 0.0;
  for (int b = 0; b < ds.grid.boundary_count(); ++b) {
    for (int k = 0; k < ds.grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = ds.grid.index(b, k);
      const double rho = ds.truth_rho(b, k);
      for (int j = 0; j < 2; ++j) {
        const Vec d = *grid_gradient(ds.grid, comps[static_cast<std::size_t>(j)], b, k);
        const Vec exact = rho * d;
        Vec got(2);
        got << u.value(node, j, 0), u.value(node, j, 1);
        worst = std::max(worst, (got - exact).norm() / exact.norm());
      }
    }
  }
  MESSAGE("bump march relative error ", worst);
  CHECK(worst <= 0.05);
}

TEST_CASE("reconstruction from constant normal components") {
  const auto bg = BoundaryGeometry::flat(2, {9}, {0.0}, {1.0});
  const DGrid g = DGrid::uniform({9}, {0.125}, 0.125, 1.0);
  for (double c : {1.0, 2.0}) {
    CovectorFamilyOnD u(g);
    u.n = 2;
    u.values.assign(g.node_count() * 4, 0.0);
    for (std::size_t node = 0; node < g.node_count(); ++node) {
      u.value(node, 0, 0) = c * c;
      u.value(node, 1, 1) = c;
    }
    const ReconstructionResult r = reconstruct_gamma_rho(u, bg);
    CHECK(r.min_speed2 == doctest::Approx(c * c));
    for (int b = 0; b < g.boundary_count(); ++b) {
      for (int k = 0; k < g.t_counts()[static_cast<std::size_t>(b)]; ++k) {
        const std::size_t node = g.index(b, k);
        CHECK((r.gamma_at(node) - v2(b * 0.125, k * 0.125 / c)).norm() < 1e-13);
        CHECK(r.rho[node] == doctest::Approx(c * c));
        // Pullback of the speed relation rho |d gamma / dt|^2 = 1.
        CHECK(r.rho[node] * std::pow(1.0 / c, 2) == doctest::Approx(1.0));
      }
    }
  }
  CovectorFamilyOnD z(g);
  z.n = 2;
  z.values.assign(g.node_count() * 4, 0.0);
  try {
    reconstruct_gamma_rho(z, bg);
    FAIL("zero speed accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateSpeed);
  }
}

TEST_CASE("metric smoothing preserves semigeodesic components") {
  const PhantomSpec ph = make_phantom("gaussian-bump");
  const TravelTimeDataset ds = synthesize_phantom(ph);
  const MetricFieldOnD g = project_semigeodesic(truth_metric(ds));
  const MetricFieldOnD s = smooth_metric(g, 3.0, 4.0);
  double change = 0.0;
  for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
    if (!s.usable(node)) continue;
    const Mat c = s.contravariant(node);
    CHECK(c(1, 1) == 1.0);
    CHECK(c(0, 1) == 0.0);
    change = std::max(change, std::abs(c(0, 0) - g.contravariant(node)(0, 0)));
  }
  CHECK(change < 0.05);
}
