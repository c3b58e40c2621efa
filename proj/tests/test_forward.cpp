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
#include "ttkin/forward.hpp"

using namespace ttkin;
using namespace ttkin::test;

namespace {

ConformalFactorField bump() {
  return ConformalFactorField::gaussian_bump(box2(-1, -1, 2, 2), 1.0, 0.3, v2(0.5, 0.3), 0.08);
}

}  // namespace

TEST_CASE("inward normal scales with the conformal factor") {
  const auto bg = BoundaryGeometry::flat(2, {5}, {0.0}, {1.0});
  const auto one = ConformalFactorField::constant(box2(-1, -1, 2, 2), 1.0);
  const auto four = ConformalFactorField::constant(box2(-1, -1, 2, 2), 4.0);
  CHECK(inward_normal(one, bg, 2) == v2(0, 1));
  CHECK((inward_normal(four, bg, 2) - v2(0, 0.5)).norm() < 1e-15);

  const auto circle = BoundaryGeometry::full_circle(32, 1.0, v2(0.5, 0.5));
  const auto rho = bump();
  for (int i = 0; i < circle.node_count(); ++i) {
    const Vec nu = inward_normal(rho, circle, i);
    CHECK(std::abs(rho.value(circle.points[static_cast<std::size_t>(i)]) * nu.squaredNorm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("geodesics of constant factors are straight lines") {
  const auto one = ConformalFactorField::constant(box2(-1, -1, 2, 2), 1.0);
  const auto p = geodesic_shoot(one, v2(0, 0), v2(0, 1), 1.0, 1e-2);
  CHECK((p.x.back() - v2(0, 1)).norm() < 1e-13);
  CHECK(p.t.back() == doctest::Approx(1.0));
  CHECK_FALSE(p.truncated);

  const auto four = ConformalFactorField::constant(box2(-1, -1, 2, 2), 4.0);
  const auto q = geodesic_shoot(four, v2(0, 0), v2(0, 0.5), 1.0, 1e-2, 10);
  CHECK((q.x.back() - v2(0, 0.5)).norm() < 1e-13);
  CHECK(q.t.size() == 11u);
  CHECK(q.max_speed_drift < 1e-13);
}

TEST_CASE("geodesic_shoot preconditions and truncation") {
  const auto one = ConformalFactorField::constant(box2(0, 0, 1, 1), 1.0);
  try {
    geodesic_shoot(one, v2(0.5, 0.5), v2(0, 1.1), 1.0, 1e-2);
    FAIL("non-unit velocity accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPrecondition);
  }
  const auto p = geodesic_shoot(one, v2(0.5, 0.5), v2(0, 1), 1.0, 1e-2);
  CHECK(p.truncated);
  CHECK(p.t.back() <= 0.5 + 1e-12);
}

TEST_CASE("geodesic speed drift and step-halving order on the radial phantom") {
  const auto rho = ConformalFactorField::radial(box2(-2, -2, 2, 2), 1.0, 1.0, v2(0, 0));
  const Vec x0 = v2(-0.6, 0.3);
  const Vec dir = v2(1.0, 0.4).normalized();
  const Vec xi0 = dir / std::sqrt(rho.value(x0));
  const auto fine = geodesic_shoot(rho, x0, xi0, 1.0, 1e-3);
  CHECK(fine.max_speed_drift <= 1e-8);
  const Vec ref = geodesic_shoot(rho, x0, xi0, 1.0, 1e-4).x.back();
  const double e1 = (geodesic_shoot(rho, x0, xi0, 1.0, 4e-2).x.back() - ref).norm();
  const double e2 = (geodesic_shoot(rho, x0, xi0, 1.0, 2e-2).x.back() - ref).norm();
  CHECK(order(e1, e2) >= 3.9);
}

TEST_CASE("flat half-space chart") {
  const auto one = ConformalFactorField::constant(box2(-1, -1, 2, 2), 1.0);
  const auto bg = BoundaryGeometry::flat(2, {17}, {0.0}, {1.0});
  const DGrid grid = DGrid::uniform({17}, {1.0 / 16}, 1.0 / 16, 1.0);
  const NormalChart chart = build_normal_chart(one, bg, grid);
  CHECK(chart.truncated_by_jacobian + chart.truncated_by_collision + chart.truncated_by_exit == 0);
  CHECK(chart.grid.valid_node_count() == grid.valid_node_count());
  for (int b = 0; b < grid.boundary_count(); ++b) {
    CHECK(chart.extent[static_cast<std::size_t>(b)] == doctest::Approx(1.0));
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = grid.index(b, k);
      CHECK((chart.point(node) - grid.coords(b, k)).norm() < 1e-12);
      CHECK(chart.jacobian[node] == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("disk chart degenerates at the centre") {
  const double r = 1.0;
  const auto one = ConformalFactorField::constant(box2(-1.25, -1.25, 1.25, 1.25), 1.0);
  const auto bg = BoundaryGeometry::full_circle(64, r, v2(0, 0));
  const double h = 1.0 / 32;
  const DGrid grid(bg.param_shape, bg.dy, h, std::vector<int>(64, 39), bg.y0);
  const NormalChart chart = build_normal_chart(one, bg, grid);
  CHECK(chart.truncated_by_jacobian + chart.truncated_by_collision == 64);
  for (int b = 0; b < 64; ++b) {
    const double T = chart.extent[static_cast<std::size_t>(b)];
    CHECK(T >= r - 3 * h);
    CHECK(T <= r);
    // Relative Jacobian of the polar chart is (r - t) / r.
    for (int k = 0; k < chart.grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = chart.grid.index(b, k);
      CHECK(chart.relative_jacobian[node] == doctest::Approx((r - k * h) / r).epsilon(1e-3));
    }
  }
}

TEST_CASE("eikonal solver on constant factors") {
  const double h = 1.0 / 64;
  const auto one = ConformalFactorField::constant(box2(-1, -1, 1, 1), 1.0);
  const auto tau = eikonal_solve(one, v2(0, 0), h);
  CHECK(tau.interpolate(v2(3 * h, 4 * h)) == doctest::Approx(5 * h).epsilon(0.02));
  CHECK(tau.interpolate(v2(0.5, 0.0)) == doctest::Approx(0.5).epsilon(0.02));

  const auto c = ConformalFactorField::constant(box2(-1, -1, 1, 1), 2.25);
  const auto tc = eikonal_solve(c, v2(0.1, -0.2), h);
  double worst = 0.0;
  for (std::size_t i = 0; i < tc.size(); ++i) {
    const Vec x = tc.node(i);
    const double exact = 1.5 * (x - v2(0.1, -0.2)).norm();
    worst = std::max(worst, std::abs(tc.values[i] - exact));
  }
  MESSAGE("constant-factor eikonal sup error / h = ", worst / h);
  CHECK(worst <= 5 * h);
  CHECK_THROWS_AS(eikonal_solve(c, v2(3, 0), h), Error);
}

TEST_CASE("eikonal error decreases under refinement") {
  const auto c = ConformalFactorField::constant(box2(-1, -1, 1, 1), 2.25);
  auto error_at = [&](double h) {
    const auto tau = eikonal_solve(c, v2(0, 0), h);
    double worst = 0.0;
    for (double a = 0.0; a < 1.5; a += 0.1) {
      const Vec x = 0.8 * v2(std::cos(a), std::sin(a));
      worst = std::max(worst, std::abs(tau.interpolate(x) - 1.2));
    }
    return worst;
  };
  CHECK(error_at(1.0 / 64) < error_at(1.0 / 32));
}

TEST_CASE("dijkstra oracle") {
  const double h = 1.0 / 32;
  const auto one = ConformalFactorField::constant(box2(-1, -1, 2, 2), 1.0);
  CHECK(dijkstra_distance(one, v2(0, 0), v2(1, 0), h) == 1.0);
  const double d = dijkstra_distance(one, v2(0, 0), v2(3 * h, 4 * h), h);
  CHECK(std::abs(d - 5 * h) <= 0.015 * 5 * h);

  const auto rho = bump();
  const Vec a = v2(0.13, 0.71), b = v2(0.92, -0.05);
  CHECK(dijkstra_distance(rho, a, b, h) == dijkstra_distance(rho, b, a, h));

  DijkstraOptions wall;
  wall.passable = [](const Vec& x) { return std::abs(x[0] - 0.5) > 0.05; };
  try {
    dijkstra_distance(one, v2(0, 0), v2(1, 0), h, wall);
    FAIL("blocked target reached");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnreachable);
  }
}

TEST_CASE("eikonal agrees with dijkstra on the bump phantom") {
  const auto rho = bump();
  const double h = 1.0 / 64;
  DijkstraOptions wide;
  wide.stencil_radius = 3;
  const Vec s = v2(0.1, 0.2);
  const auto tau = eikonal_solve(rho, s, h);
  for (const Vec& q : {v2(0.9, 0.4), v2(0.5, 1.0), v2(-0.3, -0.4)}) {
    const double ref = dijkstra_distance(rho, s, q, h, wide);
    CHECK(std::abs(tau.interpolate(q) - ref) <= 0.03 * ref);
  }
}

TEST_CASE("forward results are deterministic across thread counts") {
  const auto rho = bump();
  const auto bg = BoundaryGeometry::flat(2, {33}, {0.0}, {1.0});
  const DGrid grid = DGrid::uniform({33}, {1.0 / 32}, 0.3 / 32, 0.3);
  ChartOptions one_thread;
  one_thread.threads = 1;
  ChartOptions many;
  many.threads = 4;
  const auto a = build_normal_chart(rho, bg, grid, one_thread);
  const auto b = build_normal_chart(rho, bg, grid, many);
  CHECK(a.jacobian.size() == b.jacobian.size());
  bool same = true;
  for (std::size_t i = 0; i < a.gamma.size(); ++i) {
    same = same && (a.gamma[i] == b.gamma[i] || (std::isnan(a.gamma[i]) && std::isnan(b.gamma[i])));
  }
  CHECK(same);
  const auto t1 = eikonal_solve(rho, v2(0.2, 0.0), 1.0 / 32);
  const auto t2 = eikonal_solve(rho, v2(0.2, 0.0), 1.0 / 32);
  CHECK(t1.values == t2.values);
}
