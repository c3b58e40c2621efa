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
#include "ttkin/boundary.hpp"

using namespace ttkin;
using namespace ttkin::test;

TEST_CASE("flat boundary patch") {
  const auto bg = BoundaryGeometry::flat(2, {5}, {0.0}, {1.0});
  bg.validate();
  CHECK(bg.node_count() == 5);
  CHECK(bg.points[3][0] == doctest::Approx(0.75));
  CHECK(bg.points[3][1] == 0.0);
  CHECK(bg.normals[2] == v2(0, 1));
  CHECK(bg.first_fundamental_form(1)(0, 0) == doctest::Approx(1.0));

  const auto b3 = BoundaryGeometry::flat(3, {3, 4}, {0.0, 0.0}, {1.0, 3.0});
  b3.validate();
  CHECK(b3.node_count() == 12);
  // Row-major in the parameters, last axis fastest.
  CHECK(b3.points[1] == v3(0.0, 1.0, 0.0));
  CHECK(b3.points[4] == v3(0.5, 0.0, 0.0));
  CHECK((b3.first_fundamental_form(5) - Mat::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("circle parametrizations") {
  const double r = 2.0;
  const auto angle = BoundaryGeometry::circle_arc(9, r, v2(0.5, -0.5), 0.0, std::numbers::pi, false);
  angle.validate();
  for (int i = 0; i < angle.node_count(); ++i) {
    CHECK((angle.points[static_cast<std::size_t>(i)] - v2(0.5, -0.5)).norm() == doctest::Approx(r));
    CHECK(angle.normals[static_cast<std::size_t>(i)].norm() == doctest::Approx(1.0));
    CHECK(angle.first_fundamental_form(i)(0, 0) == doctest::Approx(r * r));
  }
  // Inward normal at theta = 0 points towards the centre.
  CHECK((angle.normals[0] - v2(-1, 0)).norm() < 1e-14);

  const auto arc = BoundaryGeometry::circle_arc(9, r, v2(0, 0), 0.0, 1.0, true);
  for (int i = 0; i < arc.node_count(); ++i) CHECK(arc.first_fundamental_form(i)(0, 0) == doctest::Approx(1.0));

  const auto full = BoundaryGeometry::full_circle(16, 1.0, v2(0, 0));
  full.validate();
  CHECK(full.node_count() == 16);
  CHECK((full.points[15] - full.points[0]).norm() > 0.3);
}

TEST_CASE("sphere patch") {
  const auto s = BoundaryGeometry::sphere_patch({5, 6}, 1.5, v3(0, 0, 0), 0.5, 1.5, 0.0, 1.0);
  s.validate();
  for (int i = 0; i < s.node_count(); ++i) {
    const Vec& x = s.points[static_cast<std::size_t>(i)];
    CHECK(x.norm() == doctest::Approx(1.5));
    CHECK((s.normals[static_cast<std::size_t>(i)] + x / 1.5).norm() < 1e-12);
  }
}

TEST_CASE("validate rejects broken geometry") {
  auto bg = BoundaryGeometry::flat(2, {4}, {0.0}, {1.0});
  auto bad = bg;
  bad.normals[1] = v2(0, 2);
  try {
    bad.validate();
    FAIL("non-unit normal accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGeometry);
  }
  bad = bg;
  bad.normals[2] = v2(1, 0);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = bg;
  bad.tangents[0][0] = v2(0, 0);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = bg;
  bad.tangents.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(BoundaryGeometry::flat(2, {1}, {0.0}, {1.0}), Error);
}
