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

#include <string>
#include <vector>

#include "ttkin/geometry.hpp"

namespace ttkin {

/// Parametrized boundary patch Gamma sampled on the boundary axes of D.
///
/// Nodes are stored in row-major parameter order. For every node we keep the
/// Cartesian point x', the Euclidean inward unit normal nu0 and the tangent
/// vectors dx'/dy^alpha.
struct BoundaryGeometry {
  int n = 0;
  std::vector<int> param_shape;
  std::vector<double> dy;
  std::vector<double> y0;
  std::vector<Vec> points;
  std::vector<Vec> normals;
  std::vector<std::vector<Vec>> tangents;
  std::string kind = "custom";

  int node_count() const { return static_cast<int>(points.size()); }

  /// Hyperplane patch x^n = 0 with y^alpha = x^alpha on [lo, hi]; nu0 = e_n.
  static BoundaryGeometry flat(int n, std::vector<int> shape, std::vector<double> lo,
                               std::vector<double> hi);

  /// Circle arc of radius r around `center`, inward normal towards the
  /// center. With `arclength` the parameter is s = r * theta, otherwise theta.
  /// A closed circle samples [theta0, theta0 + 2 pi) without duplicating the
  /// seam node.
  static BoundaryGeometry circle_arc(int nodes, double radius, Vec center, double theta0,
                                     double theta1, bool arclength);
  static BoundaryGeometry full_circle(int nodes, double radius, Vec center);

  /// Sphere patch in polar/azimuthal angles (theta, phi), inward normal.
  static BoundaryGeometry sphere_patch(std::vector<int> shape, double radius, Vec center,
                                       double theta0, double theta1, double phi0, double phi1);

  /// |nu0| = 1, nu0 orthogonal to the tangents (1e-8) and tangents linearly
  /// independent. Throws kGeometry on violation.
  void validate() const;

  /// First fundamental form sum_k dx'^k/dy^a dx'^k/dy^b at a node.
  Mat first_fundamental_form(int node) const;
};

}  // namespace ttkin
