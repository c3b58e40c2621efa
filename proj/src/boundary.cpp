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
#include "ttkin/boundary.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ttkin {

BoundaryGeometry BoundaryGeometry::flat(int n, std::vector<int> shape, std::vector<double> lo,
                                        std::vector<double> hi) {
  if (n < 2 || static_cast<int>(shape.size()) != n - 1 || lo.size() != shape.size() ||
      hi.size() != shape.size()) {
    fail(ErrorCode::kInvalidArgument, "flat boundary: need n-1 parameter axes");
  }
  BoundaryGeometry bg;
  bg.n = n;
  bg.kind = "segment";
  bg.param_shape = shape;
  bg.y0 = lo;
  std::size_t total = 1;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (shape[a] < 2 || !(hi[a] > lo[a])) fail(ErrorCode::kInvalidArgument, "flat boundary: bad axis");
    bg.dy.push_back((hi[a] - lo[a]) / (shape[a] - 1));
    total *= static_cast<std::size_t>(shape[a]);
  }
  std::vector<int> m(shape.size(), 0);
  for (std::size_t node = 0; node < total; ++node) {
    Vec x = Vec::Zero(n);
    for (std::size_t a = 0; a < shape.size(); ++a) x[static_cast<Eigen::Index>(a)] = lo[a] + m[a] * bg.dy[a];
    bg.points.push_back(x);
    bg.normals.push_back(Vec::Unit(n, n - 1));
    std::vector<Vec> tan;
    for (int a = 0; a < n - 1; ++a) tan.push_back(Vec::Unit(n, a));
    bg.tangents.push_back(std::move(tan));
    for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
      const auto ua = static_cast<std::size_t>(a);
      if (++m[ua] < shape[ua]) break;
      m[ua] = 0;
    }
  }
  return bg;
}

BoundaryGeometry BoundaryGeometry::circle_arc(int nodes, double radius, Vec center, double theta0,
                                              double theta1, bool arclength) {
  if (nodes < 3 || !(radius > 0.0) || center.size() != 2 || !(theta1 > theta0)) {
    fail(ErrorCode::kInvalidArgument, "circle arc: bad parameters");
  }
  BoundaryGeometry bg;
  bg.n = 2;
  bg.kind = "circle-arc";
  bg.param_shape = {nodes};
  const double dtheta = (theta1 - theta0) / (nodes - 1);
  const double scale = arclength ? radius : 1.0;
  bg.dy = {dtheta * scale};
  bg.y0 = {theta0 * scale};
  for (int i = 0; i < nodes; ++i) {
    const double th = theta0 + i * dtheta;
    const double c = std::cos(th), s = std::sin(th);
    Vec x(2), nu(2), tan(2);
    x << center[0] + radius * c, center[1] + radius * s;
    nu << -c, -s;
    tan << -radius * s / scale, radius * c / scale;
    bg.points.push_back(x);
    bg.normals.push_back(nu);
    bg.tangents.push_back({tan});
  }
  return bg;
}

BoundaryGeometry BoundaryGeometry::full_circle(int nodes, double radius, Vec center) {
  // theta1 chosen so that the last node stops one spacing short of the seam.
  const double step = 2.0 * std::numbers::pi / nodes;
  BoundaryGeometry bg = circle_arc(nodes, radius, std::move(center), 0.0, 2.0 * std::numbers::pi - step, false);
  bg.kind = "circle";
  return bg;
}

BoundaryGeometry BoundaryGeometry::sphere_patch(std::vector<int> shape, double radius, Vec center,
                                                double theta0, double theta1, double phi0,
                                                double phi1) {
  if (shape.size() != 2 || shape[0] < 3 || shape[1] < 3 || !(radius > 0.0) || center.size() != 3 ||
      !(theta1 > theta0) || !(phi1 > phi0) || theta0 <= 0.0 || theta1 >= std::numbers::pi) {
    fail(ErrorCode::kInvalidArgument, "sphere patch: bad parameters");
  }
  BoundaryGeometry bg;
  bg.n = 3;
  bg.kind = "sphere-patch";
  bg.param_shape = shape;
  bg.dy = {(theta1 - theta0) / (shape[0] - 1), (phi1 - phi0) / (shape[1] - 1)};
  bg.y0 = {theta0, phi0};
  for (int i = 0; i < shape[0]; ++i) {
    for (int j = 0; j < shape[1]; ++j) {
      const double th = theta0 + i * bg.dy[0];
      const double ph = phi0 + j * bg.dy[1];
      Vec dir(3), dth(3), dph(3);
      dir << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
      dth << std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th);
      dph << -std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph), 0.0;
      bg.points.push_back(center + radius * dir);
      bg.normals.push_back(-dir);
      bg.tangents.push_back({radius * dth, radius * dph});
    }
  }
  return bg;
}

void BoundaryGeometry::validate() const {
  std::size_t total = 1;
  for (int s : param_shape) total *= static_cast<std::size_t>(s);
  if (static_cast<int>(param_shape.size()) != n - 1 || points.size() != total ||
      normals.size() != total || tangents.size() != total || dy.size() != param_shape.size()) {
    fail(ErrorCode::kGeometry, "boundary geometry: inconsistent sizes");
  }
  for (std::size_t i = 0; i < total; ++i) {
    std::ostringstream where;
    where << " at boundary node " << i;
    if (points[i].size() != n || normals[i].size() != n ||
        static_cast<int>(tangents[i].size()) != n - 1) {
      fail(ErrorCode::kGeometry, "boundary geometry: missing normal/tangent data" + where.str());
    }
    if (std::abs(normals[i].norm() - 1.0) > 1e-8) {
      fail(ErrorCode::kGeometry, "boundary normal is not a unit vector" + where.str());
    }
    for (const Vec& t : tangents[i]) {
      if (t.size() != n) fail(ErrorCode::kGeometry, "tangent dimension mismatch" + where.str());
      if (std::abs(t.dot(normals[i])) > 1e-8 * std::max(1.0, t.norm())) {
        fail(ErrorCode::kGeometry, "normal not orthogonal to tangents" + where.str());
      }
    }
    const Mat I = first_fundamental_form(static_cast<int>(i));
    if (!is_spd(I)) fail(ErrorCode::kGeometry, "boundary tangents linearly dependent" + where.str());
  }
}

Mat BoundaryGeometry::first_fundamental_form(int node) const {
  const auto& t = tangents[static_cast<std::size_t>(node)];
  const int m = static_cast<int>(t.size());
  Mat I(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) I(a, b) = t[static_cast<std::size_t>(a)].dot(t[static_cast<std::size_t>(b)]);
  return I;
}

}  // namespace ttkin
