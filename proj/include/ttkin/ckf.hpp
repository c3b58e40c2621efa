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

// Conformal Killing fields: the operator K, Euclidean closed forms, the
// Cauchy problem on D and the final reconstruction of gamma and rho.

#include <vector>

#include "ttkin/boundary.hpp"
#include "ttkin/geometry.hpp"
#include "ttkin/recovery.hpp"

namespace ttkin {

/// u^i(x) = a0 x^i + (A x)^i - b^i |x|^2 + 2 x^i (b, x) + c^i.
struct EuclideanCKFParams {
  double a0 = 0.0;
  Mat A;  // skew-symmetric; empty means zero
  Vec b;  // empty means zero
  Vec c;  // empty means zero
};

/// Contravariant components of the Euclidean CKF at x. Throws kParameter if
/// A is not skew-symmetric (1e-12) or sizes disagree with n.
Vec euclidean_ckf_eval(const EuclideanCKFParams& p, const Vec& x, int n);

/// Planar CKFs: u^1 + i u^2 = f(z) for holomorphic f (1, i, iz, z, z^2, z^3,
/// e^z).
enum class PlanarCKF { kTranslationX, kTranslationY, kRotation, kDilation, kSquare, kCube, kExp };

Vec planar_ckf_eval(PlanarCKF kind, const Vec& x);

/// Covector field on D: n components per node (DGrid::index), NaN = missing.
using CovectorField = std::vector<double>;

/// (Ku)_{ij} = 1/2 (d_j u_i + d_i u_j - 2 Gamma^k_ij u_k)
///             - 1/n g_ij (g^{kl} d_k u_l - g^{kl} Gamma^m_kl u_m),
/// n*n per node, NaN where a stencil or the metric is unavailable.
std::vector<double> cke_operator(const MetricFieldOnD& g, const CovectorField& u);
std::vector<double> cke_operator(const MetricFieldOnD& g, const ChristoffelField& gamma,
                                 const CovectorField& u);

/// The n covector fields u^(j); value(node, j, i) = u^(j)_i.
struct CovectorFamilyOnD {
  DGrid grid;
  int n = 0;
  std::vector<double> values;  // node * n * n + j * n + i

  explicit CovectorFamilyOnD(DGrid g = {});
  double value(std::size_t node, int j, int i) const {
    return values[node * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(j * n + i)];
  }
  double& value(std::size_t node, int j, int i) {
    return values[node * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(j * n + i)];
  }
  /// u^(j) as a CovectorField.
  CovectorField member(int j) const;
};

/// Boundary-layer data u^(j)_i(x', 0); value(b, j, i).
struct CauchyData {
  int n = 0;
  std::vector<double> values;  // b * n * n + j * n + i

  int boundary_count() const { return n == 0 ? 0 : static_cast<int>(values.size()) / (n * n); }
  double value(int b, int j, int i) const {
    return values[static_cast<std::size_t>(b * n * n + j * n + i)];
  }
  double& value(int b, int j, int i) { return values[static_cast<std::size_t>(b * n * n + j * n + i)]; }
};

/// u^(j)_a = rho dx'^j/dy^a and u^(j)_n = sqrt(rho) nu0^j. Throws kGeometry
/// when tangents or normals are missing.
CauchyData assemble_cauchy_data(const BoundaryRhoTrace& trace, const BoundaryGeometry& bg);

struct MarchOptions {
  /// Width (in boundary spacings) of the per-layer low-pass filter, a
  /// Gaussian-weighted local quadratic fit along boundary lines; 0 disables it.
  double smooth_width = 0.0;
  /// eps_K = guard_factor * initial residual + guard_floor.
  double guard_factor = 10.0;
  double guard_floor = 1e-3;
  bool guard = true;
  unsigned threads = 0;
};

struct MarchResult {
  CovectorFamilyOnD family;
  std::vector<double> constraint_by_layer;  // max |K_ab| over the layer
  double initial_residual = 0.0;
  double guard_threshold = 0.0;
};

/// Marches u^(j) in t from the Cauchy layer with classical RK4:
///   d_t u_a = -d_a u_n + 2 Gamma^k_an u_k,
///   d_t u_n = 1/(n-1) g^{ab} (d_a u_b - Gamma^k_ab u_k),
/// with metric and Christoffels linearly interpolated between layers.
///
/// Throws kPrecondition unless g is in semigeodesic form, kDivergence when
/// the constraint residual of a layer exceeds eps_K, kInstability on
/// non-finite values.
MarchResult cke_march(const MetricFieldOnD& g, const CauchyData& cauchy, const MarchOptions& options = {});

/// Applies the march filter to the tangential components g~^{ab}, along
/// boundary lines with `width` and along t-columns with `t_width` (in
/// spacings; 0 skips a direction). Semigeodesic parts are kept.
MetricFieldOnD smooth_metric(const MetricFieldOnD& g, double width, double t_width = 0.0);

/// Max |K_ab| per t-layer for a covector family.
std::vector<double> constraint_residual_by_layer(const MetricFieldOnD& g, const ChristoffelField& gamma,
                                                 const CovectorFamilyOnD& u);

struct ReconstructionResult {
  CovectorFamilyOnD family;
  std::vector<double> v;         // node * n
  std::vector<double> gamma;     // node * n, Cartesian
  std::vector<double> rho;       // |v|^2 per node
  std::vector<double> jacobian;  // det(d gamma / dy), NaN where no stencil
  std::vector<double> constraint_by_layer;
  double min_speed2 = 0.0;

  Vec gamma_at(std::size_t node) const;
};

/// v^j = u^(j)_n, gamma = x' + cumulative trapezoid of v / |v|^2, rho = |v|^2.
/// Throws kDegenerateSpeed when |v|^2 < eps_v at some node.
ReconstructionResult reconstruct_gamma_rho(const CovectorFamilyOnD& u, const BoundaryGeometry& bg,
                                           double eps_v = 1e-8);

}  // namespace ttkin
