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

// Tensor and finite-difference utilities shared by every stage: the
// conformal factor rho of g = rho dx^2, its Christoffel symbols, the
// semigeodesic parameter grid D and metric fields living on it.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ttkin/errors.hpp"

namespace ttkin {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Axis-aligned Cartesian box [lo, hi].
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x, double slack = 1e-9) const;
  /// Nearest point of the box.
  Vec clamp(const Vec& x) const;
};

/// Conformal factor rho > 0 of the metric g = rho * dx^2.
///
/// Analytic phantoms report exact gradients. Gridded fields use multilinear
/// interpolation for values and differentiate the interpolant for gradients.
class ConformalFactorField {
 public:
  struct Constant {
    double level;
  };
  /// rho = base + amplitude * exp(-|x - center|^2 / width)
  struct GaussianBump {
    double base;
    double amplitude;
    Vec center;
    double width;
  };
  /// rho = scale * (1 + k |x - center|^2)^-2
  struct Radial {
    double scale;
    double k;
    Vec center;
  };
  struct Gridded {
    std::vector<int> dims;
    std::vector<double> values;  // row-major, last axis fastest
  };
  using Source = std::variant<Constant, GaussianBump, Radial, Gridded>;

  static ConformalFactorField constant(Box box, double level);
  static ConformalFactorField gaussian_bump(Box box, double base, double amplitude,
                                            Vec center, double width);
  static ConformalFactorField radial(Box box, double scale, double k, Vec center);
  static ConformalFactorField gridded(Box box, std::vector<int> dims,
                                      std::vector<double> values);

  int dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  const Source& source() const { return source_; }

  /// Short phantom id: "flat-constant", "gaussian-bump", "radial", "user-grid".
  std::string id() const;
  bool is_constant() const { return std::holds_alternative<Constant>(source_); }

  /// Throws kDomain outside the box and kPositivity for rho <= 0.
  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  /// Value and gradient in one evaluation; same checks as value().
  double value_and_gradient(const Vec& x, Vec& grad) const;

  /// Evaluation at the nearest box point; used by grid-based solvers whose
  /// outermost nodes may overhang the box by less than one cell.
  double value_clamped(const Vec& x) const { return value(box_.clamp(x)); }

 private:
  ConformalFactorField(Box box, Source source);
  double raw(const Vec& x, Vec* grad) const;

  Box box_;
  Source source_;
};

/// Christoffel symbols Gamma^k_{ij} of one point, stored densely.
class Christoffel {
 public:
  explicit Christoffel(int n) : n_(n), c_(static_cast<std::size_t>(n * n * n), 0.0) {}

  int dim() const { return n_; }
  double& operator()(int k, int i, int j) { return c_[idx(k, i, j)]; }
  double operator()(int k, int i, int j) const { return c_[idx(k, i, j)]; }
  std::span<const double> data() const { return c_; }

 private:
  std::size_t idx(int k, int i, int j) const {
    return static_cast<std::size_t>((k * n_ + i) * n_ + j);
  }
  int n_;
  std::vector<double> c_;
};

/// Gamma^k_{ij} = (1/(2 rho)) (delta^k_i d_j rho + delta^k_j d_i rho - delta_ij d_k rho)
Christoffel conformal_christoffel(const ConformalFactorField& rho, const Vec& x);

/// Parameter grid of D = {(x', t) : x' in Gamma, 0 <= t < T(x')}.
///
/// Boundary axes y^1..y^{n-1} are uniform; t is the last coordinate. Columns
/// are ragged: column b holds t_counts[b] samples, stored over a rectangular
/// (boundary node, t index) space of width max_t_count().
class DGrid {
 public:
  DGrid() = default;
  DGrid(std::vector<int> boundary_shape, std::vector<double> dy, double dt,
        std::vector<int> t_counts, std::vector<double> y0 = {});

  /// Every column gets floor(T / dt) + 1 samples.
  static DGrid uniform(std::vector<int> boundary_shape, std::vector<double> dy, double dt,
                       double T, std::vector<double> y0 = {});

  int dim() const { return static_cast<int>(shape_.size()) + 1; }
  int boundary_axes() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& boundary_shape() const { return shape_; }
  const std::vector<double>& dy() const { return dy_; }
  const std::vector<double>& y0() const { return y0_; }
  double dt() const { return dt_; }
  const std::vector<int>& t_counts() const { return t_counts_; }

  int boundary_count() const { return static_cast<int>(t_counts_.size()); }
  int max_t_count() const { return kmax_; }
  std::size_t node_count() const {
    return static_cast<std::size_t>(boundary_count()) * static_cast<std::size_t>(kmax_);
  }
  std::size_t valid_node_count() const;

  std::size_t index(int b, int k) const {
    return static_cast<std::size_t>(b) * static_cast<std::size_t>(kmax_) +
           static_cast<std::size_t>(k);
  }
  bool valid(int b, int k) const { return k >= 0 && k < t_counts_[static_cast<std::size_t>(b)]; }

  /// Metric-length extent of column b: t of its last sample.
  double extent(int b) const { return (t_counts_[static_cast<std::size_t>(b)] - 1) * dt_; }
  /// Spacing along axis a; a == dim()-1 is the t axis.
  double spacing(int axis) const { return axis == boundary_axes() ? dt_ : dy_[static_cast<std::size_t>(axis)]; }

  std::vector<int> boundary_multi_index(int b) const;
  int boundary_flat_index(std::span<const int> multi) const;
  /// Flat index of the boundary node `step` cells away along `axis`, or -1.
  int boundary_neighbor(int b, int axis, int step) const;

  /// Parameter coordinates (y^1..y^{n-1}, t) of node (b, k).
  Vec coords(int b, int k) const;

  DGrid with_t_counts(std::vector<int> t_counts) const;

 private:
  std::vector<int> shape_;
  std::vector<double> dy_;
  std::vector<double> y0_;
  double dt_ = 0.0;
  std::vector<int> t_counts_;
  std::vector<int> strides_;
  int kmax_ = 0;
};

/// Order-2 derivative from five samples centred on the node (f[2]); NaN marks
/// a missing sample. Central when both neighbours exist, else forward
/// one-sided, else backward one-sided, else NaN.
double stencil_derivative(const std::array<double, 5>& f, double h);

/// Gradient of a scalar field on D at node (b, k), ordered (d/dy^1 .. d/dt).
///
/// `values` is indexed by DGrid::index; NaN entries are treated as missing.
/// Returns nullopt when some axis has no complete stencil around the node.
/// Throws kStencil if any axis of the grid has fewer than 3 nodes.
std::optional<Vec> grid_gradient(const DGrid& grid, std::span<const double> values, int b, int k);

/// Derivative along boundary axis `axis` of a single t-layer (size
/// boundary_count(), NaN = inactive column).
double layer_derivative(const DGrid& grid, std::span<const double> layer, int b, int axis);

/// Metric g~ on every node of D, both index positions. Invalid or failed
/// nodes hold NaN and a non-zero status.
class MetricFieldOnD {
 public:
  enum class NodeStatus : std::uint8_t { kOk = 0, kFilled = 1, kInvalid = 2 };

  MetricFieldOnD() = default;
  explicit MetricFieldOnD(DGrid grid);

  /// Builds the field from per-node covariant tensors (row-major n*n per node);
  /// contravariant parts by inversion. NaN nodes become kInvalid.
  static MetricFieldOnD from_covariant(DGrid grid, std::vector<double> cov);
  static MetricFieldOnD from_contravariant(DGrid grid, std::vector<double> con);

  const DGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }

  Mat covariant(std::size_t node) const;
  Mat contravariant(std::size_t node) const;
  void set(std::size_t node, const Mat& cov, const Mat& con, NodeStatus status);

  NodeStatus status(std::size_t node) const { return status_[node]; }
  void set_status(std::size_t node, NodeStatus s) { status_[node] = s; }
  bool usable(std::size_t node) const { return status_[node] != NodeStatus::kInvalid; }

  /// Covariant component (i, j) over all nodes, NaN where unusable.
  std::vector<double> covariant_component(int i, int j) const;

 private:
  DGrid grid_;
  std::vector<double> cov_;
  std::vector<double> con_;
  std::vector<NodeStatus> status_;
};

/// Per-node Christoffel symbols of a metric field; NaN where unavailable.
class ChristoffelField {
 public:
  ChristoffelField(int n, std::size_t nodes)
      : n_(n), data_(nodes * static_cast<std::size_t>(n * n * n), kNaN) {}

  int dim() const { return n_; }
  double operator()(std::size_t node, int k, int i, int j) const { return data_[idx(node, k, i, j)]; }
  double& operator()(std::size_t node, int k, int i, int j) { return data_[idx(node, k, i, j)]; }

 private:
  std::size_t idx(std::size_t node, int k, int i, int j) const {
    return (node * static_cast<std::size_t>(n_) + static_cast<std::size_t>(k)) *
               static_cast<std::size_t>(n_ * n_) +
           static_cast<std::size_t>(i * n_ + j);
  }
  int n_;
  std::vector<double> data_;
};

/// Cholesky-style SPD test with pivot tolerance 1e-10 (relative to the
/// largest diagonal entry).
bool is_spd(const Mat& m, double pivot_tol = 1e-10);

/// Gamma~^k_{ij} = 1/2 g~^{kl} (d_i g~_{jl} + d_j g~_{il} - d_l g~_{ij}), with
/// derivatives from grid_gradient. Throws kDefiniteness naming the first
/// usable node that is not SPD.
ChristoffelField christoffels_from_metric_field(const MetricFieldOnD& g);

enum class Variance { kVector, kCovector };

struct TensorArg {
  Vec components;
  Variance variance = Variance::kVector;
};

/// Convert mismatched index positions before contracting (otherwise a
/// variance mismatch is an error).
enum class IndexConversion { kNone, kConvertSecond };

/// g~(a, b) at a node: g~_{ij} a^i b^j for vectors, g~^{ij} a_i b_j for
/// covectors. Mixed variance requires kConvertSecond.
double metric_apply(const MetricFieldOnD& g, std::size_t node, const TensorArg& a,
                    const TensorArg& b, IndexConversion conversion = IndexConversion::kNone);

}  // namespace ttkin
