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
#include "ttkin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ttkin {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kPositivity: return "positivity";
    case ErrorCode::kStencil: return "stencil";
    case ErrorCode::kDefiniteness: return "definiteness";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDegenerateBoundary: return "degenerate-boundary";
    case ErrorCode::kUnreachable: return "unreachable";
    case ErrorCode::kInsufficientSources: return "insufficient-sources";
    case ErrorCode::kGenericity: return "genericity";
    case ErrorCode::kFieldFailure: return "field-failure";
    case ErrorCode::kParameter: return "parameter";
    case ErrorCode::kParametrization: return "parametrization";
    case ErrorCode::kGeometry: return "geometry";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kInstability: return "instability";
    case ErrorCode::kDegenerateSpeed: return "degenerate-speed";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kUnavailable: return "unavailable";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kVarianceMismatch: return "variance-mismatch";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Box

bool Box::contains(const Vec& x, double slack) const {
  for (int i = 0; i < dim(); ++i) {
    const double tol = slack * std::max(1.0, hi[i] - lo[i]);
    if (!(x[i] >= lo[i] - tol && x[i] <= hi[i] + tol)) return false;
  }
  return true;
}

Vec Box::clamp(const Vec& x) const {
  Vec y = x;
  for (int i = 0; i < dim(); ++i) y[i] = std::clamp(x[i], lo[i], hi[i]);
  return y;
}

// ---------------------------------------------------------------------------
// ConformalFactorField

ConformalFactorField::ConformalFactorField(Box box, Source source)
    : box_(std::move(box)), source_(std::move(source)) {
  if (box_.dim() < 2 || box_.hi.size() != box_.lo.size()) {
    fail(ErrorCode::kInvalidArgument, "conformal factor needs a box of dimension >= 2");
  }
  for (int i = 0; i < box_.dim(); ++i) {
    if (!(box_.hi[i] > box_.lo[i])) fail(ErrorCode::kInvalidArgument, "empty bounding box");
  }
}

ConformalFactorField ConformalFactorField::constant(Box box, double level) {
  if (!(level > 0.0)) fail(ErrorCode::kPositivity, "constant conformal factor must be positive");
  return ConformalFactorField(std::move(box), Constant{level});
}

ConformalFactorField ConformalFactorField::gaussian_bump(Box box, double base, double amplitude,
                                                         Vec center, double width) {
  if (!(base > 0.0) || !(width > 0.0) || base + std::min(amplitude, 0.0) <= 0.0) {
    fail(ErrorCode::kPositivity, "gaussian bump must stay positive");
  }
  if (center.size() != box.dim()) fail(ErrorCode::kInvalidArgument, "bump center dimension");
  return ConformalFactorField(std::move(box), GaussianBump{base, amplitude, std::move(center), width});
}

ConformalFactorField ConformalFactorField::radial(Box box, double scale, double k, Vec center) {
  if (!(scale > 0.0) || k < 0.0) fail(ErrorCode::kPositivity, "radial profile must stay positive");
  if (center.size() != box.dim()) fail(ErrorCode::kInvalidArgument, "radial center dimension");
  return ConformalFactorField(std::move(box), Radial{scale, k, std::move(center)});
}

ConformalFactorField ConformalFactorField::gridded(Box box, std::vector<int> dims,
                                                   std::vector<double> values) {
  if (static_cast<int>(dims.size()) != box.dim()) {
    fail(ErrorCode::kInvalidArgument, "gridded rho: dims do not match box dimension");
  }
  std::size_t total = 1;
  for (int d : dims) {
    if (d < 2) fail(ErrorCode::kInvalidArgument, "gridded rho needs >= 2 nodes per axis");
    total *= static_cast<std::size_t>(d);
  }
  if (values.size() != total) fail(ErrorCode::kInvalidArgument, "gridded rho: value count mismatch");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::kPositivity, "gridded rho must be positive");
  }
  return ConformalFactorField(std::move(box), Gridded{std::move(dims), std::move(values)});
}

std::string ConformalFactorField::id() const {
  struct Visitor {
    std::string operator()(const Constant&) const { return "flat-constant"; }
    std::string operator()(const GaussianBump&) const { return "gaussian-bump"; }
    std::string operator()(const Radial&) const { return "radial"; }
    std::string operator()(const Gridded&) const { return "user-grid"; }
  };
  return std::visit(Visitor{}, source_);
}

double ConformalFactorField::raw(const Vec& x, Vec* grad) const {
  const int n = dim();
  if (const auto* c = std::get_if<Constant>(&source_)) {
    if (grad) grad->setZero(n);
    return c->level;
  }
  if (const auto* b = std::get_if<GaussianBump>(&source_)) {
    const Vec d = x - b->center;
    const double e = b->amplitude * std::exp(-d.squaredNorm() / b->width);
    if (grad) *grad = (-2.0 * e / b->width) * d;
    return b->base + e;
  }
  if (const auto* r = std::get_if<Radial>(&source_)) {
    const Vec d = x - r->center;
    const double q = 1.0 + r->k * d.squaredNorm();
    if (grad) *grad = (-4.0 * r->scale * r->k / (q * q * q)) * d;
    return r->scale / (q * q);
  }
  const auto& g = std::get<Gridded>(source_);
  // Multilinear interpolation over the cell containing x.
  std::vector<int> cell(static_cast<std::size_t>(n));
  std::vector<double> frac(static_cast<std::size_t>(n));
  std::vector<double> h(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    h[ui] = (box_.hi[i] - box_.lo[i]) / (g.dims[ui] - 1);
    const double s = std::clamp((x[i] - box_.lo[i]) / h[ui], 0.0, g.dims[ui] - 1.0);
    int c = static_cast<int>(std::floor(s));
    c = std::min(c, g.dims[ui] - 2);
    cell[ui] = c;
    frac[ui] = s - c;
  }
  double value = 0.0;
  if (grad) grad->setZero(n);
  const int corners = 1 << n;
  for (int m = 0; m < corners; ++m) {
    std::size_t flat = 0;
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int bit = (m >> i) & 1;
      flat = flat * static_cast<std::size_t>(g.dims[ui]) + static_cast<std::size_t>(cell[ui] + bit);
      w *= bit ? frac[ui] : 1.0 - frac[ui];
    }
    const double v = g.values[flat];
    value += w * v;
    if (grad) {
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        double wi = ((m >> i) & 1) ? 1.0 : -1.0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const auto uj = static_cast<std::size_t>(j);
          wi *= ((m >> j) & 1) ? frac[uj] : 1.0 - frac[uj];
        }
        (*grad)[i] += wi * v / h[ui];
      }
    }
  }
  return value;
}

double ConformalFactorField::value(const Vec& x) const {
  if (x.size() != dim()) fail(ErrorCode::kInvalidArgument, "point dimension mismatch");
  if (!box_.contains(x)) fail(ErrorCode::kDomain, "point outside the conformal factor's bounding box");
  const double v = raw(x, nullptr);
  if (!(v > 0.0)) fail(ErrorCode::kPositivity, "non-positive conformal factor");
  return v;
}

Vec ConformalFactorField::gradient(const Vec& x) const {
  Vec g;
  value_and_gradient(x, g);
  return g;
}

double ConformalFactorField::value_and_gradient(const Vec& x, Vec& grad) const {
  if (x.size() != dim()) fail(ErrorCode::kInvalidArgument, "point dimension mismatch");
  if (!box_.contains(x)) fail(ErrorCode::kDomain, "point outside the conformal factor's bounding box");
  const double v = raw(x, &grad);
  if (!(v > 0.0)) fail(ErrorCode::kPositivity, "non-positive conformal factor");
  return v;
}

Christoffel conformal_christoffel(const ConformalFactorField& rho, const Vec& x) {
  const int n = rho.dim();
  Vec grad;
  const double r = rho.value_and_gradient(x, grad);
  const Vec dlog = grad / (2.0 * r);
  Christoffel c(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        if (k == i) v += dlog[j];
        if (k == j) v += dlog[i];
        if (i == j) v -= dlog[k];
        c(k, i, j) = v;
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// DGrid

DGrid::DGrid(std::vector<int> boundary_shape, std::vector<double> dy, double dt,
             std::vector<int> t_counts, std::vector<double> y0)
    : shape_(std::move(boundary_shape)), dy_(std::move(dy)), y0_(std::move(y0)), dt_(dt),
      t_counts_(std::move(t_counts)) {
  if (shape_.empty()) fail(ErrorCode::kInvalidArgument, "DGrid needs at least one boundary axis");
  if (dy_.size() != shape_.size()) fail(ErrorCode::kInvalidArgument, "DGrid: dy length mismatch");
  if (y0_.empty()) y0_.assign(shape_.size(), 0.0);
  if (y0_.size() != shape_.size()) fail(ErrorCode::kInvalidArgument, "DGrid: y0 length mismatch");
  if (!(dt_ > 0.0)) fail(ErrorCode::kInvalidArgument, "DGrid: dt must be positive");
  std::size_t total = 1;
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    if (shape_[a] < 1) fail(ErrorCode::kInvalidArgument, "DGrid: empty boundary axis");
    if (!(dy_[a] > 0.0)) fail(ErrorCode::kInvalidArgument, "DGrid: dy must be positive");
    total *= static_cast<std::size_t>(shape_[a]);
  }
  if (t_counts_.size() != total) fail(ErrorCode::kInvalidArgument, "DGrid: t_counts length mismatch");
  kmax_ = 0;
  for (int c : t_counts_) {
    if (c < 1) fail(ErrorCode::kInvalidArgument, "DGrid: every column needs at least one sample");
    kmax_ = std::max(kmax_, c);
  }
  strides_.assign(shape_.size(), 1);
  for (int a = static_cast<int>(shape_.size()) - 2; a >= 0; --a) {
    const auto ua = static_cast<std::size_t>(a);
    strides_[ua] = strides_[ua + 1] * shape_[ua + 1];
  }
}

DGrid DGrid::uniform(std::vector<int> boundary_shape, std::vector<double> dy, double dt, double T,
                     std::vector<double> y0) {
  if (!(T > 0.0)) fail(ErrorCode::kInvalidArgument, "DGrid: extent T must be positive");
  std::size_t total = 1;
  for (int s : boundary_shape) total *= static_cast<std::size_t>(std::max(s, 0));
  const int count = static_cast<int>(std::floor(T / dt + 1e-9)) + 1;
  return DGrid(std::move(boundary_shape), std::move(dy), dt, std::vector<int>(total, count),
               std::move(y0));
}

std::size_t DGrid::valid_node_count() const {
  std::size_t s = 0;
  for (int c : t_counts_) s += static_cast<std::size_t>(c);
  return s;
}

std::vector<int> DGrid::boundary_multi_index(int b) const {
  std::vector<int> m(shape_.size());
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    m[a] = b / strides_[a];
    b %= strides_[a];
  }
  return m;
}

int DGrid::boundary_flat_index(std::span<const int> multi) const {
  int b = 0;
  for (std::size_t a = 0; a < shape_.size(); ++a) b += multi[a] * strides_[a];
  return b;
}

int DGrid::boundary_neighbor(int b, int axis, int step) const {
  const auto ua = static_cast<std::size_t>(axis);
  const int coord = (b / strides_[ua]) % shape_[ua];
  const int next = coord + step;
  if (next < 0 || next >= shape_[ua]) return -1;
  return b + step * strides_[ua];
}

Vec DGrid::coords(int b, int k) const {
  Vec y(dim());
  const auto m = boundary_multi_index(b);
  for (std::size_t a = 0; a < shape_.size(); ++a) y[static_cast<Eigen::Index>(a)] = y0_[a] + m[a] * dy_[a];
  y[dim() - 1] = k * dt_;
  return y;
}

DGrid DGrid::with_t_counts(std::vector<int> t_counts) const {
  return DGrid(shape_, dy_, dt_, std::move(t_counts), y0_);
}

// ---------------------------------------------------------------------------
// Finite differences

double stencil_derivative(const std::array<double, 5>& f, double h) {
  if (!std::isfinite(f[2])) return kNaN;
  if (std::isfinite(f[1]) && std::isfinite(f[3])) return (f[3] - f[1]) / (2.0 * h);
  if (std::isfinite(f[3]) && std::isfinite(f[4])) return (-3.0 * f[2] + 4.0 * f[3] - f[4]) / (2.0 * h);
  if (std::isfinite(f[1]) && std::isfinite(f[0])) return (3.0 * f[2] - 4.0 * f[1] + f[0]) / (2.0 * h);
  return kNaN;
}

namespace {

void check_stencil_axes(const DGrid& grid, int b) {
  for (int a = 0; a < grid.boundary_axes(); ++a) {
    if (grid.boundary_shape()[static_cast<std::size_t>(a)] < 3) {
      std::ostringstream os;
      os << "boundary axis " << a << " has fewer than 3 nodes";
      fail(ErrorCode::kStencil, os.str());
    }
  }
  if (grid.t_counts()[static_cast<std::size_t>(b)] < 3) {
    std::ostringstream os;
    os << "t column of boundary node " << b << " has fewer than 3 samples";
    fail(ErrorCode::kStencil, os.str());
  }
}

}  // namespace

std::optional<Vec> grid_gradient(const DGrid& grid, std::span<const double> values, int b, int k) {
  check_stencil_axes(grid, b);
  const int n = grid.dim();
  Vec g(n);
  for (int a = 0; a < grid.boundary_axes(); ++a) {
    std::array<double, 5> f{};
    for (int s = -2; s <= 2; ++s) {
      const int nb = s == 0 ? b : grid.boundary_neighbor(b, a, s);
      f[static_cast<std::size_t>(s + 2)] =
          (nb >= 0 && grid.valid(nb, k)) ? values[grid.index(nb, k)] : kNaN;
    }
    g[a] = stencil_derivative(f, grid.spacing(a));
    if (!std::isfinite(g[a])) return std::nullopt;
  }
  std::array<double, 5> f{};
  for (int s = -2; s <= 2; ++s) {
    f[static_cast<std::size_t>(s + 2)] = grid.valid(b, k + s) ? values[grid.index(b, k + s)] : kNaN;
  }
  g[n - 1] = stencil_derivative(f, grid.dt());
  if (!std::isfinite(g[n - 1])) return std::nullopt;
  return g;
}

double layer_derivative(const DGrid& grid, std::span<const double> layer, int b, int axis) {
  if (grid.boundary_shape()[static_cast<std::size_t>(axis)] < 3) {
    fail(ErrorCode::kStencil, "boundary axis has fewer than 3 nodes");
  }
  std::array<double, 5> f{};
  for (int s = -2; s <= 2; ++s) {
    const int nb = s == 0 ? b : grid.boundary_neighbor(b, axis, s);
    f[static_cast<std::size_t>(s + 2)] = nb >= 0 ? layer[static_cast<std::size_t>(nb)] : kNaN;
  }
  return stencil_derivative(f, grid.spacing(axis));
}

// ---------------------------------------------------------------------------
// MetricFieldOnD

MetricFieldOnD::MetricFieldOnD(DGrid grid) : grid_(std::move(grid)) {
  const auto nn = static_cast<std::size_t>(grid_.dim() * grid_.dim());
  cov_.assign(grid_.node_count() * nn, kNaN);
  con_.assign(grid_.node_count() * nn, kNaN);
  status_.assign(grid_.node_count(), NodeStatus::kInvalid);
}

namespace {

MetricFieldOnD build_metric(DGrid grid, const std::vector<double>& src, bool src_is_cov) {
  MetricFieldOnD out(grid);
  const int n = grid.dim();
  const auto nn = static_cast<std::size_t>(n * n);
  if (src.size() != grid.node_count() * nn) {
    fail(ErrorCode::kInvalidArgument, "metric field: component count mismatch");
  }
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    Mat m(n, n);
    bool finite = true;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        m(i, j) = src[node * nn + static_cast<std::size_t>(i * n + j)];
        finite = finite && std::isfinite(m(i, j));
      }
    }
    if (!finite) continue;
    const Mat sym = 0.5 * (m + m.transpose());
    const Mat inv = sym.inverse();
    if (src_is_cov) {
      out.set(node, sym, inv, MetricFieldOnD::NodeStatus::kOk);
    } else {
      out.set(node, inv, sym, MetricFieldOnD::NodeStatus::kOk);
    }
  }
  return out;
}

}  // namespace

MetricFieldOnD MetricFieldOnD::from_covariant(DGrid grid, std::vector<double> cov) {
  return build_metric(std::move(grid), cov, true);
}

MetricFieldOnD MetricFieldOnD::from_contravariant(DGrid grid, std::vector<double> con) {
  return build_metric(std::move(grid), con, false);
}

Mat MetricFieldOnD::covariant(std::size_t node) const {
  const int n = dim();
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cov_.data() + node * static_cast<std::size_t>(n * n), n, n);
}

Mat MetricFieldOnD::contravariant(std::size_t node) const {
  const int n = dim();
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      con_.data() + node * static_cast<std::size_t>(n * n), n, n);
}

void MetricFieldOnD::set(std::size_t node, const Mat& cov, const Mat& con, NodeStatus status) {
  const int n = dim();
  const std::size_t off = node * static_cast<std::size_t>(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cov_[off + static_cast<std::size_t>(i * n + j)] = cov(i, j);
      con_[off + static_cast<std::size_t>(i * n + j)] = con(i, j);
    }
  }
  status_[node] = status;
}

std::vector<double> MetricFieldOnD::covariant_component(int i, int j) const {
  const int n = dim();
  std::vector<double> out(grid_.node_count(), kNaN);
  for (std::size_t node = 0; node < out.size(); ++node) {
    if (usable(node)) out[node] = cov_[node * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(i * n + j)];
  }
  return out;
}

bool is_spd(const Mat& m, double pivot_tol) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) return false;
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(m(i, i)));
  if (!(scale > 0.0) || !std::isfinite(scale)) return false;
  Mat l = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_tol * scale)) return false;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = 0.5 * (m(i, j) + m(j, i));
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

ChristoffelField christoffels_from_metric_field(const MetricFieldOnD& g) {
  const DGrid& grid = g.grid();
  const int n = grid.dim();
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    if (g.usable(node) && !is_spd(g.covariant(node))) {
      const int b = static_cast<int>(node / static_cast<std::size_t>(grid.max_t_count()));
      const int k = static_cast<int>(node % static_cast<std::size_t>(grid.max_t_count()));
      std::ostringstream os;
      os << "metric not positive definite at node (b=" << b << ", k=" << k << ")";
      fail(ErrorCode::kDefiniteness, os.str());
    }
  }
  // dg[(i*n+j)*n + l] = d_l g_ij
  std::vector<std::vector<double>> comps;
  comps.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) comps.push_back(g.covariant_component(i, j));

  ChristoffelField out(n, grid.node_count());
  std::vector<double> dg(static_cast<std::size_t>(n * n * n));
  for (int b = 0; b < grid.boundary_count(); ++b) {
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = grid.index(b, k);
      if (!g.usable(node)) continue;
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        for (int j = i; j < n && ok; ++j) {
          const auto grad = grid_gradient(grid, comps[static_cast<std::size_t>(i * n + j)], b, k);
          if (!grad) {
            ok = false;
            break;
          }
          for (int l = 0; l < n; ++l) {
            dg[static_cast<std::size_t>((i * n + j) * n + l)] = (*grad)[l];
            dg[static_cast<std::size_t>((j * n + i) * n + l)] = (*grad)[l];
          }
        }
      }
      if (!ok) continue;
      const Mat ginv = g.contravariant(node);
      auto d = [&](int i, int j, int l) { return dg[static_cast<std::size_t>((i * n + j) * n + l)]; };
      for (int kk = 0; kk < n; ++kk) {
        for (int i = 0; i < n; ++i) {
          for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int l = 0; l < n; ++l) s += ginv(kk, l) * (d(j, l, i) + d(i, l, j) - d(i, j, l));
            out(node, kk, i, j) = 0.5 * s;
            out(node, kk, j, i) = 0.5 * s;
          }
        }
      }
    }
  }
  return out;
}

double metric_apply(const MetricFieldOnD& g, std::size_t node, const TensorArg& a, const TensorArg& b,
                    IndexConversion conversion) {
  const int n = g.dim();
  if (a.components.size() != n || b.components.size() != n) {
    fail(ErrorCode::kInvalidArgument, "metric_apply: component count mismatch");
  }
  if (node >= g.grid().node_count() || !g.usable(node)) {
    fail(ErrorCode::kInvalidArgument, "metric_apply: node has no metric");
  }
  if (a.variance == b.variance) {
    const Mat m = a.variance == Variance::kVector ? g.covariant(node) : g.contravariant(node);
    return a.components.dot(m * b.components);
  }
  if (conversion == IndexConversion::kNone) {
    fail(ErrorCode::kVarianceMismatch, "metric_apply: mixed variance without conversion request");
  }
  // Converting b to a's variance and contracting with the matching metric
  // reduces to the natural pairing a . b.
  return a.components.dot(b.components);
}

}  // namespace ttkin
