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
#include "ttkin/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ttkin/parallel.hpp"

namespace ttkin {

Vec inward_normal(const ConformalFactorField& rho, const BoundaryGeometry& bg, int node) {
  if (node < 0 || node >= bg.node_count()) fail(ErrorCode::kInvalidArgument, "boundary node out of range");
  const auto un = static_cast<std::size_t>(node);
  return bg.normals[un] / std::sqrt(rho.value(bg.points[un]));
}

namespace {

struct State {
  Vec x;
  Vec v;
};

// Geodesic acceleration for g = rho dx^2:
//   a^k = -(1/(2 rho)) (2 v^k (grad rho . v) - |v|^2 d_k rho)
bool acceleration(const ConformalFactorField& rho, const Vec& x, const Vec& v, Vec& a) {
  if (!rho.box().contains(x, 0.0)) return false;
  Vec grad;
  const double r = rho.value_and_gradient(x, grad);
  a = -(2.0 * grad.dot(v) * v - v.squaredNorm() * grad) / (2.0 * r);
  return true;
}

bool rk4_step(const ConformalFactorField& rho, State& s, double h) {
  Vec a1, a2, a3, a4;
  if (!acceleration(rho, s.x, s.v, a1)) return false;
  const Vec x2 = s.x + 0.5 * h * s.v, v2 = s.v + 0.5 * h * a1;
  if (!acceleration(rho, x2, v2, a2)) return false;
  const Vec x3 = s.x + 0.5 * h * v2, v3 = s.v + 0.5 * h * a2;
  if (!acceleration(rho, x3, v3, a3)) return false;
  const Vec x4 = s.x + h * v3, v4 = s.v + h * a3;
  if (!acceleration(rho, x4, v4, a4)) return false;
  const Vec xn = s.x + (h / 6.0) * (s.v + 2.0 * v2 + 2.0 * v3 + v4);
  if (!rho.box().contains(xn, 0.0)) return false;
  s.v += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  s.x = xn;
  return true;
}

}  // namespace

GeodesicPath geodesic_shoot(const ConformalFactorField& rho, const Vec& x0, const Vec& xi0,
                            double t_max, double dt, int record_every) {
  if (!(dt > 0.0) || t_max < 0.0 || record_every < 1) {
    fail(ErrorCode::kInvalidArgument, "geodesic_shoot: dt, t_max, record_every");
  }
  if (x0.size() != rho.dim() || xi0.size() != rho.dim()) {
    fail(ErrorCode::kInvalidArgument, "geodesic_shoot: dimension mismatch");
  }
  const double speed = rho.value(x0) * xi0.squaredNorm();
  if (std::abs(speed - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "initial velocity is not g-unit: rho |xi|^2 = " << speed;
    fail(ErrorCode::kPrecondition, os.str());
  }
  GeodesicPath path;
  State s{x0, xi0};
  auto record = [&](double t) {
    path.t.push_back(t);
    path.x.push_back(s.x);
    path.v.push_back(s.v);
    path.max_speed_drift =
        std::max(path.max_speed_drift, std::abs(rho.value(s.x) * s.v.squaredNorm() - 1.0));
  };
  record(0.0);
  const auto full_steps = static_cast<long>(std::floor(t_max / dt + 1e-9));
  double t = 0.0;
  for (long i = 1; i <= full_steps; ++i) {
    if (!rk4_step(rho, s, dt)) {
      path.truncated = true;
      if (path.t.back() != t) record(t);
      return path;
    }
    t = i * dt;
    if (i % record_every == 0) record(t);
  }
  const double rest = t_max - t;
  if (rest > 1e-12 * std::max(1.0, t_max)) {
    if (!rk4_step(rho, s, rest)) {
      path.truncated = true;
      if (path.t.back() != t) record(t);
      return path;
    }
    t = t_max;
  }
  if (path.t.back() != t) record(t);
  return path;
}

Vec NormalChart::point(std::size_t node) const {
  const int n = grid.dim();
  return Eigen::Map<const Vec>(gamma.data() + node * static_cast<std::size_t>(n), n);
}

NormalChart build_normal_chart(const ConformalFactorField& rho, const BoundaryGeometry& bg,
                               const DGrid& grid, const ChartOptions& options) {
  const int n = grid.dim();
  if (bg.n != n || bg.node_count() != grid.boundary_count() ||
      bg.param_shape != grid.boundary_shape()) {
    fail(ErrorCode::kInvalidArgument, "build_normal_chart: grid incompatible with boundary");
  }
  const int B = grid.boundary_count();
  const auto un = static_cast<std::size_t>(n);
  const int substeps = std::max(1, static_cast<int>(std::ceil(grid.dt() / options.max_step - 1e-9)));
  const double h = grid.dt() / substeps;

  std::vector<double> gamma(grid.node_count() * un, kNaN);
  std::vector<double> drift(static_cast<std::size_t>(B), 0.0);
  std::vector<int> reached(static_cast<std::size_t>(B), 0);
  parallel_for(static_cast<std::size_t>(B), options.threads, [&](std::size_t ub) {
    const int b = static_cast<int>(ub);
    const int count = grid.t_counts()[ub];
    const Vec nu = inward_normal(rho, bg, b);
    const GeodesicPath path =
        geodesic_shoot(rho, bg.points[ub], nu, (count - 1) * grid.dt(), h, substeps);
    // Samples land on multiples of dt; a truncated path may end off-grid.
    int k = 0;
    for (std::size_t s = 0; s < path.t.size() && k < count; ++s) {
      if (std::abs(path.t[s] - k * grid.dt()) > 1e-9 * grid.dt()) continue;
      for (int i = 0; i < n; ++i) gamma[grid.index(b, k) * un + static_cast<std::size_t>(i)] = path.x[s][i];
      ++k;
    }
    reached[ub] = k;
    drift[ub] = path.max_speed_drift;
  });

  // Jacobian determinants on the untruncated grid.
  std::vector<std::vector<double>> comp(un, std::vector<double>(grid.node_count(), kNaN));
  for (std::size_t node = 0; node < grid.node_count(); ++node)
    for (std::size_t i = 0; i < un; ++i) comp[i][node] = gamma[node * un + i];
  std::vector<double> det(grid.node_count(), kNaN);
  for (int b = 0; b < B; ++b) {
    for (int k = 0; k < reached[static_cast<std::size_t>(b)]; ++k) {
      Mat J(n, n);
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        const auto g = grid_gradient(grid, comp[static_cast<std::size_t>(i)], b, k);
        if (!g) {
          ok = false;
        } else {
          J.row(i) = g->transpose();
        }
      }
      if (ok) det[grid.index(b, k)] = J.determinant();
    }
  }

  std::vector<double> base(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) base[static_cast<std::size_t>(b)] = std::abs(det[grid.index(b, 0)]);
  std::vector<double> sorted = base;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (int b = 0; b < B; ++b) {
    const double d0 = base[static_cast<std::size_t>(b)];
    if (!std::isfinite(d0) || !(median > 0.0) || d0 < options.jacobian_threshold * median) {
      std::ostringstream os;
      os << "chart Jacobian degenerate at t = 0 for boundary node " << b;
      fail(ErrorCode::kDegenerateBoundary, os.str());
    }
  }

  NormalChart chart;
  std::vector<int> counts(static_cast<std::size_t>(B));
  std::vector<double> rel(grid.node_count(), kNaN);
  for (int b = 0; b < B; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const double d0 = det[grid.index(b, 0)];
    int kbad = grid.t_counts()[ub];
    enum class Why { kNone, kExit, kJacobian, kCollision } why = Why::kNone;
    for (int k = 1; k < grid.t_counts()[ub]; ++k) {
      if (k >= reached[ub]) {
        kbad = k;
        why = Why::kExit;
        break;
      }
      const double r = det[grid.index(b, k)] / d0;
      rel[grid.index(b, k)] = r;
      if (!(r >= options.jacobian_threshold)) {
        kbad = k;
        why = Why::kJacobian;
        break;
      }
      bool collided = false;
      for (int a = 0; a < grid.boundary_axes() && !collided; ++a) {
        for (int step : {-1, 1}) {
          const int nb = grid.boundary_neighbor(b, a, step);
          if (nb < 0 || k >= reached[static_cast<std::size_t>(nb)]) continue;
          const Vec p = Eigen::Map<const Vec>(&gamma[grid.index(b, k) * un], n);
          const Vec q = Eigen::Map<const Vec>(&gamma[grid.index(nb, k) * un], n);
          const Vec p0 = Eigen::Map<const Vec>(&gamma[grid.index(b, 0) * un], n);
          const Vec q0 = Eigen::Map<const Vec>(&gamma[grid.index(nb, 0) * un], n);
          if ((p - q).norm() < options.jacobian_threshold * (p0 - q0).norm()) collided = true;
        }
      }
      if (collided) {
        kbad = k;
        why = Why::kCollision;
        break;
      }
    }
    rel[grid.index(b, 0)] = 1.0;
    counts[ub] = kbad;
    if (why == Why::kJacobian) ++chart.truncated_by_jacobian;
    if (why == Why::kCollision) ++chart.truncated_by_collision;
    if (why == Why::kExit) ++chart.truncated_by_exit;
    chart.max_speed_drift = std::max(chart.max_speed_drift, drift[ub]);
  }

  chart.grid = grid.with_t_counts(counts);
  const DGrid& out = chart.grid;
  chart.gamma.assign(out.node_count() * un, kNaN);
  chart.jacobian.assign(out.node_count(), kNaN);
  chart.relative_jacobian.assign(out.node_count(), kNaN);
  chart.extent.resize(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    chart.extent[static_cast<std::size_t>(b)] = out.extent(b);
    for (int k = 0; k < out.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t src = grid.index(b, k), dst = out.index(b, k);
      for (std::size_t i = 0; i < un; ++i) chart.gamma[dst * un + i] = gamma[src * un + i];
      chart.jacobian[dst] = det[src];
      chart.relative_jacobian[dst] = rel[src];
      chart.min_relative_jacobian = std::min(chart.min_relative_jacobian, rel[src]);
    }
  }
  return chart;
}

// ---------------------------------------------------------------------------
// Cartesian lattices

Vec CartesianGrid::node(std::size_t flat) const {
  const int n = dim();
  Vec x(n);
  for (int i = n - 1; i >= 0; --i) {
    const auto d = static_cast<std::size_t>(dims[static_cast<std::size_t>(i)]);
    x[i] = origin[i] + static_cast<double>(flat % d) * h;
    flat /= d;
  }
  return x;
}

double CartesianGrid::interpolate(const Vec& x) const {
  const int n = dim();
  std::vector<int> cell(static_cast<std::size_t>(n));
  std::vector<double> frac(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double s = (x[i] - origin[i]) / h;
    if (s < -1e-9 || s > dims[ui] - 1 + 1e-9) fail(ErrorCode::kDomain, "interpolation point outside lattice");
    const double sc = std::clamp(s, 0.0, dims[ui] - 1.0);
    const int c = std::min(static_cast<int>(std::floor(sc)), dims[ui] - 2);
    cell[ui] = c;
    frac[ui] = sc - c;
  }
  double v = 0.0;
  for (int m = 0; m < (1 << n); ++m) {
    std::size_t flat = 0;
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int bit = (m >> i) & 1;
      flat = flat * static_cast<std::size_t>(dims[ui]) + static_cast<std::size_t>(cell[ui] + bit);
      w *= bit ? frac[ui] : 1.0 - frac[ui];
    }
    if (w != 0.0) v += w * values[flat];
  }
  return v;
}

CartesianGrid make_lattice(const ConformalFactorField& rho, double h) {
  if (!(h > 0.0)) fail(ErrorCode::kInvalidArgument, "lattice spacing must be positive");
  CartesianGrid g;
  g.origin = rho.box().lo;
  g.h = h;
  std::size_t total = 1;
  for (int i = 0; i < rho.dim(); ++i) {
    const int d = static_cast<int>(std::ceil((rho.box().hi[i] - rho.box().lo[i]) / h - 1e-9)) + 1;
    g.dims.push_back(std::max(d, 2));
    total *= static_cast<std::size_t>(g.dims.back());
  }
  g.values.assign(total, std::numeric_limits<double>::infinity());
  return g;
}

namespace {

std::vector<std::size_t> lattice_strides(const std::vector<int>& dims) {
  std::vector<std::size_t> s(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    s[ui] = s[ui + 1] * static_cast<std::size_t>(dims[ui + 1]);
  }
  return s;
}

std::vector<int> unflatten(std::size_t flat, const std::vector<int>& dims) {
  std::vector<int> m(dims.size());
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    m[ui] = static_cast<int>(flat % static_cast<std::size_t>(dims[ui]));
    flat /= static_cast<std::size_t>(dims[ui]);
  }
  return m;
}

// Travel time along the straight segment p -> q (Simpson, 8 panels).
double straight_ray_time(const ConformalFactorField& rho, const Vec& p, const Vec& q) {
  const double len = (q - p).norm();
  if (len == 0.0) return 0.0;
  constexpr int kPanels = 8;
  double s = 0.0;
  for (int i = 0; i <= kPanels; ++i) {
    const double w = (i == 0 || i == kPanels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::sqrt(rho.value_clamped(p + (q - p) * (static_cast<double>(i) / kPanels)));
  }
  return len * s / (3.0 * kPanels);
}

}  // namespace

CartesianGrid eikonal_solve(const ConformalFactorField& rho, const Vec& source, double grid_h) {
  if (source.size() != rho.dim()) fail(ErrorCode::kInvalidArgument, "eikonal_solve: dimension mismatch");
  if (!rho.box().contains(source)) fail(ErrorCode::kDomain, "eikonal source outside the box");
  CartesianGrid g = make_lattice(rho, grid_h);
  const int n = g.dim();
  const auto strides = lattice_strides(g.dims);
  const std::size_t total = g.size();

  std::vector<double> slowness(total);
  for (std::size_t i = 0; i < total; ++i) slowness[i] = std::sqrt(rho.value_clamped(g.node(i)));

  enum : std::uint8_t { kFar, kTrial, kKnown };
  std::vector<std::uint8_t> state(total, kFar);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  auto update = [&](std::size_t node) {
    const auto m = unflatten(node, g.dims);
    std::vector<double> a;
    a.reserve(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      double best = std::numeric_limits<double>::infinity();
      if (m[ud] > 0 && state[node - strides[ud]] == kKnown) best = g.values[node - strides[ud]];
      if (m[ud] + 1 < g.dims[ud] && state[node + strides[ud]] == kKnown)
        best = std::min(best, g.values[node + strides[ud]]);
      if (std::isfinite(best)) a.push_back(best);
    }
    std::sort(a.begin(), a.end());
    const double fh = slowness[node] * g.h;
    double tau = a[0] + fh;
    double sum = a[0], sum2 = a[0] * a[0];
    for (std::size_t m2 = 1; m2 < a.size() && tau > a[m2]; ++m2) {
      sum += a[m2];
      sum2 += a[m2] * a[m2];
      const double cnt = static_cast<double>(m2 + 1);
      const double disc = sum * sum - cnt * (sum2 - fh * fh);
      tau = (sum + std::sqrt(std::max(disc, 0.0))) / cnt;
    }
    return tau;
  };

  // Seed: exact straight-ray times within a small ball around the source.
  const double seed_radius = 10.0 * g.h * (1.0 + 1e-9);
  for (std::size_t i = 0; i < total; ++i) {
    const Vec x = g.node(i);
    if ((x - source).norm() <= seed_radius) {
      g.values[i] = straight_ray_time(rho, source, x);
      state[i] = kKnown;
    }
  }
  auto push_neighbours = [&](std::size_t node) {
    const auto m = unflatten(node, g.dims);
    for (int d = 0; d < n; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      for (int step : {-1, 1}) {
        const int c = m[ud] + step;
        if (c < 0 || c >= g.dims[ud]) continue;
        const std::size_t nb = step < 0 ? node - strides[ud] : node + strides[ud];
        if (state[nb] == kKnown) continue;
        const double tau = update(nb);
        if (tau < g.values[nb]) {
          g.values[nb] = tau;
          state[nb] = kTrial;
          heap.emplace(tau, nb);
        }
      }
    }
  };
  for (std::size_t i = 0; i < total; ++i)
    if (state[i] == kKnown) push_neighbours(i);

  while (!heap.empty()) {
    const auto [tau, node] = heap.top();
    heap.pop();
    if (state[node] == kKnown || tau != g.values[node]) continue;
    state[node] = kKnown;
    push_neighbours(node);
  }
  return g;
}

namespace {

int gcd_int(int a, int b) {
  a = std::abs(a);
  b = std::abs(b);
  while (b) {
    const int t = a % b;
    a = b;
    b = t;
  }
  return a;
}

double dijkstra_impl(const ConformalFactorField& rho, const Vec& a, const Vec& b, double grid_h,
                     const DijkstraOptions& options) {
  CartesianGrid g = make_lattice(rho, grid_h);
  const int n = g.dim();
  const auto strides = lattice_strides(g.dims);
  const std::size_t total = g.size();
  const int r = std::max(1, options.stencil_radius);

  std::vector<std::vector<int>> offsets;
  {
    std::vector<int> o(static_cast<std::size_t>(n), -r);
    while (true) {
      int gg = 0;
      for (int v : o) gg = gcd_int(gg, v);
      if (gg == 1) offsets.push_back(o);
      int i = n - 1;
      while (i >= 0 && o[static_cast<std::size_t>(i)] == r) o[static_cast<std::size_t>(i--)] = -r;
      if (i < 0) break;
      ++o[static_cast<std::size_t>(i)];
    }
  }

  std::vector<double> sqrt_rho(total);
  std::vector<std::uint8_t> open(total, 1);
  for (std::size_t i = 0; i < total; ++i) {
    const Vec x = g.node(i);
    sqrt_rho[i] = std::sqrt(rho.value_clamped(x));
    if (options.passable && !options.passable(x)) open[i] = 0;
  }

  auto cell_corners = [&](const Vec& x) {
    std::vector<std::size_t> corners;
    std::vector<int> cell(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double s = std::clamp((x[i] - g.origin[i]) / g.h, 0.0, g.dims[ui] - 1.0);
      cell[ui] = std::min(static_cast<int>(std::floor(s)), g.dims[ui] - 2);
    }
    for (int m = 0; m < (1 << n); ++m) {
      std::size_t flat = 0;
      for (int i = 0; i < n; ++i) {
        flat += static_cast<std::size_t>(cell[static_cast<std::size_t>(i)] + ((m >> i) & 1)) *
                strides[static_cast<std::size_t>(i)];
      }
      if (open[flat]) corners.push_back(flat);
    }
    return corners;
  };
  auto connector = [&](const Vec& p, std::size_t node) {
    const Vec q = g.node(node);
    return (q - p).norm() * 0.5 * (std::sqrt(rho.value(p)) + sqrt_rho[node]);
  };

  std::vector<double> dist(total, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> done(total, 0);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t c : cell_corners(a)) {
    const double d = connector(a, c);
    if (d < dist[c]) {
      dist[c] = d;
      heap.emplace(d, c);
    }
  }
  const auto targets = cell_corners(b);
  if (targets.empty() || heap.empty()) fail(ErrorCode::kUnreachable, "dijkstra: endpoint inside a masked region");
  std::vector<double> target_cost;
  for (std::size_t t : targets) target_cost.push_back(connector(b, t));

  double best = std::numeric_limits<double>::infinity();
  while (!heap.empty()) {
    const auto [d, node] = heap.top();
    heap.pop();
    if (done[node] || d != dist[node]) continue;
    if (d >= best) break;
    done[node] = 1;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (targets[t] == node) best = std::min(best, d + target_cost[t]);
    }
    const auto m = unflatten(node, g.dims);
    for (const auto& o : offsets) {
      std::size_t nb = node;
      double len2 = 0.0;
      bool inside = true;
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const int c = m[ui] + o[ui];
        if (c < 0 || c >= g.dims[ui]) {
          inside = false;
          break;
        }
        nb = o[ui] >= 0 ? nb + static_cast<std::size_t>(o[ui]) * strides[ui]
                        : nb - static_cast<std::size_t>(-o[ui]) * strides[ui];
        len2 += static_cast<double>(o[ui] * o[ui]);
      }
      if (!inside || !open[nb] || done[nb]) continue;
      const double w = std::sqrt(len2) * g.h * 0.5 * (sqrt_rho[node] + sqrt_rho[nb]);
      const double nd = d + w;
      if (nd < dist[nb]) {
        dist[nb] = nd;
        heap.emplace(nd, nb);
      }
    }
  }
  if (!std::isfinite(best)) fail(ErrorCode::kUnreachable, "dijkstra: target not reachable");
  return best;
}

}  // namespace

double dijkstra_distance(const ConformalFactorField& rho, const Vec& a, const Vec& b, double grid_h,
                         const DijkstraOptions& options) {
  if (a.size() != rho.dim() || b.size() != rho.dim()) fail(ErrorCode::kInvalidArgument, "dijkstra: dimension mismatch");
  if (!rho.box().contains(a) || !rho.box().contains(b)) fail(ErrorCode::kDomain, "dijkstra endpoint outside the box");
  // Canonical endpoint order makes the result exactly symmetric.
  const bool swap = std::lexicographical_compare(b.data(), b.data() + b.size(), a.data(), a.data() + a.size());
  return swap ? dijkstra_impl(rho, b, a, grid_h, options) : dijkstra_impl(rho, a, b, grid_h, options);
}

}  // namespace ttkin
