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
#include "ttkin/ckf.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "ttkin/parallel.hpp"

namespace ttkin {

// ---------------------------------------------------------------------------
// Euclidean closed forms

Vec euclidean_ckf_eval(const EuclideanCKFParams& p, const Vec& x, int n) {
  if (n < 2 || x.size() != n) fail(ErrorCode::kParameter, "point dimension does not match n");
  const bool has_a = p.A.size() > 0;
  if (has_a) {
    if (p.A.rows() != n || p.A.cols() != n) fail(ErrorCode::kParameter, "A must be n x n");
    if ((p.A + p.A.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      fail(ErrorCode::kParameter, "A must be skew-symmetric");
    }
  }
  if (p.b.size() != 0 && p.b.size() != n) fail(ErrorCode::kParameter, "b must have n components");
  if (p.c.size() != 0 && p.c.size() != n) fail(ErrorCode::kParameter, "c must have n components");
  Vec u = p.a0 * x;
  if (has_a) u += p.A * x;
  if (p.b.size() == n) u += -p.b * x.squaredNorm() + 2.0 * x * p.b.dot(x);
  if (p.c.size() == n) u += p.c;
  return u;
}

Vec planar_ckf_eval(PlanarCKF kind, const Vec& x) {
  if (x.size() != 2) fail(ErrorCode::kParameter, "planar CKFs need a 2D point");
  Vec u(2);
  switch (kind) {
    case PlanarCKF::kTranslationX: u << 1.0, 0.0; break;
    case PlanarCKF::kTranslationY: u << 0.0, 1.0; break;
    case PlanarCKF::kRotation: u << -x[1], x[0]; break;
    case PlanarCKF::kDilation: u << x[0], x[1]; break;
    case PlanarCKF::kSquare: u << x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]; break;  // z^2
    case PlanarCKF::kCube:
      u << x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1], 3.0 * x[0] * x[0] * x[1] - x[1] * x[1] * x[1];
      break;
    case PlanarCKF::kExp: u << std::exp(x[0]) * std::cos(x[1]), std::exp(x[0]) * std::sin(x[1]); break;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Operator

namespace {

// Component arrays (node-indexed) of a covector field.
std::vector<std::vector<double>> split(const DGrid& grid, int n, const CovectorField& u) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n), std::vector<double>(grid.node_count()));
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)][node] = u[node * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
  }
  return out;
}

std::optional<Mat> cke_node(const MetricFieldOnD& g, const ChristoffelField& gam,
                            const std::vector<std::vector<double>>& comps, int b, int k) {
  const DGrid& grid = g.grid();
  const int n = grid.dim();
  const std::size_t node = grid.index(b, k);
  if (!g.usable(node)) return std::nullopt;
  Mat du(n, n);  // du(i, j) = d_j u_i
  Vec u(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = comps[static_cast<std::size_t>(i)];
    u[i] = c[node];
    const auto grad = grid_gradient(grid, c, b, k);
    if (!grad) return std::nullopt;
    du.row(i) = grad->transpose();
  }
  const Mat gc = g.covariant(node);
  const Mat gi = g.contravariant(node);
  Mat gu(n, n);  // Gamma^k_ij u_k
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int kk = 0; kk < n; ++kk) s += gam(node, kk, i, j) * u[kk];
      gu(i, j) = s;
    }
  }
  const double div = (gi.array() * (du - gu).array()).sum();
  Mat K = 0.5 * (du + du.transpose()) - gu - gc * (div / n);
  if (!K.allFinite()) return std::nullopt;
  return K;
}

}  // namespace

std::vector<double> cke_operator(const MetricFieldOnD& g, const ChristoffelField& gamma, const CovectorField& u) {
  const DGrid& grid = g.grid();
  const int n = grid.dim();
  if (u.size() != grid.node_count() * static_cast<std::size_t>(n)) {
    fail(ErrorCode::kInvalidArgument, "covector field size does not match the grid");
  }
  const auto comps = split(grid, n, u);
  const auto nn = static_cast<std::size_t>(n * n);
  std::vector<double> out(grid.node_count() * nn, kNaN);
  for (int b = 0; b < grid.boundary_count(); ++b) {
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const auto K = cke_node(g, gamma, comps, b, k);
      if (!K) continue;
      std::copy_n(K->data(), nn, out.begin() + static_cast<std::ptrdiff_t>(grid.index(b, k) * nn));
    }
  }
  return out;
}

std::vector<double> cke_operator(const MetricFieldOnD& g, const CovectorField& u) {
  return cke_operator(g, christoffels_from_metric_field(g), u);
}

// ---------------------------------------------------------------------------
// Covector families and Cauchy data

CovectorFamilyOnD::CovectorFamilyOnD(DGrid g) : grid(std::move(g)), n(grid.boundary_count() > 0 ? grid.dim() : 0) {
  values.assign(grid.node_count() * static_cast<std::size_t>(n * n), kNaN);
}

CovectorField CovectorFamilyOnD::member(int j) const {
  CovectorField out(grid.node_count() * static_cast<std::size_t>(n));
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    for (int i = 0; i < n; ++i) out[node * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = value(node, j, i);
  }
  return out;
}

CauchyData assemble_cauchy_data(const BoundaryRhoTrace& trace, const BoundaryGeometry& bg) {
  const int n = bg.n;
  const int B = bg.node_count();
  if (static_cast<int>(bg.normals.size()) != B || static_cast<int>(bg.tangents.size()) != B) {
    fail(ErrorCode::kGeometry, "boundary normals or tangents missing");
  }
  if (static_cast<int>(trace.rho.size()) != B) {
    fail(ErrorCode::kInvalidArgument, "boundary rho trace does not match the boundary geometry");
  }
  CauchyData out;
  out.n = n;
  out.values.assign(static_cast<std::size_t>(B * n * n), kNaN);
  for (int b = 0; b < B; ++b) {
    const double rho = trace.rho[static_cast<std::size_t>(b)];
    if (!(rho > 0.0)) fail(ErrorCode::kPositivity, "boundary rho must be positive");
    const auto& tang = bg.tangents[static_cast<std::size_t>(b)];
    const Vec& nu0 = bg.normals[static_cast<std::size_t>(b)];
    if (static_cast<int>(tang.size()) != n - 1 || nu0.size() != n) {
      std::ostringstream os;
      os << "incomplete tangent/normal data at boundary node " << b;
      fail(ErrorCode::kGeometry, os.str());
    }
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < n - 1; ++a) out.value(b, j, a) = rho * tang[static_cast<std::size_t>(a)][j];
      out.value(b, j, n - 1) = std::sqrt(rho) * nu0[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// March

namespace {

// Local quadratic regression with Gaussian weights of width `sigma` (in
// parameter positions), evaluated at every sample.
void local_quadratic(const std::vector<double>& x, std::vector<double>& f, double sigma) {
  const auto m = x.size();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    for (std::size_t j = 0; j < m; ++j) {
      const double d = x[j] - x[i];
      if (std::abs(d) > 4.0 * sigma) continue;
      const double w = std::exp(-0.5 * d * d / (sigma * sigma));
      const Eigen::Vector3d phi(1.0, d, d * d);
      A += w * phi * phi.transpose();
      r += w * f[j] * phi;
    }
    out[i] = A.ldlt().solve(r)[0];
  }
  f = std::move(out);
}

// Smooths the active entries of a layer (NaN = inactive) along every
// boundary axis.
void filter_layer(const DGrid& grid, std::vector<double>& layer, double width) {
  for (int a = 0; a < grid.boundary_axes(); ++a) {
    for (int b = 0; b < grid.boundary_count(); ++b) {
      if (grid.boundary_neighbor(b, a, -1) >= 0) continue;  // start of a line only
      std::vector<int> members;
      std::vector<double> x;
      std::vector<double> f;
      int pos = 0;
      for (int cur = b; cur >= 0; cur = grid.boundary_neighbor(cur, a, 1), ++pos) {
        if (!std::isfinite(layer[static_cast<std::size_t>(cur)])) continue;
        members.push_back(cur);
        x.push_back(pos);
        f.push_back(layer[static_cast<std::size_t>(cur)]);
      }
      if (members.size() < 3) continue;
      local_quadratic(x, f, width);
      for (std::size_t i = 0; i < members.size(); ++i) layer[static_cast<std::size_t>(members[i])] = f[i];
    }
  }
}

void check_semigeodesic(const MetricFieldOnD& g) {
  const DGrid& grid = g.grid();
  const int n = grid.dim();
  for (int b = 0; b < grid.boundary_count(); ++b) {
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = grid.index(b, k);
      std::ostringstream os;
      os << " at node (" << b << ", " << k << ")";
      if (!g.usable(node)) fail(ErrorCode::kPrecondition, "metric unavailable" + os.str());
      const Mat gi = g.contravariant(node);
      double off = std::abs(gi(n - 1, n - 1) - 1.0);
      for (int a = 0; a < n - 1; ++a) off = std::max(off, std::abs(gi(a, n - 1)));
      if (off > 1e-9) fail(ErrorCode::kPrecondition, "metric is not in semigeodesic form" + os.str());
    }
  }
}

double layer_constraint(const MetricFieldOnD& g, const ChristoffelField& gam,
                        const std::vector<std::vector<std::vector<double>>>& comps, int k) {
  const DGrid& grid = g.grid();
  const int n = grid.dim();
  double worst = 0.0;
  for (int b = 0; b < grid.boundary_count(); ++b) {
    if (!grid.valid(b, k)) continue;
    for (int j = 0; j < n; ++j) {
      const auto K = cke_node(g, gam, comps[static_cast<std::size_t>(j)], b, k);
      if (!K) continue;
      worst = std::max(worst, K->topLeftCorner(n - 1, n - 1).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace

MarchResult cke_march(const MetricFieldOnD& g, const CauchyData& cauchy, const MarchOptions& options) {
  const DGrid& grid = g.grid();
  const int n = grid.dim();
  const int m = n - 1;
  const int B = grid.boundary_count();
  if (cauchy.n != n || cauchy.boundary_count() != B) {
    fail(ErrorCode::kInvalidArgument, "Cauchy data does not match the metric grid");
  }
  check_semigeodesic(g);
  const ChristoffelField gam = christoffels_from_metric_field(g);

  // comps[j][i][node] = u^(j)_i
  std::vector<std::vector<std::vector<double>>> comps(
      static_cast<std::size_t>(n),
      std::vector<std::vector<double>>(static_cast<std::size_t>(n), std::vector<double>(grid.node_count(), kNaN)));
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) comps[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)][grid.index(b, 0)] = cauchy.value(b, j, i);
    }
  }

  const auto nn = static_cast<std::size_t>(n * n);
  const auto UB = static_cast<std::size_t>(B);
  // Layer state U[(j * n + i) * B + b].
  auto rhs = [&](const std::vector<double>& U, int k, double theta, std::vector<double>& F) {
    F.assign(U.size(), kNaN);
    std::vector<double> dU(nn * UB * static_cast<std::size_t>(m), kNaN);  // d_a of each component
    for (std::size_t c = 0; c < nn; ++c) {
      std::span<const double> layer(U.data() + c * UB, UB);
      for (int b = 0; b < B; ++b) {
        if (!std::isfinite(layer[static_cast<std::size_t>(b)])) continue;
        for (int a = 0; a < m; ++a) {
          dU[(c * UB + static_cast<std::size_t>(b)) * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)] =
              layer_derivative(grid, layer, b, a);
        }
      }
    }
    auto d = [&](int j, int i, int b, int a) {
      return dU[((static_cast<std::size_t>(j * n + i)) * UB + static_cast<std::size_t>(b)) * static_cast<std::size_t>(m) +
                static_cast<std::size_t>(a)];
    };
    auto u = [&](int j, int i, int b) { return U[static_cast<std::size_t>(j * n + i) * UB + static_cast<std::size_t>(b)]; };
    for (int b = 0; b < B; ++b) {
      if (!std::isfinite(u(0, 0, b))) continue;
      const std::size_t n0 = grid.index(b, k);
      const std::size_t n1 = grid.index(b, k + 1);
      auto G = [&](int kk, int i, int j) { return (1.0 - theta) * gam(n0, kk, i, j) + theta * gam(n1, kk, i, j); };
      const Mat gi = (1.0 - theta) * g.contravariant(n0) + theta * g.contravariant(n1);
      for (int j = 0; j < n; ++j) {
        for (int a = 0; a < m; ++a) {
          double s = -d(j, n - 1, b, a);
          for (int kk = 0; kk < n; ++kk) s += 2.0 * G(kk, a, n - 1) * u(j, kk, b);
          F[static_cast<std::size_t>(j * n + a) * UB + static_cast<std::size_t>(b)] = s;
        }
        double s = 0.0;
        for (int a = 0; a < m; ++a) {
          for (int c = 0; c < m; ++c) {
            double t = d(j, c, b, a);
            for (int kk = 0; kk < n; ++kk) t -= G(kk, a, c) * u(j, kk, b);
            s += gi(a, c) * t;
          }
        }
        F[static_cast<std::size_t>(j * n + n - 1) * UB + static_cast<std::size_t>(b)] = s / m;
      }
    }
  };

  MarchResult out;
  out.constraint_by_layer.assign(static_cast<std::size_t>(grid.max_t_count()), kNaN);
  int evaluated = -1;
  auto monitor = [&](int upto) {
    for (int L = evaluated + 1; L <= upto; ++L) {
      const double r = layer_constraint(g, gam, comps, L);
      out.constraint_by_layer[static_cast<std::size_t>(L)] = r;
      if (L == 0) {
        out.initial_residual = r;
        out.guard_threshold = options.guard_factor * r + options.guard_floor;
      } else if (options.guard && r > out.guard_threshold) {
        std::ostringstream os;
        os << "constraint residual " << r << " exceeds " << out.guard_threshold << " at layer " << L;
        fail(ErrorCode::kDivergence, os.str());
      }
      evaluated = L;
    }
  };

  const double dt = grid.dt();
  std::vector<double> U(nn * UB), k1, k2, k3, k4, tmp(nn * UB);
  for (int k = 0; k + 1 < grid.max_t_count(); ++k) {
    bool any = false;
    for (int b = 0; b < B; ++b) {
      const bool active = grid.valid(b, k + 1);
      any = any || active;
      for (std::size_t c = 0; c < nn; ++c) {
        U[c * UB + static_cast<std::size_t>(b)] =
            active ? comps[c / static_cast<std::size_t>(n)][c % static_cast<std::size_t>(n)][grid.index(b, k)] : kNaN;
      }
    }
    if (!any) break;
    rhs(U, k, 0.0, k1);
    for (std::size_t i = 0; i < U.size(); ++i) tmp[i] = U[i] + 0.5 * dt * k1[i];
    rhs(tmp, k, 0.5, k2);
    for (std::size_t i = 0; i < U.size(); ++i) tmp[i] = U[i] + 0.5 * dt * k2[i];
    rhs(tmp, k, 0.5, k3);
    for (std::size_t i = 0; i < U.size(); ++i) tmp[i] = U[i] + dt * k3[i];
    rhs(tmp, k, 1.0, k4);
    for (std::size_t i = 0; i < U.size(); ++i) U[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    for (std::size_t c = 0; c < nn; ++c) {
      std::vector<double> layer(U.begin() + static_cast<std::ptrdiff_t>(c * UB),
                                U.begin() + static_cast<std::ptrdiff_t>((c + 1) * UB));
      if (options.smooth_width > 0.0) filter_layer(grid, layer, options.smooth_width);
      for (int b = 0; b < B; ++b) {
        if (!grid.valid(b, k + 1)) continue;
        const double v = layer[static_cast<std::size_t>(b)];
        if (!std::isfinite(v) || std::abs(v) > 1e150) {
          std::ostringstream os;
          os << "non-finite covector value at layer " << k + 1 << ", boundary node " << b;
          fail(ErrorCode::kInstability, os.str());
        }
        comps[c / static_cast<std::size_t>(n)][c % static_cast<std::size_t>(n)][grid.index(b, k + 1)] = v;
      }
    }
    if (k >= 1) monitor(k - 1);
  }
  monitor(grid.max_t_count() - 1);

  out.family = CovectorFamilyOnD(grid);
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) out.family.value(node, j, i) = comps[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)][node];
    }
  }
  return out;
}

MetricFieldOnD smooth_metric(const MetricFieldOnD& g, double width, double t_width) {
  const DGrid& grid = g.grid();
  const int n = grid.dim();
  const int B = grid.boundary_count();
  std::vector<Mat> con(grid.node_count());
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    if (g.usable(node)) con[node] = g.contravariant(node);
  }
  for (int a = 0; a < n - 1; ++a) {
    for (int c = a; c < n - 1; ++c) {
      if (width > 0.0) {
        for (int k = 0; k < grid.max_t_count(); ++k) {
          std::vector<double> layer(static_cast<std::size_t>(B), kNaN);
          for (int b = 0; b < B; ++b) {
            const std::size_t node = grid.index(b, k);
            if (grid.valid(b, k) && g.usable(node)) layer[static_cast<std::size_t>(b)] = con[node](a, c);
          }
          filter_layer(grid, layer, width);
          for (int b = 0; b < B; ++b) {
            const std::size_t node = grid.index(b, k);
            if (!grid.valid(b, k) || !g.usable(node)) continue;
            con[node](a, c) = layer[static_cast<std::size_t>(b)];
            con[node](c, a) = layer[static_cast<std::size_t>(b)];
          }
        }
      }
      if (t_width > 0.0) {
        for (int b = 0; b < B; ++b) {
          std::vector<double> x;
          std::vector<double> f;
          for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
            const std::size_t node = grid.index(b, k);
            if (!g.usable(node)) continue;
            x.push_back(k);
            f.push_back(con[node](a, c));
          }
          if (x.size() < 3) continue;
          local_quadratic(x, f, t_width);
          std::size_t i = 0;
          for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
            const std::size_t node = grid.index(b, k);
            if (!g.usable(node)) continue;
            con[node](a, c) = f[i];
            con[node](c, a) = f[i];
            ++i;
          }
        }
      }
    }
  }
  MetricFieldOnD out(grid);
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    if (!g.usable(node) || !is_spd(con[node])) continue;
    out.set(node, con[node].inverse(), con[node], g.status(node));
  }
  return out;
}

std::vector<double> constraint_residual_by_layer(const MetricFieldOnD& g, const ChristoffelField& gamma,
                                                 const CovectorFamilyOnD& u) {
  const DGrid& grid = g.grid();
  const int n = grid.dim();
  std::vector<std::vector<std::vector<double>>> comps;
  for (int j = 0; j < n; ++j) comps.push_back(split(grid, n, u.member(j)));
  std::vector<double> out;
  for (int k = 0; k < grid.max_t_count(); ++k) out.push_back(layer_constraint(g, gamma, comps, k));
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction

Vec ReconstructionResult::gamma_at(std::size_t node) const {
  const int n = family.n;
  return Eigen::Map<const Vec>(gamma.data() + node * static_cast<std::size_t>(n), n);
}

ReconstructionResult reconstruct_gamma_rho(const CovectorFamilyOnD& u, const BoundaryGeometry& bg, double eps_v) {
  const DGrid& grid = u.grid;
  const int n = u.n;
  if (bg.node_count() != grid.boundary_count() || bg.n != n) {
    fail(ErrorCode::kInvalidArgument, "boundary geometry does not match the covector family");
  }
  ReconstructionResult out;
  out.family = u;
  const std::size_t nodes = grid.node_count();
  const auto un = static_cast<std::size_t>(n);
  out.v.assign(nodes * un, kNaN);
  out.gamma.assign(nodes * un, kNaN);
  out.rho.assign(nodes, kNaN);
  out.jacobian.assign(nodes, kNaN);
  out.min_speed2 = std::numeric_limits<double>::infinity();

  for (int b = 0; b < grid.boundary_count(); ++b) {
    Vec prev_w(n);
    Vec x = bg.points[static_cast<std::size_t>(b)];
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t node = grid.index(b, k);
      Vec v(n);
      for (int j = 0; j < n; ++j) v[j] = u.value(node, j, n - 1);
      const double s2 = v.squaredNorm();
      if (!(s2 >= eps_v)) {
        std::ostringstream os;
        os << "|v|^2 = " << s2 << " below " << eps_v << " at node (" << b << ", " << k << ")";
        fail(ErrorCode::kDegenerateSpeed, os.str());
      }
      out.min_speed2 = std::min(out.min_speed2, s2);
      const Vec w = v / s2;
      if (k > 0) x += 0.5 * grid.dt() * (prev_w + w);
      prev_w = w;
      for (int j = 0; j < n; ++j) {
        out.v[node * un + static_cast<std::size_t>(j)] = v[j];
        out.gamma[node * un + static_cast<std::size_t>(j)] = x[j];
      }
      out.rho[node] = s2;
    }
  }

  std::vector<std::vector<double>> comps(un, std::vector<double>(nodes, kNaN));
  for (std::size_t node = 0; node < nodes; ++node) {
    for (std::size_t j = 0; j < un; ++j) comps[j][node] = out.gamma[node * un + j];
  }
  bool stencils = grid.max_t_count() >= 3;
  for (int s : grid.boundary_shape()) stencils = stencils && s >= 3;
  if (stencils) {
    for (int b = 0; b < grid.boundary_count(); ++b) {
      for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
        Mat J(n, n);
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
          const auto gr = grid_gradient(grid, comps[static_cast<std::size_t>(j)], b, k);
          if (!gr) ok = false;
          else J.row(j) = gr->transpose();
        }
        if (ok) out.jacobian[grid.index(b, k)] = J.determinant();
      }
    }
  }
  return out;
}

}  // namespace ttkin
