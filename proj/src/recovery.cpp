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
#include "ttkin/recovery.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "ttkin/parallel.hpp"

namespace ttkin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Truncation estimate of the order-2 derivative at f[3] from seven samples
// (offsets -3..3, NaN = missing), via the nearest available third difference.
double derivative_error(const std::array<double, 7>& f, double h) {
  auto has = [&](int i) { return std::isfinite(f[static_cast<std::size_t>(i)]); };
  auto at = [&](int i) { return f[static_cast<std::size_t>(i)]; };
  double third = kNaN;
  if (has(1) && has(2) && has(4) && has(5)) {
    third = (at(5) - 2.0 * at(4) + 2.0 * at(2) - at(1)) / (2.0 * h * h * h);
  } else {
    for (int start : {2, 1, 3, 0}) {
      if (has(start) && has(start + 1) && has(start + 2) && has(start + 3)) {
        third = (at(start + 3) - 3.0 * at(start + 2) + 3.0 * at(start + 1) - at(start)) / (h * h * h);
        break;
      }
    }
  }
  if (!std::isfinite(third)) return kInf;
  const bool central = has(2) && has(4);
  return h * h * std::abs(third) / (central ? 6.0 : 3.0);
}

double gradient_error(const DGrid& grid, std::span<const double> values, int b, int k) {
  double sum = 0.0;
  for (int a = 0; a < grid.boundary_axes(); ++a) {
    std::array<double, 7> f{};
    for (int s = -3; s <= 3; ++s) {
      const int nb = s == 0 ? b : grid.boundary_neighbor(b, a, s);
      f[static_cast<std::size_t>(s + 3)] = (nb >= 0 && grid.valid(nb, k)) ? values[grid.index(nb, k)] : kNaN;
    }
    const double e = derivative_error(f, grid.spacing(a));
    sum += e * e;
  }
  std::array<double, 7> f{};
  for (int s = -3; s <= 3; ++s) {
    f[static_cast<std::size_t>(s + 3)] = grid.valid(b, k + s) ? values[grid.index(b, k + s)] : kNaN;
  }
  const double e = derivative_error(f, grid.dt());
  return std::sqrt(sum + e * e);
}

}  // namespace

// ---------------------------------------------------------------------------
// lambda gradients

std::vector<EikonalSystemRow> LambdaGradients::rows(const TravelTimeDataset& ds, int b, int k) const {
  std::vector<EikonalSystemRow> out;
  const auto& list = ds.sources[static_cast<std::size_t>(b)];
  const std::size_t base = ds.column_offset(b) + static_cast<std::size_t>(k) * list.size();
  for (std::size_t j = 0; j < list.size(); ++j) {
    const double* p = values.data() + (base + j) * static_cast<std::size_t>(n);
    if (!std::isfinite(p[0])) continue;
    EikonalSystemRow row;
    row.source = list[j];
    row.gradient = Eigen::Map<const Vec>(p, n);
    row.error_estimate = error_estimate[base + j];
    row.lambda = ds.lambda[base + j];
    out.push_back(std::move(row));
  }
  return out;
}

LambdaGradients lambda_gradients(const TravelTimeDataset& ds, unsigned threads) {
  const DGrid& grid = ds.grid;
  const int n = grid.dim();
  LambdaGradients out;
  out.n = n;
  out.values.assign(ds.lambda.size() * static_cast<std::size_t>(n), kNaN);
  out.error_estimate.assign(ds.lambda.size(), kInf);
  out.covered.assign(grid.node_count(), 0);

  std::vector<int> distinct;
  for (const auto& list : ds.sources) distinct.insert(distinct.end(), list.begin(), list.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  // Every (node, slot) pair belongs to exactly one source, so the writes of
  // different sources never overlap.
  parallel_for(distinct.size(), threads, [&](std::size_t i) {
    const int s = distinct[i];
    std::vector<double> field(grid.node_count(), kNaN);
    std::vector<int> slot(static_cast<std::size_t>(grid.boundary_count()), -1);
    for (int b = 0; b < grid.boundary_count(); ++b) {
      const int j = ds.source_slot(b, s);
      slot[static_cast<std::size_t>(b)] = j;
      if (j < 0) continue;
      for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
        field[grid.index(b, k)] = ds.lambda_at(b, k, j);
      }
    }
    for (int b = 0; b < grid.boundary_count(); ++b) {
      const int j = slot[static_cast<std::size_t>(b)];
      if (j < 0) continue;
      const std::size_t K = ds.sources[static_cast<std::size_t>(b)].size();
      for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
        if (!std::isfinite(field[grid.index(b, k)])) continue;
        const auto g = grid_gradient(grid, field, b, k);
        if (!g) continue;
        const std::size_t e = ds.column_offset(b) + static_cast<std::size_t>(k) * K + static_cast<std::size_t>(j);
        for (int c = 0; c < n; ++c) out.values[e * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] = (*g)[c];
        out.error_estimate[e] = gradient_error(grid, field, b, k);
      }
    }
  });

  for (int b = 0; b < grid.boundary_count(); ++b) {
    const std::size_t K = ds.sources[static_cast<std::size_t>(b)].size();
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const std::size_t base = ds.column_offset(b) + static_cast<std::size_t>(k) * K;
      int c = 0;
      for (std::size_t j = 0; j < K; ++j) c += std::isfinite(out.values[(base + j) * static_cast<std::size_t>(n)]) ? 1 : 0;
      out.covered[grid.index(b, k)] = c;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise solve

int unknown_count(int n, RecoveryMode mode) {
  return mode == RecoveryMode::kFull ? n * (n + 1) / 2 : n * (n - 1) / 2;
}

MetricPoint recover_metric_point(const std::vector<EikonalSystemRow>& rows, RecoveryMode mode,
                                 double kappa_max, const std::string& where) {
  if (rows.empty()) fail(ErrorCode::kInsufficientSources, "no eikonal rows" + where);
  const int n = static_cast<int>(rows.front().gradient.size());
  const int m = n - 1;
  const int unknowns = unknown_count(n, mode);
  const int r = static_cast<int>(rows.size());
  if (r < unknowns) {
    std::ostringstream os;
    os << r << " rows for " << unknowns << " unknowns" << where;
    fail(ErrorCode::kInsufficientSources, os.str());
  }
  const int dim = mode == RecoveryMode::kFull ? n : m;
  Mat A(r, unknowns);
  Vec rhs(r);
  for (int row = 0; row < r; ++row) {
    const Vec& p = rows[static_cast<std::size_t>(row)].gradient;
    int c = 0;
    for (int i = 0; i < dim; ++i) {
      for (int j = i; j < dim; ++j) A(row, c++) = (i == j ? 1.0 : 2.0) * p[i] * p[j];
    }
    rhs[row] = mode == RecoveryMode::kFull ? rows[static_cast<std::size_t>(row)].rhs
                                           : rows[static_cast<std::size_t>(row)].rhs - p[n - 1] * p[n - 1];
  }

  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  const double cond = smin > 0.0 ? (smax / smin) * (smax / smin) : kInf;
  if (!(cond <= kappa_max)) {
    std::ostringstream os;
    os << "condition number " << cond << " exceeds " << kappa_max << where;
    fail(ErrorCode::kGenericity, os.str());
  }
  const Vec x = svd.solve(rhs);

  MetricPoint out;
  out.contravariant = Mat::Zero(n, n);
  int c = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      out.contravariant(i, j) = x[c];
      out.contravariant(j, i) = x[c];
      ++c;
    }
  }
  if (mode == RecoveryMode::kReduced) out.contravariant(n - 1, n - 1) = 1.0;
  out.condition = cond;
  out.residual = std::sqrt((A * x - rhs).squaredNorm() / r);
  out.rows_used = r;
  if (!is_spd(out.contravariant)) fail(ErrorCode::kDefiniteness, "recovered tensor is not positive definite" + where);
  return out;
}

// ---------------------------------------------------------------------------
// Field solve

namespace {

// Keeps the rows passing `good`, topping up with the best by `better` until
// at least min_rows remain.
template <typename Good, typename Better>
void prune_rows(std::vector<EikonalSystemRow>& rows, std::size_t min_rows, Good good, Better better) {
  if (rows.size() <= min_rows) return;
  std::stable_sort(rows.begin(), rows.end(), better);
  std::size_t keep = 0;
  while (keep < rows.size() && good(rows[keep])) ++keep;
  rows.resize(std::max(keep, min_rows));
}

std::vector<EikonalSystemRow> select_rows(std::vector<EikonalSystemRow> rows, int min_rows,
                                          const RecoveryOptions& options, int& rejected) {
  const std::size_t before = rows.size();
  const auto floor = static_cast<std::size_t>(min_rows);
  if (std::isfinite(options.row_error_tol)) {
    prune_rows(rows, floor, [&](const auto& r) { return r.error_estimate <= options.row_error_tol; },
               [](const auto& a, const auto& b) { return a.error_estimate < b.error_estimate; });
  }
  if (options.min_lambda > 0.0) {
    prune_rows(rows, floor, [&](const auto& r) { return r.lambda >= options.min_lambda; },
               [](const auto& a, const auto& b) { return a.lambda > b.lambda; });
  }
  rejected += static_cast<int>(before - rows.size());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.source < b.source; });
  return rows;
}

// Fills unknown interior nodes with the mean of their known neighbours,
// sweeping until nothing changes.
void fill_failed(const DGrid& grid, int n, std::vector<double>& con, std::vector<std::uint8_t>& known) {
  const auto nn = static_cast<std::size_t>(n * n);
  for (int pass = 0; pass < grid.boundary_count() + grid.max_t_count(); ++pass) {
    std::vector<std::size_t> fill_now;
    std::vector<double> fill_values;
    for (int b = 0; b < grid.boundary_count(); ++b) {
      for (int k = 1; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
        const std::size_t node = grid.index(b, k);
        if (known[node]) continue;
        std::vector<double> acc(nn, 0.0);
        int count = 0;
        auto add = [&](int bb, int kk) {
          if (bb < 0 || kk < 1 || !grid.valid(bb, kk)) return;
          const std::size_t nb = grid.index(bb, kk);
          if (!known[nb]) return;
          for (std::size_t c = 0; c < nn; ++c) acc[c] += con[nb * nn + c];
          ++count;
        };
        for (int a = 0; a < grid.boundary_axes(); ++a) {
          add(grid.boundary_neighbor(b, a, -1), k);
          add(grid.boundary_neighbor(b, a, 1), k);
        }
        add(b, k - 1);
        add(b, k + 1);
        if (count == 0) continue;
        fill_now.push_back(node);
        for (double v : acc) fill_values.push_back(v / count);
      }
    }
    if (fill_now.empty()) return;
    for (std::size_t i = 0; i < fill_now.size(); ++i) {
      std::copy_n(fill_values.begin() + static_cast<std::ptrdiff_t>(i * nn), nn,
                  con.begin() + static_cast<std::ptrdiff_t>(fill_now[i] * nn));
      known[fill_now[i]] = 1;
    }
  }
}

}  // namespace

MetricRecovery recover_metric_field(const TravelTimeDataset& ds, const RecoveryOptions& options) {
  const DGrid& grid = ds.grid;
  const int n = grid.dim();
  const auto nn = static_cast<std::size_t>(n * n);
  const LambdaGradients grads = lambda_gradients(ds, options.threads);
  const int unknowns = unknown_count(n, options.mode);

  const std::size_t nodes = grid.node_count();
  std::vector<double> con(nodes * nn, kNaN);
  std::vector<std::uint8_t> known(nodes, 0);
  MetricRecovery out;
  out.condition.assign(nodes, kNaN);
  out.residual.assign(nodes, kNaN);
  out.row_error.assign(nodes, kNaN);
  out.failed.assign(nodes, 0);
  std::vector<int> rejected(nodes, 0);

  std::vector<std::pair<int, int>> interior;
  for (int b = 0; b < grid.boundary_count(); ++b) {
    for (int k = 1; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) interior.emplace_back(b, k);
  }
  parallel_for(interior.size(), options.threads, [&](std::size_t i) {
    const auto [b, k] = interior[i];
    const std::size_t node = grid.index(b, k);
    int rej = 0;
    auto rows = select_rows(grads.rows(ds, b, k), unknowns + 1, options, rej);
    rejected[node] = rej;
    try {
      std::ostringstream where;
      where << " at node (" << b << ", " << k << ")";
      const MetricPoint p = recover_metric_point(rows, options.mode, options.kappa_max, where.str());
      std::copy_n(p.contravariant.data(), nn, con.begin() + static_cast<std::ptrdiff_t>(node * nn));
      known[node] = 1;
      out.condition[node] = p.condition;
      out.residual[node] = p.residual;
      double worst = 0.0;
      for (const auto& r : rows) worst = std::max(worst, r.error_estimate);
      out.row_error[node] = worst;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kGenericity && e.code() != ErrorCode::kDefiniteness &&
          e.code() != ErrorCode::kInsufficientSources) {
        throw;
      }
      out.failed[node] = 1;
    }
  });

  std::vector<std::size_t> failed_nodes;
  for (const auto& [b, k] : interior) {
    const std::size_t node = grid.index(b, k);
    out.rows_rejected += rejected[node];
    if (out.failed[node]) failed_nodes.push_back(node);
  }
  out.failed_count = static_cast<int>(failed_nodes.size());
  out.solved = static_cast<int>(interior.size()) - out.failed_count;
  if (static_cast<double>(failed_nodes.size()) > options.max_failed_fraction * static_cast<double>(interior.size())) {
    std::ostringstream os;
    os << failed_nodes.size() << " of " << interior.size() << " interior nodes failed";
    throw FieldFailure(os.str(), std::move(failed_nodes));
  }
  fill_failed(grid, n, con, known);

  // t = 0 layer: quadratic extrapolation of each component along the column.
  for (int b = 0; b < grid.boundary_count(); ++b) {
    const int count = grid.t_counts()[static_cast<std::size_t>(b)];
    const std::size_t n0 = grid.index(b, 0);
    auto comp = [&](int k, std::size_t c) { return con[grid.index(b, k) * nn + c]; };
    bool ok = count >= 3 && known[grid.index(b, 1)] && known[grid.index(b, 2)];
    const bool quadratic = ok && count >= 4 && known[grid.index(b, 3)];
    if (!ok) continue;
    for (std::size_t c = 0; c < nn; ++c) {
      con[n0 * nn + c] = quadratic ? 3.0 * comp(1, c) - 3.0 * comp(2, c) + comp(3, c)
                                   : 2.0 * comp(1, c) - comp(2, c);
    }
    // At t = 0 the normal components are exact: g^{tt} = 1, g^{at} = 0.
    for (int i = 0; i < n; ++i) {
      const double v = i == n - 1 ? 1.0 : 0.0;
      con[n0 * nn + static_cast<std::size_t>(i * n + n - 1)] = v;
      con[n0 * nn + static_cast<std::size_t>((n - 1) * n + i)] = v;
    }
    known[n0] = 1;
  }

  MetricFieldOnD field(grid);
  for (std::size_t node = 0; node < nodes; ++node) {
    if (!known[node]) continue;
    Mat gi = Eigen::Map<const Mat>(con.data() + node * nn, n, n);
    gi = 0.5 * (gi + gi.transpose()).eval();
    const int k = static_cast<int>(node % static_cast<std::size_t>(grid.max_t_count()));
    if (options.mode == RecoveryMode::kReduced) {
      gi.row(n - 1).setZero();
      gi.col(n - 1).setZero();
      gi(n - 1, n - 1) = 1.0;
    }
    if (!is_spd(gi)) continue;
    const auto status = (k == 0 || out.failed[node]) ? MetricFieldOnD::NodeStatus::kFilled
                                                     : MetricFieldOnD::NodeStatus::kOk;
    field.set(node, gi.inverse(), gi, status);
  }
  out.field = std::move(field);
  return out;
}

MetricFieldOnD project_semigeodesic(const MetricFieldOnD& g) {
  MetricFieldOnD out(g.grid());
  const int n = g.dim();
  for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
    if (!g.usable(node)) continue;
    Mat gi = g.contravariant(node);
    gi.row(n - 1).setZero();
    gi.col(n - 1).setZero();
    gi(n - 1, n - 1) = 1.0;
    if (!is_spd(gi)) continue;
    out.set(node, gi.inverse(), gi, g.status(node));
  }
  return out;
}

MetricFieldOnD truth_metric(const TravelTimeDataset& ds) {
  if (!ds.truth) fail(ErrorCode::kUnavailable, "dataset has no ground truth");
  const DGrid& grid = ds.grid;
  const int n = grid.dim();
  std::vector<std::vector<double>> comps(static_cast<std::size_t>(n), std::vector<double>(grid.node_count(), kNaN));
  for (int b = 0; b < grid.boundary_count(); ++b) {
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const Vec x = ds.truth_gamma(b, k);
      for (int i = 0; i < n; ++i) comps[static_cast<std::size_t>(i)][grid.index(b, k)] = x[i];
    }
  }
  MetricFieldOnD out(grid);
  for (int b = 0; b < grid.boundary_count(); ++b) {
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      Mat J(n, n);
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        const auto gr = grid_gradient(grid, comps[static_cast<std::size_t>(i)], b, k);
        if (gr) J.row(i) = gr->transpose();
        else ok = false;
      }
      if (!ok) continue;
      const Mat gc = ds.truth_rho(b, k) * J.transpose() * J;
      if (!is_spd(gc)) continue;
      out.set(grid.index(b, k), gc, gc.inverse(), MetricFieldOnD::NodeStatus::kOk);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Boundary trace

BoundaryRhoTrace recover_boundary_rho(const std::vector<Mat>& g_boundary, const BoundaryGeometry& bg) {
  if (static_cast<int>(g_boundary.size()) != bg.node_count()) {
    fail(ErrorCode::kInvalidArgument, "boundary metric layer does not match the boundary geometry");
  }
  const int m = bg.n - 1;
  BoundaryRhoTrace out;
  for (int b = 0; b < bg.node_count(); ++b) {
    const Mat I = bg.first_fundamental_form(b);
    const Mat& g = g_boundary[static_cast<std::size_t>(b)];
    if (g.rows() < m || g.cols() < m) fail(ErrorCode::kInvalidArgument, "boundary metric tensor too small");
    const double scale = I.diagonal().maxCoeff();
    if (!(scale > 0.0) || std::abs(I.determinant()) <= 1e-12 * std::pow(scale, m)) {
      std::ostringstream os;
      os << "degenerate first fundamental form at boundary node " << b;
      fail(ErrorCode::kParametrization, os.str());
    }
    const Mat gt = g.topLeftCorner(m, m);
    const double rho = (gt.array() * I.array()).sum() / I.squaredNorm();
    if (!(rho > 0.0)) {
      std::ostringstream os;
      os << "non-positive boundary rho " << rho << " at boundary node " << b;
      fail(ErrorCode::kPositivity, os.str());
    }
    out.rho.push_back(rho);
    out.residual.push_back((gt - rho * I).norm() / std::max(gt.norm(), 1e-300));
  }
  return out;
}

BoundaryRhoTrace recover_boundary_rho(const MetricFieldOnD& g, const BoundaryGeometry& bg) {
  std::vector<Mat> layer;
  for (int b = 0; b < g.grid().boundary_count(); ++b) {
    const std::size_t node = g.grid().index(b, 0);
    if (!g.usable(node)) {
      std::ostringstream os;
      os << "no recovered metric at boundary node " << b;
      fail(ErrorCode::kUnavailable, os.str());
    }
    layer.push_back(g.covariant(node));
  }
  return recover_boundary_rho(layer, bg);
}

}  // namespace ttkin
