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
#include "ttkin/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "ttkin/parallel.hpp"

namespace ttkin {

// ---------------------------------------------------------------------------
// TravelTimeDataset layout

void TravelTimeDataset::finalize_layout() {
  const int B = grid.boundary_count();
  if (static_cast<int>(sources.size()) != B) {
    fail(ErrorCode::kInvalidArgument, "dataset: one source list per boundary node required");
  }
  offsets_.assign(static_cast<std::size_t>(B) + 1, 0);
  valid_offsets_.assign(static_cast<std::size_t>(B) + 1, 0);
  for (int b = 0; b < B; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const auto count = static_cast<std::size_t>(grid.t_counts()[ub]);
    offsets_[ub + 1] = offsets_[ub] + count * sources[ub].size();
    valid_offsets_[ub + 1] = valid_offsets_[ub] + count;
  }
  if (lambda.empty()) lambda.assign(offsets_.back(), kNaN);
  if (lambda.size() != offsets_.back()) {
    fail(ErrorCode::kInvalidArgument, "dataset: lambda table size does not match grid and sources");
  }
}

double TravelTimeDataset::lambda_at(int b, int k, int j) const {
  const auto ub = static_cast<std::size_t>(b);
  return lambda[offsets_[ub] + static_cast<std::size_t>(k) * sources[ub].size() + static_cast<std::size_t>(j)];
}

double& TravelTimeDataset::lambda_at(int b, int k, int j) {
  const auto ub = static_cast<std::size_t>(b);
  return lambda[offsets_[ub] + static_cast<std::size_t>(k) * sources[ub].size() + static_cast<std::size_t>(j)];
}

int TravelTimeDataset::source_slot(int b, int s) const {
  const auto& list = sources[static_cast<std::size_t>(b)];
  const auto it = std::find(list.begin(), list.end(), s);
  return it == list.end() ? -1 : static_cast<int>(it - list.begin());
}

Vec TravelTimeDataset::truth_gamma(int b, int k) const {
  if (!truth) fail(ErrorCode::kUnavailable, "dataset has no ground truth");
  const std::size_t v = valid_index(b, k);
  return Eigen::Map<const Vec>(truth->gamma.data() + v * static_cast<std::size_t>(n), n);
}

double TravelTimeDataset::truth_rho(int b, int k) const {
  if (!truth) fail(ErrorCode::kUnavailable, "dataset has no ground truth");
  return truth->rho[valid_index(b, k)];
}

// ---------------------------------------------------------------------------
// Source selection

namespace {

struct AxisBlocks {
  int count;
  int block_of(int i) const { return std::min(i / 3, count - 1); }
};

}  // namespace

std::vector<std::vector<int>> select_sources(const DGrid& grid, int k, double radius, int stride,
                                            double min_distance) {
  const int axes = grid.boundary_axes();
  const auto& shape = grid.boundary_shape();
  if (k < 1 || stride < 1) fail(ErrorCode::kInvalidArgument, "select_sources: k and stride must be >= 1");
  std::vector<AxisBlocks> blocks;
  for (int a = 0; a < axes; ++a) blocks.push_back({std::max(1, shape[static_cast<std::size_t>(a)] / 3)});

  // Lattice of candidate source nodes.
  std::vector<int> lattice;
  for (int b = 0; b < grid.boundary_count(); ++b) {
    const auto m = grid.boundary_multi_index(b);
    bool on = true;
    for (int a = 0; a < axes; ++a) on = on && (m[static_cast<std::size_t>(a)] % stride == 0);
    if (on) lattice.push_back(b);
  }
  auto param = [&](int b) {
    const auto m = grid.boundary_multi_index(b);
    Vec y(axes);
    for (int a = 0; a < axes; ++a) y[a] = m[static_cast<std::size_t>(a)] * grid.dy()[static_cast<std::size_t>(a)];
    return y;
  };
  const double tol = 1e-9 * radius;

  std::map<std::vector<int>, std::vector<int>> per_block;
  std::vector<std::vector<int>> out(static_cast<std::size_t>(grid.boundary_count()));
  for (int b = 0; b < grid.boundary_count(); ++b) {
    const auto m = grid.boundary_multi_index(b);
    std::vector<int> key(static_cast<std::size_t>(axes));
    for (int a = 0; a < axes; ++a) key[static_cast<std::size_t>(a)] = blocks[static_cast<std::size_t>(a)].block_of(m[static_cast<std::size_t>(a)]);
    auto it = per_block.find(key);
    if (it == per_block.end()) {
      Vec center(axes);
      for (int a = 0; a < axes; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const int start = key[ua] * 3;
        const int end = key[ua] == blocks[ua].count - 1 ? shape[ua] - 1 : start + 2;
        center[a] = 0.5 * (start + end) * grid.dy()[ua];
      }
      std::vector<Vec> members;
      for (int b2 = 0; b2 < grid.boundary_count(); ++b2) {
        const auto m2 = grid.boundary_multi_index(b2);
        bool in = true;
        for (int a = 0; a < axes; ++a) {
          in = in && blocks[static_cast<std::size_t>(a)].block_of(m2[static_cast<std::size_t>(a)]) == key[static_cast<std::size_t>(a)];
        }
        if (in) members.push_back(param(b2));
      }
      // Candidates closer than min_distance to the block rank after all others.
      std::vector<std::tuple<bool, double, int>> ranked;
      for (int s : lattice) {
        double near = std::numeric_limits<double>::infinity();
        for (const Vec& y : members) near = std::min(near, (param(s) - y).norm());
        ranked.emplace_back(near < min_distance, (param(s) - center).norm(), s);
      }
      std::sort(ranked.begin(), ranked.end());
      if (static_cast<int>(ranked.size()) < k) {
        std::ostringstream os;
        os << "only " << ranked.size() << " candidate source nodes, " << k << " requested";
        fail(ErrorCode::kInsufficientSources, os.str());
      }
      // Greedy pick: the first n(n+1)/2 sources must be unisolvent for
      // quadratics in y, else the eikonal system is singular (e.g. six
      // sources on two lattice lines in 3D).
      const std::size_t monomials = static_cast<std::size_t>((axes + 1) * (axes + 2) / 2);
      auto quadratic_row = [&](int src) {
        const Vec y = (param(src) - center) / radius;
        Vec row(static_cast<Eigen::Index>(monomials));
        Eigen::Index c = 0;
        row[c++] = 1.0;
        for (int a = 0; a < axes; ++a) row[c++] = y[a];
        for (int a = 0; a < axes; ++a) {
          for (int e = a; e < axes; ++e) row[c++] = y[a] * y[e];
        }
        return row;
      };
      std::vector<int> chosen;
      std::vector<int> deferred;
      std::vector<Vec> basis;
      for (const auto& [close, dist, src] : ranked) {
        if (static_cast<int>(chosen.size()) == k) break;
        if (basis.size() == monomials) {
          chosen.push_back(src);
          continue;
        }
        Vec r = quadratic_row(src);
        const double norm = r.norm();
        for (const Vec& q : basis) r -= r.dot(q) * q;
        if (r.norm() > 1e-8 * norm) {
          basis.push_back(r.normalized());
          chosen.push_back(src);
        } else {
          deferred.push_back(src);
        }
      }
      for (std::size_t i = 0; i < deferred.size() && static_cast<int>(chosen.size()) < k; ++i) chosen.push_back(deferred[i]);
      it = per_block.emplace(key, std::move(chosen)).first;
    }
    const Vec yb = param(b);
    for (int s : it->second) {
      if ((param(s) - yb).norm() > radius + tol) {
        std::ostringstream os;
        os << "boundary node " << b << ": fewer than " << k << " sources within radius " << radius;
        fail(ErrorCode::kInsufficientSources, os.str());
      }
    }
    out[static_cast<std::size_t>(b)] = it->second;
  }
  return out;
}

int widest_source_stride(const DGrid& grid, int k, double radius, double min_distance) {
  int widest = 1;
  for (int s : grid.boundary_shape()) widest = std::max(widest, s - 1);
  for (int stride = widest; stride > 1; --stride) {
    try {
      select_sources(grid, k, radius, stride, min_distance);
      return stride;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientSources) throw;
    }
  }
  select_sources(grid, k, radius, 1, min_distance);  // throws if even the densest lattice fails
  return 1;
}

double analytic_travel_time(const ConformalFactorField& rho, const Vec& x, const Vec& source) {
  const auto* c = std::get_if<ConformalFactorField::Constant>(&rho.source());
  if (!c) fail(ErrorCode::kInvalidArgument, "analytic travel times need a constant conformal factor");
  return std::sqrt(c->level) * (x - source).norm();
}

namespace {

nlohmann::json describe_rho(const ConformalFactorField& rho) {
  nlohmann::json j;
  j["id"] = rho.id();
  j["box"] = {{"lo", std::vector<double>(rho.box().lo.data(), rho.box().lo.data() + rho.dim())},
              {"hi", std::vector<double>(rho.box().hi.data(), rho.box().hi.data() + rho.dim())}};
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  if (const auto* c = std::get_if<ConformalFactorField::Constant>(&rho.source())) {
    j["level"] = c->level;
  } else if (const auto* b = std::get_if<ConformalFactorField::GaussianBump>(&rho.source())) {
    j["base"] = b->base;
    j["amplitude"] = b->amplitude;
    j["center"] = vec(b->center);
    j["width"] = b->width;
  } else if (const auto* r = std::get_if<ConformalFactorField::Radial>(&rho.source())) {
    j["scale"] = r->scale;
    j["k"] = r->k;
    j["center"] = vec(r->center);
  } else {
    j["dims"] = std::get<ConformalFactorField::Gridded>(rho.source()).dims;
  }
  return j;
}

}  // namespace

TravelTimeDataset synthesize_dataset(const ConformalFactorField& rho, const BoundaryGeometry& bg,
                                     const DGrid& grid, const SynthesisOptions& options) {
  bg.validate();
  const int n = grid.dim();
  const int k_sources = options.sources_per_node > 0 ? options.sources_per_node : n * (n + 1) / 2 + 4;
  if (k_sources < n * (n + 1) / 2) {
    std::ostringstream os;
    os << "sources_per_node must be >= n(n+1)/2 = " << n * (n + 1) / 2;
    fail(ErrorCode::kInsufficientSources, os.str());
  }
  if (options.tau_mode == TauMode::kAnalytic && !rho.is_constant()) {
    fail(ErrorCode::kInvalidArgument, "analytic travel-time mode requires a constant phantom");
  }
  double min_dy = grid.dy()[0];
  for (double d : grid.dy()) min_dy = std::min(min_dy, d);
  const double radius = options.source_radius > 0.0 ? options.source_radius : 10.0 * min_dy;

  ChartOptions chart_opts = options.chart;
  chart_opts.threads = options.threads;
  const NormalChart chart = build_normal_chart(rho, bg, grid, chart_opts);

  TravelTimeDataset ds;
  ds.n = n;
  ds.boundary = bg;
  ds.grid = chart.grid;
  const int stride = options.source_stride > 0 ? options.source_stride
                                               : widest_source_stride(ds.grid, k_sources, radius, options.source_min_distance);
  ds.sources = select_sources(ds.grid, k_sources, radius, stride, options.source_min_distance);
  ds.finalize_layout();

  std::vector<int> distinct;
  for (const auto& list : ds.sources) distinct.insert(distinct.end(), list.begin(), list.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  const DGrid& dg = ds.grid;
  parallel_for(distinct.size(), options.threads, [&](std::size_t i) {
    const int s = distinct[i];
    const Vec& xs = bg.points[static_cast<std::size_t>(s)];
    std::optional<CartesianGrid> tau;
    if (options.tau_mode == TauMode::kEikonal) tau = eikonal_solve(rho, xs, options.fmm_h);
    for (int b = 0; b < dg.boundary_count(); ++b) {
      const int j = ds.source_slot(b, s);
      if (j < 0) continue;
      for (int k = 0; k < dg.t_counts()[static_cast<std::size_t>(b)]; ++k) {
        const Vec x = chart.point(dg.index(b, k));
        ds.lambda_at(b, k, j) = tau ? tau->interpolate(x) : analytic_travel_time(rho, x, xs);
      }
    }
  });

  double rho_max = 0.0;
  if (options.embed_truth) {
    GroundTruth truth;
    truth.gamma.reserve(dg.valid_node_count() * static_cast<std::size_t>(n));
    for (int b = 0; b < dg.boundary_count(); ++b) {
      for (int k = 0; k < dg.t_counts()[static_cast<std::size_t>(b)]; ++k) {
        const Vec x = chart.point(dg.index(b, k));
        for (int i = 0; i < n; ++i) truth.gamma.push_back(x[i]);
        truth.rho.push_back(rho.value(x));
        rho_max = std::max(rho_max, truth.rho.back());
      }
    }
    ds.truth = std::move(truth);
  } else {
    for (int b = 0; b < dg.boundary_count(); ++b)
      for (int k = 0; k < dg.t_counts()[static_cast<std::size_t>(b)]; ++k)
        rho_max = std::max(rho_max, rho.value(chart.point(dg.index(b, k))));
  }

  const bool eik = options.tau_mode == TauMode::kEikonal;
  ds.meta["phantom"] = describe_rho(rho);
  ds.meta["boundary_kind"] = bg.kind;
  ds.meta["synthesis"] = {
      {"tau_mode", eik ? "eikonal" : "analytic"},
      {"fmm_h", options.fmm_h},
      {"sources_per_node", k_sources},
      {"source_min_distance", options.source_min_distance},
      {"source_radius", radius},
      {"source_stride", stride},
      {"tolerance", eik ? 4.0 * options.fmm_h * std::sqrt(rho_max) : 1e-8},
  };
  ds.meta["chart"] = {
      {"jacobian_threshold", chart_opts.jacobian_threshold},
      {"max_step", chart_opts.max_step},
      {"truncated_by_jacobian", chart.truncated_by_jacobian},
      {"truncated_by_collision", chart.truncated_by_collision},
      {"truncated_by_exit", chart.truncated_by_exit},
      {"min_relative_jacobian", chart.min_relative_jacobian},
      {"max_speed_drift", chart.max_speed_drift},
      {"requested_t_count", grid.max_t_count()},
  };
  return ds;
}

}  // namespace ttkin
