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
#include "ttkin/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ttkin {

using nlohmann::json;

namespace {

json finite_vec(const Vec& v, const char* what) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) fail(ErrorCode::kInvalidArgument, std::string("non-finite value in ") + what);
    a.push_back(v[i]);
  }
  return a;
}

[[noreturn]] void parse_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::kParse, path + ": " + what);
}

// Checked accessors carrying the JSON path of the value being read.
const json& field(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) parse_error(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) parse_error(path + "." + key, "missing");
  return *it;
}

const json& array_of(const json& j, const std::string& path, std::size_t expected = SIZE_MAX) {
  if (!j.is_array()) parse_error(path, "expected an array");
  if (expected != SIZE_MAX && j.size() != expected) {
    std::ostringstream os;
    os << "expected " << expected << " entries, found " << j.size();
    parse_error(path, os.str());
  }
  return j;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) parse_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_error(path, "non-finite number");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) parse_error(path, "expected an integer");
  return j.get<int>();
}

std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

Vec vector_n(const json& j, const std::string& path, int n) {
  array_of(j, path, static_cast<std::size_t>(n));
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = number(j[static_cast<std::size_t>(i)], at(path, static_cast<std::size_t>(i)));
  return v;
}

}  // namespace

json dataset_to_json(const TravelTimeDataset& ds) {
  const int n = ds.n;
  const DGrid& grid = ds.grid;
  json j;
  j["format"] = "TTD";
  j["version"] = kTtdVersion;
  j["n"] = n;

  json boundary;
  boundary["param_shape"] = grid.boundary_shape();
  boundary["kind"] = ds.boundary.kind;
  json cart = json::array(), normal = json::array(), tangents = json::array();
  for (int b = 0; b < ds.boundary.node_count(); ++b) {
    const auto ub = static_cast<std::size_t>(b);
    cart.push_back(finite_vec(ds.boundary.points[ub], "boundary points"));
    normal.push_back(finite_vec(ds.boundary.normals[ub], "boundary normals"));
    json t = json::array();
    for (const Vec& v : ds.boundary.tangents[ub]) t.push_back(finite_vec(v, "boundary tangents"));
    tangents.push_back(std::move(t));
  }
  boundary["cartesian"] = std::move(cart);
  boundary["normal"] = std::move(normal);
  boundary["tangents"] = std::move(tangents);
  j["boundary"] = std::move(boundary);

  j["grid"] = {{"dy", grid.dy()}, {"dt", grid.dt()}, {"t_counts", grid.t_counts()}, {"y0", grid.y0()}};
  j["sources"] = {{"per_node", ds.sources}};

  json values = json::array();
  for (double v : ds.lambda) values.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  j["lambda"] = {{"layout", "node-major"}, {"values", std::move(values)}};

  if (ds.truth) {
    json gamma = json::array();
    for (std::size_t v = 0; v < ds.truth->rho.size(); ++v) {
      gamma.push_back(finite_vec(Eigen::Map<const Vec>(ds.truth->gamma.data() + v * static_cast<std::size_t>(n), n),
                                 "ground-truth gamma"));
    }
    json rho = json::array();
    for (double r : ds.truth->rho) {
      if (!std::isfinite(r)) fail(ErrorCode::kInvalidArgument, "non-finite value in ground-truth rho");
      rho.push_back(r);
    }
    j["ground_truth"] = {{"gamma", std::move(gamma)}, {"rho", std::move(rho)}};
  }
  j["meta"] = ds.meta.is_null() ? json::object() : ds.meta;
  return j;
}

TravelTimeDataset dataset_from_json(const json& j) {
  if (!j.is_object()) parse_error("$", "expected an object");
  const json& format = field(j, "$", "format");
  if (!format.is_string() || format.get<std::string>() != "TTD") parse_error("$.format", "expected \"TTD\"");
  const int version = integer(field(j, "$", "version"), "$.version");
  if (version != kTtdVersion) {
    fail(ErrorCode::kVersionMismatch, "$.version: unsupported TTD version " + std::to_string(version));
  }
  const int n = integer(field(j, "$", "n"), "$.n");
  if (n < 2) parse_error("$.n", "dimension must be >= 2");

  // grid
  const json& jg = field(j, "$", "grid");
  const json& jdy = array_of(field(jg, "$.grid", "dy"), "$.grid.dy", static_cast<std::size_t>(n - 1));
  std::vector<double> dy;
  for (std::size_t i = 0; i < jdy.size(); ++i) {
    dy.push_back(number(jdy[i], at("$.grid.dy", i)));
    if (!(dy.back() > 0.0)) parse_error(at("$.grid.dy", i), "spacing must be positive");
  }
  const double dt = number(field(jg, "$.grid", "dt"), "$.grid.dt");
  if (!(dt > 0.0)) parse_error("$.grid.dt", "spacing must be positive");
  const json& jtc = array_of(field(jg, "$.grid", "t_counts"), "$.grid.t_counts");
  std::vector<int> t_counts;
  for (std::size_t i = 0; i < jtc.size(); ++i) {
    t_counts.push_back(integer(jtc[i], at("$.grid.t_counts", i)));
    if (t_counts.back() < 1) parse_error(at("$.grid.t_counts", i), "count must be >= 1");
  }
  std::vector<double> y0(static_cast<std::size_t>(n - 1), 0.0);
  if (jg.contains("y0")) {
    const Vec v = vector_n(jg["y0"], "$.grid.y0", n - 1);
    for (int i = 0; i < n - 1; ++i) y0[static_cast<std::size_t>(i)] = v[i];
  }

  // boundary
  const json& jb = field(j, "$", "boundary");
  const json& jshape = array_of(field(jb, "$.boundary", "param_shape"), "$.boundary.param_shape",
                                static_cast<std::size_t>(n - 1));
  std::vector<int> shape;
  std::size_t B = 1;
  for (std::size_t i = 0; i < jshape.size(); ++i) {
    shape.push_back(integer(jshape[i], at("$.boundary.param_shape", i)));
    if (shape.back() < 1) parse_error(at("$.boundary.param_shape", i), "extent must be >= 1");
    B *= static_cast<std::size_t>(shape.back());
  }
  if (t_counts.size() != B) parse_error("$.grid.t_counts", "expected one count per boundary node");

  TravelTimeDataset ds;
  ds.n = n;
  ds.grid = DGrid(shape, dy, dt, t_counts, y0);
  BoundaryGeometry& bg = ds.boundary;
  bg.n = n;
  bg.param_shape = shape;
  bg.dy = dy;
  bg.y0 = y0;
  if (jb.contains("kind")) {
    if (!jb["kind"].is_string()) parse_error("$.boundary.kind", "expected a string");
    bg.kind = jb["kind"].get<std::string>();
  }
  const json& jc = array_of(field(jb, "$.boundary", "cartesian"), "$.boundary.cartesian", B);
  const json& jn = array_of(field(jb, "$.boundary", "normal"), "$.boundary.normal", B);
  const json& jt = array_of(field(jb, "$.boundary", "tangents"), "$.boundary.tangents", B);
  for (std::size_t b = 0; b < B; ++b) {
    bg.points.push_back(vector_n(jc[b], at("$.boundary.cartesian", b), n));
    bg.normals.push_back(vector_n(jn[b], at("$.boundary.normal", b), n));
    const std::string tp = at("$.boundary.tangents", b);
    array_of(jt[b], tp, static_cast<std::size_t>(n - 1));
    std::vector<Vec> tang;
    for (std::size_t a = 0; a < static_cast<std::size_t>(n - 1); ++a) tang.push_back(vector_n(jt[b][a], at(tp, a), n));
    bg.tangents.push_back(std::move(tang));
  }

  // sources
  const json& js = field(j, "$", "sources");
  const json& jp = array_of(field(js, "$.sources", "per_node"), "$.sources.per_node", B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::string sp = at("$.sources.per_node", b);
    const json& list = array_of(jp[b], sp);
    std::vector<int> sources;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const int s = integer(list[i], at(sp, i));
      if (s < 0 || static_cast<std::size_t>(s) >= B) parse_error(at(sp, i), "source index out of range");
      sources.push_back(s);
    }
    ds.sources.push_back(std::move(sources));
  }

  // lambda
  const json& jl = field(j, "$", "lambda");
  const json& layout = field(jl, "$.lambda", "layout");
  if (!layout.is_string() || layout.get<std::string>() != "node-major") {
    parse_error("$.lambda.layout", "expected \"node-major\"");
  }
  std::size_t expected = 0;
  for (std::size_t b = 0; b < B; ++b) expected += static_cast<std::size_t>(t_counts[b]) * ds.sources[b].size();
  const json& jv = array_of(field(jl, "$.lambda", "values"), "$.lambda.values", expected);
  ds.lambda.reserve(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    ds.lambda.push_back(jv[i].is_null() ? kNaN : number(jv[i], at("$.lambda.values", i)));
  }
  ds.finalize_layout();

  if (j.contains("ground_truth")) {
    const json& jgt = j["ground_truth"];
    const std::size_t valid = ds.grid.valid_node_count();
    const json& gg = array_of(field(jgt, "$.ground_truth", "gamma"), "$.ground_truth.gamma", valid);
    const json& gr = array_of(field(jgt, "$.ground_truth", "rho"), "$.ground_truth.rho", valid);
    GroundTruth truth;
    for (std::size_t v = 0; v < valid; ++v) {
      const Vec x = vector_n(gg[v], at("$.ground_truth.gamma", v), n);
      for (int i = 0; i < n; ++i) truth.gamma.push_back(x[i]);
      truth.rho.push_back(number(gr[v], at("$.ground_truth.rho", v)));
    }
    ds.truth = std::move(truth);
  }
  if (j.contains("meta")) {
    if (!j["meta"].is_object()) parse_error("$.meta", "expected an object");
    ds.meta = j["meta"];
  }
  return ds;
}

void dataset_write(const TravelTimeDataset& ds, const std::string& path) {
  const json j = dataset_to_json(ds);
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  out << j.dump() << '\n';
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

TravelTimeDataset dataset_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "$: " + std::string(e.what()));
  }
  return dataset_from_json(j);
}

void write_node_csv(const std::string& path, const DGrid& grid, const std::vector<std::string>& columns,
                    const std::vector<double>& values) {
  const std::size_t c = columns.size();
  if (values.size() != grid.node_count() * c) fail(ErrorCode::kInvalidArgument, "CSV field size does not match the grid");
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  for (int a = 0; a < grid.boundary_axes(); ++a) out << 'y' << a + 1 << ',';
  out << 't';
  for (const auto& name : columns) out << ',' << name;
  out << '\n' << std::setprecision(17);
  for (int b = 0; b < grid.boundary_count(); ++b) {
    for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
      const Vec y = grid.coords(b, k);
      for (int i = 0; i < y.size(); ++i) out << (i ? "," : "") << y[i];
      const std::size_t node = grid.index(b, k);
      for (std::size_t i = 0; i < c; ++i) {
        const double v = values[node * c + i];
        out << ',';
        if (std::isfinite(v)) out << v;
        else out << "nan";
      }
      out << '\n';
    }
  }
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace ttkin
