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
#include "ttkin/ttkin.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "ttkin/io.hpp"
#include "ttkin/pipeline.hpp"

struct ttkin_config {
  ttkin::SolverConfig solver;
};

struct ttkin_dataset {
  ttkin::TravelTimeDataset data;
  std::string phantom;
};

struct ttkin_result {
  std::optional<ttkin::TravelTimeDataset> dataset;
  ttkin::Reconstruction rec;
  nlohmann::json report;
  bool pass = false;
};

namespace {

thread_local std::string last_error;

ttkin_status record(ttkin_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename Fn>
ttkin_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return TTKIN_OK;
  } catch (const ttkin::Error& e) {
    return record(static_cast<ttkin_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return record(TTKIN_PARSE, e.what());
  } catch (const std::exception& e) {
    return record(TTKIN_INTERNAL, e.what());
  } catch (...) {
    return record(TTKIN_INTERNAL, "unknown exception");
  }
}

void require(bool cond, const char* what) {
  if (!cond) ttkin::fail(ttkin::ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ttkin::PhantomSpec phantom_with(const char* name, const ttkin_synthesis_overrides* o) {
  ttkin::PhantomSpec p = ttkin::make_phantom(name);
  if (!o) return p;
  if (o->sources_per_node < 0 || o->source_radius < 0.0 || o->fmm_h < 0.0 || o->dt < 0.0) {
    ttkin::fail(ttkin::ErrorCode::kInvalidArgument, "synthesis overrides must be non-negative");
  }
  if (o->sources_per_node > 0) p.synthesis.sources_per_node = o->sources_per_node;
  if (o->source_radius > 0.0) p.synthesis.source_radius = o->source_radius;
  if (o->fmm_h > 0.0) p.synthesis.fmm_h = o->fmm_h;
  if (o->dt > 0.0) {
    p.grid = ttkin::DGrid::uniform(p.grid.boundary_shape(), p.grid.dy(), o->dt, p.requested_T, p.grid.y0());
  }
  return p;
}

ttkin::Thresholds thresholds_for(const ttkin::TravelTimeDataset& ds) {
  if (ds.meta.contains("preset") && ds.meta["preset"].is_string()) {
    try {
      return ttkin::make_phantom(ds.meta["preset"].get<std::string>()).thresholds;
    } catch (const ttkin::Error&) {
    }
  }
  return {};
}

std::vector<double> per_node(const ttkin::DGrid& grid, std::size_t columns) {
  return std::vector<double>(grid.node_count() * columns, ttkin::kNaN);
}

}  // namespace

extern "C" {

const char* ttkin_version(void) { return "1.0.0"; }

const char* ttkin_status_name(ttkin_status status) {
  if (status == TTKIN_INTERNAL) return "internal";
  if (status < TTKIN_OK || status > TTKIN_VARIANCE_MISMATCH) return "unknown";
  return ttkin::error_code_name(static_cast<ttkin::ErrorCode>(status)).data();
}

const char* ttkin_last_error(void) { return last_error.c_str(); }

void ttkin_string_free(char* s) { std::free(s); }

int ttkin_phantom_count(void) { return static_cast<int>(ttkin::phantom_names().size()); }

const char* ttkin_phantom_name(int index) {
  static const std::vector<std::string> names = ttkin::phantom_names();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<std::size_t>(index)].c_str();
}

ttkin_status ttkin_config_create(const char* phantom, ttkin_config** out) {
  return guarded([&] {
    require(out, "out");
    auto* c = new ttkin_config;
    try {
      if (phantom) c->solver = ttkin::make_phantom(phantom).solver;
    } catch (...) {
      delete c;
      throw;
    }
    *out = c;
  });
}

void ttkin_config_destroy(ttkin_config* config) { delete config; }

ttkin_status ttkin_config_update(ttkin_config* config, const char* json) {
  return guarded([&] {
    require(config, "config");
    require(json, "json");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      ttkin::fail(ttkin::ErrorCode::kParse, e.what());
    }
    ttkin::SolverConfig next = config->solver;
    next.update(j);
    config->solver = next;
  });
}

ttkin_status ttkin_config_to_json(const ttkin_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = copy_string(config->solver.to_json().dump());
  });
}

ttkin_status ttkin_config_set_threads(ttkin_config* config, unsigned threads) {
  return guarded([&] {
    require(config, "config");
    config->solver.threads = threads;
  });
}

ttkin_status ttkin_synthesize(const char* phantom, const ttkin_synthesis_overrides* overrides, unsigned threads,
                              ttkin_dataset** out) {
  return guarded([&] {
    require(phantom, "phantom");
    require(out, "out");
    const ttkin::PhantomSpec p = phantom_with(phantom, overrides);
    auto* d = new ttkin_dataset{ttkin::synthesize_phantom(p, threads), p.id};
    *out = d;
  });
}

ttkin_status ttkin_dataset_read(const char* path, ttkin_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto* d = new ttkin_dataset{ttkin::dataset_read(path), {}};
    if (d->data.meta.contains("preset") && d->data.meta["preset"].is_string()) {
      d->phantom = d->data.meta["preset"].get<std::string>();
    }
    *out = d;
  });
}

ttkin_status ttkin_dataset_write(const ttkin_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(path, "path");
    ttkin::dataset_write(dataset->data, path);
  });
}

void ttkin_dataset_destroy(ttkin_dataset* dataset) { delete dataset; }

ttkin_status ttkin_dataset_info(const ttkin_dataset* dataset, int* n, int* boundary_nodes, size_t* valid_nodes) {
  return guarded([&] {
    require(dataset, "dataset");
    if (n) *n = dataset->data.n;
    if (boundary_nodes) *boundary_nodes = dataset->data.grid.boundary_count();
    if (valid_nodes) *valid_nodes = dataset->data.grid.valid_node_count();
  });
}

const char* ttkin_dataset_phantom(const ttkin_dataset* dataset) {
  if (!dataset || dataset->phantom.empty()) return nullptr;
  return dataset->phantom.c_str();
}

ttkin_status ttkin_validate(const ttkin_dataset* dataset, int* ok, char** report) {
  return guarded([&] {
    require(dataset, "dataset");
    require(ok, "ok");
    const ttkin::ValidationResult v = ttkin::validate_dataset(dataset->data);
    *ok = v.ok ? 1 : 0;
    if (report) {
      nlohmann::json j = {{"ok", v.ok}, {"issues", v.issues}, {"checks", v.checks}};
      *report = copy_string(j.dump(2));
    }
  });
}

ttkin_status ttkin_reconstruct(const ttkin_dataset* dataset, const ttkin_config* config, ttkin_result** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const ttkin::SolverConfig solver = config ? config->solver : ttkin::SolverConfig{};
    auto* r = new ttkin_result;
    try {
      r->dataset = dataset->data;
      r->rec = ttkin::reconstruct_dataset(*r->dataset, solver);
      r->report = ttkin::build_report(*r->dataset, r->rec, solver, thresholds_for(*r->dataset), nullptr);
      r->pass = r->report["pass"].get<bool>();
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

ttkin_status ttkin_roundtrip(const char* phantom, const ttkin_synthesis_overrides* overrides,
                             const ttkin_config* config, ttkin_result** out) {
  return guarded([&] {
    require(phantom, "phantom");
    require(out, "out");
    const ttkin::PhantomSpec p = phantom_with(phantom, overrides);
    const ttkin::SolverConfig solver = config ? config->solver : p.solver;
    ttkin::RoundTrip rt = ttkin::run_roundtrip(p, solver);
    auto* r = new ttkin_result{std::move(rt.dataset), std::move(rt.reconstruction), std::move(rt.report), rt.pass};
    *out = r;
  });
}

void ttkin_result_destroy(ttkin_result* result) { delete result; }

int ttkin_result_passed(const ttkin_result* result) { return result && result->pass ? 1 : 0; }

ttkin_status ttkin_result_stage_status(const ttkin_result* result) {
  if (!result) return record(TTKIN_INVALID_ARGUMENT, "result must not be null");
  return static_cast<ttkin_status>(result->rec.error);
}

ttkin_status ttkin_result_report(const ttkin_result* result, char** out) {
  return guarded([&] {
    require(result, "result");
    require(out, "out");
    *out = copy_string(result->report.dump(2));
  });
}

const char* ttkin_dump_fields(void) { return "gamma,rho,v,jacobian,metric,condition,truth-gamma,truth-rho"; }

ttkin_status ttkin_result_dump(const ttkin_result* result, const char* field, const char* path) {
  return guarded([&] {
    require(result, "result");
    require(field, "field");
    require(path, "path");
    if (!result->dataset) ttkin::fail(ttkin::ErrorCode::kUnavailable, "no dataset was produced");
    const ttkin::TravelTimeDataset& ds = *result->dataset;
    const ttkin::DGrid& grid = ds.grid;
    const int n = ds.n;
    const std::string name(field);
    auto axis_names = [&](const std::string& prefix) {
      std::vector<std::string> cols;
      for (int i = 1; i <= n; ++i) cols.push_back(prefix + std::to_string(i));
      return cols;
    };
    auto need = [&](bool have, const char* stage) {
      if (!have) ttkin::fail(ttkin::ErrorCode::kUnavailable, std::string("field '") + field + "' needs stage " + stage);
    };
    const auto& rec = result->rec;
    if (name == "gamma" || name == "v") {
      need(rec.result.has_value(), "reconstruction");
      ttkin::write_node_csv(path, grid, axis_names(name == "gamma" ? "x" : "v"),
                            name == "gamma" ? rec.result->gamma : rec.result->v);
    } else if (name == "rho" || name == "jacobian") {
      need(rec.result.has_value(), "reconstruction");
      ttkin::write_node_csv(path, grid, {name}, name == "rho" ? rec.result->rho : rec.result->jacobian);
    } else if (name == "metric") {
      need(rec.metric.has_value(), "metric-recovery");
      std::vector<std::string> cols;
      for (int i = 1; i <= n; ++i) {
        for (int j = i; j <= n; ++j) cols.push_back("g" + std::to_string(i) + std::to_string(j));
      }
      std::vector<double> values = per_node(grid, cols.size());
      const auto& f = rec.metric->field;
      for (std::size_t node = 0; node < grid.node_count(); ++node) {
        if (!f.usable(node)) continue;
        const ttkin::Mat g = f.covariant(node);
        std::size_t c = 0;
        for (int i = 0; i < n; ++i) {
          for (int j = i; j < n; ++j) values[node * cols.size() + c++] = g(i, j);
        }
      }
      ttkin::write_node_csv(path, grid, cols, values);
    } else if (name == "condition") {
      need(rec.metric.has_value(), "metric-recovery");
      ttkin::write_node_csv(path, grid, {"condition"}, rec.metric->condition);
    } else if (name == "truth-gamma" || name == "truth-rho") {
      if (!ds.truth) ttkin::fail(ttkin::ErrorCode::kUnavailable, "dataset has no ground truth");
      const std::size_t cols = name == "truth-gamma" ? static_cast<std::size_t>(n) : 1;
      std::vector<double> values = per_node(grid, cols);
      for (int b = 0; b < grid.boundary_count(); ++b) {
        for (int k = 0; k < grid.t_counts()[static_cast<std::size_t>(b)]; ++k) {
          const std::size_t node = grid.index(b, k);
          if (cols == 1) {
            values[node] = ds.truth_rho(b, k);
          } else {
            const ttkin::Vec x = ds.truth_gamma(b, k);
            for (int i = 0; i < n; ++i) values[node * cols + static_cast<std::size_t>(i)] = x[i];
          }
        }
      }
      ttkin::write_node_csv(path, grid, cols == 1 ? std::vector<std::string>{"rho"} : axis_names("x"), values);
    } else {
      ttkin::fail(ttkin::ErrorCode::kInvalidArgument,
                  "unknown field '" + name + "' (expected one of " + ttkin_dump_fields() + ")");
    }
  });
}

}  // extern "C"
