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

// ttkin command-line driver. Exit codes: 0 pass, 1 stage or check failure,
// 2 usage, I/O or schema error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "ttkin/ttkin.h"

namespace {

constexpr int kPass = 0;
constexpr int kStageFailure = 1;
constexpr int kInputError = 2;

struct Deleter {
  void operator()(ttkin_config* p) const { ttkin_config_destroy(p); }
  void operator()(ttkin_dataset* p) const { ttkin_dataset_destroy(p); }
  void operator()(ttkin_result* p) const { ttkin_result_destroy(p); }
  void operator()(char* p) const { ttkin_string_free(p); }
};
template <typename T>
using Handle = std::unique_ptr<T, Deleter>;

struct CliError {
  int code;
  std::string message;
};

void check(ttkin_status status, const std::string& context) {
  if (status == TTKIN_OK) return;
  const bool input = status == TTKIN_IO || status == TTKIN_PARSE || status == TTKIN_VERSION_MISMATCH ||
                     status == TTKIN_INVALID_ARGUMENT;
  throw CliError{input ? kInputError : kStageFailure,
                 context + ": " + ttkin_status_name(status) + ": " + ttkin_last_error()};
}

std::string take(char* s) {
  Handle<char> owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

struct SolverFlags {
  std::string mode;
  double smooth_cutoff = -1.0;
  std::string config_path;
  unsigned threads = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "Metric recovery mode")->check(CLI::IsMember({"full", "reduced"}));
    cmd->add_option("--smooth-cutoff", smooth_cutoff,
                    "Per-layer smoothing width in boundary spacings (0 disables the filter)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--config", config_path, "JSON file with solver settings")->check(CLI::ExistingFile);
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  Handle<ttkin_config> build(const char* phantom) const {
    ttkin_config* raw = nullptr;
    check(ttkin_config_create(phantom, &raw), "config");
    Handle<ttkin_config> config(raw);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw CliError{kInputError, "cannot read " + config_path};
      std::stringstream ss;
      ss << in.rdbuf();
      check(ttkin_config_update(config.get(), ss.str().c_str()), config_path);
    }
    if (!mode.empty()) check(ttkin_config_update(config.get(), ("{\"mode\":\"" + mode + "\"}").c_str()), "--mode");
    if (smooth_cutoff >= 0.0) {
      const std::string j = "{\"smooth_width\":" + std::to_string(smooth_cutoff) + "}";
      check(ttkin_config_update(config.get(), j.c_str()), "--smooth-cutoff");
    }
    check(ttkin_config_set_threads(config.get(), threads), "--threads");
    return config;
  }
};

struct SynthesisFlags {
  ttkin_synthesis_overrides o{0, 0.0, 0.0, 0.0};

  void add(CLI::App* cmd) {
    cmd->set_help_flag("--help", "Print this help message and exit");
    cmd->add_option("--sources", o.sources_per_node, "Sources per boundary node")->check(CLI::PositiveNumber);
    cmd->add_option("--source-radius", o.source_radius, "Source radius (parameter distance)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--h", o.fmm_h, "Eikonal lattice spacing")->check(CLI::PositiveNumber);
    cmd->add_option("--dt", o.dt, "Step in t")->check(CLI::PositiveNumber);
  }
};

struct OutputFlags {
  std::string report_path;
  std::vector<std::pair<std::string, std::string>> dumps;

  void add(CLI::App* cmd) {
    cmd->add_option("--out-report", report_path, "Report path (stdout if omitted)");
    cmd->add_option("--dump", dumps, std::string("Write a per-node CSV: --dump <field> <path>; fields: ") +
                                         ttkin_dump_fields());
  }

  int emit(ttkin_result* result) const {
    char* raw = nullptr;
    check(ttkin_result_report(result, &raw), "report");
    const std::string report = take(raw);
    if (report_path.empty()) {
      std::cout << report << '\n';
    } else {
      std::ofstream out(report_path);
      if (!(out << report << '\n')) throw CliError{kInputError, "cannot write " + report_path};
    }
    for (const auto& [field, path] : dumps) check(ttkin_result_dump(result, field.c_str(), path.c_str()), "--dump " + field);
    const ttkin_status stage = ttkin_result_stage_status(result);
    if (stage != TTKIN_OK) std::cerr << "ttkin: stage failure: " << ttkin_status_name(stage) << '\n';
    return ttkin_result_passed(result) ? kPass : kStageFailure;
  }
};

Handle<ttkin_dataset> read_dataset(const std::string& path) {
  ttkin_dataset* raw = nullptr;
  const ttkin_status s = ttkin_dataset_read(path.c_str(), &raw);
  if (s != TTKIN_OK) throw CliError{kInputError, path + ": " + ttkin_status_name(s) + ": " + ttkin_last_error()};
  return Handle<ttkin_dataset>(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Travel-time tomography for conformal metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ttkin_version());

  std::vector<std::string> phantoms;
  for (int i = 0; i < ttkin_phantom_count(); ++i) phantoms.emplace_back(ttkin_phantom_name(i));

  auto* list = app.add_subcommand("phantoms", "List built-in phantoms");

  std::string phantom;
  std::string out_path;
  std::string in_path;
  SynthesisFlags synth;
  SolverFlags solver;
  OutputFlags output;
  unsigned synth_threads = 0;

  auto* syn = app.add_subcommand("synthesize", "Synthesize a travel-time dataset");
  syn->add_option("--phantom", phantom, "Phantom id")->required()->check(CLI::IsMember(phantoms));
  syn->add_option("--out", out_path, "Dataset path (TTD-JSON)")->required();
  syn->add_option("--threads", synth_threads, "Worker threads (0 = all cores)");
  synth.add(syn);

  auto* rec = app.add_subcommand("reconstruct", "Reconstruct gamma and rho from a dataset");
  rec->add_option("--in", in_path, "Dataset path")->required();
  solver.add(rec);
  output.add(rec);

  auto* rt = app.add_subcommand("roundtrip", "Synthesize, reconstruct and score a phantom");
  rt->add_option("--phantom", phantom, "Phantom id")->required()->check(CLI::IsMember(phantoms));
  rt->add_option("--save-dataset", out_path, "Also write the synthesized dataset");
  synth.add(rt);
  solver.add(rt);
  output.add(rt);

  auto* val = app.add_subcommand("validate", "Check a dataset's schema and invariants");
  val->add_option("--in", in_path, "Dataset path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInputError;
  }

  try {
    if (list->parsed()) {
      for (const auto& p : phantoms) std::cout << p << '\n';
      return kPass;
    }
    if (syn->parsed()) {
      ttkin_dataset* raw = nullptr;
      check(ttkin_synthesize(phantom.c_str(), &synth.o, synth_threads, &raw), "synthesize");
      Handle<ttkin_dataset> ds(raw);
      check(ttkin_dataset_write(ds.get(), out_path.c_str()), out_path);
      int n = 0, b = 0;
      std::size_t nodes = 0;
      check(ttkin_dataset_info(ds.get(), &n, &b, &nodes), "info");
      std::cerr << "ttkin: wrote " << out_path << " (n = " << n << ", " << b << " boundary nodes, " << nodes
                << " nodes)\n";
      return kPass;
    }
    if (rec->parsed()) {
      Handle<ttkin_dataset> ds = read_dataset(in_path);
      Handle<ttkin_config> config = solver.build(ttkin_dataset_phantom(ds.get()));
      ttkin_result* raw = nullptr;
      check(ttkin_reconstruct(ds.get(), config.get(), &raw), "reconstruct");
      Handle<ttkin_result> result(raw);
      return output.emit(result.get());
    }
    if (rt->parsed()) {
      Handle<ttkin_config> config = solver.build(phantom.c_str());
      if (!out_path.empty()) {
        ttkin_dataset* raw = nullptr;
        check(ttkin_synthesize(phantom.c_str(), &synth.o, solver.threads, &raw), "synthesize");
        Handle<ttkin_dataset> ds(raw);
        check(ttkin_dataset_write(ds.get(), out_path.c_str()), out_path);
      }
      ttkin_result* raw = nullptr;
      check(ttkin_roundtrip(phantom.c_str(), &synth.o, config.get(), &raw), "roundtrip");
      Handle<ttkin_result> result(raw);
      return output.emit(result.get());
    }
    if (val->parsed()) {
      Handle<ttkin_dataset> ds = read_dataset(in_path);
      int ok = 0;
      char* raw = nullptr;
      check(ttkin_validate(ds.get(), &ok, &raw), "validate");
      std::cout << take(raw) << '\n';
      return ok ? kPass : kStageFailure;
    }
  } catch (const CliError& e) {
    std::cerr << "ttkin: " << e.message << '\n';
    return e.code;
  }
  return kInputError;
}
