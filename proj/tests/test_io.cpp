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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "test_support.hpp"
#include "ttkin/io.hpp"
#include "ttkin/pipeline.hpp"

using namespace ttkin;
using namespace ttkin::test;
using nlohmann::json;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ttkin_test_io_" + name)).string();
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

ErrorCode parse_code(const json& j, std::string* message = nullptr) {
  try {
    dataset_from_json(j);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  return ErrorCode::kOk;
}

}  // namespace

TEST_CASE("write and read round trip") {
  PhantomSpec ph = make_phantom("gaussian-bump");
  ph.grid = DGrid::uniform({9}, {1.0 / 8}, 0.3 / 8, 0.3);
  ph.boundary = BoundaryGeometry::flat(2, {9}, {0.0}, {1.0});
  ph.synthesis.fmm_h = 1.0 / 32;
  ph.synthesis.source_radius = 1.0;
  ph.synthesis.sources_per_node = 5;
  TravelTimeDataset ds = synthesize_phantom(ph);
  ds.lambda_at(2, 1, 0) = kNaN;
  const std::string path = temp_path("roundtrip.json");
  dataset_write(ds, path);
  const TravelTimeDataset back = dataset_read(path);
  std::filesystem::remove(path);

  CHECK(back.n == ds.n);
  CHECK(back.grid.t_counts() == ds.grid.t_counts());
  CHECK(back.grid.dt() == ds.grid.dt());
  CHECK(back.grid.dy() == ds.grid.dy());
  CHECK(back.grid.y0() == ds.grid.y0());
  CHECK(back.sources == ds.sources);
  REQUIRE(back.lambda.size() == ds.lambda.size());
  for (std::size_t i = 0; i < ds.lambda.size(); ++i) CHECK(same(back.lambda[i], ds.lambda[i]));
  for (int b = 0; b < ds.boundary.node_count(); ++b) {
    CHECK(back.boundary.points[static_cast<std::size_t>(b)] == ds.boundary.points[static_cast<std::size_t>(b)]);
    CHECK(back.boundary.normals[static_cast<std::size_t>(b)] == ds.boundary.normals[static_cast<std::size_t>(b)]);
    CHECK(back.boundary.tangents[static_cast<std::size_t>(b)] == ds.boundary.tangents[static_cast<std::size_t>(b)]);
  }
  REQUIRE(back.truth.has_value());
  CHECK(back.truth->gamma == ds.truth->gamma);
  CHECK(back.truth->rho == ds.truth->rho);
  CHECK(back.meta == ds.meta);
  CHECK(dataset_to_json(back) == dataset_to_json(ds));
}

TEST_CASE("minimal fixture parses to the expected values") {
  const TravelTimeDataset ds = dataset_read(std::string(TTKIN_TEST_DATA_DIR) + "/minimal_2node.json");
  CHECK(ds.n == 2);
  CHECK(ds.grid.boundary_count() == 2);
  CHECK(ds.grid.t_counts() == std::vector<int>{2, 1});
  CHECK(ds.grid.dt() == 0.5);
  CHECK(ds.boundary.points[1] == v2(1, 0));
  CHECK(ds.boundary.normals[0] == v2(0, 1));
  CHECK(ds.boundary.tangents[1][0] == v2(1, 0));
  CHECK(ds.sources == std::vector<std::vector<int>>{{0, 1}, {1}});
  CHECK(ds.lambda_at(0, 0, 0) == 0.0);
  CHECK(ds.lambda_at(0, 0, 1) == 1.0);
  CHECK(ds.lambda_at(0, 1, 0) == 0.5);
  CHECK(std::isnan(ds.lambda_at(0, 1, 1)));
  CHECK(ds.lambda_at(1, 0, 0) == 0.0);
  CHECK(ds.source_slot(0, 1) == 1);
  CHECK(ds.source_slot(1, 0) == -1);
  CHECK_FALSE(ds.truth.has_value());
  CHECK(ds.meta["note"] == "hand-built fixture");
}

TEST_CASE("schema violations name the offending path") {
  std::ifstream in(std::string(TTKIN_TEST_DATA_DIR) + "/minimal_2node.json");
  const json good = json::parse(in);

  json j = good;
  j["version"] = 2;
  CHECK(parse_code(j) == ErrorCode::kVersionMismatch);

  std::string msg;
  j = good;
  j["grid"].erase("dt");
  CHECK(parse_code(j, &msg) == ErrorCode::kParse);
  CHECK(msg.find("$.grid") != std::string::npos);

  j = good;
  j["grid"]["dt"] = "half";
  CHECK(parse_code(j, &msg) == ErrorCode::kParse);
  CHECK(msg.find("$.grid.dt") != std::string::npos);

  j = good;
  j["lambda"]["values"].erase(4);
  CHECK(parse_code(j, &msg) == ErrorCode::kParse);
  CHECK(msg.find("$.lambda.values") != std::string::npos);

  j = good;
  j["sources"]["per_node"][1][0] = 7;
  CHECK(parse_code(j, &msg) == ErrorCode::kParse);
  CHECK(msg.find("$.sources.per_node[1][0]") != std::string::npos);

  j = good;
  j["format"] = "XYZ";
  CHECK(parse_code(j) == ErrorCode::kParse);

  CHECK(parse_code(json::array()) == ErrorCode::kParse);
}

TEST_CASE("non-finite numbers are rejected") {
  const std::string path = temp_path("nonfinite.json");
  std::ifstream in(std::string(TTKIN_TEST_DATA_DIR) + "/minimal_2node.json");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  text.replace(text.find("0.5, null"), 4, "1e999");
  std::ofstream(path) << text;
  try {
    dataset_read(path);
    FAIL("overflowing number accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
  }
  std::filesystem::remove(path);

  TravelTimeDataset ds = dataset_read(std::string(TTKIN_TEST_DATA_DIR) + "/minimal_2node.json");
  ds.boundary.points[0][0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(dataset_to_json(ds), Error);
}

TEST_CASE("I/O errors") {
  try {
    dataset_read("/nonexistent/dir/x.json");
    FAIL("missing file accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
  const std::string path = temp_path("garbage.json");
  std::ofstream(path) << "{not json";
  try {
    dataset_read(path);
    FAIL("garbage accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
  }
  std::filesystem::remove(path);
}

TEST_CASE("node CSV") {
  const DGrid g({2}, {1.0}, 0.5, {2, 1});
  const std::string path = temp_path("field.csv");
  write_node_csv(path, g, {"a", "b"}, {1.0, 2.0, 3.0, kNaN, 5.0, 6.0, kNaN, kNaN});
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::filesystem::remove(path);
  CHECK(ss.str() == "y1,t,a,b\n0,0,1,2\n0,0.5,3,nan\n1,0,5,6\n");
  CHECK_THROWS_AS(write_node_csv(path, g, {"a"}, {1.0}), Error);
}
