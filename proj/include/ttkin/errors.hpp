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

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ttkin {

/// Failure categories raised by the library. The numeric values are part of
/// the C API (see ttkin.h) and must not be reordered.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDomain = 2,             // point outside the bounding box
  kPositivity = 3,         // non-positive conformal factor or fitted rho
  kStencil = 4,            // grid axis too short for order-2 stencils
  kDefiniteness = 5,       // metric not SPD
  kPrecondition = 6,       // e.g. initial geodesic speed
  kDegenerateBoundary = 7, // Jacobian below threshold at t = 0
  kUnreachable = 8,
  kInsufficientSources = 9,
  kGenericity = 10,        // eikonal system too ill-conditioned
  kFieldFailure = 11,      // too many failed nodes in a recovered field
  kParameter = 12,         // malformed CKF parameters
  kParametrization = 13,   // degenerate first fundamental form
  kGeometry = 14,          // missing tangent/normal data
  kDivergence = 15,        // CKE constraint residual above guard
  kInstability = 16,       // NaN or overflow while marching
  kDegenerateSpeed = 17,   // |v|^2 below threshold
  kParse = 18,
  kVersionMismatch = 19,
  kUnavailable = 20,       // e.g. ground truth missing
  kIo = 21,
  kVarianceMismatch = 22,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by field-level recovery when too many nodes fail. Carries the flat
/// node indices that failed so callers can render a node map.
class FieldFailure : public Error {
 public:
  FieldFailure(const std::string& message, std::vector<std::size_t> nodes)
      : Error(ErrorCode::kFieldFailure, message), nodes_(std::move(nodes)) {}

  const std::vector<std::size_t>& failed_nodes() const noexcept { return nodes_; }

 private:
  std::vector<std::size_t> nodes_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ttkin
