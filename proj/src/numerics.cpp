// Copyright 2026 The ordhash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ordhash/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ordhash/error.hpp"

namespace ordhash {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kTruncated: return "truncated input";
    case ErrorCode::kChecksumMismatch: return "checksum mismatch";
    case ErrorCode::kBadFormat: return "bad format";
    case ErrorCode::kSampling: return "sampling error";
    case ErrorCode::kNumerical: return "numerical failure";
    case ErrorCode::kIo: return "I/O error";
  }
  return "unknown error";
}

RealVec Matvec(const RealMat& w, std::span<const double> x) {
  if (w.rows() != x.size()) {
    Fail(ErrorCode::kDimensionMismatch, "matvec: matrix has " + std::to_string(w.rows()) +
                                            " rows but vector has " + std::to_string(x.size()));
  }
  RealVec out(w.cols(), 0.0);
  for (std::size_t m = 0; m < w.rows(); ++m) {
    const double xm = x[m];
    for (std::size_t k = 0; k < w.cols(); ++k) out[k] += w(m, k) * xm;
  }
  return out;
}

RealVec SoftmaxStable(std::span<const double> a) {
  if (a.empty()) Fail(ErrorCode::kInvalidArgument, "softmax: empty input");
  for (double v : a) {
    if (std::isnan(v)) Fail(ErrorCode::kNonFinite, "softmax: NaN input");
  }
  const double mx = *std::max_element(a.begin(), a.end());
  RealVec out(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = std::exp(a[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

RealVec Hadamard(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    Fail(ErrorCode::kDimensionMismatch, "hadamard: lengths " + std::to_string(a.size()) +
                                            " and " + std::to_string(b.size()));
  }
  RealVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

std::size_t ArgmaxFirst(std::span<const double> a) {
  if (a.empty()) Fail(ErrorCode::kInvalidArgument, "argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] > a[best]) best = i;
  }
  return best;
}

bool AllFinite(std::span<const double> a) noexcept {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace ordhash
