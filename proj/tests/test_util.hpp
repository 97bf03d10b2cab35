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

// Helpers shared by the unit tests.

#ifndef ORDHASH_TESTS_TEST_UTIL_HPP_
#define ORDHASH_TESTS_TEST_UTIL_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "doctest.h"
#include "ordhash/attention.hpp"
#include "ordhash/error.hpp"
#include "ordhash/numerics.hpp"

namespace ordhash::testing {

// Runs fn and returns the code of the ordhash::Error it throws.
template <typename Fn>
ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ordhash::Error");
  return ErrorCode::kIo;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ordhash_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline RealVec RandomVec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  RealVec v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

inline RealMat RandomMat(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                         double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  RealMat m(rows, cols);
  for (double& x : m.data()) x = nd(rng);
  return m;
}

inline FeatureMap RandomFeatureMap(std::mt19937_64& rng, std::size_t M, std::size_t X,
                                   std::size_t Y, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  FeatureMap z(M, X, Y);
  for (double& x : z.data()) x = nd(rng);
  return z;
}

// Nonnegative grid, as produced by the attention model.
inline AttentionMap RandomAttention(std::mt19937_64& rng, std::size_t X, std::size_t Y) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  AttentionMap a{X, Y, std::vector<double>(X * Y)};
  for (double& x : a.pi) x = u(rng);
  return a;
}

}  // namespace ordhash::testing

#endif  // ORDHASH_TESTS_TEST_UTIL_HPP_
