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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>

#include "ordhash/error.hpp"
#include "ordhash/hashhead.hpp"
#include "test_util.hpp"

using namespace ordhash;
using ordhash::testing::CodeOf;
using ordhash::testing::TempDir;

namespace {

struct Input {
  FeatureMap z;
  RealVec v;
  AttentionMap pi;
};

Input RandomInput(std::mt19937_64& rng, std::size_t M, std::size_t X, std::size_t Y) {
  return {testing::RandomFeatureMap(rng, M, X, Y), testing::RandomVec(rng, M),
          testing::RandomAttention(rng, X, Y)};
}

HashHeadParams RandomParams(std::mt19937_64& rng, std::size_t M, std::size_t K, std::size_t R) {
  HashHeadParams p = InitHeadParams(M, K, R, rng());
  for (auto& b : p.blocks) {
    b.bs = testing::RandomVec(rng, K, 0.5);
    b.bg = testing::RandomVec(rng, K, 0.5);
  }
  return p;
}

// Head whose confident scores equal the given biases: a single location with
// unit attention makes l = 1, and zero global weights make g = b_g.
HashHeadParams BiasOnly(const std::vector<RealVec>& d) {
  HashHeadParams p = ZeroHeadParams(1, d[0].size(), d.size());
  for (std::size_t r = 0; r < d.size(); ++r) p.blocks[r].bg = d[r];
  return p;
}

const FeatureMap kUnitZ(1, 1, 1, 0.0);
const RealVec kUnitV{0.0};
const AttentionMap kUnitPi{1, 1, {1.0}};

}  // namespace

TEST_CASE("spatial scores") {
  std::mt19937_64 rng(1);
  const FeatureMap z = testing::RandomFeatureMap(rng, 3, 2, 2);
  const RealMat c = SpatialScores(RealMat(3, 4), RealVec(4, 1.75), z);
  for (double x : c.data()) CHECK(x == 1.75);

  FeatureMap z1(1, 2, 2);
  z1.at(0, 0, 0) = 1; z1.at(0, 0, 1) = 2; z1.at(0, 1, 0) = 3; z1.at(0, 1, 1) = 4;
  RealMat w(1, 2, 1.0);
  const RealMat id = SpatialScores(w, RealVec(2, 0.0), z1);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t loc = 0; loc < 4; ++loc) CHECK(id(k, loc) == z1.at(0, loc));
  }

  const RealMat ws = testing::RandomMat(rng, 3, 2);
  const RealVec b0{0.25, -1.0};
  const RealMat base = SpatialScores(ws, b0, z);
  const RealMat shifted = SpatialScores(ws, RealVec{0.25 + 0.5, -1.0}, z);
  for (std::size_t loc = 0; loc < 4; ++loc) {
    CHECK(shifted(0, loc) == doctest::Approx(base(0, loc) + 0.5));
    CHECK(shifted(1, loc) == base(1, loc));
  }
  CHECK(CodeOf([&] { SpatialScores(RealMat(2, 2), RealVec(2), z); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("location softmax") {
  const RealMat flat = LocationSoftmax(RealMat(3, 6, 2.0));
  for (double x : flat.data()) CHECK(x == doctest::Approx(1.0 / 6));

  RealMat spike(1, 4, 0.0);
  spike(0, 2) = 1000.0;
  const RealMat xi = LocationSoftmax(spike);
  CHECK(xi(0, 2) == doctest::Approx(1.0));
  CHECK(AllFinite(xi.data()));

  std::mt19937_64 rng(2);
  const RealMat om = testing::RandomMat(rng, 2, 5);
  RealMat om2 = om;
  for (std::size_t loc = 0; loc < 5; ++loc) om2(1, loc) += 3.5;
  const RealMat a = LocationSoftmax(om), b = LocationSoftmax(om2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) < 1e-15);
}

TEST_CASE("local awareness") {
  std::mt19937_64 rng(3);
  const RealMat xi = LocationSoftmax(testing::RandomMat(rng, 3, 4));
  const RealVec c = LocalAwareness(AttentionMap{2, 2, std::vector<double>(4, 0.7)}, xi);
  for (double x : c) CHECK(x == doctest::Approx(0.7).epsilon(1e-14));
  for (double x : LocalAwareness(AttentionMap{2, 2, std::vector<double>(4, 0.0)}, xi)) CHECK(x == 0.0);
  const RealMat xi1 = LocationSoftmax(testing::RandomMat(rng, 3, 1));
  for (double x : LocalAwareness(AttentionMap{1, 1, {2.5}}, xi1)) CHECK(x == 2.5);
  CHECK(CodeOf([&] { LocalAwareness(AttentionMap{3, 1, {1, 1, 1}}, xi); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("global awareness and fuse") {
  std::mt19937_64 rng(4);
  const RealVec bg{0.5, -2, 3};
  CHECK(GlobalAwareness(RealMat(4, 3), bg, testing::RandomVec(rng, 4)) == bg);
  CHECK(GlobalAwareness(testing::RandomMat(rng, 4, 3), bg, RealVec(4, 0.0)) == bg);
  CHECK(GlobalAwareness(RealMat(2, 3, 1.0), RealVec(3, 0.0), RealVec{2, 3}) == RealVec{5, 5, 5});
  CHECK(CodeOf([&] { GlobalAwareness(RealMat(2, 3), bg, RealVec{1, 2, 3}); }) ==
        ErrorCode::kDimensionMismatch);

  CHECK(Fuse(RealVec{0.5, 1}, RealVec{2, 3}) == RealVec{1, 3});
  CHECK(Fuse(RealVec{0.2, 0.4}, RealVec{1, 1}) == RealVec{0.2, 0.4});
  CHECK(Fuse(RealVec{0, 0}, RealVec{9, -9}) == RealVec{0, 0});
  CHECK(CodeOf([] { Fuse(RealVec{1}, RealVec{1, 1}); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("ordinal representation examples") {
  const HeadForward flat = OrdinalRepresentation(BiasOnly({{2, 2, 2, 2}, {-1, -1, -1, -1}}),
                                                 kUnitZ, kUnitV, kUnitPi);
  const RealMat h = flat.Representation();
  for (double x : h.data()) CHECK(x == doctest::Approx(0.25));

  const HeadForward two = OrdinalRepresentation(BiasOnly({{0.0, std::log(3.0)}}), kUnitZ, kUnitV,
                                                kUnitPi);
  CHECK(std::abs(two.blocks[0].h[0] - 0.25) < 1e-15);
  CHECK(std::abs(two.blocks[0].h[1] - 0.75) < 1e-15);
}

TEST_CASE("forward normalization invariants on random inputs") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t M = 1 + t % 4, K = 2 + t % 5, R = 1 + t % 3, X = 1 + t % 3, Y = 1 + t % 2;
    const HashHeadParams p = RandomParams(rng, M, K, R);
    const Input in = RandomInput(rng, M, X, Y);
    const HeadForward f = OrdinalRepresentation(p, in.z, in.v, in.pi);
    REQUIRE(f.blocks.size() == R);
    for (const auto& b : f.blocks) {
      for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t loc = 0; loc < X * Y; ++loc) s += b.xi(k, loc);
        CHECK(std::abs(s - 1.0) < 1e-9);
      }
      double hs = 0.0;
      for (double x : b.h) {
        CHECK(x > 0.0);
        CHECK(x < 1.0);
        hs += x;
      }
      CHECK(std::abs(hs - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("encode examples") {
  CHECK(Encode(BiasOnly({{0.1, 0.9}, {0.7, 0.3}}), kUnitZ, kUnitV, kUnitPi).symbols ==
        std::vector<std::uint16_t>{1, 0});
  CHECK(Encode(BiasOnly({{0.5, 0.5}}), kUnitZ, kUnitV, kUnitPi).symbols ==
        std::vector<std::uint16_t>{0});
}

TEST_CASE("encode agrees with the representation argmax and ignores positive rescaling") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t M = 2 + t % 3, K = 2 + t % 7, R = 1 + t % 4;
    const HashHeadParams p = RandomParams(rng, M, K, R);
    const Input in = RandomInput(rng, M, 2, 3);
    const OrdinalCode code = Encode(p, in.z, in.v, in.pi);
    const RealMat h = OrdinalRepresentation(p, in.z, in.v, in.pi).Representation();
    REQUIRE(code.size() == R);
    for (std::size_t r = 0; r < R; ++r) {
      std::vector<double> row(h.data().begin() + r * K, h.data().begin() + (r + 1) * K);
      CHECK(code.symbols[r] == ArgmaxFirst(row));
      CHECK(code.symbols[r] < K);
    }

    // Scaling W_g and b_g by c > 0 scales d by c.
    HashHeadParams scaled = p;
    const double c = 0.1 + std::uniform_real_distribution<double>(0, 10)(rng);
    for (auto& b : scaled.blocks) {
      for (double& x : b.Wg.data()) x *= c;
      for (double& x : b.bg) x *= c;
    }
    CHECK(Encode(scaled, in.z, in.v, in.pi) == code);
  }
}

TEST_CASE("constant attention makes the code depend only on the global branch") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const HashHeadParams p = RandomParams(rng, 3, 4, 3);
    Input in = RandomInput(rng, 3, 3, 3);
    in.pi.pi.assign(9, 0.8);
    const HeadForward f = OrdinalRepresentation(p, in.z, in.v, in.pi);
    for (const auto& b : f.blocks) {
      for (double l : b.l) CHECK(l == doctest::Approx(0.8).epsilon(1e-13));
    }
    HashHeadParams other = p;
    for (auto& b : other.blocks) {
      b.Ws = testing::RandomMat(rng, 3, 4, 5.0);
      b.bs = testing::RandomVec(rng, 4, 5.0);
    }
    CHECK(Encode(other, in.z, in.v, in.pi) == Encode(p, in.z, in.v, in.pi));
  }
}

TEST_CASE("initialization") {
  const HashHeadParams p = InitHeadParams(16, 4, 8, 3);
  CHECK(p.R() == 8);
  CHECK(p.ParameterCount() == 8 * 2 * 4 * 17);
  const double half = std::sqrt(6.0 / 20.0);
  for (const auto& b : p.blocks) {
    for (double x : b.Ws.data()) CHECK(std::abs(x) <= half);
    for (double x : b.Wg.data()) CHECK(std::abs(x) <= half);
    CHECK(b.bs == RealVec(4, 0.0));
    CHECK(b.bg == RealVec(4, 0.0));
  }
  CHECK(InitHeadParams(16, 4, 8, 3) == p);
  CHECK(InitHeadParams(16, 4, 8, 4) != p);
  CHECK(CodeOf([] { InitHeadParams(3, 1, 2, 0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("shape errors propagate from the forward pass") {
  std::mt19937_64 rng(8);
  const HashHeadParams p = RandomParams(rng, 3, 4, 2);
  const Input in = RandomInput(rng, 3, 2, 2);
  CHECK(CodeOf([&] { Encode(p, testing::RandomFeatureMap(rng, 2, 2, 2), in.v, in.pi); }) ==
        ErrorCode::kDimensionMismatch);
  CHECK(CodeOf([&] { Encode(p, in.z, in.v, AttentionMap{1, 4, {1, 1, 1, 1}}); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("head checkpoint round-trip and damage") {
  TempDir tmp("head");
  std::mt19937_64 rng(9);
  const HashHeadParams p = RandomParams(rng, 5, 4, 3);
  SaveHeadParams(p, tmp / "h.dohh");
  CHECK(LoadHeadParams(tmp / "h.dohh") == p);
  const auto size = std::filesystem::file_size(tmp / "h.dohh");
  CHECK(size == 5 + 12 + 8 * p.ParameterCount());

  std::filesystem::resize_file(tmp / "h.dohh", size - 11);
  try {
    LoadHeadParams(tmp / "h.dohh");
    FAIL("expected truncation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTruncated);
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }

  SaveHeadParams(p, tmp / "h.dohh");
  {
    std::fstream f(tmp / "h.dohh", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.put(0x02);
  }
  CHECK(CodeOf([&] { LoadHeadParams(tmp / "h.dohh"); }) == ErrorCode::kBadFormat);
}
