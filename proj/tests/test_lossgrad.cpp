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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "ordhash/error.hpp"
#include "ordhash/lossgrad.hpp"
#include "test_util.hpp"

using namespace ordhash;
using ordhash::testing::CodeOf;

namespace {

struct Sample {
  FeatureMap z;
  RealVec v;
  AttentionMap pi;
  SampleRef ref() const { return {&z, &v, &pi}; }
};

Sample RandomSample(std::mt19937_64& rng, std::size_t M, std::size_t X, std::size_t Y) {
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

RealMat Rows(std::initializer_list<RealVec> rows) {
  RealMat m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) m(r, k) = row[k];
    ++r;
  }
  return m;
}

RealMat RandomRepresentation(std::mt19937_64& rng, std::size_t R, std::size_t K) {
  RealMat h(R, K);
  for (std::size_t r = 0; r < R; ++r) {
    const RealVec row = SoftmaxStable(testing::RandomVec(rng, K, 3.0));
    for (std::size_t k = 0; k < K; ++k) h(r, k) = row[k];
  }
  return h;
}

}  // namespace

TEST_CASE("pair agreement examples") {
  CHECK(PairAgreement(Rows({{1, 0}}), Rows({{1, 0}}), 0) == 1.0);
  CHECK(PairAgreement(Rows({{1, 0}}), Rows({{0, 1}}), 0) == 0.0);
  CHECK(PairAgreement(Rows({{0.5, 0.5}}), Rows({{0.5, 0.5}}), 0) == 0.5);
  CHECK(CodeOf([] { PairAgreement(Rows({{1, 0}}), Rows({{1, 0, 0}}), 0); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("sequence agreement examples") {
  CHECK(SequenceAgreement(Rows({{1, 0}, {1, 0}}), Rows({{1, 0}, {0, 1}})) == 0.5);
  CHECK(SequenceAgreement(Rows({{0, 1}, {1, 0}}), Rows({{0, 1}, {1, 0}})) == 1.0);
  for (std::size_t R : {1, 3, 8}) {
    RealMat u(R, 4, 0.25);
    CHECK(SequenceAgreement(u, u) == 0.25);
  }
  CHECK(CodeOf([] { SequenceAgreement(Rows({{1, 0}}), Rows({{1, 0}, {1, 0}})); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("pair and batch loss examples") {
  CHECK(PairLoss(1.0, 1) == 0.0);
  CHECK(PairLoss(0.5, 1) == 0.125);
  CHECK(PairLoss(0.5, 0) == 0.125);
  const double all_perfect[] = {0.0, 0.0, 0.0};
  CHECK(BatchLoss(all_perfect) == 0.0);
  const double one[] = {0.125};
  CHECK(BatchLoss(one) == PairLoss(0.5, 1));
  const double two[] = {0.0, 0.125};
  CHECK(BatchLoss(two) == 0.0625);
  CHECK(CodeOf([] { BatchLoss(std::span<const double>{}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("agreement bounds and the row-sum identity on random representations") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t R = 1 + t % 6, K = 2 + t % 5;
    const RealMat hi = RandomRepresentation(rng, R, K);
    const RealMat hj = RandomRepresentation(rng, R, K);
    double total = 0.0;
    for (double x : hi.data()) total += x;
    CHECK(std::abs(total - static_cast<double>(R)) < 1e-9);
    for (std::size_t r = 0; r < R; ++r) {
      const double phi = PairAgreement(hi, hj, r);
      CHECK(phi >= 0.0);
      CHECK(phi <= 1.0);
      double sq = 0.0;
      for (std::size_t k = 0; k < K; ++k) sq += hi(r, k) * hi(r, k);
      CHECK(PairAgreement(hi, hi, r) == doctest::Approx(sq).epsilon(1e-14));
      CHECK(sq < 1.0);
    }
    const double eps = SequenceAgreement(hi, hj);
    CHECK(eps > 0.0);
    CHECK(eps < 1.0);
  }
}

TEST_CASE("central difference accuracy") {
  // Quadratic: exact up to rounding.
  auto quad = [](std::span<const double> x) { return 3 * x[0] * x[0] - 2 * x[0] * x[1] + x[1]; };
  const RealVec x{0.7, -1.3};
  const auto g = CentralDifference(quad, x, 1e-3);
  CHECK(g[0] == doctest::Approx(6 * 0.7 + 2 * 1.3).epsilon(1e-10));
  CHECK(g[1] == doctest::Approx(-2 * 0.7 + 1).epsilon(1e-10));

  // Second order: doubling the step roughly quadruples the error.
  auto smooth = [](std::span<const double> v) { return std::exp(v[0]) * std::sin(v[0]); };
  const RealVec at{0.4};
  const double exact = std::exp(0.4) * (std::sin(0.4) + std::cos(0.4));
  const double e1 = std::abs(CentralDifference(smooth, at, 1e-2)[0] - exact);
  const double e2 = std::abs(CentralDifference(smooth, at, 2e-2)[0] - exact);
  CHECK(e2 / e1 > 3.5);
  CHECK(e2 / e1 < 4.5);
  CHECK(CodeOf([&] { CentralDifference(smooth, at, 0.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("analytic gradients match the oracle at desk dims") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const HashHeadParams p = RandomParams(rng, 3, 2, 2);
    std::vector<Sample> samples;
    for (int i = 0; i < 8; ++i) samples.push_back(RandomSample(rng, 3, 2, 2));
    std::vector<PairExample> batch;
    for (int i = 0; i < 4; ++i) {
      batch.push_back({samples[2 * i].ref(), samples[2 * i + 1].ref(), i % 2});
    }
    const LossAndGradients a = AnalyticGradients(p, batch);
    CHECK(a.loss == doctest::Approx(BatchLossValue(p, batch)).epsilon(1e-14));
    const HeadGradients f = FiniteDifferenceGradients(p, batch, 1e-5);
    CHECK(MaxRelativeError(a.grads, f).Max() <= 1e-4);
  }
}

TEST_CASE("zero parameters on an identical similar pair") {
  std::mt19937_64 rng(3);
  const HashHeadParams p = ZeroHeadParams(3, 3, 2);
  const Sample s = RandomSample(rng, 3, 2, 2);
  const PairExample batch[] = {{s.ref(), s.ref(), 1}};
  const auto a = AnalyticGradients(p, batch);
  const auto f = FiniteDifferenceGradients(p, batch, 1e-5);
  CHECK(std::abs(a.grads.Norm() - f.Norm()) <= 1e-4 * std::max(1.0, f.Norm()));
  CHECK(MaxRelativeError(a.grads, f).Max() <= 1e-4);
}

TEST_CASE("global branch with unit local awareness") {
  // One location with unit attention gives l = 1, so d = g: softmax regression.
  std::mt19937_64 rng(4);
  HashHeadParams p = RandomParams(rng, 4, 3, 2);
  Sample a{testing::RandomFeatureMap(rng, 4, 1, 1), testing::RandomVec(rng, 4), {1, 1, {1.0}}};
  Sample b{testing::RandomFeatureMap(rng, 4, 1, 1), testing::RandomVec(rng, 4), {1, 1, {1.0}}};
  const PairExample batch[] = {{a.ref(), b.ref(), 1}, {b.ref(), a.ref(), 0}};
  const auto an = AnalyticGradients(p, batch);
  const auto fd = FiniteDifferenceGradients(p, batch, 1e-5);
  CHECK(MaxRelativeError(an.grads, fd).Max() <= 1e-4);
  for (const auto& g : an.grads.blocks) {
    for (double x : g.Ws.data()) CHECK(x == 0.0);
    for (double x : g.bs) CHECK(x == 0.0);
  }
}

TEST_CASE("agreement equal to the label gives a zero gradient") {
  // Saturated biases make every row one-hot in double precision, so eps = 1.
  std::mt19937_64 rng(5);
  HashHeadParams p = ZeroHeadParams(2, 2, 3);
  for (auto& b : p.blocks) b.bg = {900.0, 0.0};
  const Sample a{testing::RandomFeatureMap(rng, 2, 1, 1), RealVec(2, 0.0), {1, 1, {1.0}}};
  const PairExample batch[] = {{a.ref(), a.ref(), 1}};
  const auto g = AnalyticGradients(p, batch);
  CHECK(g.loss == 0.0);
  CHECK(g.grads.Norm() == 0.0);
}

TEST_CASE("the local bias gradient vanishes") {
  // Adding the same constant to every location score of pattern k leaves the
  // location softmax unchanged.
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const HashHeadParams p = RandomParams(rng, 3, 4, 2);
    const Sample a = RandomSample(rng, 3, 3, 2), b = RandomSample(rng, 3, 3, 2);
    const PairExample batch[] = {{a.ref(), b.ref(), t % 2}};
    for (const auto& g : AnalyticGradients(p, batch).grads.blocks) {
      for (double x : g.bs) CHECK(std::abs(x) < 1e-15);
    }
  }
}

TEST_CASE("a similar pair's gradient is a descent direction") {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    HashHeadParams p = RandomParams(rng, 3, 4, 3);
    const Sample a = RandomSample(rng, 3, 2, 2), b = RandomSample(rng, 3, 2, 2);
    const PairExample batch[] = {{a.ref(), b.ref(), 1}};
    const auto g = AnalyticGradients(p, batch);
    if (g.grads.Norm() == 0.0) continue;
    for (std::size_t r = 0; r < p.R(); ++r) {
      auto step = [](std::span<double> x, std::span<const double> d) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= 1e-3 * d[i];
      };
      step(p.blocks[r].Ws.data(), g.grads.blocks[r].Ws.data());
      step(p.blocks[r].bs, g.grads.blocks[r].bs);
      step(p.blocks[r].Wg.data(), g.grads.blocks[r].Wg.data());
      step(p.blocks[r].bg, g.grads.blocks[r].bg);
    }
    CHECK(BatchLossValue(p, batch) < g.loss);
    ++checked;
  }
  CHECK(checked > 90);
}

TEST_CASE("gradcheck sweep over K and R") {
  GradCheckConfig cfg;
  const auto start = std::chrono::steady_clock::now();
  const auto rows = RunGradCheck(cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(rows.size() == 9);
  for (const auto& row : rows) {
    INFO("K=" << row.K << " R=" << row.R);
    CHECK(row.errors.Max() <= 1e-4);
  }
  CHECK(secs < 10.0);
  const std::string csv = GradCheckCsv(rows);
  CHECK(csv.rfind("K,R,block,max_rel_err\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 9 * 4);
}

TEST_CASE("gradient entry points reject bad input") {
  const HashHeadParams p = ZeroHeadParams(2, 2, 1);
  CHECK(CodeOf([&] { AnalyticGradients(p, std::span<const PairExample>{}); }) ==
        ErrorCode::kInvalidArgument);
  const PairExample bad[] = {{SampleRef{}, SampleRef{}, 1}};
  CHECK(CodeOf([&] { AnalyticGradients(p, bad); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { FiniteDifferenceGradients(p, bad, -1.0); }) == ErrorCode::kInvalidArgument);
}
