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

#ifndef ORDHASH_LOSSGRAD_HPP_
#define ORDHASH_LOSSGRAD_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ordhash/attention.hpp"
#include "ordhash/hashhead.hpp"
#include "ordhash/numerics.hpp"

namespace ordhash {

// phi_r = h^r(i) . h^r(j); h_i and h_j are R x K representations.
double PairAgreement(const RealMat& h_i, const RealMat& h_j, std::size_t r);

// epsilon = mean over r of phi_r.
double SequenceAgreement(const RealMat& h_i, const RealMat& h_j);

double PairLoss(double agreement, int similar) noexcept;

// Mean of the per-pair losses; rejects an empty batch.
double BatchLoss(std::span<const double> pair_losses);

// Non-owning view of one record's inputs to the head.
struct SampleRef {
  const FeatureMap* z = nullptr;
  const RealVec* v = nullptr;
  const AttentionMap* pi = nullptr;
};

struct PairExample {
  SampleRef a;
  SampleRef b;
  int s = 0;
};

// Gradients mirror the parameter layout block for block.
struct HeadGradients {
  std::vector<HeadBlock> blocks;

  double Norm() const;
};

HeadGradients ZeroGradients(const HashHeadParams& params);

// Batch loss from a fresh forward pass.
double BatchLossValue(const HashHeadParams& params, std::span<const PairExample> batch);

struct LossAndGradients {
  double loss = 0.0;
  HeadGradients grads;
};

// Exact gradient of the mean pair loss with respect to every head parameter.
// Pair contributions are accumulated in batch order.
LossAndGradients AnalyticGradients(const HashHeadParams& params,
                                   std::span<const PairExample> batch);

// Central differences of an arbitrary scalar function, one coordinate at a time.
std::vector<double> CentralDifference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> x, double step);

// Central-difference gradient of the batch loss; for tiny dims only. The loss
// is re-evaluated by an independent extended-precision reference so that
// rounding noise stays far below the comparison tolerance even for
// coordinates whose true gradient is zero (the spatial biases, to which the
// location softmax is invariant).
HeadGradients FiniteDifferenceGradients(const HashHeadParams& params,
                                        std::span<const PairExample> batch, double step);

// Max over coordinates of |a - f| / max(|a|, |f|, 1e-8), per parameter group.
struct BlockErrors {
  double Ws = 0.0;
  double bs = 0.0;
  double Wg = 0.0;
  double bg = 0.0;

  double Max() const noexcept;
};

BlockErrors MaxRelativeError(const HeadGradients& analytic, const HeadGradients& numeric);

struct GradCheckConfig {
  std::size_t M = 3;
  std::size_t X = 2;
  std::size_t Y = 2;
  std::size_t C = 2;
  std::size_t k_min = 2;
  std::size_t k_max = 4;
  std::size_t r_min = 1;
  std::size_t r_max = 3;
  std::size_t draws = 20;
  std::size_t pairs = 4;
  double step = 1e-5;
  std::uint64_t seed = 7;
};

struct GradCheckRow {
  std::size_t K = 0;
  std::size_t R = 0;
  BlockErrors errors;
};

// For every (K, R) in range, draws random features, a random attention
// model, random head parameters and a random labelled batch, and compares
// AnalyticGradients with FiniteDifferenceGradients. One row per (K, R),
// holding the worst error over the draws.
std::vector<GradCheckRow> RunGradCheck(const GradCheckConfig& config);

// "K,R,block,max_rel_err" rows.
std::string GradCheckCsv(const std::vector<GradCheckRow>& rows);

}  // namespace ordhash

#endif  // ORDHASH_LOSSGRAD_HPP_
