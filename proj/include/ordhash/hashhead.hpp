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

#ifndef ORDHASH_HASHHEAD_HPP_
#define ORDHASH_HASHHEAD_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ordhash/attention.hpp"
#include "ordhash/numerics.hpp"

namespace ordhash {

// Parameters for one code position: the spatial branch (Ws, bs) scores each
// location against K latent patterns, the global branch (Wg, bg) scores the
// global vector against K latent patterns.
struct HeadBlock {
  RealMat Ws;  // M x K
  RealVec bs;  // K
  RealMat Wg;  // M x K
  RealVec bg;  // K

  bool operator==(const HeadBlock&) const = default;
};

struct HashHeadParams {
  std::size_t M = 0;
  std::size_t K = 0;
  std::vector<HeadBlock> blocks;  // one per code position, R in total

  std::size_t R() const noexcept { return blocks.size(); }
  std::size_t ParameterCount() const noexcept { return blocks.size() * 2 * K * (M + 1); }

  bool operator==(const HashHeadParams&) const = default;
};

// Zero-filled parameters of the given shape.
HashHeadParams ZeroHeadParams(std::size_t M, std::size_t K, std::size_t R);

// Xavier-uniform weights (half-width sqrt(6/(M+K))) and zero biases.
HashHeadParams InitHeadParams(std::size_t M, std::size_t K, std::size_t R, std::uint64_t seed);

// K-ary code, symbols 0-based.
struct OrdinalCode {
  std::vector<std::uint16_t> symbols;

  std::size_t size() const noexcept { return symbols.size(); }
  bool operator==(const OrdinalCode&) const = default;
};

// Everything the forward pass of one code position produces. omega and xi
// are K x (X*Y), with location index y*X + x.
struct BlockForward {
  RealMat omega;
  RealMat xi;
  RealVec l;
  RealVec g;
  RealVec d;
  RealVec h;
};

struct HeadForward {
  std::vector<BlockForward> blocks;

  // R x K matrix of the per-position softmax rows.
  RealMat Representation() const;
};

// omega^k_loc = w_sk . z_loc + b_sk
RealMat SpatialScores(const RealMat& Ws, const RealVec& bs, const FeatureMap& z);

// Softmax of each row of omega over the locations.
RealMat LocationSoftmax(const RealMat& omega);

// l_k = sum_loc pi_loc xi^k_loc
RealVec LocalAwareness(const AttentionMap& pi, const RealMat& xi);

// g_k = w_gk . v + b_gk
RealVec GlobalAwareness(const RealMat& Wg, const RealVec& bg, const RealVec& v);

RealVec Fuse(const RealVec& l, const RealVec& g);

BlockForward ForwardBlock(const HeadBlock& block, const FeatureMap& z, const RealVec& v,
                          const AttentionMap& pi);

HeadForward OrdinalRepresentation(const HashHeadParams& params, const FeatureMap& z,
                                  const RealVec& v, const AttentionMap& pi);

// symbols[r] = first argmax of the fused score d^r.
OrdinalCode Encode(const HashHeadParams& params, const FeatureMap& z, const RealVec& v,
                   const AttentionMap& pi);

// "DOHH" checkpoint: version, M, K, R as u32, then per block Ws, bs, Wg, bg
// as f64 (matrices row-major).
void SaveHeadParams(const HashHeadParams& params, const std::filesystem::path& path);
HashHeadParams LoadHeadParams(const std::filesystem::path& path);

}  // namespace ordhash

#endif  // ORDHASH_HASHHEAD_HPP_
