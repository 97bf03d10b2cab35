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

#include "ordhash/hashhead.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ordhash/detail/binio.hpp"
#include "ordhash/error.hpp"

namespace ordhash {
namespace {

constexpr char kMagic[] = "DOHH";
constexpr std::uint8_t kVersion = 0x01;

void CheckBlock(const HeadBlock& b, const FeatureMap& z, const RealVec& v, const AttentionMap& pi) {
  const std::size_t M = b.Ws.rows();
  const std::size_t K = b.Ws.cols();
  if (b.bs.size() != K || b.Wg.rows() != M || b.Wg.cols() != K || b.bg.size() != K) {
    Fail(ErrorCode::kDimensionMismatch, "head block has inconsistent shapes");
  }
  if (z.channels() != M || v.size() != M) {
    Fail(ErrorCode::kDimensionMismatch, "head expects M=" + std::to_string(M) +
                                            " but features have M=" + std::to_string(z.channels()) +
                                            ", |v|=" + std::to_string(v.size()));
  }
  if (pi.width != z.width() || pi.height != z.height() || pi.pi.size() != z.locations()) {
    Fail(ErrorCode::kDimensionMismatch, "attention map grid does not match feature map grid");
  }
}

}  // namespace

RealMat HeadForward::Representation() const {
  const std::size_t K = blocks.empty() ? 0 : blocks.front().h.size();
  RealMat h(blocks.size(), K);
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    for (std::size_t k = 0; k < K; ++k) h(r, k) = blocks[r].h[k];
  }
  return h;
}

HashHeadParams ZeroHeadParams(std::size_t M, std::size_t K, std::size_t R) {
  if (M == 0 || K < 2 || R == 0) {
    Fail(ErrorCode::kInvalidArgument, "head needs M >= 1, K >= 2, R >= 1");
  }
  HashHeadParams p;
  p.M = M;
  p.K = K;
  p.blocks.assign(R, HeadBlock{RealMat(M, K), RealVec(K, 0.0), RealMat(M, K), RealVec(K, 0.0)});
  return p;
}

HashHeadParams InitHeadParams(std::size_t M, std::size_t K, std::size_t R, std::uint64_t seed) {
  HashHeadParams p = ZeroHeadParams(M, K, R);
  std::mt19937_64 rng(seed);
  const double half = std::sqrt(6.0 / static_cast<double>(M + K));
  std::uniform_real_distribution<double> u(-half, half);
  for (auto& b : p.blocks) {
    for (double& w : b.Ws.data()) w = u(rng);
    for (double& w : b.Wg.data()) w = u(rng);
  }
  return p;
}

RealMat SpatialScores(const RealMat& Ws, const RealVec& bs, const FeatureMap& z) {
  const std::size_t K = Ws.cols();
  const std::size_t n = z.locations();
  if (Ws.rows() != z.channels() || bs.size() != K) {
    Fail(ErrorCode::kDimensionMismatch, "spatial scores: Ws is " + std::to_string(Ws.rows()) +
                                            "x" + std::to_string(K) + ", features have M=" +
                                            std::to_string(z.channels()));
  }
  RealMat omega(K, n);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t loc = 0; loc < n; ++loc) omega(k, loc) = bs[k];
  }
  for (std::size_t m = 0; m < z.channels(); ++m) {
    for (std::size_t k = 0; k < K; ++k) {
      const double w = Ws(m, k);
      for (std::size_t loc = 0; loc < n; ++loc) omega(k, loc) += w * z.at(m, loc);
    }
  }
  return omega;
}

RealMat LocationSoftmax(const RealMat& omega) {
  RealMat xi(omega.rows(), omega.cols());
  const std::size_t n = omega.cols();
  for (std::size_t k = 0; k < omega.rows(); ++k) {
    const RealVec row = SoftmaxStable(omega.data().subspan(k * n, n));
    std::copy(row.begin(), row.end(), xi.data().begin() + static_cast<std::ptrdiff_t>(k * n));
  }
  return xi;
}

RealVec LocalAwareness(const AttentionMap& pi, const RealMat& xi) {
  if (pi.pi.size() != xi.cols()) {
    Fail(ErrorCode::kDimensionMismatch, "local awareness: attention map has " +
                                            std::to_string(pi.pi.size()) + " locations, xi has " +
                                            std::to_string(xi.cols()));
  }
  RealVec l(xi.rows(), 0.0);
  for (std::size_t k = 0; k < xi.rows(); ++k) {
    double s = 0.0;
    for (std::size_t loc = 0; loc < xi.cols(); ++loc) s += pi.pi[loc] * xi(k, loc);
    l[k] = s;
  }
  return l;
}

RealVec GlobalAwareness(const RealMat& Wg, const RealVec& bg, const RealVec& v) {
  if (bg.size() != Wg.cols()) {
    Fail(ErrorCode::kDimensionMismatch, "global awareness: bias length does not match Wg");
  }
  RealVec g = Matvec(Wg, v);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] += bg[k];
  return g;
}

RealVec Fuse(const RealVec& l, const RealVec& g) { return Hadamard(l, g); }

BlockForward ForwardBlock(const HeadBlock& block, const FeatureMap& z, const RealVec& v,
                          const AttentionMap& pi) {
  CheckBlock(block, z, v, pi);
  BlockForward f;
  f.omega = SpatialScores(block.Ws, block.bs, z);
  f.xi = LocationSoftmax(f.omega);
  f.l = LocalAwareness(pi, f.xi);
  f.g = GlobalAwareness(block.Wg, block.bg, v);
  f.d = Fuse(f.l, f.g);
  f.h = SoftmaxStable(f.d);
  return f;
}

HeadForward OrdinalRepresentation(const HashHeadParams& params, const FeatureMap& z,
                                  const RealVec& v, const AttentionMap& pi) {
  HeadForward out;
  out.blocks.reserve(params.R());
  for (const auto& b : params.blocks) out.blocks.push_back(ForwardBlock(b, z, v, pi));
  return out;
}

OrdinalCode Encode(const HashHeadParams& params, const FeatureMap& z, const RealVec& v,
                   const AttentionMap& pi) {
  OrdinalCode code;
  code.symbols.reserve(params.R());
  for (const auto& b : params.blocks) {
    CheckBlock(b, z, v, pi);
    const RealMat xi = LocationSoftmax(SpatialScores(b.Ws, b.bs, z));
    const RealVec d = Fuse(LocalAwareness(pi, xi), GlobalAwareness(b.Wg, b.bg, v));
    code.symbols.push_back(static_cast<std::uint16_t>(ArgmaxFirst(d)));
  }
  return code;
}

void SaveHeadParams(const HashHeadParams& params, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.Bytes(kMagic);
  w.U8(kVersion);
  w.U32(static_cast<std::uint32_t>(params.M));
  w.U32(static_cast<std::uint32_t>(params.K));
  w.U32(static_cast<std::uint32_t>(params.R()));
  for (const auto& b : params.blocks) {
    for (double x : b.Ws.data()) w.F64(x);
    for (double x : b.bs) w.F64(x);
    for (double x : b.Wg.data()) w.F64(x);
    for (double x : b.bg) w.F64(x);
  }
  detail::WriteFileBytes(path, w.buffer());
}

HashHeadParams LoadHeadParams(const std::filesystem::path& path) {
  const auto bytes = detail::ReadFileBytes(path);
  detail::ByteReader in(bytes, path.string());
  detail::ExpectHeader(in, kMagic, kVersion, path.string());
  const std::uint32_t M = in.U32();
  const std::uint32_t K = in.U32();
  const std::uint32_t R = in.U32();
  if (M == 0 || K < 2 || R == 0 || K > 0x10000) {
    Fail(ErrorCode::kBadFormat, path.string() + ": invalid dims M=" + std::to_string(M) +
                                    " K=" + std::to_string(K) + " R=" + std::to_string(R));
  }
  const std::size_t need = static_cast<std::size_t>(R) * 2 * K * (M + 1) * sizeof(double);
  if (in.remaining() < need) {
    Fail(ErrorCode::kTruncated, path.string() + ": truncated at byte offset " +
                                    std::to_string(bytes.size()) + " (parameters need " +
                                    std::to_string(need) + " bytes after offset " +
                                    std::to_string(in.offset()) + ")");
  }
  HashHeadParams p = ZeroHeadParams(M, K, R);
  for (auto& b : p.blocks) {
    for (double& x : b.Ws.data()) x = in.F64();
    for (double& x : b.bs) x = in.F64();
    for (double& x : b.Wg.data()) x = in.F64();
    for (double& x : b.bg) x = in.F64();
    if (!AllFinite(b.Ws.data()) || !AllFinite(b.bs) || !AllFinite(b.Wg.data()) ||
        !AllFinite(b.bg)) {
      Fail(ErrorCode::kNonFinite, path.string() + ": non-finite parameter");
    }
  }
  if (!in.done()) Fail(ErrorCode::kBadFormat, path.string() + ": trailing bytes");
  return p;
}

}  // namespace ordhash
