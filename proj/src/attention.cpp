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

#include "ordhash/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ordhash/detail/binio.hpp"
#include "ordhash/error.hpp"

namespace ordhash {
namespace {

constexpr char kMagic[] = "DOHA";
constexpr std::uint8_t kVersion = 0x01;

void CheckDims(const AttentionModel& model, const FeatureMap& z) {
  if (z.channels() != model.channels()) {
    Fail(ErrorCode::kDimensionMismatch, "attention: model has M=" +
                                            std::to_string(model.channels()) +
                                            " but feature map has M=" + std::to_string(z.channels()));
  }
}

RealVec Target(const FeatureRecord& r, std::size_t C) {
  RealVec t(C, 0.0);
  const double w = 1.0 / static_cast<double>(r.labels.size());
  for (auto l : r.labels) t[l] += w;
  return t;
}

RealVec Logits(const AttentionModel& model, std::span<const double> pooled) {
  RealVec a = Matvec(model.W, pooled);
  for (std::size_t c = 0; c < a.size(); ++c) a[c] += model.b[c];
  return a;
}

}  // namespace

RealVec GlobalAveragePool(const FeatureMap& z) {
  RealVec out(z.channels(), 0.0);
  const std::size_t n = z.locations();
  for (std::size_t m = 0; m < z.channels(); ++m) {
    double s = 0.0;
    for (std::size_t loc = 0; loc < n; ++loc) s += z.at(m, loc);
    out[m] = s / static_cast<double>(n);
  }
  return out;
}

AttentionModel InitClassifier(std::size_t M, std::size_t C, std::uint64_t seed) {
  if (M == 0 || C < 2) Fail(ErrorCode::kInvalidArgument, "classifier needs M > 0 and C >= 2");
  AttentionModel model{RealMat(M, C), RealVec(C, 0.0)};
  std::mt19937_64 rng(seed);
  const double half = std::sqrt(6.0 / static_cast<double>(M + C));
  std::uniform_real_distribution<double> u(-half, half);
  for (double& w : model.W.data()) w = u(rng);
  return model;
}

AttentionModel TrainClassifier(std::span<const FeatureRecord> records, std::size_t C,
                               const ClassifierConfig& config) {
  if (records.empty()) Fail(ErrorCode::kInvalidArgument, "classifier: no records");
  std::set<std::uint16_t> present;
  for (const auto& r : records) {
    for (auto l : r.labels) {
      if (l >= C) Fail(ErrorCode::kInvalidArgument, "classifier: label outside [0, C)");
      present.insert(l);
    }
  }
  if (present.size() < 2) {
    Fail(ErrorCode::kInvalidArgument, "classifier: training data covers fewer than 2 categories");
  }
  if (!(config.lr > 0.0) || config.batch == 0) {
    Fail(ErrorCode::kInvalidArgument, "classifier: lr must be positive and batch nonzero");
  }

  const std::size_t M = records.front().z.channels();
  AttentionModel model = InitClassifier(M, C, config.seed);

  std::vector<RealVec> pooled;
  std::vector<RealVec> targets;
  pooled.reserve(records.size());
  for (const auto& r : records) {
    if (r.z.channels() != M) Fail(ErrorCode::kDimensionMismatch, "classifier: inconsistent M");
    pooled.push_back(GlobalAveragePool(r.z));
    targets.push_back(Target(r, C));
  }

  std::mt19937_64 rng(config.seed + 1);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  RealMat gW(M, C);
  RealVec gb(C);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      std::fill(gW.data().begin(), gW.data().end(), 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t t = start; t < end; ++t) {
        const auto& x = pooled[order[t]];
        const RealVec p = SoftmaxStable(Logits(model, x));
        const auto& target = targets[order[t]];
        for (std::size_t c = 0; c < C; ++c) {
          const double delta = p[c] - target[c];
          gb[c] += delta;
          for (std::size_t m = 0; m < M; ++m) gW(m, c) += delta * x[m];
        }
      }
      const double step = config.lr / static_cast<double>(end - start);
      auto w = model.W.data();
      auto g = gW.data();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * g[i];
      for (std::size_t c = 0; c < C; ++c) model.b[c] -= step * gb[c];
    }
  }
  if (!AllFinite(model.W.data()) || !AllFinite(model.b)) {
    Fail(ErrorCode::kNumerical, "classifier: training diverged");
  }
  return model;
}

double ClassifierLoss(const AttentionModel& model, std::span<const FeatureRecord> records) {
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : records) {
    const RealVec p = ClassProbabilities(model, r.z);
    const RealVec t = Target(r, model.classes());
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (t[c] > 0.0) total -= t[c] * std::log(p[c]);
    }
  }
  return total / static_cast<double>(records.size());
}

double ClassifierAccuracy(const AttentionModel& model, std::span<const FeatureRecord> records) {
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    const auto best = static_cast<std::uint16_t>(ArgmaxFirst(ClassProbabilities(model, r.z)));
    if (std::find(r.labels.begin(), r.labels.end(), best) != r.labels.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::vector<double> ClassResponseMap(const AttentionModel& model, const FeatureMap& z,
                                     std::size_t c) {
  CheckDims(model, z);
  if (c >= model.classes()) {
    Fail(ErrorCode::kInvalidArgument, "class index " + std::to_string(c) + " out of range [0, " +
                                          std::to_string(model.classes()) + ")");
  }
  std::vector<double> mu(z.locations(), 0.0);
  for (std::size_t m = 0; m < z.channels(); ++m) {
    const double w = model.W(m, c);
    for (std::size_t loc = 0; loc < mu.size(); ++loc) mu[loc] += w * z.at(m, loc);
  }
  for (double& v : mu) v = std::max(v, 0.0);
  return mu;
}

RealVec ClassProbabilities(const AttentionModel& model, const FeatureMap& z) {
  CheckDims(model, z);
  return SoftmaxStable(Logits(model, GlobalAveragePool(z)));
}

AttentionMap ComputeAttentionMap(const AttentionModel& model, const FeatureMap& z) {
  const RealVec p = ClassProbabilities(model, z);
  const double mass = std::accumulate(p.begin(), p.end(), 0.0);
  AttentionMap map{z.width(), z.height(), std::vector<double>(z.locations(), 0.0)};
  for (std::size_t c = 0; c < model.classes(); ++c) {
    const auto mu = ClassResponseMap(model, z, c);
    for (std::size_t loc = 0; loc < mu.size(); ++loc) map.pi[loc] += p[c] * mu[loc];
  }
  for (double& v : map.pi) v /= mass;
  return map;
}

std::vector<AttentionMap> ComputeAttentionMaps(const AttentionModel& model,
                                               std::span<const FeatureRecord> records) {
  std::vector<AttentionMap> maps;
  maps.reserve(records.size());
  for (const auto& r : records) maps.push_back(ComputeAttentionMap(model, r.z));
  return maps;
}

void SaveAttentionModel(const AttentionModel& model, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.Bytes(kMagic);
  w.U8(kVersion);
  w.U32(static_cast<std::uint32_t>(model.channels()));
  w.U32(static_cast<std::uint32_t>(model.classes()));
  for (double x : model.W.data()) w.F64(x);
  for (double x : model.b) w.F64(x);
  detail::WriteFileBytes(path, w.buffer());
}

AttentionModel LoadAttentionModel(const std::filesystem::path& path) {
  const auto bytes = detail::ReadFileBytes(path);
  detail::ByteReader in(bytes, path.string());
  detail::ExpectHeader(in, kMagic, kVersion, path.string());
  const std::uint32_t M = in.U32();
  const std::uint32_t C = in.U32();
  if (M == 0 || C < 2) Fail(ErrorCode::kBadFormat, path.string() + ": invalid dims");
  if (in.remaining() < (static_cast<std::size_t>(M) * C + C) * sizeof(double)) {
    Fail(ErrorCode::kTruncated, path.string() + ": truncated at byte offset " +
                                    std::to_string(bytes.size()));
  }
  AttentionModel model{RealMat(M, C), RealVec(C)};
  for (double& x : model.W.data()) x = in.F64();
  for (double& x : model.b) x = in.F64();
  if (!in.done()) Fail(ErrorCode::kBadFormat, path.string() + ": trailing bytes");
  if (!AllFinite(model.W.data()) || !AllFinite(model.b)) {
    Fail(ErrorCode::kNonFinite, path.string() + ": non-finite weights");
  }
  return model;
}

std::string AttentionMapCsv(const AttentionMap& map) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t y = 0; y < map.height; ++y) {
    for (std::size_t x = 0; x < map.width; ++x) {
      if (x) out << ',';
      out << map.at(y, x);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ordhash
