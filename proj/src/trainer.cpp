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

#include "ordhash/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "ordhash/detail/binio.hpp"
#include "ordhash/error.hpp"
#include "ordhash/lossgrad.hpp"

namespace ordhash {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void Step(HashHeadParams& params, const HeadGradients& grads, double lr) {
  for (std::size_t r = 0; r < params.R(); ++r) {
    auto& p = params.blocks[r];
    const auto& g = grads.blocks[r];
    auto update = [lr](std::span<double> dst, std::span<const double> src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= lr * src[i];
    };
    update(p.Ws.data(), g.Ws.data());
    update(p.bs, g.bs);
    update(p.Wg.data(), g.Wg.data());
    update(p.bg, g.bg);
  }
}

}  // namespace

void ValidateTrainConfig(const TrainConfig& c) {
  if (c.K < 2) Fail(ErrorCode::kInvalidArgument, "train: K must be at least 2");
  if (c.R == 0) Fail(ErrorCode::kInvalidArgument, "train: R must be positive");
  if (c.batch == 0) Fail(ErrorCode::kInvalidArgument, "train: batch must be positive");
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) {
    Fail(ErrorCode::kInvalidArgument, "train: lr must be positive");
  }
  if (!(c.balance >= 0.0 && c.balance <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "train: balance must lie in [0, 1]");
  }
  if (c.log_every == 0) Fail(ErrorCode::kInvalidArgument, "train: log_every must be positive");
}

TrainResult TrainHead(HashHeadParams init, std::span<const FeatureRecord> records,
                      std::span<const AttentionMap> maps, const TrainConfig& config) {
  ValidateTrainConfig(config);
  if (records.size() != maps.size()) {
    Fail(ErrorCode::kDimensionMismatch, "train: one attention map per record required");
  }
  if (init.K != config.K || init.R() != config.R) {
    Fail(ErrorCode::kDimensionMismatch, "train: initial parameters do not match K/R");
  }
  TrainResult result;
  result.params = std::move(init);
  result.loss_trace.reserve(config.iters);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PairExample> batch;
  for (std::size_t iter = 1; iter <= config.iters; ++iter) {
    const PairBatch pairs =
        SamplePairs(records, config.batch, SplitMix64(config.seed ^ (iter * 0xD1B54A32D192ED03ULL)),
                    config.balance);
    batch.clear();
    for (const auto& p : pairs) {
      batch.push_back({{&records[p.i].z, &records[p.i].v, &maps[p.i]},
                       {&records[p.j].z, &records[p.j].v, &maps[p.j]},
                       p.s});
    }
    const LossAndGradients lg = AnalyticGradients(result.params, batch);
    const double norm = lg.grads.Norm();
    if (!std::isfinite(lg.loss) || !std::isfinite(norm) || norm > 1e6) {
      Fail(ErrorCode::kNumerical, "train: diverged at iteration " + std::to_string(iter) +
                                      " (loss=" + std::to_string(lg.loss) +
                                      ", grad_norm=" + std::to_string(norm) + ")");
    }
    result.loss_trace.push_back(lg.loss);
    if (iter == 1 || iter % config.log_every == 0 || iter == config.iters) {
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      result.log.push_back({iter, lg.loss, norm, static_cast<std::int64_t>(ms)});
    }
    Step(result.params, lg.grads, config.lr);
  }
  return result;
}

TrainResult Train(const Dataset& train, const AttentionModel& attention, const TrainConfig& config) {
  ValidateTrainConfig(config);
  const auto& m = train.manifest;
  if (attention.channels() != m.M || attention.classes() != m.C) {
    Fail(ErrorCode::kDimensionMismatch,
         "train: attention model (M=" + std::to_string(attention.channels()) +
             ", C=" + std::to_string(attention.classes()) + ") does not match dataset (M=" +
             std::to_string(m.M) + ", C=" + std::to_string(m.C) + ")");
  }
  const auto maps = ComputeAttentionMaps(attention, train.records);
  return TrainHead(InitHeadParams(m.M, config.K, config.R, config.seed), train.records, maps,
                   config);
}

double LeadingMeanLoss(std::span<const double> trace, double fraction) {
  if (trace.empty()) return 0.0;
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * trace.size()));
  return std::accumulate(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(n), 0.0) /
         static_cast<double>(n);
}

double TrailingMeanLoss(std::span<const double> trace, double fraction) {
  if (trace.empty()) return 0.0;
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * trace.size()));
  return std::accumulate(trace.end() - static_cast<std::ptrdiff_t>(n), trace.end(), 0.0) /
         static_cast<double>(n);
}

std::string TrainLogCsv(std::span<const TrainLogEntry> log) {
  std::ostringstream out;
  out.precision(10);
  out << "iter,loss,grad_norm,wall_ms\n";
  for (const auto& e : log) {
    out << e.iter << ',' << e.loss << ',' << e.grad_norm << ',' << e.wall_ms << '\n';
  }
  return out.str();
}

std::string FormatTrainConfig(const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "K=" << c.K << "\nR=" << c.R << "\niters=" << c.iters << "\nbatch=" << c.batch
      << "\nlr=" << c.lr << "\nseed=" << c.seed << "\nbalance=" << c.balance
      << "\nlog_every=" << c.log_every << "\n";
  return out.str();
}

TrainConfig ParseTrainConfig(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) Fail(ErrorCode::kBadFormat, "train config: bad line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  TrainConfig c;
  try {
    for (const auto& [key, value] : kv) {
      if (key == "K") c.K = std::stoull(value);
      else if (key == "R") c.R = std::stoull(value);
      else if (key == "iters") c.iters = std::stoull(value);
      else if (key == "batch") c.batch = std::stoull(value);
      else if (key == "lr") c.lr = std::stod(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "balance") c.balance = std::stod(value);
      else if (key == "log_every") c.log_every = std::stoull(value);
      else Fail(ErrorCode::kBadFormat, "train config: unknown key " + key);
    }
  } catch (const std::logic_error& e) {
    Fail(ErrorCode::kBadFormat, std::string("train config: bad value: ") + e.what());
  }
  return c;
}

std::filesystem::path ConfigSidecarPath(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".config";
  return p;
}

void SaveCheckpoint(const HashHeadParams& params, const TrainConfig& config,
                    const std::filesystem::path& path) {
  SaveHeadParams(params, path);
  detail::WriteFileText(ConfigSidecarPath(path), FormatTrainConfig(config));
}

}  // namespace ordhash
