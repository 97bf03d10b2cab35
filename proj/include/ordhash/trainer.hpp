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

#ifndef ORDHASH_TRAINER_HPP_
#define ORDHASH_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ordhash/attention.hpp"
#include "ordhash/dataio.hpp"
#include "ordhash/hashhead.hpp"

namespace ordhash {

struct TrainConfig {
  std::size_t K = 4;
  std::size_t R = 8;
  std::size_t iters = 2000;
  std::size_t batch = 64;
  double lr = 2.0;
  std::uint64_t seed = 1;
  double balance = 0.5;
  std::size_t log_every = 50;

  bool operator==(const TrainConfig&) const = default;
};

void ValidateTrainConfig(const TrainConfig& config);

struct TrainLogEntry {
  std::size_t iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::int64_t wall_ms = 0;
};

struct TrainResult {
  HashHeadParams params;
  std::vector<TrainLogEntry> log;
  // Batch loss of every iteration, measured before that iteration's update.
  std::vector<double> loss_trace;
};

// Plain SGD on the head only. Each iteration samples a balanced pair batch,
// runs the forward pass, and steps every block against its gradient. Aborts
// with kNumerical when the loss is non-finite or the gradient norm exceeds
// 1e6.
TrainResult TrainHead(HashHeadParams init, std::span<const FeatureRecord> records,
                      std::span<const AttentionMap> maps, const TrainConfig& config);

// Initializes the head from config.seed, computes attention maps with the
// frozen attention model, then runs TrainHead.
TrainResult Train(const Dataset& train, const AttentionModel& attention, const TrainConfig& config);

// Mean of the first (or last) `fraction` of a loss trace, at least one entry.
double LeadingMeanLoss(std::span<const double> trace, double fraction = 0.1);
double TrailingMeanLoss(std::span<const double> trace, double fraction = 0.1);

// "iter,loss,grad_norm,wall_ms" CSV.
std::string TrainLogCsv(std::span<const TrainLogEntry> log);

std::string FormatTrainConfig(const TrainConfig& config);
TrainConfig ParseTrainConfig(const std::string& text);

// Writes the DOHH file at `path` and the config sidecar at `path` + ".config".
void SaveCheckpoint(const HashHeadParams& params, const TrainConfig& config,
                    const std::filesystem::path& path);
std::filesystem::path ConfigSidecarPath(const std::filesystem::path& checkpoint);

}  // namespace ordhash

#endif  // ORDHASH_TRAINER_HPP_
