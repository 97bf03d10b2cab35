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

#ifndef ORDHASH_ATTENTION_HPP_
#define ORDHASH_ATTENTION_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ordhash/dataio.hpp"
#include "ordhash/numerics.hpp"

namespace ordhash {

// Classification head over globally pooled features. Column c of W is the
// class weight vector w_c that also projects each spatial location onto
// class c's response map.
struct AttentionModel {
  RealMat W;  // M x C
  RealVec b;  // C

  std::size_t channels() const noexcept { return W.rows(); }
  std::size_t classes() const noexcept { return W.cols(); }

  bool operator==(const AttentionModel&) const = default;
};

// Nonnegative X-by-Y grid, stored at loc = y*X + x.
struct AttentionMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pi;

  double at(std::size_t y, std::size_t x) const { return pi[y * width + x]; }
};

RealVec GlobalAveragePool(const FeatureMap& z);

struct ClassifierConfig {
  std::size_t epochs = 40;
  double lr = 0.5;
  std::size_t batch = 32;
  std::uint64_t seed = 1;
};

// Uniform(+-sqrt(6/(M+C))) weights, zero bias.
AttentionModel InitClassifier(std::size_t M, std::size_t C, std::uint64_t seed);

// Softmax regression on pooled features by mini-batch gradient descent. A
// multi-label record's target is uniform over its labels.
AttentionModel TrainClassifier(std::span<const FeatureRecord> records, std::size_t C,
                               const ClassifierConfig& config);

// Mean cross-entropy against the uniform-over-labels targets.
double ClassifierLoss(const AttentionModel& model, std::span<const FeatureRecord> records);

// Fraction of records whose most probable class is one of their labels.
double ClassifierAccuracy(const AttentionModel& model, std::span<const FeatureRecord> records);

// mu^c at every location: max(w_c . z_xy, 0). Returned at loc = y*X + x.
std::vector<double> ClassResponseMap(const AttentionModel& model, const FeatureMap& z,
                                     std::size_t c);

RealVec ClassProbabilities(const AttentionModel& model, const FeatureMap& z);

// pi_xy = sum_c p_c mu^c_xy / sum_c p_c.
AttentionMap ComputeAttentionMap(const AttentionModel& model, const FeatureMap& z);

std::vector<AttentionMap> ComputeAttentionMaps(const AttentionModel& model,
                                               std::span<const FeatureRecord> records);

// "DOHA" checkpoint: version, M and C as u32, W row-major, then b, as f64.
void SaveAttentionModel(const AttentionModel& model, const std::filesystem::path& path);
AttentionModel LoadAttentionModel(const std::filesystem::path& path);

// Y lines of X comma-separated values.
std::string AttentionMapCsv(const AttentionMap& map);

}  // namespace ordhash

#endif  // ORDHASH_ATTENTION_HPP_
