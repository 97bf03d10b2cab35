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

#ifndef ORDHASH_DATAIO_HPP_
#define ORDHASH_DATAIO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ordhash/numerics.hpp"

namespace ordhash {

// One image's extracted features: the spatial map z (M x X x Y), the global
// vector v (M) and its category labels (sorted, unique, nonempty).
struct FeatureRecord {
  std::string id;
  std::vector<std::uint16_t> labels;
  FeatureMap z;
  RealVec v;

  bool operator==(const FeatureRecord&) const = default;
};

enum class Split { kTrain, kDatabase, kQuery };

const char* SplitName(Split split) noexcept;
Split ParseSplit(const std::string& name);

struct DatasetManifest {
  std::size_t M = 0;
  std::size_t X = 0;
  std::size_t Y = 0;
  std::size_t C = 0;
  std::size_t count = 0;
  Split split = Split::kTrain;
  std::uint64_t checksum = 0;

  bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<FeatureRecord> records;
};

// A dataset named `base` lives in `base.manifest` + `base.feat`. A trailing
// ".manifest" or ".feat" on `base` is ignored.
std::filesystem::path ManifestPath(const std::filesystem::path& base);
std::filesystem::path FeaturePath(const std::filesystem::path& base);

// Validates every record against the manifest dims, fills in count and
// checksum, and writes both files. Values are stored as 32-bit floats.
void SaveDataset(Dataset& dataset, const std::filesystem::path& base);

// Load errors: kDimensionMismatch when an intact blob does not fit the
// manifest dims, kTruncated (naming the record) when the blob ends early,
// kChecksumMismatch otherwise, kNonFinite for NaN/Inf values.
Dataset LoadDataset(const std::filesystem::path& base);

// 1 iff the two label sets share at least one category.
int SimilarityLabel(const FeatureRecord& a, const FeatureRecord& b) noexcept;

// Same rule on bare sorted label sets.
int LabelSetsIntersect(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b) noexcept;

struct LabeledPair {
  std::size_t i = 0;
  std::size_t j = 0;
  int s = 0;

  bool operator==(const LabeledPair&) const = default;
};

using PairBatch = std::vector<LabeledPair>;

// Draws exactly round(balance * n) similar and the rest dissimilar pairs,
// never (i, i). Deterministic in `seed`.
PairBatch SamplePairs(std::span<const FeatureRecord> records, std::size_t n, std::uint64_t seed,
                      double balance);

struct SynthConfig {
  std::size_t n_per_class = 100;
  std::size_t C = 3;
  std::size_t M = 16;
  std::size_t X = 4;
  std::size_t Y = 4;
  double noise_sigma = 0.3;
  std::uint64_t seed = 1;
};

// Class prototypes depend only on `seed`, so every split generated with the
// same config shares them; per-record noise is drawn from a split-specific
// stream. Values are rounded to float so that save/load is lossless.
Dataset SynthGenerate(const SynthConfig& config, Split split);

}  // namespace ordhash

#endif  // ORDHASH_DATAIO_HPP_
