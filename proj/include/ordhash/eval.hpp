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

#ifndef ORDHASH_EVAL_HPP_
#define ORDHASH_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "ordhash/index.hpp"

namespace ordhash {

// One 0/1 flag per ranked database item.
using RelevanceVector = std::vector<std::uint8_t>;

// Sum of precision@p over relevant positions p, divided by the number of
// relevant items in the vector; 0 when nothing is relevant.
double AveragePrecision(std::span<const std::uint8_t> rel);

double MeanAveragePrecision(std::span<const RelevanceVector> queries);

// Relevant among the first n, over n. Requires 1 <= n <= rel.size().
double PrecisionAt(std::span<const std::uint8_t> rel, std::size_t n);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;

  bool operator==(const PrPoint&) const = default;
};

// One point per rank position. Empty when no item is relevant.
std::vector<PrPoint> PrCurve(std::span<const std::uint8_t> rel);

struct MetricsReport {
  double map = 0.0;
  std::vector<std::pair<std::size_t, double>> p_at;  // (N, mean P@N)
  std::vector<PrPoint> pr_curve;                     // mean over queries per rank
  std::size_t queries = 0;
};

struct EvalOptions {
  DistanceKind distance = DistanceKind::kSymbol;
  std::size_t map_depth = 0;  // 0 = full ranking
  std::vector<std::size_t> p_at = {1, 5, 10, 20, 50, 100};
};

// Relevance of a ranking for a query with the given labels.
RelevanceVector RelevanceOf(const CodeDatabase& db, const RankedResult& ranking,
                            std::span<const std::uint16_t> query_labels);

// Ranks the full database for every query. P@N is reported for the N that
// fit in the database; the PR curve averages queries with a relevant item.
MetricsReport Evaluate(const CodeDatabase& db, const CodeDatabase& queries,
                       const EvalOptions& options);

// map.csv, p_at.csv and pr.csv under `dir`.
void WriteMetricsReport(const MetricsReport& report, const std::filesystem::path& dir);

}  // namespace ordhash

#endif  // ORDHASH_EVAL_HPP_
