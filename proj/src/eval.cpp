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

#include "ordhash/eval.hpp"

#include <sstream>

#include "ordhash/dataio.hpp"
#include "ordhash/detail/binio.hpp"
#include "ordhash/error.hpp"

namespace ordhash {

double AveragePrecision(std::span<const std::uint8_t> rel) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t p = 0; p < rel.size(); ++p) {
    if (rel[p]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(p + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double MeanAveragePrecision(std::span<const RelevanceVector> queries) {
  if (queries.empty()) Fail(ErrorCode::kInvalidArgument, "mAP: no queries");
  double sum = 0.0;
  for (const auto& q : queries) sum += AveragePrecision(q);
  return sum / static_cast<double>(queries.size());
}

double PrecisionAt(std::span<const std::uint8_t> rel, std::size_t n) {
  if (n == 0 || n > rel.size()) {
    Fail(ErrorCode::kInvalidArgument, "P@N: N=" + std::to_string(n) + " outside [1, " +
                                          std::to_string(rel.size()) + "]");
  }
  std::size_t hits = 0;
  for (std::size_t p = 0; p < n; ++p) hits += rel[p] != 0;
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::vector<PrPoint> PrCurve(std::span<const std::uint8_t> rel) {
  std::size_t total = 0;
  for (auto r : rel) total += r != 0;
  std::vector<PrPoint> curve;
  if (total == 0) return curve;
  curve.reserve(rel.size());
  std::size_t hits = 0;
  for (std::size_t p = 0; p < rel.size(); ++p) {
    hits += rel[p] != 0;
    curve.push_back({static_cast<double>(hits) / static_cast<double>(total),
                     static_cast<double>(hits) / static_cast<double>(p + 1)});
  }
  return curve;
}

RelevanceVector RelevanceOf(const CodeDatabase& db, const RankedResult& ranking,
                            std::span<const std::uint16_t> query_labels) {
  RelevanceVector rel(ranking.size());
  for (std::size_t p = 0; p < ranking.size(); ++p) {
    rel[p] = static_cast<std::uint8_t>(LabelSetsIntersect(db.labels(ranking[p].index), query_labels));
  }
  return rel;
}

MetricsReport Evaluate(const CodeDatabase& db, const CodeDatabase& queries,
                       const EvalOptions& options) {
  if (queries.size() == 0) Fail(ErrorCode::kInvalidArgument, "eval: no queries");
  if (db.size() == 0) Fail(ErrorCode::kInvalidArgument, "eval: empty database");
  if (db.K() != queries.K() || db.R() != queries.R()) {
    Fail(ErrorCode::kDimensionMismatch, "eval: query and database codes differ in K or R");
  }
  MetricsReport report;
  report.queries = queries.size();
  std::vector<RelevanceVector> for_map;
  for_map.reserve(queries.size());

  std::vector<std::size_t> ns;
  for (auto n : options.p_at) {
    if (n >= 1 && n <= db.size()) ns.push_back(n);
  }
  std::vector<double> p_sum(ns.size(), 0.0);
  std::vector<PrPoint> pr_sum(db.size());
  std::size_t pr_queries = 0;

  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto ranking = Search(db, queries.code(q), db.size(), options.distance);
    RelevanceVector rel = RelevanceOf(db, ranking, queries.labels(q));
    for (std::size_t t = 0; t < ns.size(); ++t) p_sum[t] += PrecisionAt(rel, ns[t]);
    const auto curve = PrCurve(rel);
    if (!curve.empty()) {
      ++pr_queries;
      for (std::size_t p = 0; p < curve.size(); ++p) {
        pr_sum[p].recall += curve[p].recall;
        pr_sum[p].precision += curve[p].precision;
      }
    }
    if (options.map_depth > 0 && options.map_depth < rel.size()) rel.resize(options.map_depth);
    for_map.push_back(std::move(rel));
  }
  report.map = MeanAveragePrecision(for_map);
  for (std::size_t t = 0; t < ns.size(); ++t) {
    report.p_at.emplace_back(ns[t], p_sum[t] / static_cast<double>(queries.size()));
  }
  if (pr_queries > 0) {
    for (auto& pt : pr_sum) {
      pt.recall /= static_cast<double>(pr_queries);
      pt.precision /= static_cast<double>(pr_queries);
    }
    report.pr_curve = std::move(pr_sum);
  }
  return report;
}

void WriteMetricsReport(const MetricsReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  std::ostringstream map;
  map.precision(10);
  map << report.map << '\n';
  detail::WriteFileText(dir / "map.csv", map.str());

  std::ostringstream p_at;
  p_at.precision(10);
  p_at << "N,precision\n";
  for (const auto& [n, p] : report.p_at) p_at << n << ',' << p << '\n';
  detail::WriteFileText(dir / "p_at.csv", p_at.str());

  std::ostringstream pr;
  pr.precision(10);
  pr << "recall,precision\n";
  for (const auto& pt : report.pr_curve) pr << pt.recall << ',' << pt.precision << '\n';
  detail::WriteFileText(dir / "pr.csv", pr.str());
}

}  // namespace ordhash
