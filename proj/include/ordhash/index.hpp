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

#ifndef ORDHASH_INDEX_HPP_
#define ORDHASH_INDEX_HPP_

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

enum class DistanceKind {
  kSymbol,           // number of positions whose symbols differ
  kBinaryExpansion,  // Hamming distance between the packed binary expansions
};

DistanceKind ParseDistanceKind(const std::string& name);
const char* DistanceKindName(DistanceKind kind) noexcept;

// Generalized Hamming distance between two equal-length codes.
std::size_t SymbolDistance(const OrdinalCode& a, const OrdinalCode& b);

// ceil(log2(K)), at least 1.
unsigned BitsPerSymbol(std::size_t K);

// R = bits / log2(K) for power-of-two K. Non-divisible budgets are rejected
// with the nearest valid budgets in the message.
std::size_t BitBudget(std::size_t bits, std::size_t K);

// Codes packed at BitsPerSymbol(K) bits per symbol, little-endian within
// 64-bit words; a symbol never straddles two words.
class CodeDatabase {
 public:
  CodeDatabase() = default;
  CodeDatabase(std::size_t K, std::size_t R);

  void Add(std::string id, std::vector<std::uint16_t> labels, const OrdinalCode& code);

  std::size_t K() const noexcept { return k_; }
  std::size_t R() const noexcept { return r_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t words_per_code() const noexcept { return words_per_code_; }

  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::uint16_t>& labels(std::size_t i) const { return labels_[i]; }
  std::span<const std::uint64_t> words(std::size_t i) const {
    return std::span(words_).subspan(i * words_per_code_, words_per_code_);
  }
  OrdinalCode code(std::size_t i) const;

  // Packs a code with this database's layout.
  std::vector<std::uint64_t> Pack(const OrdinalCode& code) const;

  // Distance between packed codes of this layout.
  std::size_t Distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                       DistanceKind kind) const noexcept;

  bool operator==(const CodeDatabase&) const = default;

 private:
  std::size_t k_ = 0;
  std::size_t r_ = 0;
  unsigned bits_ = 1;
  std::size_t per_word_ = 64;
  std::size_t words_per_code_ = 0;
  std::uint64_t field_low_mask_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<std::string> ids_;
  std::vector<std::vector<std::uint16_t>> labels_;
};

struct RankedItem {
  std::size_t index = 0;  // position in the database
  std::size_t distance = 0;

  bool operator==(const RankedItem&) const = default;
};

// Non-decreasing distance; ties keep database insertion order.
using RankedResult = std::vector<RankedItem>;

// Exact linear scan; returns min(topN, size) entries.
RankedResult Search(const CodeDatabase& db, const OrdinalCode& query, std::size_t topN,
                    DistanceKind kind = DistanceKind::kSymbol);

// Encodes every record of a split with a frozen head and attention model.
CodeDatabase BuildCodeDatabase(const HashHeadParams& params, const AttentionModel& attention,
                               const Dataset& dataset);

// "DOHC" file: version, K, R, count as u32, packed words, then per record
// the id/label header in the .feat encoding.
void SaveCodeDatabase(const CodeDatabase& db, const std::filesystem::path& path);
CodeDatabase LoadCodeDatabase(const std::filesystem::path& path);

// "query_id,rank,db_id,distance" rows.
std::string SearchResultsCsv(const CodeDatabase& db, const CodeDatabase& queries,
                             std::size_t topN, DistanceKind kind);

}  // namespace ordhash

#endif  // ORDHASH_INDEX_HPP_
