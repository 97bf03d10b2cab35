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

#include "ordhash/index.hpp"

#include <bit>
#include <sstream>

#include "ordhash/detail/binio.hpp"
#include "ordhash/error.hpp"

namespace ordhash {
namespace {

constexpr char kMagic[] = "DOHC";
constexpr std::uint8_t kVersion = 0x01;

}  // namespace

DistanceKind ParseDistanceKind(const std::string& name) {
  if (name == "symbol") return DistanceKind::kSymbol;
  if (name == "binary-expansion") return DistanceKind::kBinaryExpansion;
  Fail(ErrorCode::kInvalidArgument, "unknown distance '" + name + "' (symbol|binary-expansion)");
}

const char* DistanceKindName(DistanceKind kind) noexcept {
  return kind == DistanceKind::kSymbol ? "symbol" : "binary-expansion";
}

std::size_t SymbolDistance(const OrdinalCode& a, const OrdinalCode& b) {
  if (a.size() != b.size()) {
    Fail(ErrorCode::kDimensionMismatch, "distance: code lengths " + std::to_string(a.size()) +
                                            " and " + std::to_string(b.size()));
  }
  std::size_t d = 0;
  for (std::size_t r = 0; r < a.size(); ++r) d += a.symbols[r] != b.symbols[r];
  return d;
}

unsigned BitsPerSymbol(std::size_t K) {
  if (K < 2) Fail(ErrorCode::kInvalidArgument, "K must be at least 2");
  return static_cast<unsigned>(std::bit_width(K - 1));
}

std::size_t BitBudget(std::size_t bits, std::size_t K) {
  if (K < 2 || !std::has_single_bit(K)) {
    Fail(ErrorCode::kInvalidArgument, "bit budget: K=" + std::to_string(K) +
                                          " is not a power of two >= 2");
  }
  const std::size_t per = static_cast<std::size_t>(std::countr_zero(K));
  if (bits == 0 || bits % per != 0) {
    const std::size_t lower = bits / per * per;
    const std::size_t upper = lower + per;
    std::string msg = "bit budget: " + std::to_string(bits) + " bits is not a multiple of log2(K)=" +
                      std::to_string(per) + "; nearest valid budgets: ";
    msg += lower > 0 ? std::to_string(lower) + " or " + std::to_string(upper)
                     : std::to_string(upper);
    Fail(ErrorCode::kInvalidArgument, msg);
  }
  return bits / per;
}

CodeDatabase::CodeDatabase(std::size_t K, std::size_t R)
    : k_(K), r_(R), bits_(BitsPerSymbol(K)) {
  if (R == 0) Fail(ErrorCode::kInvalidArgument, "code database: R must be positive");
  if (K > 0x10000) Fail(ErrorCode::kInvalidArgument, "code database: K too large");
  per_word_ = 64 / bits_;
  words_per_code_ = (R + per_word_ - 1) / per_word_;
  for (std::size_t t = 0; t < per_word_; ++t) field_low_mask_ |= std::uint64_t{1} << (t * bits_);
}

std::vector<std::uint64_t> CodeDatabase::Pack(const OrdinalCode& code) const {
  if (code.size() != r_) {
    Fail(ErrorCode::kDimensionMismatch, "code has length " + std::to_string(code.size()) +
                                            ", database expects R=" + std::to_string(r_));
  }
  std::vector<std::uint64_t> w(words_per_code_, 0);
  for (std::size_t r = 0; r < r_; ++r) {
    if (code.symbols[r] >= k_) {
      Fail(ErrorCode::kInvalidArgument, "symbol " + std::to_string(code.symbols[r]) +
                                            " outside [0, " + std::to_string(k_) + ")");
    }
    w[r / per_word_] |= std::uint64_t{code.symbols[r]} << ((r % per_word_) * bits_);
  }
  return w;
}

void CodeDatabase::Add(std::string id, std::vector<std::uint16_t> labels, const OrdinalCode& code) {
  const auto w = Pack(code);
  words_.insert(words_.end(), w.begin(), w.end());
  ids_.push_back(std::move(id));
  labels_.push_back(std::move(labels));
}

OrdinalCode CodeDatabase::code(std::size_t i) const {
  OrdinalCode c;
  c.symbols.resize(r_);
  const auto w = words(i);
  const std::uint64_t mask = (std::uint64_t{1} << bits_) - 1;
  for (std::size_t r = 0; r < r_; ++r) {
    c.symbols[r] = static_cast<std::uint16_t>((w[r / per_word_] >> ((r % per_word_) * bits_)) & mask);
  }
  return c;
}

std::size_t CodeDatabase::Distance(std::span<const std::uint64_t> a,
                                   std::span<const std::uint64_t> b,
                                   DistanceKind kind) const noexcept {
  std::size_t d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) {
    const std::uint64_t x = a[w] ^ b[w];
    if (kind == DistanceKind::kBinaryExpansion) {
      d += static_cast<std::size_t>(std::popcount(x));
      continue;
    }
    // Fold each field onto its lowest bit, then count fields.
    std::uint64_t y = x;
    for (unsigned s = 1; s < bits_; ++s) y |= x >> s;
    d += static_cast<std::size_t>(std::popcount(y & field_low_mask_));
  }
  return d;
}

RankedResult Search(const CodeDatabase& db, const OrdinalCode& query, std::size_t topN,
                    DistanceKind kind) {
  if (db.size() == 0) Fail(ErrorCode::kInvalidArgument, "search: empty database");
  if (topN == 0) Fail(ErrorCode::kInvalidArgument, "search: topN must be at least 1");
  const auto q = db.Pack(query);
  const std::size_t max_d = kind == DistanceKind::kSymbol ? db.R() : 64 * db.words_per_code();

  // Counting sort by distance keeps insertion order within each bucket.
  std::vector<std::size_t> dist(db.size());
  std::vector<std::size_t> bucket(max_d + 2, 0);
  for (std::size_t i = 0; i < db.size(); ++i) {
    dist[i] = db.Distance(q, db.words(i), kind);
    ++bucket[dist[i] + 1];
  }
  for (std::size_t d = 1; d < bucket.size(); ++d) bucket[d] += bucket[d - 1];
  RankedResult all(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) all[bucket[dist[i]]++] = {i, dist[i]};
  if (topN < all.size()) all.resize(topN);
  return all;
}

CodeDatabase BuildCodeDatabase(const HashHeadParams& params, const AttentionModel& attention,
                               const Dataset& dataset) {
  if (attention.channels() != params.M || dataset.manifest.M != params.M) {
    Fail(ErrorCode::kDimensionMismatch, "encode: head, attention model and dataset disagree on M");
  }
  CodeDatabase db(params.K, params.R());
  for (const auto& r : dataset.records) {
    const AttentionMap pi = ComputeAttentionMap(attention, r.z);
    db.Add(r.id, r.labels, Encode(params, r.z, r.v, pi));
  }
  return db;
}

void SaveCodeDatabase(const CodeDatabase& db, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.Bytes(kMagic);
  w.U8(kVersion);
  w.U32(static_cast<std::uint32_t>(db.K()));
  w.U32(static_cast<std::uint32_t>(db.R()));
  w.U32(static_cast<std::uint32_t>(db.size()));
  for (std::size_t i = 0; i < db.size(); ++i) {
    for (auto word : db.words(i)) w.U64(word);
  }
  for (std::size_t i = 0; i < db.size(); ++i) {
    w.U16(static_cast<std::uint16_t>(db.id(i).size()));
    w.Bytes(db.id(i));
    w.U16(static_cast<std::uint16_t>(db.labels(i).size()));
    for (auto l : db.labels(i)) w.U16(l);
  }
  detail::WriteFileBytes(path, w.buffer());
}

CodeDatabase LoadCodeDatabase(const std::filesystem::path& path) {
  const auto bytes = detail::ReadFileBytes(path);
  detail::ByteReader in(bytes, path.string());
  detail::ExpectHeader(in, kMagic, kVersion, path.string());
  const std::uint32_t K = in.U32();
  const std::uint32_t R = in.U32();
  const std::uint32_t count = in.U32();
  if (K < 2 || K > 0x10000 || R == 0) Fail(ErrorCode::kBadFormat, path.string() + ": invalid K/R");
  CodeDatabase layout(K, R);
  if (in.remaining() / sizeof(std::uint64_t) / layout.words_per_code() < count) {
    Fail(ErrorCode::kTruncated, path.string() + ": truncated code section at byte offset " +
                                    std::to_string(bytes.size()));
  }
  std::vector<std::uint64_t> words(static_cast<std::size_t>(count) * layout.words_per_code());
  for (auto& w : words) w = in.U64();
  CodeDatabase db(K, R);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t id_len = in.U16();
    std::string id = in.Bytes(id_len);
    std::vector<std::uint16_t> labels(in.U16());
    for (auto& l : labels) l = in.U16();
    OrdinalCode code;
    code.symbols.resize(R);
    const std::size_t per_word = 64 / BitsPerSymbol(K);
    const unsigned bits = BitsPerSymbol(K);
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    const std::uint64_t* w = words.data() + i * layout.words_per_code();
    for (std::size_t r = 0; r < R; ++r) {
      code.symbols[r] = static_cast<std::uint16_t>((w[r / per_word] >> ((r % per_word) * bits)) & mask);
    }
    db.Add(std::move(id), std::move(labels), code);
  }
  if (!in.done()) Fail(ErrorCode::kBadFormat, path.string() + ": trailing bytes");
  return db;
}

std::string SearchResultsCsv(const CodeDatabase& db, const CodeDatabase& queries,
                             std::size_t topN, DistanceKind kind) {
  if (db.K() != queries.K() || db.R() != queries.R()) {
    Fail(ErrorCode::kDimensionMismatch, "search: query and database codes differ in K or R");
  }
  std::ostringstream out;
  out << "query_id,rank,db_id,distance\n";
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto ranked = Search(db, queries.code(q), topN, kind);
    for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
      out << queries.id(q) << ',' << rank + 1 << ',' << db.id(ranked[rank].index) << ','
          << ranked[rank].distance << '\n';
    }
  }
  return out.str();
}

}  // namespace ordhash
