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

#include "ordhash/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "ordhash/detail/binio.hpp"
#include "ordhash/error.hpp"

namespace ordhash {
namespace {

constexpr char kManifestMagic[] = "DOHDATA1";
constexpr char kFeatMagic[] = "DOHF";
constexpr std::uint8_t kFeatVersion = 0x01;

std::filesystem::path StripExtension(const std::filesystem::path& base) {
  const auto ext = base.extension();
  if (ext == ".manifest" || ext == ".feat") {
    auto p = base;
    p.replace_extension();
    return p;
  }
  return base;
}

std::filesystem::path WithSuffix(const std::filesystem::path& base, const char* suffix) {
  auto p = StripExtension(base);
  p += suffix;
  return p;
}

void ValidateRecord(const FeatureRecord& r, const DatasetManifest& m, std::size_t index) {
  const std::string where = "record " + std::to_string(index) + " ('" + r.id + "')";
  if (r.v.size() != m.M || r.z.channels() != m.M || r.z.width() != m.X ||
      r.z.height() != m.Y) {
    Fail(ErrorCode::kDimensionMismatch,
         where + ": dims (M=" + std::to_string(r.z.channels()) + ", X=" +
             std::to_string(r.z.width()) + ", Y=" + std::to_string(r.z.height()) +
             ", |v|=" + std::to_string(r.v.size()) + ") do not match manifest (M=" +
             std::to_string(m.M) + ", X=" + std::to_string(m.X) + ", Y=" + std::to_string(m.Y) +
             ")");
  }
  if (r.labels.empty()) Fail(ErrorCode::kInvalidArgument, where + ": empty label set");
  for (std::size_t k = 0; k < r.labels.size(); ++k) {
    if (r.labels[k] >= m.C) {
      Fail(ErrorCode::kInvalidArgument, where + ": label " + std::to_string(r.labels[k]) +
                                            " outside [0, " + std::to_string(m.C) + ")");
    }
    if (k > 0 && r.labels[k] <= r.labels[k - 1]) {
      Fail(ErrorCode::kInvalidArgument, where + ": labels must be sorted and unique");
    }
  }
  if (r.id.size() > 0xFFFF) Fail(ErrorCode::kInvalidArgument, where + ": id too long");
  if (!AllFinite(r.v) || !AllFinite(r.z.data())) {
    Fail(ErrorCode::kNonFinite, where + ": non-finite feature value");
  }
}

std::string FormatManifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << kManifestMagic << "\n"
      << "M=" << m.M << "\n"
      << "X=" << m.X << "\n"
      << "Y=" << m.Y << "\n"
      << "C=" << m.C << "\n"
      << "count=" << m.count << "\n"
      << "split=" << SplitName(m.split) << "\n"
      << "checksum=" << m.checksum << "\n";
  return out.str();
}

std::size_t ParsePositive(const std::string& key, const std::string& value, bool allow_zero) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size() || (!allow_zero && v == 0)) {
    Fail(ErrorCode::kBadFormat, "manifest: bad value for " + key + ": '" + value + "'");
  }
  return static_cast<std::size_t>(v);
}

DatasetManifest ParseManifest(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kManifestMagic) {
    Fail(ErrorCode::kBadFormat, what + ": missing " + std::string(kManifestMagic) + " header");
  }
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) Fail(ErrorCode::kBadFormat, what + ": bad line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) Fail(ErrorCode::kBadFormat, what + ": missing key " + key);
    return it->second;
  };
  DatasetManifest m;
  m.M = ParsePositive("M", get("M"), false);
  m.X = ParsePositive("X", get("X"), false);
  m.Y = ParsePositive("Y", get("Y"), false);
  m.C = ParsePositive("C", get("C"), false);
  m.count = ParsePositive("count", get("count"), true);
  m.split = ParseSplit(get("split"));
  const std::string& cs = get("checksum");
  std::size_t pos = 0;
  try {
    m.checksum = std::stoull(cs, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != cs.size()) Fail(ErrorCode::kBadFormat, what + ": bad checksum value");
  if (m.C < 2) Fail(ErrorCode::kBadFormat, what + ": C must be at least 2");
  if (kv.size() != 7) Fail(ErrorCode::kBadFormat, what + ": unexpected keys");
  return m;
}

// Parses the record section of a .feat blob (after magic and version).
std::vector<FeatureRecord> ParseRecords(detail::ByteReader& in, const DatasetManifest& m) {
  std::vector<FeatureRecord> records;
  records.reserve(m.count);
  const std::size_t cells = m.M * m.X * m.Y;
  for (std::size_t i = 0; i < m.count; ++i) {
    try {
      FeatureRecord r;
      const std::uint16_t id_len = in.U16();
      r.id = in.Bytes(id_len);
      const std::uint16_t n_labels = in.U16();
      r.labels.resize(n_labels);
      for (auto& l : r.labels) l = in.U16();
      r.v.resize(m.M);
      for (auto& x : r.v) x = static_cast<double>(in.F32());
      r.z = FeatureMap(m.M, m.X, m.Y);
      auto zd = r.z.data();
      for (std::size_t c = 0; c < cells; ++c) zd[c] = static_cast<double>(in.F32());
      ValidateRecord(r, m, i);
      records.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kTruncated) {
        Fail(ErrorCode::kTruncated, "record " + std::to_string(i) + ": " + e.what());
      }
      throw;
    }
  }
  if (!in.done()) {
    Fail(ErrorCode::kDimensionMismatch, std::to_string(in.remaining()) +
                                            " trailing bytes after " + std::to_string(m.count) +
                                            " records");
  }
  return records;
}

}  // namespace

const char* SplitName(Split split) noexcept {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDatabase: return "database";
    case Split::kQuery: return "query";
  }
  return "train";
}

Split ParseSplit(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "database") return Split::kDatabase;
  if (name == "query") return Split::kQuery;
  Fail(ErrorCode::kInvalidArgument, "unknown split '" + name + "'");
}

std::filesystem::path ManifestPath(const std::filesystem::path& base) {
  return WithSuffix(base, ".manifest");
}

std::filesystem::path FeaturePath(const std::filesystem::path& base) {
  return WithSuffix(base, ".feat");
}

void SaveDataset(Dataset& dataset, const std::filesystem::path& base) {
  auto& m = dataset.manifest;
  if (m.M == 0 || m.X == 0 || m.Y == 0) Fail(ErrorCode::kInvalidArgument, "dataset dims must be positive");
  if (m.C < 2) Fail(ErrorCode::kInvalidArgument, "dataset needs at least 2 categories");
  detail::ByteWriter w;
  w.Bytes(kFeatMagic);
  w.U8(kFeatVersion);
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    ValidateRecord(r, m, i);
    if (r.labels.size() > 0xFFFF) Fail(ErrorCode::kInvalidArgument, "too many labels");
    w.U16(static_cast<std::uint16_t>(r.id.size()));
    w.Bytes(r.id);
    w.U16(static_cast<std::uint16_t>(r.labels.size()));
    for (auto l : r.labels) w.U16(l);
    for (double x : r.v) w.F32(static_cast<float>(x));
    for (double x : r.z.data()) w.F32(static_cast<float>(x));
  }
  const auto& bytes = w.buffer();
  m.count = dataset.records.size();
  m.checksum = detail::Fnv1a64(std::span(bytes).subspan(5));
  detail::WriteFileBytes(FeaturePath(base), bytes);
  detail::WriteFileText(ManifestPath(base), FormatManifest(m));
}

Dataset LoadDataset(const std::filesystem::path& base) {
  const auto manifest_path = ManifestPath(base);
  const auto feat_path = FeaturePath(base);
  Dataset ds;
  ds.manifest = ParseManifest(detail::ReadFileText(manifest_path), manifest_path.string());
  const auto bytes = detail::ReadFileBytes(feat_path);
  detail::ByteReader in(bytes, feat_path.string());
  detail::ExpectHeader(in, kFeatMagic, kFeatVersion, feat_path.string());

  const bool intact = detail::Fnv1a64(std::span(bytes).subspan(5)) == ds.manifest.checksum;
  try {
    ds.records = ParseRecords(in, ds.manifest);
  } catch (const Error& e) {
    // An intact blob that does not parse under the manifest dims means the
    // manifest and the blob disagree on shape.
    if (intact && (e.code() == ErrorCode::kTruncated || e.code() == ErrorCode::kDimensionMismatch ||
                   e.code() == ErrorCode::kInvalidArgument)) {
      Fail(ErrorCode::kDimensionMismatch,
           feat_path.string() + ": records do not match manifest dims: " + e.what());
    }
    if (!intact && e.code() == ErrorCode::kInvalidArgument) {
      Fail(ErrorCode::kChecksumMismatch, feat_path.string() + ": checksum mismatch (" +
                                             e.what() + ")");
    }
    throw;
  }
  if (!intact) Fail(ErrorCode::kChecksumMismatch, feat_path.string() + ": checksum mismatch");
  return ds;
}

int SimilarityLabel(const FeatureRecord& a, const FeatureRecord& b) noexcept {
  return LabelSetsIntersect(a.labels, b.labels);
}

int LabelSetsIntersect(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b) noexcept {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) return 1;
    if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return 0;
}

PairBatch SamplePairs(std::span<const FeatureRecord> records, std::size_t n, std::uint64_t seed,
                      double balance) {
  if (records.size() < 2) Fail(ErrorCode::kSampling, "need at least 2 records to sample pairs");
  if (!(balance >= 0.0 && balance <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "balance must lie in [0, 1]");
  }
  const auto n_sim = static_cast<std::size_t>(std::llround(balance * static_cast<double>(n)));
  const std::size_t n_dis = n - n_sim;

  // Records that have at least one similar partner, reached through a label
  // shared with some other record.
  std::map<std::uint16_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (auto l : records[i].labels) by_label[l].push_back(i);
  }
  std::vector<std::size_t> sim_anchor;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (auto l : records[i].labels) {
      if (by_label[l].size() >= 2) {
        sim_anchor.push_back(i);
        break;
      }
    }
  }
  if (n_sim > 0 && sim_anchor.empty()) {
    Fail(ErrorCode::kSampling, "no similar pairs exist in the dataset");
  }
  if (n_dis > 0) {
    bool any = false;
    for (std::size_t i = 0; i < records.size() && !any; ++i) {
      for (std::size_t j = i + 1; j < records.size() && !any; ++j) {
        any = SimilarityLabel(records[i], records[j]) == 0;
      }
    }
    if (!any) Fail(ErrorCode::kSampling, "no dissimilar pairs exist in the dataset");
  }

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](std::size_t bound) {
    return std::uniform_int_distribution<std::size_t>(0, bound - 1)(rng);
  };

  PairBatch batch;
  batch.reserve(n);
  for (std::size_t t = 0; t < n_sim; ++t) {
    const std::size_t i = sim_anchor[uniform(sim_anchor.size())];
    std::vector<std::uint16_t> usable;
    for (auto l : records[i].labels) {
      if (by_label[l].size() >= 2) usable.push_back(l);
    }
    const auto& members = by_label[usable[uniform(usable.size())]];
    std::size_t j = i;
    while (j == i) j = members[uniform(members.size())];
    batch.push_back({i, j, 1});
  }

  std::vector<LabeledPair> dis_pool;  // built only when rejection stalls
  for (std::size_t t = 0; t < n_dis; ++t) {
    bool found = false;
    for (int attempt = 0; attempt < 10000 && dis_pool.empty(); ++attempt) {
      const std::size_t i = uniform(records.size());
      const std::size_t j = uniform(records.size());
      if (i != j && SimilarityLabel(records[i], records[j]) == 0) {
        batch.push_back({i, j, 0});
        found = true;
        break;
      }
    }
    if (found) continue;
    if (dis_pool.empty()) {
      for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = 0; j < records.size(); ++j) {
          if (i != j && SimilarityLabel(records[i], records[j]) == 0) dis_pool.push_back({i, j, 0});
        }
      }
    }
    batch.push_back(dis_pool[uniform(dis_pool.size())]);
  }

  std::shuffle(batch.begin(), batch.end(), rng);
  return batch;
}

Dataset SynthGenerate(const SynthConfig& config, Split split) {
  if (config.n_per_class == 0 || config.C < 2 || config.M == 0 || config.X == 0 ||
      config.Y == 0) {
    Fail(ErrorCode::kInvalidArgument,
         "synth: n_per_class, M, X, Y must be positive and C at least 2");
  }
  if (!(config.noise_sigma >= 0.0) || !std::isfinite(config.noise_sigma)) {
    Fail(ErrorCode::kInvalidArgument, "synth: noise_sigma must be finite and nonnegative");
  }
  if (config.C > 0xFFFF) Fail(ErrorCode::kInvalidArgument, "synth: too many categories");

  std::mt19937_64 proto_rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<RealVec> prototypes(config.C, RealVec(config.M));
  for (auto& p : prototypes) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& x : p) {
        x = unit(proto_rng);
        norm += x * x;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& x : p) x /= norm;
  }

  const std::uint64_t salt = 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(split) + 1);
  std::mt19937_64 rng(config.seed ^ salt);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto jitter = [&]() { return config.noise_sigma * noise(rng); };
  auto quantize = [](double x) { return static_cast<double>(static_cast<float>(x)); };

  const std::size_t bw = std::max<std::size_t>(1, config.X / 2);
  const std::size_t bh = std::max<std::size_t>(1, config.Y / 2);

  Dataset ds;
  ds.manifest.M = config.M;
  ds.manifest.X = config.X;
  ds.manifest.Y = config.Y;
  ds.manifest.C = config.C;
  ds.manifest.split = split;
  ds.records.reserve(config.C * config.n_per_class);
  for (std::size_t c = 0; c < config.C; ++c) {
    const auto& p = prototypes[c];
    for (std::size_t n = 0; n < config.n_per_class; ++n) {
      FeatureRecord r;
      char id[64];
      std::snprintf(id, sizeof id, "%s_%06zu", SplitName(split), ds.records.size());
      r.id = id;
      r.labels = {static_cast<std::uint16_t>(c)};
      r.v.resize(config.M);
      for (std::size_t m = 0; m < config.M; ++m) r.v[m] = quantize(p[m] + jitter());

      const std::size_t x0 = std::uniform_int_distribution<std::size_t>(0, config.X - bw)(rng);
      const std::size_t y0 = std::uniform_int_distribution<std::size_t>(0, config.Y - bh)(rng);
      r.z = FeatureMap(config.M, config.X, config.Y);
      for (std::size_t m = 0; m < config.M; ++m) {
        for (std::size_t y = 0; y < config.Y; ++y) {
          for (std::size_t x = 0; x < config.X; ++x) {
            const bool in_block = x >= x0 && x < x0 + bw && y >= y0 && y < y0 + bh;
            r.z.at(m, y, x) = quantize((in_block ? p[m] : 0.0) + jitter());
          }
        }
      }
      ds.records.push_back(std::move(r));
    }
  }
  ds.manifest.count = ds.records.size();
  return ds;
}

}  // namespace ordhash
