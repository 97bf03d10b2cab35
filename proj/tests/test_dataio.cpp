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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "ordhash/dataio.hpp"
#include "ordhash/error.hpp"
#include "test_util.hpp"

using namespace ordhash;
using ordhash::testing::CodeOf;
using ordhash::testing::TempDir;

namespace {

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void Spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

SynthConfig Small(std::size_t M = 4) {
  SynthConfig c;
  c.n_per_class = 5;
  c.C = 3;
  c.M = M;
  c.X = 3;
  c.Y = 2;
  c.seed = 5;
  return c;
}

FeatureRecord WithLabels(std::vector<std::uint16_t> labels) {
  FeatureRecord r;
  r.labels = std::move(labels);
  return r;
}

}  // namespace

TEST_CASE("synthetic dataset round-trips bit-exactly") {
  TempDir tmp("dataio");
  Dataset ds = SynthGenerate(Small(), Split::kDatabase);
  SaveDataset(ds, tmp / "db");
  const Dataset back = LoadDataset(tmp / "db");
  CHECK(back.manifest == ds.manifest);
  CHECK(back.records == ds.records);
  CHECK(back.manifest.split == Split::kDatabase);
  // Either extension is accepted as the base name.
  CHECK(LoadDataset(tmp / "db.feat").records == ds.records);
  CHECK(LoadDataset(tmp / "db.manifest").records == ds.records);
}

TEST_CASE("hand-built dataset round-trips, including multi-label records") {
  TempDir tmp("dataio");
  Dataset ds;
  ds.manifest = {2, 2, 1, 8, 0, Split::kTrain, 0};
  std::mt19937_64 rng(1);
  for (int i = 0; i < 6; ++i) {
    FeatureRecord r;
    r.id = "rec-" + std::to_string(i);
    r.labels = {static_cast<std::uint16_t>(i % 3), 7};
    r.v = {static_cast<float>(i) * 0.5f, -1.25f};
    r.z = FeatureMap(2, 2, 1);
    for (double& x : r.z.data()) x = static_cast<float>(std::normal_distribution<double>()(rng));
    ds.records.push_back(r);
  }
  SaveDataset(ds, tmp / "hand");
  CHECK(ds.manifest.count == 6);
  CHECK(LoadDataset(tmp / "hand").records == ds.records);
}

TEST_CASE("synth generator contract") {
  SynthConfig c = Small();
  c.n_per_class = 100;
  const Dataset ds = SynthGenerate(c, Split::kTrain);
  CHECK(ds.records.size() == 300);

  // Every category is represented equally; ids are unique.
  std::vector<int> per(3, 0);
  std::vector<std::string> ids;
  for (const auto& r : ds.records) {
    REQUIRE(r.labels.size() == 1);
    ++per[r.labels[0]];
    ids.push_back(r.id);
  }
  CHECK(per == std::vector<int>{100, 100, 100});
  std::sort(ids.begin(), ids.end());
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());

  SynthConfig quiet = Small();
  quiet.noise_sigma = 0.0;
  const Dataset q = SynthGenerate(quiet, Split::kTrain);
  for (const auto& a : q.records) {
    for (const auto& b : q.records) {
      if (a.labels == b.labels) CHECK(a.v == b.v);
    }
  }
}

TEST_CASE("same seed gives the same checksum; different splits differ") {
  TempDir tmp("dataio");
  Dataset a = SynthGenerate(Small(), Split::kTrain);
  Dataset b = SynthGenerate(Small(), Split::kTrain);
  Dataset q = SynthGenerate(Small(), Split::kQuery);
  SaveDataset(a, tmp / "a");
  SaveDataset(b, tmp / "b");
  SaveDataset(q, tmp / "q");
  CHECK(a.manifest.checksum == b.manifest.checksum);
  CHECK(Slurp(tmp / "a.feat") == Slurp(tmp / "b.feat"));
  CHECK(a.manifest.checksum != q.manifest.checksum);
}

TEST_CASE("manifest dims disagreeing with the records is a dimension mismatch") {
  TempDir tmp("dataio");
  Dataset ds = SynthGenerate(Small(8), Split::kTrain);
  SaveDataset(ds, tmp / "d");
  std::string manifest = Slurp(tmp / "d.manifest");
  const auto pos = manifest.find("M=8\n");
  REQUIRE(pos != std::string::npos);
  manifest.replace(pos, 4, "M=16\n");
  Spit(tmp / "d.manifest", manifest);
  CHECK(CodeOf([&] { LoadDataset(tmp / "d"); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("truncated feature file names the record index") {
  TempDir tmp("dataio");
  Dataset ds = SynthGenerate(Small(), Split::kTrain);
  SaveDataset(ds, tmp / "t");
  const std::string full = Slurp(tmp / "t.feat");
  // Record size: id, labels, v and z; cut halfway through record 3.
  const std::size_t rec = 2 + ds.records[0].id.size() + 2 + 2 + 4 * (4 + 4 * 3 * 2);
  Spit(tmp / "t.feat", full.substr(0, 5 + 3 * rec + rec / 2));
  try {
    LoadDataset(tmp / "t");
    FAIL("expected truncation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTruncated);
    CHECK(std::string(e.what()).find("record 3") != std::string::npos);
  }
}

TEST_CASE("corrupted payload is a checksum failure") {
  TempDir tmp("dataio");
  Dataset ds = SynthGenerate(Small(), Split::kTrain);
  SaveDataset(ds, tmp / "c");
  std::string bytes = Slurp(tmp / "c.feat");
  bytes[bytes.size() - 3] ^= 0x01;
  Spit(tmp / "c.feat", bytes);
  CHECK(CodeOf([&] { LoadDataset(tmp / "c"); }) == ErrorCode::kChecksumMismatch);
}

TEST_CASE("non-finite values are rejected") {
  TempDir tmp("dataio");
  Dataset ds = SynthGenerate(Small(), Split::kTrain);
  ds.records[2].v[1] = std::numeric_limits<double>::infinity();
  CHECK(CodeOf([&] { SaveDataset(ds, tmp / "n"); }) == ErrorCode::kNonFinite);

  // Write a valid file, then overwrite one float with NaN and fix the checksum.
  Dataset ok = SynthGenerate(Small(), Split::kTrain);
  SaveDataset(ok, tmp / "n");
  std::string bytes = Slurp(tmp / "n.feat");
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(&bytes[bytes.size() - 4], &nan, 4);
  Spit(tmp / "n.feat", bytes);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 5; i < bytes.size(); ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= 0x100000001b3ULL;
  }
  std::string manifest = Slurp(tmp / "n.manifest");
  manifest = manifest.substr(0, manifest.find("checksum=")) + "checksum=" + std::to_string(h) + "\n";
  Spit(tmp / "n.manifest", manifest);
  CHECK(CodeOf([&] { LoadDataset(tmp / "n"); }) == ErrorCode::kNonFinite);
}

TEST_CASE("bad magic and missing files") {
  TempDir tmp("dataio");
  Dataset ds = SynthGenerate(Small(), Split::kTrain);
  SaveDataset(ds, tmp / "m");
  std::string bytes = Slurp(tmp / "m.feat");
  bytes[0] = 'X';
  Spit(tmp / "m.feat", bytes);
  CHECK(CodeOf([&] { LoadDataset(tmp / "m"); }) == ErrorCode::kBadFormat);
  CHECK(CodeOf([&] { LoadDataset(tmp / "absent"); }) == ErrorCode::kIo);
}

TEST_CASE("similarity label examples and properties") {
  CHECK(SimilarityLabel(WithLabels({1, 3}), WithLabels({3, 7})) == 1);
  CHECK(SimilarityLabel(WithLabels({0}), WithLabels({4})) == 0);
  const auto a = WithLabels({2, 5});
  CHECK(SimilarityLabel(a, a) == 1);

  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> lab(0, 6);
  std::vector<FeatureRecord> recs;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::uint16_t> l;
    for (int k = 0; k < 1 + i % 3; ++k) l.push_back(static_cast<std::uint16_t>(lab(rng)));
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    recs.push_back(WithLabels(l));
  }
  for (const auto& x : recs) {
    CHECK(SimilarityLabel(x, x) == 1);
    for (const auto& y : recs) CHECK(SimilarityLabel(x, y) == SimilarityLabel(y, x));
  }
}

TEST_CASE("pair sampling honors counts, labels and determinism") {
  const Dataset ds = SynthGenerate(Small(), Split::kTrain);
  const PairBatch a = SamplePairs(ds.records, 64, 17, 0.5);
  const PairBatch b = SamplePairs(ds.records, 64, 17, 0.5);
  CHECK(a == b);
  CHECK(a != SamplePairs(ds.records, 64, 18, 0.5));
  REQUIRE(a.size() == 64);
  std::size_t similar = 0;
  for (const auto& p : a) {
    CHECK(p.i != p.j);
    CHECK(p.s == SimilarityLabel(ds.records[p.i], ds.records[p.j]));
    similar += static_cast<std::size_t>(p.s);
  }
  CHECK(similar == 32);

  for (double balance : {0.0, 0.25, 0.3, 1.0}) {
    const PairBatch batch = SamplePairs(ds.records, 10, 3, balance);
    std::size_t n = 0;
    for (const auto& p : batch) n += static_cast<std::size_t>(p.s);
    CHECK(n == static_cast<std::size_t>(std::llround(balance * 10)));
  }
}

TEST_CASE("infeasible sampling requests are sampling errors") {
  std::vector<FeatureRecord> one_class = {WithLabels({0}), WithLabels({0}), WithLabels({0})};
  CHECK(CodeOf([&] { SamplePairs(one_class, 8, 1, 0.5); }) == ErrorCode::kSampling);
  std::vector<FeatureRecord> singletons = {WithLabels({0}), WithLabels({1}), WithLabels({2})};
  CHECK(CodeOf([&] { SamplePairs(singletons, 8, 1, 0.5); }) == ErrorCode::kSampling);
  CHECK(SamplePairs(singletons, 8, 1, 0.0).size() == 8);
  std::vector<FeatureRecord> lone = {WithLabels({0})};
  CHECK(CodeOf([&] { SamplePairs(lone, 8, 1, 0.5); }) == ErrorCode::kSampling);
}
