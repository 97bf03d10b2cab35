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

#include "ordhash/ordhash.h"

#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "ordhash/attention.hpp"
#include "ordhash/dataio.hpp"
#include "ordhash/detail/binio.hpp"
#include "ordhash/error.hpp"
#include "ordhash/eval.hpp"
#include "ordhash/hashhead.hpp"
#include "ordhash/index.hpp"
#include "ordhash/lossgrad.hpp"
#include "ordhash/trainer.hpp"

struct oh_dataset {
  ordhash::Dataset data;
};

struct oh_attention {
  ordhash::AttentionModel model;
};

struct oh_head {
  ordhash::HashHeadParams params;
  std::optional<ordhash::TrainConfig> config;
};

struct oh_codes {
  ordhash::CodeDatabase db;
};

namespace {

thread_local std::string g_last_error;

oh_status ToStatus(ordhash::ErrorCode code) {
  using ordhash::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return OH_ERR_INVALID_ARGUMENT;
    case ErrorCode::kDimensionMismatch: return OH_ERR_DIMENSION_MISMATCH;
    case ErrorCode::kNonFinite: return OH_ERR_NON_FINITE;
    case ErrorCode::kTruncated: return OH_ERR_TRUNCATED;
    case ErrorCode::kChecksumMismatch: return OH_ERR_CHECKSUM;
    case ErrorCode::kBadFormat: return OH_ERR_FORMAT;
    case ErrorCode::kSampling: return OH_ERR_SAMPLING;
    case ErrorCode::kNumerical: return OH_ERR_NUMERICAL;
    case ErrorCode::kIo: return OH_ERR_IO;
  }
  return OH_ERR_INTERNAL;
}

template <typename F>
oh_status Guard(F&& f) noexcept {
  try {
    f();
    return OH_OK;
  } catch (const ordhash::Error& e) {
    g_last_error = e.what();
    return ToStatus(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return OH_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OH_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return OH_ERR_INTERNAL;
  }
}

template <typename T>
T& Deref(T* p, const char* name) {
  if (p == nullptr) {
    ordhash::Fail(ordhash::ErrorCode::kInvalidArgument, std::string(name) + " is null");
  }
  return *p;
}

const char* Str(const char* s, const char* name) {
  if (s == nullptr) {
    ordhash::Fail(ordhash::ErrorCode::kInvalidArgument, std::string(name) + " is null");
  }
  return s;
}

ordhash::DistanceKind ToDistance(oh_distance d) {
  switch (d) {
    case OH_DISTANCE_SYMBOL: return ordhash::DistanceKind::kSymbol;
    case OH_DISTANCE_BINARY_EXPANSION: return ordhash::DistanceKind::kBinaryExpansion;
  }
  ordhash::Fail(ordhash::ErrorCode::kInvalidArgument, "unknown distance kind");
}

}  // namespace

extern "C" {

OH_API const char* oh_version(void) { return "0.1.0"; }

OH_API const char* oh_status_string(oh_status status) {
  switch (status) {
    case OH_OK: return "ok";
    case OH_ERR_INVALID_ARGUMENT: return "invalid argument";
    case OH_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case OH_ERR_NON_FINITE: return "non-finite value";
    case OH_ERR_TRUNCATED: return "truncated input";
    case OH_ERR_CHECKSUM: return "checksum mismatch";
    case OH_ERR_FORMAT: return "bad format";
    case OH_ERR_SAMPLING: return "sampling error";
    case OH_ERR_NUMERICAL: return "numerical failure";
    case OH_ERR_IO: return "I/O error";
    case OH_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

OH_API const char* oh_last_error(void) { return g_last_error.c_str(); }

OH_API void oh_synth_options_default(oh_synth_options* options) {
  if (options == nullptr) return;
  const ordhash::SynthConfig d;
  *options = {d.n_per_class, d.C, d.M, d.X, d.Y, d.noise_sigma, d.seed};
}

OH_API oh_status oh_synth_generate(const oh_synth_options* options, const char* split,
                                   const char* base_path) {
  return Guard([&] {
    const auto& o = Deref(options, "options");
    const ordhash::SynthConfig config{o.n_per_class, o.classes, o.channels, o.width,
                                      o.height,      o.noise_sigma, o.seed};
    auto ds = ordhash::SynthGenerate(config, ordhash::ParseSplit(Str(split, "split")));
    ordhash::SaveDataset(ds, Str(base_path, "base_path"));
  });
}

OH_API oh_status oh_dataset_load(const char* base_path, oh_dataset** out) {
  return Guard([&] {
    Deref(out, "out") = nullptr;
    auto ds = ordhash::LoadDataset(Str(base_path, "base_path"));
    *out = new oh_dataset{std::move(ds)};
  });
}

OH_API oh_status oh_dataset_info_get(const oh_dataset* dataset, oh_dataset_info* info) {
  return Guard([&] {
    const auto& m = Deref(dataset, "dataset").data.manifest;
    Deref(info, "info") = {m.M, m.X, m.Y, m.C, m.count, m.checksum};
  });
}

OH_API void oh_dataset_free(oh_dataset* dataset) { delete dataset; }

OH_API void oh_attention_options_default(oh_attention_options* options) {
  if (options == nullptr) return;
  const ordhash::ClassifierConfig d;
  *options = {d.epochs, d.lr, d.batch, d.seed};
}

OH_API oh_status oh_attention_train(const oh_dataset* train, const oh_attention_options* options,
                                    oh_attention** out) {
  return Guard([&] {
    Deref(out, "out") = nullptr;
    const auto& ds = Deref(train, "train").data;
    const auto& o = Deref(options, "options");
    const ordhash::ClassifierConfig config{o.epochs, o.lr, o.batch, o.seed};
    *out = new oh_attention{ordhash::TrainClassifier(ds.records, ds.manifest.C, config)};
  });
}

OH_API oh_status oh_attention_accuracy(const oh_attention* model, const oh_dataset* dataset,
                                       double* accuracy) {
  return Guard([&] {
    Deref(accuracy, "accuracy") =
        ordhash::ClassifierAccuracy(Deref(model, "model").model, Deref(dataset, "dataset").data.records);
  });
}

OH_API oh_status oh_attention_save(const oh_attention* model, const char* path) {
  return Guard([&] { ordhash::SaveAttentionModel(Deref(model, "model").model, Str(path, "path")); });
}

OH_API oh_status oh_attention_load(const char* path, oh_attention** out) {
  return Guard([&] {
    Deref(out, "out") = nullptr;
    *out = new oh_attention{ordhash::LoadAttentionModel(Str(path, "path"))};
  });
}

OH_API oh_status oh_attention_dump_maps(const oh_attention* model, const oh_dataset* dataset,
                                        const char* dir) {
  return Guard([&] {
    const auto& m = Deref(model, "model").model;
    const auto& ds = Deref(dataset, "dataset").data;
    const std::filesystem::path root = Str(dir, "dir");
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) ordhash::Fail(ordhash::ErrorCode::kIo, "cannot create " + root.string());
    for (const auto& r : ds.records) {
      ordhash::detail::WriteFileText(root / (r.id + ".csv"),
                                     ordhash::AttentionMapCsv(ordhash::ComputeAttentionMap(m, r.z)));
    }
  });
}

OH_API void oh_attention_free(oh_attention* model) { delete model; }

OH_API void oh_train_options_default(oh_train_options* options) {
  if (options == nullptr) return;
  const ordhash::TrainConfig d;
  *options = {d.K, d.R, d.iters, d.batch, d.lr, d.seed, d.balance, d.log_every};
}

OH_API oh_status oh_head_train(const oh_dataset* train, const oh_attention* attention,
                               const oh_train_options* options, const char* log_csv_path,
                               oh_head** out, oh_train_summary* summary) {
  return Guard([&] {
    Deref(out, "out") = nullptr;
    const auto& o = Deref(options, "options");
    const ordhash::TrainConfig config{o.k, o.r, o.iters, o.batch, o.lr, o.seed, o.balance, o.log_every};
    auto result =
        ordhash::Train(Deref(train, "train").data, Deref(attention, "attention").model, config);
    if (log_csv_path != nullptr) {
      ordhash::detail::WriteFileText(log_csv_path, ordhash::TrainLogCsv(result.log));
    }
    if (summary != nullptr) {
      summary->initial_loss = ordhash::LeadingMeanLoss(result.loss_trace);
      summary->final_loss = ordhash::TrailingMeanLoss(result.loss_trace);
      summary->last_grad_norm = result.log.empty() ? 0.0 : result.log.back().grad_norm;
      summary->iterations = result.loss_trace.size();
    }
    *out = new oh_head{std::move(result.params), config};
  });
}

OH_API oh_status oh_head_save(const oh_head* head, const char* path) {
  return Guard([&] {
    const auto& h = Deref(head, "head");
    if (h.config) {
      ordhash::SaveCheckpoint(h.params, *h.config, Str(path, "path"));
    } else {
      ordhash::SaveHeadParams(h.params, Str(path, "path"));
    }
  });
}

OH_API oh_status oh_head_load(const char* path, oh_head** out) {
  return Guard([&] {
    Deref(out, "out") = nullptr;
    *out = new oh_head{ordhash::LoadHeadParams(Str(path, "path")), std::nullopt};
  });
}

OH_API oh_status oh_head_shape(const oh_head* head, size_t* m, size_t* k, size_t* r) {
  return Guard([&] {
    const auto& p = Deref(head, "head").params;
    if (m) *m = p.M;
    if (k) *k = p.K;
    if (r) *r = p.R();
  });
}

OH_API void oh_head_free(oh_head* head) { delete head; }

OH_API void oh_gradcheck_options_default(oh_gradcheck_options* options) {
  if (options == nullptr) return;
  const ordhash::GradCheckConfig d;
  *options = {d.M, d.X, d.Y, d.C, d.k_min, d.k_max, d.r_min, d.r_max, d.draws, d.pairs, d.step, d.seed};
}

OH_API oh_status oh_gradcheck(const oh_gradcheck_options* options, const char* csv_path,
                              double* max_rel_err) {
  return Guard([&] {
    const auto& o = Deref(options, "options");
    const ordhash::GradCheckConfig config{o.channels, o.width, o.height, o.classes,
                                          o.k_min,    o.k_max, o.r_min,  o.r_max,
                                          o.draws,    o.pairs, o.step,   o.seed};
    const auto rows = ordhash::RunGradCheck(config);
    if (csv_path != nullptr) ordhash::detail::WriteFileText(csv_path, ordhash::GradCheckCsv(rows));
    double worst = 0.0;
    for (const auto& row : rows) worst = std::max(worst, row.errors.Max());
    if (max_rel_err != nullptr) *max_rel_err = worst;
  });
}

OH_API oh_status oh_bit_budget(size_t bits, size_t k, size_t* r) {
  return Guard([&] { Deref(r, "r") = ordhash::BitBudget(bits, k); });
}

OH_API oh_status oh_encode(const oh_head* head, const oh_attention* attention,
                           const oh_dataset* dataset, oh_codes** out) {
  return Guard([&] {
    Deref(out, "out") = nullptr;
    *out = new oh_codes{ordhash::BuildCodeDatabase(Deref(head, "head").params,
                                                   Deref(attention, "attention").model,
                                                   Deref(dataset, "dataset").data)};
  });
}

OH_API oh_status oh_codes_save(const oh_codes* codes, const char* path) {
  return Guard([&] { ordhash::SaveCodeDatabase(Deref(codes, "codes").db, Str(path, "path")); });
}

OH_API oh_status oh_codes_load(const char* path, oh_codes** out) {
  return Guard([&] {
    Deref(out, "out") = nullptr;
    *out = new oh_codes{ordhash::LoadCodeDatabase(Str(path, "path"))};
  });
}

OH_API oh_status oh_codes_count(const oh_codes* codes, size_t* count) {
  return Guard([&] { Deref(count, "count") = Deref(codes, "codes").db.size(); });
}

OH_API oh_status oh_codes_get(const oh_codes* codes, size_t index, uint16_t* symbols,
                              size_t capacity) {
  return Guard([&] {
    const auto& db = Deref(codes, "codes").db;
    if (index >= db.size()) ordhash::Fail(ordhash::ErrorCode::kInvalidArgument, "index out of range");
    if (symbols == nullptr || capacity < db.R()) {
      ordhash::Fail(ordhash::ErrorCode::kInvalidArgument, "symbol buffer smaller than R");
    }
    const auto code = db.code(index);
    for (std::size_t r = 0; r < code.size(); ++r) symbols[r] = code.symbols[r];
  });
}

OH_API void oh_codes_free(oh_codes* codes) { delete codes; }

OH_API oh_status oh_search(const oh_codes* database, const oh_codes* queries, size_t top_n,
                           oh_distance distance, const char* csv_path) {
  return Guard([&] {
    const auto csv = ordhash::SearchResultsCsv(Deref(database, "database").db,
                                               Deref(queries, "queries").db, top_n,
                                               ToDistance(distance));
    ordhash::detail::WriteFileText(Str(csv_path, "csv_path"), csv);
  });
}

OH_API oh_status oh_evaluate(const oh_codes* database, const oh_codes* queries,
                             const oh_eval_options* options, const char* out_dir, double* map) {
  return Guard([&] {
    const auto& o = Deref(options, "options");
    ordhash::EvalOptions eo;
    eo.distance = ToDistance(o.distance);
    eo.map_depth = o.map_depth;
    const auto report =
        ordhash::Evaluate(Deref(database, "database").db, Deref(queries, "queries").db, eo);
    ordhash::WriteMetricsReport(report, Str(out_dir, "out_dir"));
    if (map != nullptr) *map = report.map;
  });
}

}  // extern "C"
