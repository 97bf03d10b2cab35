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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "ordhash/ordhash.h"

namespace {

namespace fs = std::filesystem;

// Exit codes: 0 success, 2 validation, 3 numerical failure, 4 I/O.
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct StageFailure {
  int exit_code;
};

int ExitCodeFor(oh_status s) {
  switch (s) {
    case OH_OK: return 0;
    case OH_ERR_NUMERICAL: return kExitNumerical;
    case OH_ERR_IO: return kExitIo;
    case OH_ERR_INTERNAL: return 1;
    default: return kExitValidation;
  }
}

void Check(oh_status s, const std::string& stage) {
  if (s == OH_OK) return;
  std::cerr << "error: stage=" << stage << " status=" << oh_status_string(s)
            << " message=" << oh_last_error() << "\n";
  throw StageFailure{ExitCodeFor(s)};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<oh_dataset, Deleter<oh_dataset, oh_dataset_free>>;
using AttentionPtr = std::unique_ptr<oh_attention, Deleter<oh_attention, oh_attention_free>>;
using HeadPtr = std::unique_ptr<oh_head, Deleter<oh_head, oh_head_free>>;
using CodesPtr = std::unique_ptr<oh_codes, Deleter<oh_codes, oh_codes_free>>;

DatasetPtr LoadDataset(const std::string& path, const std::string& stage) {
  oh_dataset* d = nullptr;
  Check(oh_dataset_load(path.c_str(), &d), stage);
  return DatasetPtr(d);
}

AttentionPtr LoadAttention(const std::string& path, const std::string& stage) {
  oh_attention* a = nullptr;
  Check(oh_attention_load(path.c_str(), &a), stage);
  return AttentionPtr(a);
}

HeadPtr LoadHead(const std::string& path, const std::string& stage) {
  oh_head* h = nullptr;
  Check(oh_head_load(path.c_str(), &h), stage);
  return HeadPtr(h);
}

CodesPtr LoadCodes(const std::string& path, const std::string& stage) {
  oh_codes* c = nullptr;
  Check(oh_codes_load(path.c_str(), &c), stage);
  return CodesPtr(c);
}

void EnsureDir(const fs::path& dir, const std::string& stage) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: stage=" << stage << " status=I/O error message=cannot create "
              << dir.string() << ": " << ec.message() << "\n";
    throw StageFailure{kExitIo};
  }
}

void EnsureParent(const fs::path& file, const std::string& stage) {
  if (file.has_parent_path()) EnsureDir(file.parent_path(), stage);
}

oh_distance ParseDistance(const std::string& name) {
  return name == "binary-expansion" ? OH_DISTANCE_BINARY_EXPANSION : OH_DISTANCE_SYMBOL;
}

void PrintKv(const std::string& key, const std::string& value) {
  std::cout << key << '=' << value << '\n';
}

void PrintKv(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  PrintKv(key, std::string(buf));
}

struct Options {
  // synth
  std::string out;
  oh_synth_options synth{};
  std::size_t train_per_class = 100;
  std::size_t db_per_class = 50;
  std::size_t query_per_class = 10;
  // train-attention
  std::string data;
  oh_attention_options attention{};
  std::string dump_attention;
  // train
  std::string attention_path;
  oh_train_options train{};
  std::size_t bits = 16;
  std::string log_path;
  // gradcheck
  oh_gradcheck_options grad{};
  // encode / search / eval
  std::string head_path;
  std::string database;
  std::string queries;
  std::size_t top = 100;
  std::string distance = "symbol";
  std::size_t map_depth = 0;
};

void AddSynthFlags(CLI::App* app, Options& o) {
  app->add_option("--classes", o.synth.classes, "Number of categories")->check(CLI::Range(2, 65535));
  app->add_option("--channels", o.synth.channels, "Feature channels M")->check(CLI::PositiveNumber);
  app->add_option("--width", o.synth.width, "Feature map width X")->check(CLI::PositiveNumber);
  app->add_option("--height", o.synth.height, "Feature map height Y")->check(CLI::PositiveNumber);
  app->add_option("--noise", o.synth.noise_sigma, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  app->add_option("--train-per-class", o.train_per_class, "Training records per category");
  app->add_option("--db-per-class", o.db_per_class, "Database records per category");
  app->add_option("--query-per-class", o.query_per_class, "Query records per category");
}

void AddAttentionFlags(CLI::App* app, Options& o) {
  app->add_option("--attn-epochs", o.attention.epochs, "Classifier training epochs");
  app->add_option("--attn-lr", o.attention.lr, "Classifier learning rate")->check(CLI::PositiveNumber);
  app->add_option("--attn-batch", o.attention.batch, "Classifier mini-batch size")->check(CLI::PositiveNumber);
  app->add_option("--dump-attention", o.dump_attention, "Directory for per-record attention map CSVs");
}

void AddTrainFlags(CLI::App* app, Options& o) {
  app->add_option("--k", o.train.k, "Symbols per code position (power of two)")->check(CLI::Range(2, 65536));
  app->add_option("--bits", o.bits, "Binary bit budget; R = bits / log2(K)")->check(CLI::PositiveNumber);
  app->add_option("--lr", o.train.lr, "Head learning rate")->check(CLI::PositiveNumber);
  app->add_option("--iters", o.train.iters, "Training iterations");
  app->add_option("--batch", o.train.batch, "Pairs per mini-batch")->check(CLI::PositiveNumber);
  app->add_option("--balance", o.train.balance, "Fraction of similar pairs per batch")->check(CLI::Range(0.0, 1.0));
  app->add_option("--log-every", o.train.log_every, "Training log interval")->check(CLI::PositiveNumber);
}

void AddEvalFlags(CLI::App* app, Options& o, bool with_top) {
  if (with_top) app->add_option("--top", o.top, "Results per query")->check(CLI::PositiveNumber);
  app->add_option("--distance", o.distance, "Code distance")
      ->check(CLI::IsMember({"symbol", "binary-expansion"}));
}

// ---- verbs ---------------------------------------------------------------

void RunSynth(Options& o) {
  EnsureDir(o.out, "synth");
  const std::pair<const char*, std::size_t> splits[] = {
      {"train", o.train_per_class}, {"database", o.db_per_class}, {"query", o.query_per_class}};
  for (const auto& [split, n] : splits) {
    oh_synth_options s = o.synth;
    s.n_per_class = n;
    const std::string base = (fs::path(o.out) / split).string();
    Check(oh_synth_generate(&s, split, base.c_str()), "synth");
    auto ds = LoadDataset(base, "synth");
    oh_dataset_info info{};
    Check(oh_dataset_info_get(ds.get(), &info), "synth");
    PrintKv(std::string(split) + ".count", std::to_string(info.count));
    PrintKv(std::string(split) + ".checksum", std::to_string(info.checksum));
  }
}

AttentionPtr TrainAttention(const Options& o, const oh_dataset* train, const std::string& out) {
  oh_attention* a = nullptr;
  Check(oh_attention_train(train, &o.attention, &a), "train-attention");
  AttentionPtr attn(a);
  EnsureParent(out, "train-attention");
  Check(oh_attention_save(attn.get(), out.c_str()), "train-attention");
  double acc = 0.0;
  Check(oh_attention_accuracy(attn.get(), train, &acc), "train-attention");
  PrintKv("attention.train_accuracy", acc);
  PrintKv("attention.path", out);
  return attn;
}

void RunTrainAttention(Options& o) {
  auto train = LoadDataset(o.data, "train-attention");
  auto attn = TrainAttention(o, train.get(), o.out);
  if (!o.dump_attention.empty()) {
    Check(oh_attention_dump_maps(attn.get(), train.get(), o.dump_attention.c_str()), "train-attention");
    PrintKv("attention.dump", o.dump_attention);
  }
}

HeadPtr TrainHead(Options& o, const oh_dataset* train, const oh_attention* attn,
                  const std::string& out, const std::string& log) {
  Check(oh_bit_budget(o.bits, o.train.k, &o.train.r), "train");
  oh_head* h = nullptr;
  oh_train_summary summary{};
  EnsureParent(out, "train");
  if (!log.empty()) EnsureParent(log, "train");
  Check(oh_head_train(train, attn, &o.train, log.empty() ? nullptr : log.c_str(), &h, &summary),
        "train");
  HeadPtr head(h);
  Check(oh_head_save(head.get(), out.c_str()), "train");
  PrintKv("train.R", std::to_string(o.train.r));
  PrintKv("train.iterations", std::to_string(summary.iterations));
  PrintKv("train.initial_loss", summary.initial_loss);
  PrintKv("train.final_loss", summary.final_loss);
  PrintKv("train.loss_ratio",
          summary.initial_loss > 0.0 ? summary.final_loss / summary.initial_loss : 0.0);
  PrintKv("train.path", out);
  return head;
}

void RunTrain(Options& o) {
  auto train = LoadDataset(o.data, "train");
  auto attn = LoadAttention(o.attention_path, "train");
  TrainHead(o, train.get(), attn.get(), o.out, o.log_path);
}

void RunGradcheck(Options& o) {
  double worst = 0.0;
  if (!o.out.empty()) EnsureParent(o.out, "gradcheck");
  Check(oh_gradcheck(&o.grad, o.out.empty() ? nullptr : o.out.c_str(), &worst), "gradcheck");
  PrintKv("gradcheck.max_rel_err", worst);
  const bool pass = worst <= 1e-4;
  PrintKv("gradcheck.pass", pass ? "true" : "false");
  if (!pass) {
    std::cerr << "error: stage=gradcheck status=numerical failure message=max relative error "
              << worst << " exceeds 1e-4\n";
    throw StageFailure{kExitNumerical};
  }
}

void Encode(const oh_head* head, const oh_attention* attn, const oh_dataset* data,
            const std::string& out) {
  oh_codes* c = nullptr;
  Check(oh_encode(head, attn, data, &c), "encode");
  CodesPtr codes(c);
  EnsureParent(out, "encode");
  Check(oh_codes_save(codes.get(), out.c_str()), "encode");
  std::size_t n = 0;
  Check(oh_codes_count(codes.get(), &n), "encode");
  PrintKv("encode.count", std::to_string(n));
  PrintKv("encode.path", out);
}

void RunEncode(Options& o) {
  auto data = LoadDataset(o.data, "encode");
  auto attn = LoadAttention(o.attention_path, "encode");
  auto head = LoadHead(o.head_path, "encode");
  Encode(head.get(), attn.get(), data.get(), o.out);
}

void Search(const Options& o, const std::string& db_path, const std::string& q_path,
            const std::string& out) {
  auto db = LoadCodes(db_path, "search");
  auto q = LoadCodes(q_path, "search");
  EnsureParent(out, "search");
  Check(oh_search(db.get(), q.get(), o.top, ParseDistance(o.distance), out.c_str()), "search");
  PrintKv("search.path", out);
}

void RunSearch(Options& o) { Search(o, o.database, o.queries, o.out); }

void Evaluate(const Options& o, const std::string& db_path, const std::string& q_path,
              const std::string& out_dir) {
  auto db = LoadCodes(db_path, "eval");
  auto q = LoadCodes(q_path, "eval");
  const oh_eval_options eo{ParseDistance(o.distance), o.map_depth};
  double map = 0.0;
  Check(oh_evaluate(db.get(), q.get(), &eo, out_dir.c_str(), &map), "eval");
  PrintKv("eval.map", map);
  PrintKv("eval.dir", out_dir);
}

void RunEval(Options& o) { Evaluate(o, o.database, o.queries, o.out); }

void RunPipeline(Options& o) {
  const fs::path root = o.out;
  const fs::path data = root / "data";
  // The one seed drives every stage.
  o.attention.seed = o.synth.seed;
  o.train.seed = o.synth.seed;

  Options synth = o;
  synth.out = data.string();
  RunSynth(synth);

  auto train = LoadDataset((data / "train").string(), "train-attention");
  const std::string attn_path = (root / "attention.doha").string();
  auto attn = TrainAttention(o, train.get(), attn_path);

  auto head = TrainHead(o, train.get(), attn.get(), (root / "head.dohh").string(),
                        (root / "train_log.csv").string());

  auto database = LoadDataset((data / "database").string(), "encode");
  auto query = LoadDataset((data / "query").string(), "encode");
  if (!o.dump_attention.empty()) {
    Check(oh_attention_dump_maps(attn.get(), query.get(), o.dump_attention.c_str()), "train-attention");
    PrintKv("attention.dump", o.dump_attention);
  }
  const std::string db_codes = (root / "database.dohc").string();
  const std::string q_codes = (root / "query.dohc").string();
  Encode(head.get(), attn.get(), database.get(), db_codes);
  Encode(head.get(), attn.get(), query.get(), q_codes);
  Search(o, db_codes, q_codes, (root / "search.csv").string());
  Evaluate(o, db_codes, q_codes, (root / "metrics").string());
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  oh_synth_options_default(&o.synth);
  oh_attention_options_default(&o.attention);
  oh_train_options_default(&o.train);
  oh_gradcheck_options_default(&o.grad);
  // One default seed for every data and training stage.
  o.synth.seed = 42;
  o.attention.seed = 42;
  o.train.seed = 42;

  CLI::App app{"ordhash: learned ranking-based hashing with spatial attention"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(oh_version()));

  auto* synth = app.add_subcommand("synth", "Generate synthetic train/database/query splits");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--seed", o.synth.seed, "Random seed");
  AddSynthFlags(synth, o);

  auto* tattn = app.add_subcommand("train-attention", "Train the attention classifier");
  tattn->add_option("--data", o.data, "Training dataset base path")->required();
  tattn->add_option("--out", o.out, "Output DOHA file")->required();
  tattn->add_option("--seed", o.attention.seed, "Random seed");
  AddAttentionFlags(tattn, o);

  auto* train = app.add_subcommand("train", "Train the hash head");
  train->add_option("--data", o.data, "Training dataset base path")->required();
  train->add_option("--attention", o.attention_path, "DOHA attention model")->required();
  train->add_option("--out", o.out, "Output DOHH file")->required();
  train->add_option("--log", o.log_path, "Training log CSV");
  train->add_option("--seed", o.train.seed, "Random seed");
  AddTrainFlags(train, o);

  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->add_option("--out", o.out, "Output CSV of per-block max relative errors");
  grad->add_option("--seed", o.grad.seed, "Random seed");
  grad->add_option("--channels", o.grad.channels, "Feature channels M")->check(CLI::PositiveNumber);
  grad->add_option("--width", o.grad.width, "Feature map width X")->check(CLI::PositiveNumber);
  grad->add_option("--height", o.grad.height, "Feature map height Y")->check(CLI::PositiveNumber);
  grad->add_option("--classes", o.grad.classes, "Attention classes")->check(CLI::Range(2, 65535));
  grad->add_option("--k-min", o.grad.k_min, "Smallest K")->check(CLI::Range(2, 64));
  grad->add_option("--k-max", o.grad.k_max, "Largest K")->check(CLI::Range(2, 64));
  grad->add_option("--r-min", o.grad.r_min, "Smallest R")->check(CLI::Range(1, 64));
  grad->add_option("--r-max", o.grad.r_max, "Largest R")->check(CLI::Range(1, 64));
  grad->add_option("--draws", o.grad.draws, "Random draws per (K, R)")->check(CLI::PositiveNumber);
  grad->add_option("--pairs", o.grad.pairs, "Pairs per batch")->check(CLI::PositiveNumber);
  grad->add_option("--step", o.grad.step, "Central-difference step")->check(CLI::PositiveNumber);

  auto* encode = app.add_subcommand("encode", "Encode a dataset split into a DOHC code file");
  encode->add_option("--data", o.data, "Dataset base path")->required();
  encode->add_option("--attention", o.attention_path, "DOHA attention model")->required();
  encode->add_option("--head", o.head_path, "DOHH head checkpoint")->required();
  encode->add_option("--out", o.out, "Output DOHC file")->required();

  auto* search = app.add_subcommand("search", "Rank database codes for every query code");
  search->add_option("--database", o.database, "Database DOHC file")->required();
  search->add_option("--queries", o.queries, "Query DOHC file")->required();
  search->add_option("--out", o.out, "Output CSV")->required();
  AddEvalFlags(search, o, true);

  auto* eval = app.add_subcommand("eval", "Compute mAP, P@N and PR curves");
  eval->add_option("--database", o.database, "Database DOHC file")->required();
  eval->add_option("--queries", o.queries, "Query DOHC file")->required();
  eval->add_option("--out", o.out, "Output directory for metric CSVs")->required();
  eval->add_option("--map-depth", o.map_depth, "Truncate rankings for mAP (0 = full)");
  AddEvalFlags(eval, o, false);

  auto* pipeline = app.add_subcommand("pipeline", "synth, train-attention, train, encode, search, eval");
  pipeline->add_option("--out", o.out, "Output directory")->required();
  pipeline->add_option("--seed", o.synth.seed, "Random seed for every stage");
  pipeline->add_option("--map-depth", o.map_depth, "Truncate rankings for mAP (0 = full)");
  AddSynthFlags(pipeline, o);
  AddAttentionFlags(pipeline, o);
  AddTrainFlags(pipeline, o);
  AddEvalFlags(pipeline, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*synth) RunSynth(o);
    else if (*tattn) RunTrainAttention(o);
    else if (*train) RunTrain(o);
    else if (*grad) RunGradcheck(o);
    else if (*encode) RunEncode(o);
    else if (*search) RunSearch(o);
    else if (*eval) RunEval(o);
    else if (*pipeline) RunPipeline(o);
  } catch (const StageFailure& f) {
    return f.exit_code;
  }
  return 0;
}
