/* Copyright 2026 The kgalign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kgalign/checkpoint.hpp"
#include "kgalign/config.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/gradcheck.hpp"
#include "kgalign/openea.hpp"
#include "kgalign/synthetic.hpp"
#include "kgalign/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace kgalign;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct LoadedData {
  DatasetBundle bundle;
  LoadReport report;
};

LoadedData load_dataset(const RunConfig& cfg) {
  LoadedData data;
  if (cfg.data_source == DataSource::kOpenEa) {
    auto loaded = load_openea(cfg.data_path, cfg.fold);
    data.bundle = std::move(loaded.bundle);
    data.report = std::move(loaded.report);
  } else {
    RngStreams streams = RngStreams::from_master(cfg.train.seed);
    data.bundle = generate_synthetic(cfg.synthetic, streams.synthetic);
  }
  return data;
}

/// Precedence: config file < KGALIGN_SEED env < explicit command-line values.
RunConfig assemble_config(const std::string& config_file,
                          const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!config_file.empty()) cfg = parse_config_file(config_file);
  if (const char* env_seed = std::getenv("KGALIGN_SEED")) {
    set_config_key(cfg, "seed", env_seed);
  }
  apply_overrides(cfg, overrides);
  return cfg;
}

void parse_synthetic_shorthand(RunConfig& cfg, const std::vector<std::string>& args) {
  cfg.data_source = DataSource::kSynthetic;
  for (const std::string& item : args) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--synthetic argument '" + item + "' is not key=value");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "n") {
      set_config_key(cfg, "synthetic.entities", value);
    } else if (key == "rel") {
      set_config_key(cfg, "synthetic.relations", value);
    } else if (key == "deg") {
      set_config_key(cfg, "synthetic.avg_degree", value);
    } else if (key == "perturb") {
      set_config_key(cfg, "synthetic.perturb", value);
    } else {
      throw ConfigError("--synthetic: unknown field '" + key +
                        "' (expected n, rel, deg, perturb)");
    }
  }
}

void apply_ablations(RunConfig& cfg, const std::vector<std::string>& ablations) {
  for (const std::string& name : ablations) {
    if (name == "no-contrastive") {
      cfg.train.use_contrastive = false;
    } else if (name == "no-augmented-alignment") {
      cfg.train.use_augmented_alignment = false;
    } else if (name == "no-relation") {
      cfg.train.use_relation_channel = false;
    } else {
      throw ConfigError("unknown ablation '" + name +
                        "' (expected no-contrastive, no-augmented-alignment, no-relation)");
    }
  }
}

json metrics_json(const AlignmentMetrics& m, int fold, uint64_t seed) {
  return json{{"hits1", m.hits_at_1}, {"hits5", m.hits_at_5},   {"mrr", m.mrr},
              {"n_test", m.n},        {"fold", fold},           {"seed", seed}};
}

void write_metrics_files(const fs::path& dir, const AlignmentMetrics& m, int fold,
                         uint64_t seed) {
  {
    std::ofstream out(dir / "metrics.json");
    out << metrics_json(m, fold, seed).dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "metrics.csv");
    out << "hits1,hits5,mrr,n_test,fold,seed\n";
    out.precision(17);
    out << m.hits_at_1 << ',' << m.hits_at_5 << ',' << m.mrr << ',' << m.n << ',' << fold
        << ',' << seed << "\n";
  }
}

void write_predictions(const fs::path& file, const DatasetBundle& bundle,
                       const std::vector<RankResult>& ranks,
                       const EmbeddingMatrix& src_emb, const EmbeddingMatrix& tgt_emb) {
  std::ofstream out(file);
  for (const RankResult& r : ranks) {
    const EntityId predicted = infer_alignment(r.source, src_emb, tgt_emb);
    const std::string src_uri =
        r.source < static_cast<EntityId>(bundle.id_maps.source_entity_uris.size())
            ? bundle.id_maps.source_entity_uris[r.source]
            : std::to_string(r.source);
    const std::string tgt_uri =
        predicted < static_cast<EntityId>(bundle.id_maps.target_entity_uris.size())
            ? bundle.id_maps.target_entity_uris[predicted]
            : std::to_string(predicted);
    out << src_uri << '\t' << tgt_uri << '\t' << r.rank << "\n";
  }
}

template <typename Scalar>
EmbeddingMatrix inference_embeddings(const EncoderParams<Scalar>& params,
                                     const KnowledgeGraph& kg, int32_t offset,
                                     bool relation_channel) {
  ad::Tape<Scalar> tape;
  EncodeOptions opts;
  opts.training = false;
  opts.use_relation_channel = relation_channel;
  Rng unused(0);
  auto graph = AttentionGraph::build(kg);
  auto out = encode(tape, params, graph, offset, opts, unused);
  tape.clear();
  return to_embedding_matrix(out.final);
}

struct RunOutput {
  AlignmentMetrics test_metrics;
  double best_val_mrr = -1;
  int32_t epochs_run = 0;
};

template <typename Scalar>
RunOutput run_training(const RunConfig& cfg, const DatasetBundle& bundle,
                       const fs::path& out_dir, bool dump_predictions) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "config.resolved");
    out << cfg.serialize();
  }

  std::ofstream history(out_dir / "history.jsonl");
  history << json{{"header", true},
                  {"seed", cfg.train.seed},
                  {"pr", cfg.train.pr},
                  {"lambda", cfg.train.lambda},
                  {"precision", cfg.precision == Precision::kFloat64 ? "f64" : "f32"},
                  {"ablations",
                   {{"relation_channel", cfg.train.use_relation_channel},
                    {"augmented_alignment", cfg.train.use_augmented_alignment},
                    {"contrastive", cfg.train.use_contrastive}}}}
              .dump()
          << "\n";
  history.flush();

  bool warned_truncation = false;
  auto callback = [&history, &warned_truncation](const EpochObservation& obs) {
    if (obs.refreshed && obs.negatives->truncation_fallback && !warned_truncation) {
      warned_truncation = true;
      std::cerr << "warning: negative-sampling window smaller than k; "
                   "sampling with replacement\n";
    }
    json line{{"epoch", obs.epoch},
              {"loss_alignment", obs.loss.alignment},
              {"loss_contrastive", obs.loss.contrastive},
              {"loss_total", obs.loss.total}};
    if (obs.val_mrr) {
      line["val_mrr"] = *obs.val_mrr;
    } else {
      line["val_mrr"] = nullptr;
    }
    history << line.dump() << "\n";
    history.flush();
  };

  auto result = train<Scalar>(bundle, cfg.train, callback);

  Checkpoint ckpt;
  ckpt.precision_bytes = cfg.precision == Precision::kFloat64 ? 8 : 4;
  ckpt.config_text = cfg.serialize();
  ckpt.rng_states = result.rng_states;
  ckpt.epoch = result.best_epoch >= 0 ? result.best_epoch : result.epochs_run - 1;
  pack_params(result.params, ckpt);
  save_checkpoint(out_dir / "checkpoint.bin", ckpt);

  const auto src_emb = inference_embeddings(result.params, bundle.source, 0,
                                            cfg.train.use_relation_channel);
  const auto tgt_emb = inference_embeddings(result.params, bundle.target,
                                            bundle.source.entity_count,
                                            cfg.train.use_relation_channel);
  const auto ranks = rank_all(bundle.seeds.test, src_emb, tgt_emb);
  RunOutput out;
  out.test_metrics = compute_metrics(ranks);
  out.best_val_mrr = result.best_val_mrr;
  out.epochs_run = result.epochs_run;
  write_metrics_files(out_dir, out.test_metrics,
                      cfg.data_source == DataSource::kOpenEa ? cfg.fold : 0, cfg.train.seed);
  if (dump_predictions) {
    write_predictions(out_dir / "predictions.tsv", bundle, ranks, src_emb, tgt_emb);
  }
  return out;
}

int cmd_validate(const std::string& data_path, int fold) {
  auto loaded = load_openea(data_path, fold);
  const DatasetBundle& b = loaded.bundle;

  auto describe = [](const char* name, const KnowledgeGraph& kg) {
    std::vector<int32_t> degrees = kg.degree;
    std::sort(degrees.begin(), degrees.end());
    const auto n = degrees.size();
    int64_t total = 0;
    for (const int32_t d : degrees) total += d;
    std::cout << name << ": " << kg.entity_count << " entities, " << kg.relation_count
              << " relations, " << kg.triples.size() << " triples\n";
    if (n > 0) {
      std::cout << "  degree min/median/mean/max: " << degrees.front() << "/"
                << degrees[n / 2] << "/" << static_cast<double>(total) / n << "/"
                << degrees.back() << "\n";
      int64_t low = 0;
      for (const int32_t d : degrees) {
        if (d < 2) ++low;
      }
      std::cout << "  long-tail entities (degree < 2): " << low << "\n";
    }
  };
  describe("source", b.source);
  describe("target", b.target);
  std::cout << "links: " << b.all_links.size() << " total; splits train/valid/test = "
            << b.seeds.train.size() << "/" << b.seeds.valid.size() << "/"
            << b.seeds.test.size() << "\n";
  std::cout << "dropped: self-loops " << loaded.report.dropped_self_loops[0] << "+"
            << loaded.report.dropped_self_loops[1] << ", duplicates "
            << loaded.report.dropped_duplicates[0] << "+"
            << loaded.report.dropped_duplicates[1] << "\n";
  for (const auto& w : loaded.report.warnings) std::cout << "warning: " << w << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, bool dump_predictions) {
  cfg.validate();
  auto data = load_dataset(cfg);
  for (const auto& w : data.report.warnings) std::cerr << "warning: " << w << "\n";

  RunOutput out;
  if (cfg.precision == Precision::kFloat64) {
    out = run_training<double>(cfg, data.bundle, cfg.output_dir, dump_predictions);
  } else {
    out = run_training<float>(cfg, data.bundle, cfg.output_dir, dump_predictions);
  }
  std::cout << "trained " << out.epochs_run << " epochs; best val MRR " << out.best_val_mrr
            << "\n";
  std::cout << "test hits@1 " << out.test_metrics.hits_at_1 << ", hits@5 "
            << out.test_metrics.hits_at_5 << ", MRR " << out.test_metrics.mrr << " over "
            << out.test_metrics.n << " pairs\n";
  std::cout << "outputs in " << cfg.output_dir << "\n";
  return kExitOk;
}

template <typename Scalar>
AlignmentMetrics eval_with_checkpoint(const Checkpoint& ckpt, const RunConfig& cfg,
                                      const DatasetBundle& bundle, const std::string& split,
                                      const fs::path& out_dir, bool dump_predictions) {
  RngStreams streams = RngStreams::from_master(cfg.train.seed);
  auto params = EncoderParams<Scalar>::init(
      bundle.source.entity_count + bundle.target.entity_count, bundle.source.relation_count,
      cfg.train.d_ent, cfg.train.d_rel, cfg.train.d_proj, cfg.train.layers, streams.init,
      cfg.train.use_relation_channel);
  unpack_params(ckpt, params);

  const auto src_emb =
      inference_embeddings(params, bundle.source, 0, cfg.train.use_relation_channel);
  const auto tgt_emb = inference_embeddings(params, bundle.target, bundle.source.entity_count,
                                            cfg.train.use_relation_channel);
  const auto& pairs = split == "train"   ? bundle.seeds.train
                      : split == "valid" ? bundle.seeds.valid
                                         : bundle.seeds.test;
  if (pairs.empty()) throw DataError("eval: split '" + split + "' has no pairs");
  const auto ranks = rank_all(pairs, src_emb, tgt_emb);
  const auto metrics = compute_metrics(ranks);
  fs::create_directories(out_dir);
  write_metrics_files(out_dir, metrics,
                      cfg.data_source == DataSource::kOpenEa ? cfg.fold : 0, cfg.train.seed);
  if (dump_predictions) {
    write_predictions(out_dir / "predictions.tsv", bundle, ranks, src_emb, tgt_emb);
  }
  return metrics;
}

int cmd_eval(const std::string& checkpoint_file, const std::string& data_path, int fold,
             const std::string& split, const std::string& out_dir, bool dump_predictions) {
  Checkpoint ckpt = load_checkpoint(checkpoint_file);
  RunConfig cfg = parse_config_text(ckpt.config_text, checkpoint_file + "#config");
  if (!data_path.empty()) {
    cfg.data_source = DataSource::kOpenEa;
    cfg.data_path = data_path;
    if (fold > 0) cfg.fold = fold;
  }
  auto data = load_dataset(cfg);

  AlignmentMetrics metrics;
  if (ckpt.precision_bytes == 8) {
    metrics = eval_with_checkpoint<double>(ckpt, cfg, data.bundle, split, out_dir,
                                           dump_predictions);
  } else {
    metrics =
        eval_with_checkpoint<float>(ckpt, cfg, data.bundle, split, out_dir, dump_predictions);
  }
  std::cout << "split " << split << ": hits@1 " << metrics.hits_at_1 << ", hits@5 "
            << metrics.hits_at_5 << ", MRR " << metrics.mrr << " over " << metrics.n
            << " pairs\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& base, const std::vector<double>& pr_list,
              const std::string& out_dir) {
  if (pr_list.empty()) throw ConfigError("sweep: empty pr list");
  fs::create_directories(out_dir);
  std::ofstream table(fs::path(out_dir) / "sweep.csv");
  table << "pr,augmentation,hits1,hits5,mrr,n_test,seed\n";
  table.precision(17);

  for (const double pr : pr_list) {
    RunConfig cfg = base;
    cfg.train.pr = pr;
    cfg.output_dir = (fs::path(out_dir) / ("pr_" + std::to_string(pr))).string();
    cfg.validate();
    auto data = load_dataset(cfg);
    RunOutput out;
    if (cfg.precision == Precision::kFloat64) {
      out = run_training<double>(cfg, data.bundle, cfg.output_dir, false);
    } else {
      out = run_training<float>(cfg, data.bundle, cfg.output_dir, false);
    }
    table << pr << ',' << (pr == 0.0 ? "off" : "on") << ',' << out.test_metrics.hits_at_1
          << ',' << out.test_metrics.hits_at_5 << ',' << out.test_metrics.mrr << ','
          << out.test_metrics.n << ',' << cfg.train.seed << "\n";
    table.flush();
    std::cout << "pr=" << pr << " hits@1 " << out.test_metrics.hits_at_1 << " mrr "
              << out.test_metrics.mrr << "\n";
  }
  std::cout << "sweep table in " << (fs::path(out_dir) / "sweep.csv").string() << "\n";
  return kExitOk;
}

int cmd_gradcheck() {
  bool all_pass = true;
  for (const auto& report : ad::run_builtin_gradchecks()) {
    std::cout << (report.pass ? "[PASS] " : "[FAIL] ") << report.name << " max rel err "
              << report.max_rel_err << " (tol " << report.tolerance << ")\n";
    all_pass = all_pass && report.pass;
  }
  return all_pass ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgalign: knowledge-graph entity alignment engine"};
  app.require_subcommand(1);

  // validate
  auto* validate = app.add_subcommand("validate", "check an OpenEA-layout dataset");
  std::string v_data;
  int v_fold = 1;
  validate->add_option("--data", v_data, "dataset directory")->required();
  validate->add_option("--fold", v_fold, "fold in [1,5]");

  // shared train-ish options
  struct TrainArgs {
    std::string config_file;
    std::vector<std::string> overrides;
    std::vector<std::string> synthetic;
    std::vector<std::string> ablations;
    std::string data_path;
    int fold = 0;
    std::string out_dir;
    std::optional<uint64_t> seed;
    std::optional<double> pr;
    std::optional<double> lambda;
    std::optional<int> epochs;
    std::optional<std::string> precision;
    bool allow_any_pr = false;
    bool dump_predictions = false;
  };
  auto add_train_options = [](CLI::App* cmd, TrainArgs& args) {
    cmd->add_option("--config", args.config_file, "key = value config file");
    cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
    cmd->add_option("--synthetic", args.synthetic,
                    "use synthetic data; fields n=, rel=, deg=, perturb=")
        ->expected(0, 4);
    cmd->add_option("--ablation", args.ablations,
                    "no-contrastive | no-augmented-alignment | no-relation");
    cmd->add_option("--data", args.data_path, "OpenEA dataset directory");
    cmd->add_option("--fold", args.fold, "fold in [1,5]");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--pr", args.pr, "edge-drop upper bound");
    cmd->add_option("--lambda", args.lambda, "contrastive weight");
    cmd->add_option("--epochs", args.epochs, "maximum epochs");
    cmd->add_option("--precision", args.precision, "f32 or f64");
    cmd->add_flag("--allow-any-pr", args.allow_any_pr, "accept pr outside the searched set");
    cmd->add_flag("--dump-predictions", args.dump_predictions, "write predictions.tsv");
  };

  auto* train_cmd = app.add_subcommand("train", "train a model");
  TrainArgs train_args;
  add_train_options(train_cmd, train_args);

  auto* sweep_cmd = app.add_subcommand("sweep", "train once per pr value");
  TrainArgs sweep_args;
  add_train_options(sweep_cmd, sweep_args);
  std::vector<double> sweep_prs;
  sweep_cmd->add_option("--pr-list", sweep_prs, "pr values to sweep")
      ->required()
      ->delimiter(',');

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string e_ckpt, e_data, e_split = "test", e_out = "runs/eval";
  int e_fold = 0;
  bool e_dump = false;
  eval_cmd->add_option("--checkpoint", e_ckpt, "checkpoint.bin path")->required();
  eval_cmd->add_option("--data", e_data, "OpenEA dataset directory (overrides checkpoint)");
  eval_cmd->add_option("--fold", e_fold, "fold in [1,5]");
  eval_cmd->add_option("--split", e_split, "test | valid | train")
      ->check(CLI::IsMember({"test", "valid", "train"}));
  eval_cmd->add_option("--out", e_out, "output directory");
  eval_cmd->add_flag("--dump-predictions", e_dump, "write predictions.tsv");

  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference check of every tensor op");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto build_config = [](TrainArgs& args) {
    RunConfig cfg = assemble_config(args.config_file, {});
    if (const char* env_seed = std::getenv("KGALIGN_SEED")) {
      set_config_key(cfg, "seed", env_seed);
    }
    apply_overrides(cfg, args.overrides);
    if (!args.synthetic.empty()) parse_synthetic_shorthand(cfg, args.synthetic);
    apply_ablations(cfg, args.ablations);
    if (!args.data_path.empty()) {
      cfg.data_source = DataSource::kOpenEa;
      cfg.data_path = args.data_path;
    }
    if (args.fold > 0) cfg.fold = args.fold;
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    if (args.seed) cfg.train.seed = *args.seed;
    if (args.pr) cfg.train.pr = *args.pr;
    if (args.lambda) cfg.train.lambda = *args.lambda;
    if (args.epochs) cfg.train.max_epochs = *args.epochs;
    if (args.precision) {
      set_config_key(cfg, "precision", *args.precision);
    }
    if (args.allow_any_pr) cfg.allow_any_pr = true;
    return cfg;
  };

  try {
    if (*validate) return cmd_validate(v_data, v_fold);
    if (*train_cmd) {
      RunConfig cfg = build_config(train_args);
      return cmd_train(cfg, train_args.dump_predictions);
    }
    if (*sweep_cmd) {
      RunConfig cfg = build_config(sweep_args);
      const std::string out = sweep_args.out_dir.empty() ? "runs/sweep" : sweep_args.out_dir;
      return cmd_sweep(cfg, sweep_prs, out);
    }
    if (*eval_cmd) return cmd_eval(e_ckpt, e_data, e_fold, e_split, e_out, e_dump);
    if (*gradcheck_cmd) return cmd_gradcheck();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
