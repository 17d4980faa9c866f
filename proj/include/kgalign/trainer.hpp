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
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/augment.hpp"
#include "kgalign/encoder.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/losses.hpp"
#include "kgalign/optim.hpp"
#include "kgalign/rng.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign {

/// Hyperparameters. Defaults: lr 0.001, weight decay 1e-5,
/// dropout 0.2, 2 attention layers, 5 negatives per replaced side,
/// epsilon-truncation 0.9, margin 1, lambda 100, d_ent 256, d_rel 128,
/// pr searched in {0.05, 0.1, 0.15}, views and negatives refreshed every 10
/// epochs, validation MRR measured every 10 epochs.
struct TrainingConfig {
  double lr = 0.001;
  double weight_decay = 1e-5;
  double dropout = 0.2;
  int32_t layers = 2;                 // L
  int32_t negatives_per_side = 5;     // k per replaced side of each seed pair
  double epsilon = 0.9;               // truncated negative sampling
  double margin = 1.0;                // rho
  double lambda = 100.0;              // contrastive weight
  int32_t d_ent = 256;
  int32_t d_rel = 128;
  int32_t d_proj = 128;
  double pr = 0.05;                   // edge-drop ratio upper bound
  int32_t refresh_period = 10;        // epochs per view/negative refresh
  int32_t eval_period = 10;           // epochs between validation evals
  int32_t max_epochs = 300;
  int32_t patience = 3;               // evaluations without MRR improvement
  uint64_t seed = 42;

  // ablations: "w/o rel.", "-gaal.", "-L_c"
  bool use_relation_channel = true;
  bool use_augmented_alignment = true;
  bool use_contrastive = true;

  void validate() const {
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (epsilon < 0.0 || epsilon >= 1.0) throw ConfigError("epsilon must be in [0, 1)");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
    if (pr < 0.0 || pr >= 1.0) throw ConfigError("pr must be in [0, 1)");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (negatives_per_side < 1) throw ConfigError("negatives_per_side must be >= 1");
    if (d_ent < 1 || d_rel < 1 || d_proj < 1) throw ConfigError("dimensions must be >= 1");
    if (refresh_period < 1 || eval_period < 1) throw ConfigError("periods must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
  }
};

struct LossBreakdown {
  double alignment = 0.0;    // L_a
  double contrastive = 0.0;  // L_c
  double total = 0.0;        // L_a + lambda * L_c
};

struct EpochStats {
  int32_t epoch = 0;
  LossBreakdown loss;
  std::optional<double> val_mrr;
};

template <typename Scalar>
struct TrainResult {
  EncoderParams<Scalar> params;  // state at the best validation MRR
  std::vector<EpochStats> history;
  double best_val_mrr = -1.0;
  int32_t best_epoch = -1;
  int32_t epochs_run = 0;
  // post-training stream states, recorded into checkpoints for provenance
  std::vector<std::pair<std::string, std::string>> rng_states;
};

/// Visible per-epoch state, mainly for logging and invariant tests.
struct EpochObservation {
  int32_t epoch = 0;
  bool refreshed = false;
  const AugmentedView* source_view = nullptr;
  const AugmentedView* target_view = nullptr;
  const NegativeSampleSet* negatives = nullptr;
  LossBreakdown loss;
  std::optional<double> val_mrr;
};

using EpochCallback = std::function<void(const EpochObservation&)>;

namespace detail {

template <typename Scalar>
EmbeddingMatrix encode_for_inference(const EncoderParams<Scalar>& params,
                                     const AttentionGraph& graph, int32_t offset,
                                     bool use_relation_channel) {
  ad::Tape<Scalar> tape;
  EncodeOptions opts;
  opts.training = false;
  opts.use_relation_channel = use_relation_channel;
  Rng unused(0);
  auto out = encode(tape, params, graph, offset, opts, unused);
  tape.clear();
  return to_embedding_matrix(out.final);
}

}  // namespace detail

/// Validation ranking in the default alignment direction (source to target)
/// over all target entities.
template <typename Scalar>
double validation_mrr(const EncoderParams<Scalar>& params, const AttentionGraph& source_graph,
                      const AttentionGraph& target_graph, int32_t target_offset,
                      const std::vector<std::pair<EntityId, EntityId>>& pairs,
                      bool use_relation_channel) {
  const auto src = detail::encode_for_inference(params, source_graph, 0, use_relation_channel);
  const auto tgt =
      detail::encode_for_inference(params, target_graph, target_offset, use_relation_channel);
  return mean_reciprocal_rank(rank_all(pairs, src, tgt, /*top_k=*/0));
}

/// Algorithm: per epoch, refresh augmented views and negatives every
/// refresh_period epochs, encode the original and augmented views of both
/// graphs with shared parameters, combine the margin loss on augmented
/// representations with the weighted contrastive loss, backprop, Adam step.
/// Validation MRR is measured every eval_period epochs; training stops after
/// `patience` evaluations without improvement and the best parameters are
/// returned.
template <typename Scalar>
TrainResult<Scalar> train_from(const DatasetBundle& bundle, const TrainingConfig& cfg,
                               EncoderParams<Scalar> params,
                               const EpochCallback& callback = {}) {
  cfg.validate();
  if (bundle.seeds.train.empty()) throw ConfigError("train: no training seed pairs");

  RngStreams streams = RngStreams::from_master(cfg.seed);
  const int32_t n_source = bundle.source.entity_count;

  const AttentionGraph source_graph = AttentionGraph::build(bundle.source);
  const AttentionGraph target_graph = AttentionGraph::build(bundle.target);

  const bool contrastive_on = cfg.use_contrastive && cfg.lambda > 0.0;
  const bool need_original_pass = contrastive_on || !cfg.use_augmented_alignment;

  // Theta: exactly the tensors with a path to the configured loss.
  std::vector<ad::Tensor<Scalar>> trainable;
  trainable.push_back(params.entity_embeddings);
  for (auto& layer : params.gat_layers) {
    trainable.push_back(layer.attn_weight);
    trainable.push_back(layer.attn_vector);
  }
  trainable.push_back(params.fuse_query);
  trainable.push_back(params.fuse_key);
  if (cfg.use_relation_channel) trainable.push_back(params.relation_embeddings);
  if (contrastive_on) {
    trainable.push_back(params.projection.weight);
    trainable.push_back(params.projection.bias);
  }
  ad::AdamOptimizer<Scalar> optimizer(trainable, cfg.lr, cfg.weight_decay);

  TrainResult<Scalar> result;
  result.params = params.clone();

  AugmentedView view_source, view_target;
  AttentionGraph aug_source, aug_target;
  NegativeSampleSet negatives;
  int32_t evals_without_improvement = 0;

  EncodeOptions train_opts;
  train_opts.training = true;
  train_opts.dropout_rate = cfg.dropout;
  train_opts.use_relation_channel = cfg.use_relation_channel;

  ad::Tape<Scalar> tape;
  for (int32_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    EpochObservation obs;
    obs.epoch = epoch;

    if (epoch % cfg.refresh_period == 0) {
      auto views = refresh_views(bundle.source, bundle.target, cfg.pr, streams.augment);
      view_source = std::move(views.first);
      view_target = std::move(views.second);
      aug_source = AttentionGraph::build(view_source.graph);
      aug_target = AttentionGraph::build(view_target.graph);
      const auto src_emb = detail::encode_for_inference(params, source_graph, 0,
                                                        cfg.use_relation_channel);
      const auto tgt_emb = detail::encode_for_inference(params, target_graph, n_source,
                                                        cfg.use_relation_channel);
      negatives = sample_negatives(bundle.seeds.train, src_emb, tgt_emb, cfg.epsilon,
                                   cfg.negatives_per_side, streams.negatives);
      obs.refreshed = true;
    }

    ad::Tensor<Scalar> orig_s_final, orig_t_final;
    if (need_original_pass) {
      orig_s_final = encode(tape, params, source_graph, 0, train_opts, streams.dropout).final;
      orig_t_final =
          encode(tape, params, target_graph, n_source, train_opts, streams.dropout).final;
    }
    auto aug_s_final = encode(tape, params, aug_source, 0, train_opts, streams.dropout).final;
    auto aug_t_final =
        encode(tape, params, aug_target, n_source, train_opts, streams.dropout).final;

    auto alignment = cfg.use_augmented_alignment
                         ? margin_alignment_loss(tape, aug_s_final, aug_t_final,
                                                 bundle.seeds.train, negatives, cfg.margin)
                         : margin_alignment_loss(tape, orig_s_final, orig_t_final,
                                                 bundle.seeds.train, negatives, cfg.margin);
    ad::Tensor<Scalar> total = alignment;
    double contrastive_value = 0.0;
    if (contrastive_on) {
      auto contrastive = contrastive_loss(tape, params.projection, orig_s_final, aug_s_final,
                                          orig_t_final, aug_t_final);
      contrastive_value = static_cast<double>(contrastive.scalar());
      total = tape.add(total, tape.scalar_mul(contrastive, static_cast<Scalar>(cfg.lambda)));
    }

    obs.loss.alignment = static_cast<double>(alignment.scalar());
    obs.loss.contrastive = contrastive_value;
    obs.loss.total = static_cast<double>(total.scalar());
    if (std::isnan(obs.loss.total)) {
      throw NumericError("NaN loss at epoch " + std::to_string(epoch) +
                         " (L_a=" + std::to_string(obs.loss.alignment) +
                         ", L_c=" + std::to_string(obs.loss.contrastive) + ")");
    }

    tape.backward(total);
    optimizer.step();

    if ((epoch + 1) % cfg.eval_period == 0 && !bundle.seeds.valid.empty()) {
      const double mrr = validation_mrr(params, source_graph, target_graph, n_source,
                                        bundle.seeds.valid, cfg.use_relation_channel);
      obs.val_mrr = mrr;
      if (mrr > result.best_val_mrr) {
        result.best_val_mrr = mrr;
        result.best_epoch = epoch;
        result.params.assign_from(params);
        evals_without_improvement = 0;
      } else {
        ++evals_without_improvement;
      }
    }

    result.history.push_back({epoch, obs.loss, obs.val_mrr});
    result.epochs_run = epoch + 1;
    if (callback) {
      obs.source_view = &view_source;
      obs.target_view = &view_target;
      obs.negatives = &negatives;
      callback(obs);
    }
    if (evals_without_improvement >= cfg.patience) break;
  }

  if (result.best_epoch < 0) {
    // never evaluated (no validation pairs): keep the final state
    result.params.assign_from(params);
  }
  result.rng_states = {{"init", streams.init.serialize_state()},
                       {"dropout", streams.dropout.serialize_state()},
                       {"augment", streams.augment.serialize_state()},
                       {"negatives", streams.negatives.serialize_state()}};
  return result;
}

template <typename Scalar>
TrainResult<Scalar> train(const DatasetBundle& bundle, const TrainingConfig& cfg,
                          const EpochCallback& callback = {}) {
  cfg.validate();
  if (bundle.source.relation_count != bundle.target.relation_count) {
    throw ConfigError("train: graphs disagree on the unified relation count");
  }
  RngStreams streams = RngStreams::from_master(cfg.seed);
  auto params = EncoderParams<Scalar>::init(
      bundle.source.entity_count + bundle.target.entity_count, bundle.source.relation_count,
      cfg.d_ent, cfg.d_rel, cfg.d_proj, cfg.layers, streams.init, cfg.use_relation_channel);
  return train_from(bundle, cfg, std::move(params), callback);
}

}  // namespace kgalign
