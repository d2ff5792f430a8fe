// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "xtrim/config.hpp"
#include "xtrim/cost_model.hpp"
#include "xtrim/flops.hpp"
#include "xtrim/kv_cache.hpp"
#include "xtrim/tensor.hpp"
#include "xtrim/trimming.hpp"

namespace xtrim {

// Synthetic or trace-loaded image features, one row per feature.
struct ImageFeatures {
    Tensor feats;  // [n_k x d]

    std::size_t n_k() const { return feats.rank() == 2 ? feats.rows() : 0; }
};

// One decoder block. Self blocks attend causally over the text sequence;
// cross blocks read image features as keys and values. Pre-norm residual
// layout with an RMS norm (no learned gain) before attention and FFN, and a
// SiLU-gated FFN.
struct Block {
    bool is_cross = false;
    Tensor wq;      // [d x d]
    Tensor wk;      // [d x kv_width]
    Tensor wv;      // [d x kv_width]
    Tensor wo;      // [d x d]
    Tensor w_gate;  // [d x m]
    Tensor w_up;    // [d x m]
    Tensor w_down;  // [m x d]
};

// Immutable after build_model; safe to share across threads.
class Model {
public:
    Model(ModelConfig cfg, std::vector<Block> blocks)
        : cfg_(std::move(cfg)), blocks_(std::move(blocks)) {}

    const ModelConfig& config() const { return cfg_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(std::size_t i) const { return blocks_[i]; }

private:
    ModelConfig cfg_;
    std::vector<Block> blocks_;
};

/// Builds every projection and FFN weight from uniform(-0.02, 0.02) draws.
/// Weight seeds derive from (config seed, block index, role tag) via
/// derive_seed, so identical configs give bit-identical weights. Role tags:
/// q=0, k=1, v=2, o=3, gate=4, up=5, down=6.
Model build_model(const ModelConfig& cfg);

struct ForwardResult {
    Tensor hidden;  // [n x d]
    Selection selection;
    KvCacheState caches;
    AttentionTensor first_layer_attn;  // [H x n x n_k], post-softmax
    // One tensor per cross layer when requested; later layers' weights are
    // scattered back to the full feature axis with zeros at pruned indices.
    std::vector<AttentionTensor> cross_attn;
};

struct PrefillOptions {
    bool capture_all_cross_attn = false;
};

/// Full-prompt pass. The first cross block attends over all image features
/// and its weights drive the selection; blocks after it project K/V only
/// for the selected features. Every cross cache stores selected rows only.
ForwardResult prefill(const Model& model, const Tensor& text_embeds, const ImageFeatures& img,
                      const PruneConfig& prune, RunCounters* counters = nullptr,
                      const PrefillOptions& opts = {});

/// One generation step against the caches. Appends one position to every
/// self-layer cache; cross caches are read-only and never change size.
Tensor decode_step(const Model& model, KvCacheState& state, const Tensor& next_embed,
                   RunCounters* counters = nullptr);

struct GenerateResult {
    Tensor prefill_hidden;  // [n x d]
    Tensor step_hiddens;    // [steps x d]; zero-row tensor shape kept implicit when steps=0
    Selection selection;
    KvCacheState caches;
    AttentionTensor first_layer_attn;
    std::vector<AttentionTensor> cross_attn;  // filled when capture requested
    CostReport report;
};

/// prefill + `steps` pseudo-decode iterations: each step feeds the RMS-
/// normalized last hidden row back as the next embedding, so generation
/// exercises the caches without any vocabulary. Deterministic end to end.
GenerateResult generate(const Model& model, const Tensor& text_embeds, const ImageFeatures& img,
                        const PruneConfig& prune, std::size_t steps,
                        const PrefillOptions& opts = {});

}  // namespace xtrim
