// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/model.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace xtrim {

namespace {

constexpr float kInitScale = 0.02f;

enum WeightRole : std::uint64_t {
    kRoleQ = 0,
    kRoleK = 1,
    kRoleV = 2,
    kRoleO = 3,
    kRoleGate = 4,
    kRoleUp = 5,
    kRoleDown = 6,
};

// Multi-head attention over already-projected q/k/v, head h reading the kv
// group h / (n_heads / n_kv_heads). Returns concatenated head outputs and,
// when `weights_out` is given, the per-head post-softmax weights.
Tensor multi_head_attention(const ModelConfig& cfg, const Tensor& q, const Tensor& k,
                            const Tensor& v, bool causal, FlopCounter* counter,
                            Tensor* weights_out) {
    const std::size_t d_h = cfg.head_dim();
    const std::size_t group = cfg.n_heads / cfg.n_kv_heads;
    const std::size_t n_q = q.rows();
    const std::size_t n_kv = k.rows();

    Tensor merged({n_q, cfg.d});
    if (weights_out) *weights_out = Tensor({cfg.n_heads, n_q, n_kv});

    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        const std::size_t g = h / group;
        const Tensor q_h = slice_cols(q, h * d_h, (h + 1) * d_h);
        const Tensor k_g = slice_cols(k, g * d_h, (g + 1) * d_h);
        const Tensor v_g = slice_cols(v, g * d_h, (g + 1) * d_h);
        const AttentionResult head = attention(q_h, k_g, v_g, causal, counter);
        for (std::size_t i = 0; i < n_q; ++i) {
            std::memcpy(&merged.data[i * cfg.d + h * d_h], &head.out.data[i * d_h],
                        d_h * sizeof(float));
        }
        if (weights_out) {
            std::memcpy(&weights_out->data[h * n_q * n_kv], head.weights.data.data(),
                        n_q * n_kv * sizeof(float));
        }
    }
    return merged;
}

Tensor ffn(const Block& block, const Tensor& x, FlopCounter* counter) {
    const Tensor normed = rmsnorm_rows(x);
    const Tensor gate = matmul(normed, block.w_gate, counter, MatmulKind::kFfnGate);
    Tensor up = matmul(normed, block.w_up, counter, MatmulKind::kFfnUp);
    for (std::size_t i = 0; i < up.data.size(); ++i) {
        up.data[i] *= silu(gate.data[i]);
    }
    return matmul(up, block.w_down, counter, MatmulKind::kFfnDown);
}

Selection make_selection(const PruneConfig& prune, const AttentionTensor& first_attn,
                         std::size_t n_k) {
    switch (prune.method) {
        case PruneMethod::kNone: return Selection::all(n_k);
        case PruneMethod::kTrimmed: return trim(first_attn, prune.k_ratio);
        case PruneMethod::kRandom: return baseline_random(n_k, prune.k_ratio, prune.seed);
        case PruneMethod::kSpatial: return baseline_spatial(n_k, prune.k_ratio, prune.stride);
    }
    throw ConfigError("unhandled prune method");
}

// Scatters [H x n x kept] attention weights back onto the full feature axis.
AttentionTensor scatter_to_full(const Tensor& weights, const std::vector<std::size_t>& kept,
                                std::size_t n_features) {
    Tensor full({weights.extent(0), weights.extent(1), n_features});
    for (std::size_t h = 0; h < weights.extent(0); ++h) {
        for (std::size_t j = 0; j < weights.extent(1); ++j) {
            for (std::size_t c = 0; c < kept.size(); ++c) {
                full.at3(h, j, kept[c]) = weights.at3(h, j, c);
            }
        }
    }
    return AttentionTensor(std::move(full));
}

}  // namespace

Model build_model(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t kv_w = cfg.kv_width();
    std::vector<Block> blocks(cfg.total_blocks());
    std::size_t next_cross = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        Block& blk = blocks[b];
        blk.is_cross =
            next_cross < cfg.cross_positions.size() && cfg.cross_positions[next_cross] == b;
        if (blk.is_cross) ++next_cross;
        blk.wq = seeded_tensor({cfg.d, cfg.d}, derive_seed(cfg.seed, b, kRoleQ), kInitScale);
        blk.wk = seeded_tensor({cfg.d, kv_w}, derive_seed(cfg.seed, b, kRoleK), kInitScale);
        blk.wv = seeded_tensor({cfg.d, kv_w}, derive_seed(cfg.seed, b, kRoleV), kInitScale);
        blk.wo = seeded_tensor({cfg.d, cfg.d}, derive_seed(cfg.seed, b, kRoleO), kInitScale);
        blk.w_gate = seeded_tensor({cfg.d, cfg.m}, derive_seed(cfg.seed, b, kRoleGate), kInitScale);
        blk.w_up = seeded_tensor({cfg.d, cfg.m}, derive_seed(cfg.seed, b, kRoleUp), kInitScale);
        blk.w_down = seeded_tensor({cfg.m, cfg.d}, derive_seed(cfg.seed, b, kRoleDown), kInitScale);
    }
    return Model(cfg, std::move(blocks));
}

ForwardResult prefill(const Model& model, const Tensor& text_embeds, const ImageFeatures& img,
                      const PruneConfig& prune, RunCounters* counters,
                      const PrefillOptions& opts) {
    const ModelConfig& cfg = model.config();
    prune.validate();
    if (text_embeds.rank() != 2 || text_embeds.cols() != cfg.d) {
        throw ShapeError("text embeddings must be [n x d] with d = " + std::to_string(cfg.d));
    }
    if (img.feats.rank() != 2 || img.feats.cols() != cfg.d) {
        throw ShapeError("image features must be [n_k x d] with d = " + std::to_string(cfg.d));
    }
    const std::size_t n_k = img.n_k();
    if (n_k < 1) throw ShapeError("image features must contain at least one row");

    if (counters) counters->resize(cfg.total_blocks());

    ForwardResult result;
    result.caches.batch = 1;
    Tensor x = text_embeds;
    bool first_cross_done = false;

    for (std::size_t b = 0; b < cfg.total_blocks(); ++b) {
        const Block& blk = model.block(b);
        FlopCounter* ctr = counters ? &counters->prefill[b] : nullptr;
        const Tensor normed = rmsnorm_rows(x);
        const Tensor q = matmul(normed, blk.wq, ctr, MatmulKind::kQProj);

        Tensor attn_merged;
        if (!blk.is_cross) {
            const Tensor k = matmul(normed, blk.wk, ctr, MatmulKind::kKProj);
            const Tensor v = matmul(normed, blk.wv, ctr, MatmulKind::kVProj);
            attn_merged = multi_head_attention(cfg, q, k, v, /*causal=*/true, ctr, nullptr);
            result.caches.self_layers.push_back({k, v});
        } else if (!first_cross_done) {
            // First cross block: attend over everything, then select.
            const Tensor k = matmul(img.feats, blk.wk, ctr, MatmulKind::kKProj);
            const Tensor v = matmul(img.feats, blk.wv, ctr, MatmulKind::kVProj);
            Tensor weights;
            attn_merged = multi_head_attention(cfg, q, k, v, /*causal=*/false, ctr, &weights);
            result.first_layer_attn = AttentionTensor(std::move(weights));
            result.selection = make_selection(prune, result.first_layer_attn, n_k);
            if (result.selection.empty()) {
                throw SelectionEmptyError("pruning produced an empty selection");
            }
            if (opts.capture_all_cross_attn) {
                result.cross_attn.push_back(result.first_layer_attn);
            }
            result.caches.cross_layers.push_back(
                {take_rows(k, result.selection.kept), take_rows(v, result.selection.kept)});
            first_cross_done = true;
        } else {
            // Later cross blocks see only the selected features; projection
            // cost scales with the kept count.
            const Tensor feats_kept = take_rows(img.feats, result.selection.kept);
            const Tensor k = matmul(feats_kept, blk.wk, ctr, MatmulKind::kKProj);
            const Tensor v = matmul(feats_kept, blk.wv, ctr, MatmulKind::kVProj);
            Tensor weights;
            attn_merged = multi_head_attention(cfg, q, k, v, /*causal=*/false, ctr,
                                               opts.capture_all_cross_attn ? &weights : nullptr);
            if (opts.capture_all_cross_attn) {
                result.cross_attn.push_back(
                    scatter_to_full(weights, result.selection.kept, n_k));
            }
            result.caches.cross_layers.push_back({k, v});
        }

        const Tensor attn_out = matmul(attn_merged, blk.wo, ctr, MatmulKind::kOProj);
        x = add(x, attn_out);
        x = add(x, ffn(blk, x, ctr));
    }

    result.hidden = std::move(x);
    return result;
}

Tensor decode_step(const Model& model, KvCacheState& state, const Tensor& next_embed,
                   RunCounters* counters) {
    const ModelConfig& cfg = model.config();
    if (next_embed.rank() != 2 || next_embed.rows() != 1 || next_embed.cols() != cfg.d) {
        throw ShapeError("decode step expects a [1 x d] embedding");
    }
    std::size_t self_blocks = 0, cross_blocks = 0;
    for (const auto& blk : model.blocks()) (blk.is_cross ? cross_blocks : self_blocks)++;
    if (state.self_layers.size() != self_blocks || state.cross_layers.size() != cross_blocks) {
        throw StateError("cache state does not match model layout (" +
                         std::to_string(state.self_layers.size()) + " self, " +
                         std::to_string(state.cross_layers.size()) + " cross layers)");
    }
    if (counters && counters->decode.size() != cfg.total_blocks()) {
        counters->decode.assign(cfg.total_blocks(), FlopCounter{});
    }

    Tensor x = next_embed;
    std::size_t self_ord = 0, cross_ord = 0;
    for (std::size_t b = 0; b < cfg.total_blocks(); ++b) {
        const Block& blk = model.block(b);
        FlopCounter* ctr = counters ? &counters->decode[b] : nullptr;
        const Tensor normed = rmsnorm_rows(x);
        const Tensor q = matmul(normed, blk.wq, ctr, MatmulKind::kQProj);

        Tensor attn_merged;
        if (!blk.is_cross) {
            const Tensor k_new = matmul(normed, blk.wk, ctr, MatmulKind::kKProj);
            const Tensor v_new = matmul(normed, blk.wv, ctr, MatmulKind::kVProj);
            auto& layer = state.self_layers[self_ord++];
            layer.k.data.insert(layer.k.data.end(), k_new.data.begin(), k_new.data.end());
            layer.k.shape[0] += 1;
            layer.v.data.insert(layer.v.data.end(), v_new.data.begin(), v_new.data.end());
            layer.v.shape[0] += 1;
            attn_merged =
                multi_head_attention(cfg, q, layer.k, layer.v, /*causal=*/true, ctr, nullptr);
        } else {
            const auto& layer = state.cross_layers[cross_ord++];
            attn_merged =
                multi_head_attention(cfg, q, layer.k, layer.v, /*causal=*/false, ctr, nullptr);
        }

        const Tensor attn_out = matmul(attn_merged, blk.wo, ctr, MatmulKind::kOProj);
        x = add(x, attn_out);
        x = add(x, ffn(blk, x, ctr));
    }
    return x;
}

GenerateResult generate(const Model& model, const Tensor& text_embeds, const ImageFeatures& img,
                        const PruneConfig& prune, std::size_t steps,
                        const PrefillOptions& opts) {
    const ModelConfig& cfg = model.config();
    RunCounters counters;
    GenerateResult out;

    ForwardResult fwd = prefill(model, text_embeds, img, prune, &counters, opts);
    out.prefill_hidden = fwd.hidden;
    out.selection = fwd.selection;
    out.first_layer_attn = std::move(fwd.first_layer_attn);
    out.cross_attn = std::move(fwd.cross_attn);

    out.step_hiddens = Tensor();
    out.step_hiddens.shape = {0, cfg.d};
    Tensor next({1, cfg.d});
    if (steps > 0) {
        const std::size_t n = fwd.hidden.rows();
        std::memcpy(next.data.data(), &fwd.hidden.data[(n - 1) * cfg.d], cfg.d * sizeof(float));
        next = rmsnorm_rows(next);
    }
    for (std::size_t s = 0; s < steps; ++s) {
        const Tensor h = decode_step(model, fwd.caches, next, &counters);
        out.step_hiddens.data.insert(out.step_hiddens.data.end(), h.data.begin(), h.data.end());
        out.step_hiddens.shape[0] += 1;
        next = rmsnorm_rows(h);
    }
    out.caches = std::move(fwd.caches);

    out.report = make_cost_report(cfg, counters, text_embeds.rows(), img.n_k(),
                                  out.selection.kept.size());
    return out;
}

}  // namespace xtrim
