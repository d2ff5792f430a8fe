// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/kv_cache.hpp"

#include <cmath>

namespace xtrim {

namespace {

std::uint64_t layers_bytes(const std::vector<KvCacheState::LayerKV>& layers,
                           std::size_t dtype_bytes, std::size_t batch) {
    std::uint64_t elems = 0;
    for (const auto& layer : layers) {
        elems += layer.k.numel();
        elems += layer.v.numel();
    }
    return elems * static_cast<std::uint64_t>(dtype_bytes) * batch;
}

}  // namespace

std::uint64_t KvCacheState::self_bytes(std::size_t dtype_bytes) const {
    return layers_bytes(self_layers, dtype_bytes, batch);
}

std::uint64_t KvCacheState::cross_bytes(std::size_t dtype_bytes) const {
    return layers_bytes(cross_layers, dtype_bytes, batch);
}

CacheBytes cache_bytes(const ModelConfig& cfg, std::size_t batch, std::size_t n_text,
                       std::size_t n_img_kept) {
    const std::uint64_t per_pos =
        2ull * cfg.head_dim() * cfg.n_kv_heads * cfg.dtype_bytes * batch;
    CacheBytes out;
    out.self_bytes = per_pos * cfg.S * n_text;
    out.cross_bytes = per_pos * cfg.C * n_img_kept;
    return out;
}

std::size_t crossover_tokens(const ModelConfig& cfg, std::size_t n_img_kept) {
    // Both caches share the per-position width, so the crossover depends
    // only on the layer counts: smallest n with S*n >= C*n_img_kept.
    return (cfg.C * n_img_kept + cfg.S - 1) / cfg.S;
}

std::uint64_t reduction_bytes(const ModelConfig& cfg, std::size_t batch, std::size_t n_img,
                              double remaining_ratio) {
    const auto kept = static_cast<std::size_t>(
        std::llround(remaining_ratio * static_cast<double>(n_img)));
    const CacheBytes full = cache_bytes(cfg, batch, 0, n_img);
    const CacheBytes reduced = cache_bytes(cfg, batch, 0, kept);
    return full.cross_bytes - reduced.cross_bytes;
}

void write_memory_csv(std::ostream& out, const ModelConfig& cfg,
                      const std::vector<std::size_t>& batches,
                      const std::vector<std::size_t>& n_texts, std::size_t n_img_kept) {
    out << "batch,n_text,n_img_kept,self_bytes,cross_bytes\n";
    for (std::size_t batch : batches) {
        for (std::size_t n_text : n_texts) {
            const CacheBytes bytes = cache_bytes(cfg, batch, n_text, n_img_kept);
            out << batch << ',' << n_text << ',' << n_img_kept << ',' << bytes.self_bytes << ','
                << bytes.cross_bytes << '\n';
        }
    }
}

}  // namespace xtrim
