// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "xtrim/config.hpp"
#include "xtrim/tensor.hpp"

namespace xtrim {

// Live caches for one sequence. Self-attention caches grow by one position
// per decode step; cross-attention caches are fixed at the selected feature
// count for the whole generation.
struct KvCacheState {
    struct LayerKV {
        Tensor k;  // [len x kv_width]
        Tensor v;
    };

    std::vector<LayerKV> self_layers;
    std::vector<LayerKV> cross_layers;
    std::size_t batch = 1;

    std::size_t seq_len() const {
        return self_layers.empty() || self_layers[0].k.rank() != 2
                   ? 0
                   : self_layers[0].k.rows();
    }
    std::size_t cross_len() const {
        return cross_layers.empty() || cross_layers[0].k.rank() != 2
                   ? 0
                   : cross_layers[0].k.rows();
    }

    // Byte accounting over the actual tensor extents, at the accounting
    // element width (not the f32 compute width).
    std::uint64_t self_bytes(std::size_t dtype_bytes) const;
    std::uint64_t cross_bytes(std::size_t dtype_bytes) const;
};

struct CacheBytes {
    std::uint64_t self_bytes = 0;
    std::uint64_t cross_bytes = 0;
};

/// Analytic cache size:
///   self  = 2 * S * batch * n_text * head_dim * n_kv_heads * dtype_bytes
///   cross = 2 * C * batch * n_img_kept * head_dim * n_kv_heads * dtype_bytes
/// The factor 2 covers K and V.
CacheBytes cache_bytes(const ModelConfig& cfg, std::size_t batch, std::size_t n_text,
                       std::size_t n_img_kept);

/// Smallest text-token count at which the self-attention cache reaches the
/// cross-attention cache: ceil(C * n_img_kept / S).
std::size_t crossover_tokens(const ModelConfig& cfg, std::size_t n_img_kept);

/// Cross-cache bytes saved by keeping round(remaining_ratio * n_img) of
/// n_img features. Linear in batch.
std::uint64_t reduction_bytes(const ModelConfig& cfg, std::size_t batch, std::size_t n_img,
                              double remaining_ratio);

/// Memory curve CSV: header batch,n_text,n_img_kept,self_bytes,cross_bytes,
/// one row per (batch, n_text) pair in the given order.
void write_memory_csv(std::ostream& out, const ModelConfig& cfg,
                      const std::vector<std::size_t>& batches,
                      const std::vector<std::size_t>& n_texts, std::size_t n_img_kept);

}  // namespace xtrim
