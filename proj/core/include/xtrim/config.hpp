// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xtrim/errors.hpp"

namespace xtrim {

// Decoder stack shape: S causal self-attention blocks and C cross-attention
// blocks interleaved at `cross_positions` (block indices, strictly
// increasing, within [0, S + C)). `dtype_bytes` only affects memory
// accounting; compute always runs in f32.
struct ModelConfig {
    std::size_t d = 64;          // model width
    std::size_t m = 128;         // feed-forward width
    std::size_t n_heads = 4;
    std::size_t n_kv_heads = 4;
    std::size_t S = 8;
    std::size_t C = 4;
    std::vector<std::size_t> cross_positions;
    std::uint64_t seed = 0;
    std::size_t dtype_bytes = 2;

    std::size_t total_blocks() const { return S + C; }
    std::size_t head_dim() const { return d / n_heads; }
    std::size_t kv_width() const { return head_dim() * n_kv_heads; }

    /// Throws ConfigError naming the violated invariant.
    void validate() const;

    /// Spreads C cross blocks evenly through the stack, last block cross.
    /// S=8, C=4 gives positions {2, 5, 8, 11}: a cross block every third slot.
    static std::vector<std::size_t> even_cross_layout(std::size_t S, std::size_t C);

    /// Config with the evenly spread cross layout already filled in.
    static ModelConfig with_even_layout(ModelConfig base);
};

enum class PruneMethod { kNone, kTrimmed, kRandom, kSpatial };

const char* to_string(PruneMethod m);
PruneMethod prune_method_from_string(const std::string& name);

// For kTrimmed, `k_ratio` is the per-head top-k fraction; for kRandom and
// kSpatial it is the target remaining ratio. `seed` drives the random
// baseline, `stride` the spatial one.
struct PruneConfig {
    PruneMethod method = PruneMethod::kNone;
    double k_ratio = 1.0;
    std::uint64_t seed = 0;
    std::size_t stride = 2;

    void validate() const;
};

}  // namespace xtrim
