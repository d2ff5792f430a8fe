// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/config.hpp"

namespace xtrim {

void ModelConfig::validate() const {
    if (d == 0 || m == 0 || n_heads == 0 || n_kv_heads == 0) {
        throw ConfigError("d, m, n_heads and n_kv_heads must all be >= 1");
    }
    if (n_heads % n_kv_heads != 0) {
        throw ConfigError("n_heads (" + std::to_string(n_heads) +
                          ") must be divisible by n_kv_heads (" + std::to_string(n_kv_heads) + ")");
    }
    if (d % n_heads != 0) {
        throw ConfigError("d (" + std::to_string(d) + ") must be divisible by n_heads (" +
                          std::to_string(n_heads) + ")");
    }
    if (C < 1) throw ConfigError("C must be >= 1: trimming needs a first cross block");
    if (cross_positions.size() != C) {
        throw ConfigError("cross_positions has " + std::to_string(cross_positions.size()) +
                          " entries, expected C = " + std::to_string(C));
    }
    for (std::size_t i = 0; i < cross_positions.size(); ++i) {
        if (cross_positions[i] >= total_blocks()) {
            throw ConfigError("cross position " + std::to_string(cross_positions[i]) +
                              " out of range, total blocks = " + std::to_string(total_blocks()));
        }
        if (i > 0 && cross_positions[i] <= cross_positions[i - 1]) {
            throw ConfigError("cross_positions must be strictly increasing");
        }
    }
    if (dtype_bytes == 0) throw ConfigError("dtype_bytes must be >= 1");
}

std::vector<std::size_t> ModelConfig::even_cross_layout(std::size_t S, std::size_t C) {
    std::vector<std::size_t> positions;
    positions.reserve(C);
    const std::size_t total = S + C;
    for (std::size_t i = 1; i <= C; ++i) {
        positions.push_back(i * total / C - 1);
    }
    return positions;
}

ModelConfig ModelConfig::with_even_layout(ModelConfig base) {
    base.cross_positions = even_cross_layout(base.S, base.C);
    return base;
}

const char* to_string(PruneMethod m) {
    switch (m) {
        case PruneMethod::kNone: return "none";
        case PruneMethod::kTrimmed: return "trimmed";
        case PruneMethod::kRandom: return "random";
        case PruneMethod::kSpatial: return "spatial";
    }
    return "unknown";
}

PruneMethod prune_method_from_string(const std::string& name) {
    if (name == "none") return PruneMethod::kNone;
    if (name == "trimmed") return PruneMethod::kTrimmed;
    if (name == "random") return PruneMethod::kRandom;
    if (name == "spatial") return PruneMethod::kSpatial;
    throw ConfigError("unknown prune method '" + name + "'");
}

void PruneConfig::validate() const {
    if (!(k_ratio > 0.0) || k_ratio > 1.0) {
        throw ConfigError("k_ratio must lie in (0, 1], got " + std::to_string(k_ratio));
    }
    if (stride < 1) throw ConfigError("stride must be >= 1");
}

}  // namespace xtrim
