// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xtrim/config.hpp"
#include "xtrim/tensor.hpp"

namespace xtrim {

// Per-layer cross-attention weights, indexed [head][query][image feature].
// Every (head, query) row is a softmax distribution over image features.
struct AttentionTensor {
    Tensor weights;  // rank-3, [H x m x L]

    AttentionTensor() = default;
    explicit AttentionTensor(Tensor w);

    std::size_t heads() const { return weights.extent(0); }
    std::size_t queries() const { return weights.extent(1); }
    std::size_t features() const { return weights.extent(2); }

    float at(std::size_t h, std::size_t j, std::size_t i) const { return weights.at3(h, j, i); }

    /// Checks non-negativity and row sums within `tol`; throws ShapeError.
    void validate(float tol = 1e-5f) const;
};

// Accumulated importance scores, one row per head, one column per feature.
// Row h holds p_i^h = sum over queries of the attention on feature i, so a
// row sums to the query count.
struct ImportanceMatrix {
    Tensor scores;  // rank-2, [H x L]

    std::size_t heads() const { return scores.extent(0); }
    std::size_t features() const { return scores.extent(1); }
};

// The retained image-feature set: `kept` is the sorted union of the per-head
// top-k sets. For baseline methods `per_head` is empty and `k` is 0.
struct Selection {
    std::vector<std::size_t> kept;
    std::vector<std::vector<std::size_t>> per_head;
    std::size_t k = 0;
    double k_ratio = 1.0;
    std::size_t n_features = 0;
    PruneMethod method = PruneMethod::kNone;

    bool empty() const { return kept.empty(); }
    double remaining_ratio() const {
        return n_features == 0 ? 0.0
                               : static_cast<double>(kept.size()) / static_cast<double>(n_features);
    }

    static Selection all(std::size_t n_features);
};

/// Per-head top-k count: max(1, floor(k_ratio * n_features)). The floor with
/// a minimum of 1 keeps every head's set nonempty.
std::size_t topk_count(double k_ratio, std::size_t n_features);

/// scores[h][i] = sum over queries j of attn[h][j][i]; no normalization.
ImportanceMatrix accumulate_importance(const AttentionTensor& attn);

/// Per head, the k highest-scoring feature indices; ties break toward the
/// lower index. Each returned set has exactly k elements, sorted ascending.
std::vector<std::vector<std::size_t>> select_topk_per_head(const ImportanceMatrix& importance,
                                                           double k_ratio);

/// Sorted union of the per-head sets. A feature is kept if any head selected
/// it. Throws SelectionEmptyError if the union is empty.
Selection union_selection(std::vector<std::vector<std::size_t>> per_head,
                          std::size_t n_features, double k_ratio);

/// accumulate -> top-k per head -> union, end to end.
Selection trim(const AttentionTensor& attn, double k_ratio);

/// Uniformly samples round(target_ratio * n_features) indices without
/// replacement via a seeded splitmix64 Fisher-Yates shuffle.
Selection baseline_random(std::size_t n_features, double target_ratio, std::uint64_t seed);

/// Keeps the first round(target_ratio * stride) residues of every
/// stride-sized block: ratio 0.5 with stride 2 keeps indices 0, 2, 4, ...
Selection baseline_spatial(std::size_t n_features, double target_ratio, std::size_t stride);

/// Largest per-head k (as k/L) whose trimmed union stays within
/// `target_ratio`; at least one feature per head. Under the fixed tie rule
/// per-head top-k sets are nested in k, so the remaining ratio is monotone
/// and a binary search is exact. Harness utility for ratio-matched runs.
double solve_k_ratio(const AttentionTensor& attn, double target_ratio);

/// JSON document {n_features, k_ratio, method, kept, per_head}.
std::string selection_to_json(const Selection& sel);
Selection selection_from_json(const std::string& text);

}  // namespace xtrim
