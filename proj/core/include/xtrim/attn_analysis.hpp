// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "xtrim/trace_io.hpp"
#include "xtrim/trimming.hpp"

namespace xtrim {

/// Per-feature attention mass summed over heads and queries. The entries
/// sum to heads * queries (each softmax row contributes 1).
std::vector<double> aggregate_layer(const AttentionTensor& attn);

/// Share of total mass held by the top ceil(q * size) entries; lies in
/// [q, 1] for nonnegative input. Quantifies how concentrated a layer's
/// attention is on a small feature subset.
double concentration(const std::vector<double>& v, double q);

/// Jaccard similarity of the trimmed selections computed independently on
/// each layer: |A intersect B| / |A union B|. Symmetric, reflexive, in [0,1].
double interlayer_overlap(const AttentionTensor& layer_a, const AttentionTensor& layer_b,
                          double k_ratio);

struct LayerAnalysis {
    std::vector<double> aggregate;          // per-feature mass
    std::vector<double> concentration_at;   // aligned with report quantiles
    std::vector<std::size_t> kept;          // trimmed selection at the report k_ratio
};

struct TraceAnalysis {
    std::size_t heads = 0;
    std::size_t queries = 0;
    std::size_t features = 0;
    double k_ratio = 0.0;
    std::vector<double> quantiles;               // concentration q values
    std::vector<LayerAnalysis> layers;
    std::vector<std::vector<double>> overlap;     // pairwise Jaccard, [L x L]
};

/// Whole-trace diagnostics: aggregates, concentration at q in
/// {0.05, 0.1, 0.25}, and the pairwise selection-overlap matrix.
TraceAnalysis analyze_trace(const AttnTrace& trace, double k_ratio);

/// Stable-key-order JSON rendering of the analysis.
std::string analysis_to_json(const TraceAnalysis& analysis);

}  // namespace xtrim
