// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/attn_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace xtrim {

std::vector<double> aggregate_layer(const AttentionTensor& attn) {
    std::vector<double> v(attn.features(), 0.0);
    for (std::size_t h = 0; h < attn.heads(); ++h) {
        for (std::size_t j = 0; j < attn.queries(); ++j) {
            for (std::size_t i = 0; i < attn.features(); ++i) {
                v[i] += static_cast<double>(attn.at(h, j, i));
            }
        }
    }
    return v;
}

double concentration(const std::vector<double>& v, double q) {
    if (v.empty()) throw ShapeError("concentration needs a nonempty vector");
    if (!(q > 0.0) || q > 1.0) throw ConfigError("concentration quantile must lie in (0, 1]");
    const auto top = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(v.size()) - 1e-9));
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double total = 0.0, head = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        total += sorted[i];
        if (i < top) head += sorted[i];
    }
    if (total <= 0.0) return 0.0;
    return head / total;
}

namespace {

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t inter = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter, ++i, ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double interlayer_overlap(const AttentionTensor& layer_a, const AttentionTensor& layer_b,
                          double k_ratio) {
    const Selection sel_a = trim(layer_a, k_ratio);
    const Selection sel_b = trim(layer_b, k_ratio);
    return jaccard(sel_a.kept, sel_b.kept);
}

TraceAnalysis analyze_trace(const AttnTrace& trace, double k_ratio) {
    trace.validate();
    TraceAnalysis out;
    out.heads = trace.heads();
    out.queries = trace.queries();
    out.features = trace.features();
    out.k_ratio = k_ratio;
    out.quantiles = {0.05, 0.1, 0.25};

    for (const auto& layer : trace.layers) {
        LayerAnalysis la;
        la.aggregate = aggregate_layer(layer);
        for (double q : out.quantiles) la.concentration_at.push_back(concentration(la.aggregate, q));
        la.kept = trim(layer, k_ratio).kept;
        out.layers.push_back(std::move(la));
    }

    const std::size_t L = trace.layers.size();
    out.overlap.assign(L, std::vector<double>(L, 0.0));
    for (std::size_t a = 0; a < L; ++a) {
        for (std::size_t b = 0; b < L; ++b) {
            out.overlap[a][b] = jaccard(out.layers[a].kept, out.layers[b].kept);
        }
    }
    return out;
}

std::string analysis_to_json(const TraceAnalysis& analysis) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["heads"] = analysis.heads;
    j["queries"] = analysis.queries;
    j["features"] = analysis.features;
    j["k_ratio"] = analysis.k_ratio;
    j["concentration_quantiles"] = analysis.quantiles;
    auto layers = nlohmann::ordered_json::array();
    for (const auto& la : analysis.layers) {
        nlohmann::ordered_json jl;
        jl["aggregate"] = la.aggregate;
        jl["concentration"] = la.concentration_at;
        jl["kept"] = la.kept;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    j["overlap"] = analysis.overlap;
    return j.dump(2);
}

}  // namespace xtrim
