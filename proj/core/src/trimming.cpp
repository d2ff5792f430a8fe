// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/trimming.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"

namespace xtrim {

AttentionTensor::AttentionTensor(Tensor w) : weights(std::move(w)) {
    if (weights.rank() != 3) {
        throw ShapeError("attention tensor must be rank-3 [heads x queries x features]");
    }
}

void AttentionTensor::validate(float tol) const {
    for (std::size_t h = 0; h < heads(); ++h) {
        for (std::size_t j = 0; j < queries(); ++j) {
            float sum = 0.0f;
            for (std::size_t i = 0; i < features(); ++i) {
                const float w = at(h, j, i);
                if (w < 0.0f) {
                    throw ShapeError("attention weight negative at head " + std::to_string(h));
                }
                sum += w;
            }
            if (std::fabs(sum - 1.0f) > tol) {
                throw ShapeError("attention row (head " + std::to_string(h) + ", query " +
                                 std::to_string(j) + ") sums to " + std::to_string(sum));
            }
        }
    }
}

std::size_t topk_count(double k_ratio, std::size_t n_features) {
    // The epsilon absorbs round-off when k_ratio was itself formed as k / n,
    // so floor recovers the exact integer.
    const double x = k_ratio * static_cast<double>(n_features) + 1e-9;
    const auto k = static_cast<std::size_t>(std::floor(x));
    return std::max<std::size_t>(1, std::min(k, n_features));
}

ImportanceMatrix accumulate_importance(const AttentionTensor& attn) {
    ImportanceMatrix imp;
    imp.scores = Tensor({attn.heads(), attn.features()});
    for (std::size_t h = 0; h < attn.heads(); ++h) {
        for (std::size_t j = 0; j < attn.queries(); ++j) {
            for (std::size_t i = 0; i < attn.features(); ++i) {
                imp.scores.at(h, i) += attn.at(h, j, i);
            }
        }
    }
    return imp;
}

std::vector<std::vector<std::size_t>> select_topk_per_head(const ImportanceMatrix& importance,
                                                           double k_ratio) {
    if (!(k_ratio > 0.0) || k_ratio > 1.0) {
        throw ConfigError("k_ratio must lie in (0, 1], got " + std::to_string(k_ratio));
    }
    const std::size_t n = importance.features();
    const std::size_t k = topk_count(k_ratio, n);
    std::vector<std::vector<std::size_t>> result(importance.heads());
    std::vector<std::size_t> order(n);
    for (std::size_t h = 0; h < importance.heads(); ++h) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        // Descending score, lower index wins ties.
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return importance.scores.at(h, a) > importance.scores.at(h, b);
        });
        result[h].assign(order.begin(), order.begin() + k);
        std::sort(result[h].begin(), result[h].end());
    }
    return result;
}

Selection union_selection(std::vector<std::vector<std::size_t>> per_head,
                          std::size_t n_features, double k_ratio) {
    std::set<std::size_t> merged;
    std::size_t k = 0;
    for (const auto& head : per_head) {
        k = std::max(k, head.size());
        for (std::size_t i : head) {
            if (i >= n_features) {
                throw ShapeError("selected index " + std::to_string(i) +
                                 " out of range for " + std::to_string(n_features) + " features");
            }
            merged.insert(i);
        }
    }
    if (merged.empty()) {
        throw SelectionEmptyError("union of per-head top-k sets is empty");
    }
    Selection sel;
    sel.kept.assign(merged.begin(), merged.end());
    sel.per_head = std::move(per_head);
    sel.k = k;
    sel.k_ratio = k_ratio;
    sel.n_features = n_features;
    sel.method = PruneMethod::kTrimmed;
    return sel;
}

Selection trim(const AttentionTensor& attn, double k_ratio) {
    const ImportanceMatrix importance = accumulate_importance(attn);
    auto per_head = select_topk_per_head(importance, k_ratio);
    return union_selection(std::move(per_head), attn.features(), k_ratio);
}

Selection Selection::all(std::size_t n_features) {
    Selection sel;
    sel.kept.resize(n_features);
    std::iota(sel.kept.begin(), sel.kept.end(), std::size_t{0});
    sel.k = n_features;
    sel.k_ratio = 1.0;
    sel.n_features = n_features;
    sel.method = PruneMethod::kNone;
    return sel;
}

Selection baseline_random(std::size_t n_features, double target_ratio, std::uint64_t seed) {
    if (!(target_ratio > 0.0) || target_ratio > 1.0) {
        throw ConfigError("target_ratio must lie in (0, 1]");
    }
    const auto count = static_cast<std::size_t>(
        std::llround(target_ratio * static_cast<double>(n_features)));
    std::vector<std::size_t> pool(n_features);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::uint64_t state = seed;
    for (std::size_t i = n_features; i > 1; --i) {
        const std::size_t j = splitmix64_next(state) % i;
        std::swap(pool[i - 1], pool[j]);
    }
    Selection sel;
    if (count == 0) {
        throw SelectionEmptyError("random baseline keeps 0 of " + std::to_string(n_features) +
                                  " features at ratio " + std::to_string(target_ratio));
    }
    sel.kept.assign(pool.begin(), pool.begin() + count);
    std::sort(sel.kept.begin(), sel.kept.end());
    sel.k_ratio = target_ratio;
    sel.n_features = n_features;
    sel.method = PruneMethod::kRandom;
    return sel;
}

Selection baseline_spatial(std::size_t n_features, double target_ratio, std::size_t stride) {
    if (!(target_ratio > 0.0) || target_ratio > 1.0) {
        throw ConfigError("target_ratio must lie in (0, 1]");
    }
    if (stride < 1) throw ConfigError("stride must be >= 1");
    const auto residues = static_cast<std::size_t>(
        std::llround(target_ratio * static_cast<double>(stride)));
    if (residues == 0) {
        throw SelectionEmptyError("spatial baseline keeps 0 residues at ratio " +
                                  std::to_string(target_ratio) + ", stride " +
                                  std::to_string(stride));
    }
    Selection sel;
    for (std::size_t i = 0; i < n_features; ++i) {
        if (i % stride < residues) sel.kept.push_back(i);
    }
    if (sel.kept.empty()) {
        throw SelectionEmptyError("spatial baseline selected nothing");
    }
    sel.k_ratio = target_ratio;
    sel.n_features = n_features;
    sel.method = PruneMethod::kSpatial;
    return sel;
}

double solve_k_ratio(const AttentionTensor& attn, double target_ratio) {
    const std::size_t n = attn.features();
    const ImportanceMatrix importance = accumulate_importance(attn);
    const auto remaining_at = [&](std::size_t k) {
        auto per_head = select_topk_per_head(importance, static_cast<double>(k) / n);
        std::set<std::size_t> merged;
        for (const auto& head : per_head) merged.insert(head.begin(), head.end());
        return static_cast<double>(merged.size()) / static_cast<double>(n);
    };
    std::size_t lo = 1;
    std::size_t hi = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                  std::floor(target_ratio * n)));
    if (remaining_at(lo) > target_ratio) {
        return static_cast<double>(lo) / static_cast<double>(n);
    }
    // Largest k with remaining(k) <= target; nesting makes remaining monotone.
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (remaining_at(mid) <= target_ratio) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return static_cast<double>(lo) / static_cast<double>(n);
}

std::string selection_to_json(const Selection& sel) {
    nlohmann::ordered_json j;
    j["n_features"] = sel.n_features;
    j["k_ratio"] = sel.k_ratio;
    j["method"] = to_string(sel.method);
    j["kept"] = sel.kept;
    j["per_head"] = sel.per_head;
    return j.dump();
}

Selection selection_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Selection sel;
    sel.n_features = j.at("n_features").get<std::size_t>();
    sel.k_ratio = j.at("k_ratio").get<double>();
    sel.method = prune_method_from_string(j.at("method").get<std::string>());
    sel.kept = j.at("kept").get<std::vector<std::size_t>>();
    sel.per_head = j.at("per_head").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& head : sel.per_head) sel.k = std::max(sel.k, head.size());
    if (sel.method == PruneMethod::kNone && sel.k == 0) sel.k = sel.kept.size();
    return sel;
}

}  // namespace xtrim
