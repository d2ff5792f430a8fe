// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "xtrim/config.hpp"
#include "xtrim/flops.hpp"

namespace xtrim {

// Analytic per-layer cost of a full prefill pass, in multiply-accumulate
// units over the covered matmuls (Q/K/V/O projections, attention score and
// value products, up/down FFN products):
//
//   self  layer: 4*n*d^2 + 2*n^2*d + 2*n*d*m
//   cross layer: 2*n*d^2 + 2*n_k*d^2 + 2*n*n_k*d + 2*n*d*m
//   pruned cross layer: cross with n_k replaced by the kept feature count
//
// n: text length, n_k: image feature count, d: attention width, m: FFN
// width. The formulas assume n_kv_heads == n_heads and count the causal
// score product at full n^2.

std::uint64_t flops_self(std::size_t n, std::size_t d, std::size_t m);

std::uint64_t flops_cross(std::size_t n, std::size_t n_k, std::size_t d, std::size_t m);

/// Fractional-budget form for analytic sweeps; R in (0, 1].
double flops_prune(std::size_t n, std::size_t n_k, double budget_ratio, std::size_t d,
                   std::size_t m);

/// Exact-integer form driven by an actual kept count.
std::uint64_t flops_prune_exact(std::size_t n, std::size_t n_kept, std::size_t d, std::size_t m);

/// Decode-step extension of the layer formulas: one incremental query
/// against a cache of n_cur positions (self) or n_kept features (cross).
/// The K/V projections for image features do not recur during decode.
std::uint64_t flops_self_decode(std::size_t n_cur, std::size_t d, std::size_t m);
std::uint64_t flops_cross_decode(std::size_t n_kept, std::size_t d, std::size_t m);

/// Whole-stack relative saving from pruning after the first cross layer:
///   1 - (S*self + cross + (C-1)*pruned) / (S*self + C*cross).
/// Exactly 0 at budget_ratio == 1 and for C == 1.
double reduction_ratio(std::size_t S, std::size_t C, std::size_t n, std::size_t n_k,
                       double budget_ratio, std::size_t d, std::size_t m);

struct HeatmapCell {
    double budget_ratio;
    std::size_t n;
    double reduction;
};

struct CostGridParams {
    std::size_t n_k;
    std::size_t d;
    std::size_t m;
    std::size_t S;
    std::size_t C;
};

/// Reduction-ratio table over budget (outer) and sequence length (inner).
std::vector<HeatmapCell> heatmap(const std::vector<double>& budget_grid,
                                 const std::vector<std::size_t>& n_grid,
                                 const CostGridParams& params);

/// CSV with header R,n,reduction_ratio in heatmap() row order.
void write_heatmap_csv(std::ostream& out, const std::vector<HeatmapCell>& cells);

// Analytic figures, instrumented counters and run parameters for one
// generate() call. `kept` is the retained feature count; budget_ratio is
// kept / n_k.
struct CostReport {
    struct Analytic {
        std::uint64_t flops_self = 0;     // one self layer
        std::uint64_t flops_cross = 0;    // one full cross layer
        std::uint64_t flops_prune = 0;    // one pruned cross layer, exact kept count
        double reduction_ratio = 0.0;
    };
    struct LayerFlops {
        std::size_t block_index = 0;
        bool is_cross = false;
        std::uint64_t covered = 0;      // prefill, covered categories
        std::uint64_t kv_dependent = 0; // prefill, K/V-length-scaled share
    };
    struct Measured {
        std::vector<LayerFlops> per_layer;
        std::uint64_t prefill_covered = 0;
        std::uint64_t prefill_self = 0;
        std::uint64_t prefill_cross = 0;
        std::uint64_t decode_covered = 0;
        std::uint64_t decode_self = 0;
        std::uint64_t decode_cross = 0;
    };
    struct Params {
        std::size_t n = 0;
        std::size_t n_k = 0;
        std::size_t kept = 0;
        double budget_ratio = 1.0;
        std::size_t d = 0;
        std::size_t m = 0;
        std::size_t S = 0;
        std::size_t C = 0;
    };

    Analytic analytic;
    Measured measured;
    Params params;
};

/// Assembles a CostReport from run counters: analytic layer costs at the
/// exact kept count plus per-layer and per-phase instrumented totals. Block
/// kinds come from cfg.cross_positions.
CostReport make_cost_report(const ModelConfig& cfg, const RunCounters& counters, std::size_t n,
                            std::size_t n_k, std::size_t kept);

struct VerifyResult {
    bool ok = false;
    std::uint64_t measured = 0;
    std::uint64_t expected = 0;
};

/// Checks that the instrumented prefill matmul units over the covered
/// categories equal S*flops_self + flops_cross + (C-1)*flops_prune_exact
/// at the report's kept count. Exact integer comparison; requires
/// n_kv_heads == n_heads (the formulas assume it).
VerifyResult verify_counter(const CostReport& report);

}  // namespace xtrim
