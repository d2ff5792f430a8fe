// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/cost_model.hpp"

namespace xtrim {

std::uint64_t flops_self(std::size_t n, std::size_t d, std::size_t m) {
    const std::uint64_t n64 = n, d64 = d, m64 = m;
    return 4 * n64 * d64 * d64 + 2 * n64 * n64 * d64 + 2 * n64 * d64 * m64;
}

std::uint64_t flops_cross(std::size_t n, std::size_t n_k, std::size_t d, std::size_t m) {
    const std::uint64_t n64 = n, k64 = n_k, d64 = d, m64 = m;
    return 2 * n64 * d64 * d64 + 2 * k64 * d64 * d64 + 2 * n64 * k64 * d64 +
           2 * n64 * d64 * m64;
}

double flops_prune(std::size_t n, std::size_t n_k, double budget_ratio, std::size_t d,
                   std::size_t m) {
    const double n64 = static_cast<double>(n), k64 = static_cast<double>(n_k),
                 d64 = static_cast<double>(d), m64 = static_cast<double>(m);
    return 2 * n64 * d64 * d64 + 2 * k64 * budget_ratio * d64 * d64 +
           2 * n64 * k64 * budget_ratio * d64 + 2 * n64 * d64 * m64;
}

std::uint64_t flops_prune_exact(std::size_t n, std::size_t n_kept, std::size_t d,
                                std::size_t m) {
    return flops_cross(n, n_kept, d, m);
}

std::uint64_t flops_self_decode(std::size_t n_cur, std::size_t d, std::size_t m) {
    const std::uint64_t n64 = n_cur, d64 = d, m64 = m;
    return 4 * d64 * d64 + 2 * n64 * d64 + 2 * d64 * m64;
}

std::uint64_t flops_cross_decode(std::size_t n_kept, std::size_t d, std::size_t m) {
    const std::uint64_t k64 = n_kept, d64 = d, m64 = m;
    return 2 * d64 * d64 + 2 * k64 * d64 + 2 * d64 * m64;
}

double reduction_ratio(std::size_t S, std::size_t C, std::size_t n, std::size_t n_k,
                       double budget_ratio, std::size_t d, std::size_t m) {
    const double self_part = static_cast<double>(S) * static_cast<double>(flops_self(n, d, m));
    const double cross_full = static_cast<double>(flops_cross(n, n_k, d, m));
    const double cross_pruned = flops_prune(n, n_k, budget_ratio, d, m);
    const double pruned_total =
        self_part + cross_full + static_cast<double>(C - 1) * cross_pruned;
    const double full_total = self_part + static_cast<double>(C) * cross_full;
    return 1.0 - pruned_total / full_total;
}

std::vector<HeatmapCell> heatmap(const std::vector<double>& budget_grid,
                                 const std::vector<std::size_t>& n_grid,
                                 const CostGridParams& params) {
    std::vector<HeatmapCell> cells;
    cells.reserve(budget_grid.size() * n_grid.size());
    for (double r : budget_grid) {
        for (std::size_t n : n_grid) {
            cells.push_back({r, n,
                             reduction_ratio(params.S, params.C, n, params.n_k, r, params.d,
                                             params.m)});
        }
    }
    return cells;
}

void write_heatmap_csv(std::ostream& out, const std::vector<HeatmapCell>& cells) {
    out << "R,n,reduction_ratio\n";
    for (const auto& cell : cells) {
        out << cell.budget_ratio << ',' << cell.n << ',' << cell.reduction << '\n';
    }
}

CostReport make_cost_report(const ModelConfig& cfg, const RunCounters& counters, std::size_t n,
                            std::size_t n_k, std::size_t kept) {
    CostReport rep;
    rep.params.n = n;
    rep.params.n_k = n_k;
    rep.params.kept = kept;
    rep.params.budget_ratio = n_k == 0 ? 1.0
                                       : static_cast<double>(kept) / static_cast<double>(n_k);
    rep.params.d = cfg.d;
    rep.params.m = cfg.m;
    rep.params.S = cfg.S;
    rep.params.C = cfg.C;
    rep.analytic.flops_self = flops_self(n, cfg.d, cfg.m);
    rep.analytic.flops_cross = flops_cross(n, n_k, cfg.d, cfg.m);
    rep.analytic.flops_prune = flops_prune_exact(n, kept, cfg.d, cfg.m);
    rep.analytic.reduction_ratio =
        reduction_ratio(cfg.S, cfg.C, n, n_k, rep.params.budget_ratio, cfg.d, cfg.m);

    std::size_t next_cross = 0;
    for (std::size_t b = 0; b < cfg.total_blocks(); ++b) {
        const bool is_cross = next_cross < cfg.cross_positions.size() &&
                              cfg.cross_positions[next_cross] == b;
        if (is_cross) ++next_cross;
        CostReport::LayerFlops layer;
        layer.block_index = b;
        layer.is_cross = is_cross;
        if (b < counters.prefill.size()) {
            layer.covered = counters.prefill[b].covered();
            layer.kv_dependent = counters.prefill[b].kv_dependent();
        }
        rep.measured.per_layer.push_back(layer);
        rep.measured.prefill_covered += layer.covered;
        (is_cross ? rep.measured.prefill_cross : rep.measured.prefill_self) += layer.covered;
        const std::uint64_t dec = b < counters.decode.size() ? counters.decode[b].covered() : 0;
        rep.measured.decode_covered += dec;
        (is_cross ? rep.measured.decode_cross : rep.measured.decode_self) += dec;
    }
    return rep;
}

VerifyResult verify_counter(const CostReport& report) {
    const auto& p = report.params;
    VerifyResult res;
    res.measured = report.measured.prefill_covered;
    res.expected = static_cast<std::uint64_t>(p.S) * flops_self(p.n, p.d, p.m) +
                   flops_cross(p.n, p.n_k, p.d, p.m) +
                   static_cast<std::uint64_t>(p.C - 1) *
                       flops_prune_exact(p.n, p.kept, p.d, p.m);
    res.ok = res.measured == res.expected;
    return res;
}

}  // namespace xtrim
