// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Each criterion runs end to end and prints exactly one
// PASS/FAIL line; the process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "helpers/oracles.hpp"
#include "json.hpp"
#include "xtrim/attn_analysis.hpp"
#include "xtrim/cost_model.hpp"
#include "xtrim/kv_cache.hpp"
#include "xtrim/model.hpp"
#include "xtrim/trace_io.hpp"
#include "xtrim/trimming.hpp"
#include "xtrim/workload.hpp"

using namespace xtrim;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool ok, const std::string& detail = "") {
    std::printf("%s  criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", index, name,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// --- 1. selection oracle equivalence ------------------------------------

void criterion_1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    const double ratios[] = {0.25, 0.5, 0.75};
    bool ok = true;
    std::string detail;
    for (int iter = 0; iter < 1000 && ok; ++iter) {
        const std::size_t heads = 1 + rng() % 4;
        const std::size_t queries = 1 + rng() % 6;
        const std::size_t features = 2 + rng() % 15;  // <= 16
        const double k_ratio = ratios[rng() % 3];
        const AttentionTensor attn = oracles::random_attention(rng, heads, queries, features);
        const Selection got = trim(attn, k_ratio);
        const auto want = oracles::trim_oracle(accumulate_importance(attn), k_ratio);
        if (got.kept != want) {
            ok = false;
            detail = "mismatch at iteration " + std::to_string(iter);
        }
    }
    const double elapsed = seconds_since(t0);
    if (elapsed >= 5.0) {
        ok = false;
        detail += " runtime " + std::to_string(elapsed) + "s";
    }
    report(1, "trim equals exhaustive oracle on 1000 random instances", ok,
           detail.empty() ? std::to_string(elapsed).substr(0, 5) + "s" : detail);
}

// --- 2. lossless mode ----------------------------------------------------

void criterion_2() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2002);
    bool ok = true;
    std::string detail;
    for (int cfg_i = 0; cfg_i < 50 && ok; ++cfg_i) {
        ModelConfig cfg;
        cfg.n_heads = 1ull << (rng() % 3);  // 1, 2, 4
        cfg.d = cfg.n_heads * (4 << (rng() % 2));
        cfg.n_kv_heads = cfg.n_heads;
        cfg.m = cfg.d * 2;
        cfg.S = 1 + rng() % 3;
        cfg.C = 1 + rng() % 3;
        cfg.cross_positions = ModelConfig::even_cross_layout(cfg.S, cfg.C);
        cfg.seed = rng();
        const Model model = build_model(cfg);
        const std::size_t n = 2 + rng() % 6;
        const std::size_t n_k = 4 + rng() % 12;
        const Tensor text = make_text_embeds(n, cfg.d, rng());
        const ImageFeatures img = make_image_features(n_k, cfg.d, rng());

        PruneConfig none;
        PruneConfig lossless;
        lossless.method = PruneMethod::kTrimmed;
        lossless.k_ratio = 1.0;

        const GenerateResult a = generate(model, text, img, none, 8);
        const GenerateResult b = generate(model, text, img, lossless, 8);
        if (oracles::max_rel_diff(b.prefill_hidden, a.prefill_hidden) > 1e-6 ||
            oracles::max_rel_diff(b.step_hiddens, a.step_hiddens) > 1e-6) {
            ok = false;
            detail = "divergence at config " + std::to_string(cfg_i);
        }
    }
    const double elapsed = seconds_since(t0);
    if (elapsed >= 30.0) {
        ok = false;
        detail += " runtime " + std::to_string(elapsed) + "s";
    }
    report(2, "k_ratio=1 trimming matches method=none through 8 decode steps", ok,
           detail.empty() ? std::to_string(elapsed).substr(0, 5) + "s" : detail);
}

// --- 3. analytic formula fidelity ----------------------------------------

void criterion_3() {
    bool ok = true;
    std::string detail;

    for (std::size_t S : {1, 8}) {
        for (std::size_t C : {1, 4}) {
            if (reduction_ratio(S, C, 128, 1601, 1.0, 256, 512) != 0.0) {
                ok = false;
                detail = "reduction_ratio(R=1) != 0";
            }
        }
    }

    int pairs = 0;
    const double ratios[] = {0.25, 0.5, 1.0};
    for (std::size_t S : {1, 2, 3}) {
        for (std::size_t C : {1, 2, 4}) {
            for (double ratio : ratios) {
                ModelConfig cfg;
                cfg.d = 16;
                cfg.m = 24;
                cfg.n_heads = 4;
                cfg.n_kv_heads = 4;
                cfg.S = S;
                cfg.C = C;
                cfg.cross_positions = ModelConfig::even_cross_layout(S, C);
                cfg.seed = 31 * S + C;
                const Model model = build_model(cfg);
                const std::size_t n = 5, n_k = 16;
                const Tensor text = make_text_embeds(n, cfg.d, cfg.seed + 1);
                const ImageFeatures img = make_image_features(n_k, cfg.d, cfg.seed + 2);
                PruneConfig prune;
                prune.method = PruneMethod::kSpatial;
                prune.k_ratio = ratio;
                prune.stride = 4;
                const GenerateResult gen = generate(model, text, img, prune, 0);
                const VerifyResult v = verify_counter(gen.report);
                const auto expected_kept =
                    static_cast<std::size_t>(std::llround(ratio * n_k));
                if (!v.ok || gen.report.params.kept != expected_kept) {
                    ok = false;
                    detail = "counter mismatch at S=" + std::to_string(S) +
                             " C=" + std::to_string(C) + " ratio=" + std::to_string(ratio) +
                             " measured=" + std::to_string(v.measured) +
                             " expected=" + std::to_string(v.expected);
                }
                ++pairs;
            }
        }
    }
    // Trimmed and random selections exercise non-grid kept counts.
    for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
        ModelConfig cfg;
        cfg.d = 32;
        cfg.m = 48;
        cfg.n_heads = 4;
        cfg.n_kv_heads = 4;
        cfg.S = 2;
        cfg.C = 3;
        cfg.cross_positions = ModelConfig::even_cross_layout(2, 3);
        cfg.seed = seed;
        const Model model = build_model(cfg);
        const Tensor text = make_text_embeds(6, cfg.d, seed + 10);
        const ImageFeatures img = make_image_features(24, cfg.d, seed + 20);
        PruneConfig trimmed;
        trimmed.method = PruneMethod::kTrimmed;
        trimmed.k_ratio = 0.2;
        const GenerateResult gen = generate(model, text, img, trimmed, 0);
        if (!verify_counter(gen.report).ok) {
            ok = false;
            detail = "counter mismatch on trimmed seed " + std::to_string(seed);
        }
        ++pairs;
    }
    if (pairs < 20) {
        ok = false;
        detail = "only " + std::to_string(pairs) + " pairs";
    }
    report(3, "instrumented prefill equals S*self + cross + (C-1)*pruned exactly", ok,
           detail.empty() ? std::to_string(pairs) + " (cfg, selection) pairs" : detail);
}

// --- 4. heatmap monotonicity ----------------------------------------------

void criterion_4() {
    std::vector<double> r_grid;
    for (int i = 1; i <= 10; ++i) r_grid.push_back(i / 10.0);
    std::vector<std::size_t> n_grid;
    for (std::size_t n = 16; n <= 4096; n *= 2) n_grid.push_back(n);
    const CostGridParams params{1601, 256, 512, 8, 4};
    const auto cells = heatmap(r_grid, n_grid, params);

    bool ok = true;
    std::string detail;
    const std::size_t cols = n_grid.size();
    for (std::size_t ri = 0; ri < r_grid.size() && ok; ++ri) {
        for (std::size_t ni = 0; ni < cols && ok; ++ni) {
            const double v = cells[ri * cols + ni].reduction;
            if (!(v >= 0.0) || !(v < 1.0)) {
                ok = false;
                detail = "value out of [0,1) at R=" + std::to_string(r_grid[ri]);
            }
            if (ni > 0 && cells[ri * cols + ni].reduction >
                              cells[ri * cols + ni - 1].reduction + 1e-12) {
                ok = false;
                detail = "not monotone in n";
            }
            if (ri > 0 && cells[ri * cols + ni].reduction >
                              cells[(ri - 1) * cols + ni].reduction + 1e-12) {
                ok = false;
                detail = "not monotone in R";
            }
        }
    }
    for (std::size_t ni = 0; ni < cols; ++ni) {
        if (cells[(r_grid.size() - 1) * cols + ni].reduction != 0.0) {
            ok = false;
            detail = "R=1 row not exactly zero";
        }
    }
    report(4, "reduction-ratio grid is in [0,1) and non-increasing along both axes", ok, detail);
}

// --- 5. KV-memory laws ----------------------------------------------------

void criterion_5() {
    bool ok = true;
    std::string detail;

    // Live accounting vs analytic form, across decode.
    ModelConfig cfg;
    cfg.d = 32;
    cfg.m = 64;
    cfg.n_heads = 4;
    cfg.n_kv_heads = 2;
    cfg.S = 3;
    cfg.C = 2;
    cfg.cross_positions = ModelConfig::even_cross_layout(3, 2);
    cfg.seed = 5005;
    const Model model = build_model(cfg);
    const std::size_t n = 6, n_k = 20;
    const Tensor text = make_text_embeds(n, cfg.d, 1);
    const ImageFeatures img = make_image_features(n_k, cfg.d, 2);
    PruneConfig prune;
    prune.method = PruneMethod::kSpatial;
    prune.k_ratio = 0.5;
    ForwardResult fwd = prefill(model, text, img, prune);
    const std::size_t kept = fwd.selection.kept.size();

    Tensor next({1, cfg.d});
    for (std::size_t c = 0; c < cfg.d; ++c) next.data[c] = fwd.hidden.at(n - 1, c);
    next = rmsnorm_rows(next);
    const std::uint64_t cross0 = fwd.caches.cross_bytes(cfg.dtype_bytes);
    for (std::size_t step = 0; step <= 6; ++step) {
        const CacheBytes expect = cache_bytes(cfg, 1, n + step, kept);
        if (fwd.caches.self_bytes(cfg.dtype_bytes) != expect.self_bytes ||
            fwd.caches.cross_bytes(cfg.dtype_bytes) != expect.cross_bytes ||
            fwd.caches.cross_bytes(cfg.dtype_bytes) != cross0) {
            ok = false;
            detail = "live/analytic mismatch at step " + std::to_string(step);
        }
        if (step < 6) next = rmsnorm_rows(decode_step(model, fwd.caches, next));
    }

    // Crossover closed form vs scan for 100 random configs.
    std::mt19937_64 rng(5050);
    for (int iter = 0; iter < 100; ++iter) {
        ModelConfig rc;
        rc.n_heads = 1ull << (rng() % 4);
        rc.n_kv_heads = rc.n_heads;
        rc.d = rc.n_heads * (8 << (rng() % 3));
        rc.m = rc.d;
        rc.S = 1 + rng() % 16;
        rc.C = 1 + rng() % 8;
        rc.cross_positions = ModelConfig::even_cross_layout(rc.S, rc.C);
        rc.dtype_bytes = (rng() % 2) ? 2 : 4;
        const std::size_t n_img = rng() % 4000;
        const std::size_t closed = crossover_tokens(rc, n_img);
        std::size_t scanned = 0;
        while (cache_bytes(rc, 1, scanned, n_img).self_bytes <
               cache_bytes(rc, 1, scanned, n_img).cross_bytes) {
            ++scanned;
        }
        if (closed != scanned) {
            ok = false;
            detail = "crossover mismatch: closed " + std::to_string(closed) + " vs scan " +
                     std::to_string(scanned);
        }
    }
    report(5, "cache bytes match analytically across decode; crossover matches scan", ok, detail);
}

// --- 6. remaining-ratio bounds --------------------------------------------

void criterion_6() {
    std::mt19937_64 rng(6006);
    bool ok = true;
    std::string detail;
    for (int iter = 0; iter < 200 && ok; ++iter) {
        const std::size_t heads = 1 + rng() % 4;
        const std::size_t queries = 1 + rng() % 8;
        const std::size_t features = 4ull * (2 + rng() % 15);  // multiples of 4 up to 64
        const AttentionTensor attn = (iter % 2) == 0
                                         ? oracles::random_attention(rng, heads, queries, features)
                                         : oracles::zipf_attention(rng, heads, queries, features);

        Selection prev;
        for (double k_ratio : {0.25, 0.5, 0.75}) {
            const Selection sel = trim(attn, k_ratio);
            const double remaining = sel.remaining_ratio();
            const double upper = std::min(
                1.0, static_cast<double>(sel.k * heads) / static_cast<double>(features));
            if (remaining < k_ratio - 1e-12 || remaining > upper + 1e-12) {
                ok = false;
                detail = "bounds violated at iteration " + std::to_string(iter);
            }
            if (!prev.kept.empty() &&
                !std::includes(sel.kept.begin(), sel.kept.end(), prev.kept.begin(),
                               prev.kept.end())) {
                ok = false;
                detail = "nesting violated at iteration " + std::to_string(iter);
            }
            prev = sel;
        }
    }
    report(6, "k_ratio <= remaining <= min(1, H*k/L) with nested selections", ok, detail);
}

// --- 7. latency direction --------------------------------------------------

void criterion_7() {
    ModelConfig cfg;
    cfg.d = 256;
    cfg.m = 256;
    cfg.n_heads = 4;
    cfg.n_kv_heads = 4;
    cfg.S = 2;
    cfg.C = 2;
    cfg.cross_positions = ModelConfig::even_cross_layout(2, 2);
    cfg.seed = 7007;
    const Model model = build_model(cfg);
    const std::size_t n = 8, n_k = 1601, batch = 8, runs = 20;
    const ImageFeatures img = make_image_features(n_k, cfg.d, 3);

    std::vector<Tensor> texts;
    for (std::size_t s = 0; s < batch; ++s) {
        texts.push_back(make_text_embeds(n, cfg.d, 7100 + s));
    }

    PruneConfig none;
    // Probe run fixes the k_ratio that lands the union at ~50% remaining.
    RunCounters probe_counters;
    const ForwardResult probe = prefill(model, texts[0], img, none, &probe_counters);
    PruneConfig trimmed;
    trimmed.method = PruneMethod::kTrimmed;
    trimmed.k_ratio = solve_k_ratio(probe.first_layer_attn, 0.5);

    bool ok = true;
    std::string detail;

    // Exact FLOPs comparison on one batch.
    std::uint64_t base_kv = 0, trim_kv = 0, kept = 0;
    bool counter_exact = true;
    for (std::size_t s = 0; s < batch; ++s) {
        const GenerateResult gb = generate(model, texts[s], img, none, 0);
        const GenerateResult gt = generate(model, texts[s], img, trimmed, 0);
        kept = gt.selection.kept.size();
        counter_exact = counter_exact && verify_counter(gb.report).ok &&
                        verify_counter(gt.report).ok;
        // KV-length-scaled work of the prunable cross layers (all but the
        // first cross block).
        bool first_cross = true;
        for (std::size_t b = 0; b < gb.report.measured.per_layer.size(); ++b) {
            const auto& lb = gb.report.measured.per_layer[b];
            const auto& lt = gt.report.measured.per_layer[b];
            if (!lb.is_cross) continue;
            if (first_cross) {
                first_cross = false;
                continue;
            }
            base_kv += lb.kv_dependent;
            trim_kv += lt.kv_dependent;
        }
    }
    // Linearity in the kept count makes the ratio exact: trim_kv * n_k must
    // equal base_kv * kept as integers.
    if (trim_kv * n_k != base_kv * kept) {
        ok = false;
        detail = "pruned-layer KV work is not exactly proportional to kept count";
    }
    const double ratio = static_cast<double>(trim_kv) / static_cast<double>(base_kv);
    if (std::fabs(ratio - 0.5) > 0.02) {
        ok = false;
        detail = "kept ratio " + std::to_string(ratio) + " not ~0.5";
    }
    if (!counter_exact) {
        ok = false;
        detail = "verify_counter failed on the latency config";
    }

    // Wall-clock: informational median over `runs` batched prefills.
    std::vector<double> ms_none, ms_trim;
    for (std::size_t r = 0; r < runs; ++r) {
        auto t0 = Clock::now();
        for (std::size_t s = 0; s < batch; ++s) (void)prefill(model, texts[s], img, none);
        ms_none.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
        t0 = Clock::now();
        for (std::size_t s = 0; s < batch; ++s) (void)prefill(model, texts[s], img, trimmed);
        ms_trim.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    std::sort(ms_none.begin(), ms_none.end());
    std::sort(ms_trim.begin(), ms_trim.end());
    const double med_none = ms_none[runs / 2], med_trim = ms_trim[runs / 2];
    std::printf("INFO  criterion 7: prefill median over %zu runs, batch %zu: baseline %.1f ms, "
                "trimmed %.1f ms (%s, informational)\n",
                runs, batch, med_none, med_trim,
                med_trim < med_none ? "lower" : "NOT lower");

    report(7, "trimmed run halves prunable cross-attention work exactly", ok,
           detail.empty() ? "kept " + std::to_string(kept) + "/1601" : detail);
}

// --- 8. trace round-trip ----------------------------------------------------

void criterion_8() {
    std::mt19937_64 rng(8008);
    bool ok = true;
    std::string detail;
    for (int iter = 0; iter < 100 && ok; ++iter) {
        AttnTrace trace;
        std::size_t layers, heads, queries, features;
        if (iter == 0) {
            layers = heads = queries = features = 1;  // minimal
        } else if (iter == 1) {
            layers = 8, heads = 8, queries = 16, features = 128;  // maximal fixture
        } else {
            layers = 1 + rng() % 5;
            heads = 1 + rng() % 6;
            queries = 1 + rng() % 8;
            features = 1 + rng() % 64;
        }
        for (std::size_t l = 0; l < layers; ++l) {
            trace.layers.push_back(oracles::random_attention(rng, heads, queries, features));
        }
        if (rng() % 2) {
            trace.meta["image"] = "fixture-" + std::to_string(iter);
            trace.meta["model"] = "toy";
        }
        std::stringstream buf;
        write_trace(trace, buf);
        const AttnTrace back = read_trace(buf);
        bool same = back.layers.size() == trace.layers.size() && back.meta == trace.meta;
        for (std::size_t l = 0; same && l < layers; ++l) {
            same = back.layers[l].weights.shape == trace.layers[l].weights.shape &&
                   back.layers[l].weights.data == trace.layers[l].weights.data;
        }
        if (!same) {
            ok = false;
            detail = "round-trip mismatch at iteration " + std::to_string(iter);
        }
    }
    report(8, "binary trace round-trip is bit-exact for 100 random traces", ok, detail);
}

// --- 9. ablation harness -----------------------------------------------------

void criterion_9() {
    const std::string out_path = "acceptance_ablate.json";
    const char* argv[] = {"xtrim",          "ablate",        "--dim",          "32",
                          "--ffn",          "64",            "--heads",        "4",
                          "--self-layers",  "2",             "--cross-layers", "2",
                          "--image-tokens", "64",            "--text-tokens",  "8",
                          "--workloads",    "50",            "--steps",        "2",
                          "--target-ratio", "0.5",           "--seed",         "909",
                          "--out",          out_path.c_str()};
    const int rc = xtrim::cli::run_cli(static_cast<int>(std::size(argv)), argv);
    bool ok = rc == 0;
    std::string detail = ok ? "" : "cmd_ablate exit code " + std::to_string(rc);
    if (ok) {
        std::ifstream in(out_path);
        nlohmann::json j;
        in >> j;
        const double win = j.at("summary").at("trimmed_beats_random").get<double>();
        ok = win >= 0.8;
        detail = "trimmed beats random on " + std::to_string(static_cast<int>(win * 100)) +
                 "% of 50 workloads";
        for (const auto& row : j.at("workloads")) {
            if (row.at("trimmed").at("remaining_ratio").get<double>() > 0.5 + 1e-9) {
                ok = false;
                detail = "trimmed remaining ratio above the matched budget";
            }
        }
    }
    std::remove(out_path.c_str());
    report(9, "cmd_ablate: trimmed divergence <= random on >= 80% of workloads", ok, detail);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (g_failures == 0) {
        std::printf("All acceptance criteria passed.\n");
    } else {
        std::printf("%d acceptance criteria FAILED.\n", g_failures);
    }
    return g_failures == 0 ? 0 : 1;
}
