// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "xtrim/model.hpp"
#include "xtrim/trimming.hpp"
#include "xtrim/workload.hpp"

using namespace xtrim;

namespace {

Model bench_model() {
    ModelConfig cfg;
    cfg.d = 256;
    cfg.m = 512;
    cfg.n_heads = 4;
    cfg.n_kv_heads = 4;
    cfg.S = 4;
    cfg.C = 2;
    cfg.cross_positions = ModelConfig::even_cross_layout(4, 2);
    cfg.seed = 11;
    return build_model(cfg);
}

}  // namespace

static void BM_PrefillFull(benchmark::State& state) {
    const Model model = bench_model();
    const Tensor text = make_text_embeds(16, 256, 1);
    const ImageFeatures img = make_image_features(static_cast<std::size_t>(state.range(0)), 256, 2);
    PruneConfig none;
    for (auto _ : state) {
        ForwardResult fwd = prefill(model, text, img, none);
        benchmark::DoNotOptimize(fwd.hidden.data.data());
    }
}
BENCHMARK(BM_PrefillFull)->Arg(800)->Arg(1601)->Unit(benchmark::kMillisecond);

static void BM_PrefillTrimmed(benchmark::State& state) {
    const Model model = bench_model();
    const Tensor text = make_text_embeds(16, 256, 1);
    const ImageFeatures img = make_image_features(1601, 256, 2);
    PruneConfig none;
    const ForwardResult probe = prefill(model, text, img, none);
    PruneConfig trimmed;
    trimmed.method = PruneMethod::kTrimmed;
    trimmed.k_ratio = solve_k_ratio(probe.first_layer_attn,
                                    static_cast<double>(state.range(0)) / 100.0);
    for (auto _ : state) {
        ForwardResult fwd = prefill(model, text, img, trimmed);
        benchmark::DoNotOptimize(fwd.hidden.data.data());
    }
}
BENCHMARK(BM_PrefillTrimmed)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_DecodeStep(benchmark::State& state) {
    const Model model = bench_model();
    const Tensor text = make_text_embeds(16, 256, 1);
    const ImageFeatures img = make_image_features(1601, 256, 2);
    PruneConfig prune;
    if (state.range(0) < 100) {
        prune.method = PruneMethod::kRandom;
        prune.k_ratio = static_cast<double>(state.range(0)) / 100.0;
    }
    ForwardResult fwd = prefill(model, text, img, prune);
    Tensor next({1, 256});
    for (std::size_t c = 0; c < 256; ++c) next.data[c] = fwd.hidden.at(15, c);
    next = rmsnorm_rows(next);
    for (auto _ : state) {
        Tensor h = decode_step(model, fwd.caches, next);
        next = rmsnorm_rows(h);
        benchmark::DoNotOptimize(h.data.data());
    }
}
BENCHMARK(BM_DecodeStep)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_TrimSelection(benchmark::State& state) {
    const Model model = bench_model();
    const Tensor text = make_text_embeds(16, 256, 1);
    const ImageFeatures img = make_image_features(1601, 256, 2);
    PruneConfig none;
    const ForwardResult probe = prefill(model, text, img, none);
    for (auto _ : state) {
        Selection sel = trim(probe.first_layer_attn, 0.25);
        benchmark::DoNotOptimize(sel.kept.data());
    }
}
BENCHMARK(BM_TrimSelection);

BENCHMARK_MAIN();
