// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "xtrim/tensor.hpp"

using namespace xtrim;

static void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor a = seeded_tensor({n, n}, 1, 1.0f);
    const Tensor b = seeded_tensor({n, n}, 2, 1.0f);
    for (auto _ : state) {
        Tensor c = matmul(a, b);
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

static void BM_MatmulImageProjection(benchmark::State& state) {
    // The K/V projection shape that dominates trimmed-vs-full prefill cost.
    const auto rows = static_cast<std::size_t>(state.range(0));
    const Tensor feats = seeded_tensor({rows, 256}, 3, 1.0f);
    const Tensor w = seeded_tensor({256, 256}, 4, 0.02f);
    for (auto _ : state) {
        Tensor k = matmul(feats, w);
        benchmark::DoNotOptimize(k.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows) * 256 * 256);
}
BENCHMARK(BM_MatmulImageProjection)->Arg(1601)->Arg(800)->Arg(400);

static void BM_SoftmaxRows(benchmark::State& state) {
    const auto cols = static_cast<std::size_t>(state.range(0));
    const Tensor t = seeded_tensor({64, cols}, 5, 4.0f);
    for (auto _ : state) {
        Tensor s = softmax_rows(t);
        benchmark::DoNotOptimize(s.data.data());
    }
}
BENCHMARK(BM_SoftmaxRows)->Arg(256)->Arg(1601);

static void BM_Attention(benchmark::State& state) {
    const auto n_kv = static_cast<std::size_t>(state.range(0));
    const Tensor q = seeded_tensor({16, 64}, 6, 1.0f);
    const Tensor k = seeded_tensor({n_kv, 64}, 7, 1.0f);
    const Tensor v = seeded_tensor({n_kv, 64}, 8, 1.0f);
    for (auto _ : state) {
        AttentionResult r = attention(q, k, v, false);
        benchmark::DoNotOptimize(r.out.data.data());
    }
}
BENCHMARK(BM_Attention)->Arg(256)->Arg(1601);

BENCHMARK_MAIN();
