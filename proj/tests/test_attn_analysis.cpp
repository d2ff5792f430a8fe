// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers/oracles.hpp"
#include "xtrim/attn_analysis.hpp"
#include "xtrim/model.hpp"
#include "xtrim/workload.hpp"

using namespace xtrim;

namespace {

AttentionTensor uniform_attention(std::size_t heads, std::size_t queries, std::size_t features) {
    Tensor t({heads, queries, features});
    for (float& v : t.data) v = 1.0f / static_cast<float>(features);
    return AttentionTensor(std::move(t));
}

AttentionTensor onehot_attention(std::size_t heads, std::size_t queries, std::size_t features,
                                 std::size_t hot) {
    Tensor t({heads, queries, features});
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t j = 0; j < queries; ++j) t.at3(h, j, hot) = 1.0f;
    }
    return AttentionTensor(std::move(t));
}

}  // namespace

TEST_CASE("aggregate_layer on uniform and one-hot inputs") {
    const auto flat = aggregate_layer(uniform_attention(4, 8, 16));
    for (double v : flat) CHECK(v == doctest::Approx(4.0 * 8.0 / 16.0));

    const auto hot = aggregate_layer(onehot_attention(4, 8, 16, 3));
    CHECK(hot[3] == doctest::Approx(32.0));
    for (std::size_t i = 0; i < 16; ++i) {
        if (i != 3) CHECK(hot[i] == 0.0);
    }
}

TEST_CASE("aggregate_layer matches the triple loop and conserves mass") {
    std::mt19937_64 rng(97);
    const AttentionTensor attn = oracles::random_attention(rng, 3, 5, 7);
    const auto v = aggregate_layer(attn);
    double total = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
        double want = 0.0;
        for (std::size_t h = 0; h < 3; ++h) {
            for (std::size_t j = 0; j < 5; ++j) want += attn.at(h, j, i);
        }
        CHECK(v[i] == doctest::Approx(want).epsilon(1e-12));
        total += v[i];
    }
    CHECK(total == doctest::Approx(15.0).epsilon(1e-3));
}

TEST_CASE("aggregate is equivariant under feature permutation") {
    std::mt19937_64 rng(101);
    const AttentionTensor attn = oracles::random_attention(rng, 2, 3, 8);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor permuted({2, 3, 8});
    for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t i = 0; i < 8; ++i) permuted.at3(h, j, perm[i]) = attn.at(h, j, i);
        }
    }
    const auto base = aggregate_layer(attn);
    const auto moved = aggregate_layer(AttentionTensor(std::move(permuted)));
    for (std::size_t i = 0; i < 8; ++i) CHECK(moved[perm[i]] == doctest::Approx(base[i]));
}

TEST_CASE("concentration: uniform, one-hot and the hand example") {
    const std::vector<double> uniform(16, 1.0);
    CHECK(concentration(uniform, 0.25) == doctest::Approx(0.25));
    CHECK(concentration(uniform, 0.5) == doctest::Approx(0.5));

    std::vector<double> onehot(16, 0.0);
    onehot[7] = 3.0;
    CHECK(concentration(onehot, 0.05) == doctest::Approx(1.0));
    CHECK(concentration(onehot, 0.9) == doctest::Approx(1.0));

    const std::vector<double> v{4.0, 2.0, 1.0, 1.0};
    CHECK(concentration(v, 0.25) == doctest::Approx(0.5));
}

TEST_CASE("concentration is monotone in q and scale invariant") {
    std::mt19937_64 rng(103);
    std::vector<double> v(24);
    std::uniform_real_distribution<double> dist(0.0, 3.0);
    for (double& x : v) x = dist(rng);
    double prev = 0.0;
    for (double q : {0.05, 0.1, 0.25, 0.5, 0.75, 1.0}) {
        const double c = concentration(v, q);
        CHECK(c >= prev - 1e-12);
        CHECK(c >= q - 1.0 / 24.0 - 1e-12);
        CHECK(c <= 1.0 + 1e-12);
        prev = c;
    }
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= 17.0;
    CHECK(concentration(scaled, 0.25) == doctest::Approx(concentration(v, 0.25)));
}

TEST_CASE("interlayer overlap: reflexive, symmetric, disjoint") {
    std::mt19937_64 rng(107);
    const AttentionTensor a = oracles::random_attention(rng, 2, 3, 8);
    const AttentionTensor b = oracles::random_attention(rng, 2, 3, 8);
    CHECK(interlayer_overlap(a, a, 0.5) == doctest::Approx(1.0));
    CHECK(interlayer_overlap(a, b, 0.5) == doctest::Approx(interlayer_overlap(b, a, 0.5)));

    // Disjoint by construction: head mass on {0,1} vs {2,3}.
    const AttentionTensor lo = onehot_attention(1, 2, 4, 0);
    const AttentionTensor hi = onehot_attention(1, 2, 4, 2);
    CHECK(interlayer_overlap(lo, hi, 0.25) == doctest::Approx(0.0));
}

TEST_CASE("interlayer overlap matches hand-built Jaccard arithmetic") {
    // Layer A keeps {0,1,2,3}; layer B keeps {0,1,2,5}: 3 shared of 5 total.
    Tensor a({1, 1, 8});
    Tensor b({1, 1, 8});
    const float big = 0.2f, small = 0.05f;
    for (std::size_t i = 0; i < 8; ++i) {
        a.at3(0, 0, i) = (i < 4) ? big : small;
        b.at3(0, 0, i) = (i < 3 || i == 5) ? big : small;
    }
    // normalize rows
    float sa = 0, sb = 0;
    for (std::size_t i = 0; i < 8; ++i) sa += a.at3(0, 0, i), sb += b.at3(0, 0, i);
    for (std::size_t i = 0; i < 8; ++i) a.at3(0, 0, i) /= sa, b.at3(0, 0, i) /= sb;
    const double overlap =
        interlayer_overlap(AttentionTensor(std::move(a)), AttentionTensor(std::move(b)), 0.5);
    CHECK(overlap == doctest::Approx(3.0 / 5.0));
}

TEST_CASE("analyze_trace on a single layer yields a unit overlap matrix") {
    std::mt19937_64 rng(109);
    AttnTrace trace;
    trace.layers.push_back(oracles::random_attention(rng, 2, 3, 10));
    const TraceAnalysis analysis = analyze_trace(trace, 0.25);
    REQUIRE(analysis.overlap.size() == 1);
    CHECK(analysis.overlap[0][0] == doctest::Approx(1.0));
    CHECK(analysis.quantiles == std::vector<double>{0.05, 0.1, 0.25});
    CHECK(analysis.layers[0].aggregate.size() == 10);
}

TEST_CASE("trace analysis is bit-identical to in-process metrics") {
    // Run the toy model, capture its cross-attention stack, push it through
    // the binary format, and check the analysis never notices.
    ModelConfig cfg;
    cfg.d = 16;
    cfg.m = 32;
    cfg.n_heads = 2;
    cfg.n_kv_heads = 2;
    cfg.S = 2;
    cfg.C = 3;
    cfg.cross_positions = ModelConfig::even_cross_layout(2, 3);
    cfg.seed = 113;
    const Model model = build_model(cfg);
    const Tensor text = make_text_embeds(5, cfg.d, 1);
    const ImageFeatures img = make_image_features(12, cfg.d, 2);
    PruneConfig none;
    PrefillOptions opts;
    opts.capture_all_cross_attn = true;
    const GenerateResult gen = generate(model, text, img, none, 0, opts);

    AttnTrace trace;
    trace.layers = gen.cross_attn;
    trace.meta["src"] = "in-process";

    std::stringstream buf;
    write_trace(trace, buf);
    const AttnTrace loaded = read_trace(buf);

    const TraceAnalysis live = analyze_trace(trace, 0.25);
    const TraceAnalysis replayed = analyze_trace(loaded, 0.25);
    CHECK(analysis_to_json(live) == analysis_to_json(replayed));
    for (std::size_t l = 0; l < live.layers.size(); ++l) {
        CHECK(live.layers[l].aggregate == replayed.layers[l].aggregate);
        CHECK(live.layers[l].kept == replayed.layers[l].kept);
    }
}

TEST_CASE("toy model cross-attention stacks show high inter-layer overlap on structured input") {
    ModelConfig cfg;
    cfg.d = 32;
    cfg.m = 64;
    cfg.n_heads = 4;
    cfg.n_kv_heads = 4;
    cfg.S = 2;
    cfg.C = 2;
    cfg.cross_positions = ModelConfig::even_cross_layout(2, 2);
    cfg.seed = 127;
    const Model model = build_model(cfg);
    const Tensor text = make_text_embeds(6, cfg.d, 3);
    const ImageFeatures img = make_zipf_image_features(48, cfg.d, 4);
    PruneConfig none;
    PrefillOptions opts;
    opts.capture_all_cross_attn = true;
    const GenerateResult gen = generate(model, text, img, none, 0, opts);

    std::mt19937_64 rng(5);
    const double overlap = interlayer_overlap(gen.cross_attn[0], gen.cross_attn[1], 0.25);
    const double chance =
        interlayer_overlap(gen.cross_attn[0], oracles::random_attention(rng, 4, 6, 48), 0.25);
    CHECK(overlap > chance);
}
