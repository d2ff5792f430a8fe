// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "xtrim/attn_analysis.hpp"
#include "xtrim/cost_model.hpp"
#include "xtrim/kv_cache.hpp"
#include "xtrim/model.hpp"
#include "xtrim/trace_io.hpp"
#include "xtrim/trimming.hpp"
#include "xtrim/workload.hpp"

namespace xtrim::cli {

namespace {

using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct ModelFlags {
    std::size_t dim = 64;
    std::size_t ffn = 128;
    std::size_t heads = 4;
    std::size_t kv_heads = 0;  // 0: same as heads
    std::size_t self_layers = 8;
    std::size_t cross_layers = 4;
    std::size_t image_tokens = 64;
    std::size_t text_tokens = 16;
    std::uint64_t seed = 1;

    void add_to(CLI::App& app) {
        app.add_option("--dim", dim, "model width d");
        app.add_option("--ffn", ffn, "feed-forward width m");
        app.add_option("--heads", heads, "attention head count");
        app.add_option("--kv-heads", kv_heads, "KV head count (default: --heads)");
        app.add_option("--self-layers", self_layers, "self-attention block count S");
        app.add_option("--cross-layers", cross_layers, "cross-attention block count C");
        app.add_option("--image-tokens", image_tokens, "image feature count n_k");
        app.add_option("--text-tokens", text_tokens, "text token count n");
        app.add_option("--seed", seed, "base seed for weights and inputs");
    }

    ModelConfig to_config() const {
        ModelConfig cfg;
        cfg.d = dim;
        cfg.m = ffn;
        cfg.n_heads = heads;
        cfg.n_kv_heads = kv_heads == 0 ? heads : kv_heads;
        cfg.S = self_layers;
        cfg.C = cross_layers;
        cfg.cross_positions = ModelConfig::even_cross_layout(self_layers, cross_layers);
        cfg.seed = seed;
        return cfg;
    }
};

std::uint64_t sequence_seed(std::uint64_t base, std::size_t index) {
    std::uint64_t state = base ^ 0x5851F42D4C957F2DULL;
    std::uint64_t s = 0;
    for (std::size_t i = 0; i <= index; ++i) s = splitmix64_next(state);
    return s;
}

ordered_json selection_json(const Selection& sel) {
    return ordered_json::parse(selection_to_json(sel));
}

void write_text(const std::string& path, const std::string& text) {
    const bool needs_newline = text.empty() || text.back() != '\n';
    if (path.empty() || path == "-") {
        std::cout << text;
        if (needs_newline) std::cout << '\n';
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    out << text;
    if (needs_newline) out << '\n';
    if (!out) throw Error("write failed: " + path);
}

double divergence_l2(const GenerateResult& a, const GenerateResult& b) {
    double num = 0.0, den = 0.0;
    const auto accumulate = [&](const Tensor& x, const Tensor& y) {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double diff = static_cast<double>(x.data[i]) - y.data[i];
            num += diff * diff;
            den += static_cast<double>(y.data[i]) * y.data[i];
        }
    };
    accumulate(a.prefill_hidden, b.prefill_hidden);
    accumulate(a.step_hiddens, b.step_hiddens);
    return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

// ---------------------------------------------------------------- run ----

struct RunFlags {
    ModelFlags model;
    std::string method = "none";
    double k_ratio = 1.0;
    std::size_t stride = 2;
    std::size_t batch = 1;
    std::size_t steps = 0;
    std::string out;
    std::string emit_trace;
};

int cmd_run(const RunFlags& flags) {
    ModelConfig cfg = flags.model.to_config();
    cfg.validate();
    PruneConfig prune;
    prune.method = prune_method_from_string(flags.method);
    prune.k_ratio = flags.k_ratio;
    prune.seed = flags.model.seed;
    prune.stride = flags.stride;
    prune.validate();

    const Model model = build_model(cfg);
    const ImageFeatures img =
        make_image_features(flags.model.image_tokens, cfg.d, flags.model.seed);

    PrefillOptions opts;
    opts.capture_all_cross_attn = !flags.emit_trace.empty();

    ordered_json sequences = ordered_json::array();
    std::uint64_t checksum = 0xcbf29ce484222325ULL;
    std::uint64_t cache_self = 0, cache_cross = 0;
    std::uint64_t prefill_self = 0, prefill_cross = 0, decode_covered = 0;
    double total_remaining = 0.0;
    double prefill_ms = 0.0, decode_ms = 0.0;
    ordered_json first_report;

    for (std::size_t s = 0; s < flags.batch; ++s) {
        const Tensor text = make_text_embeds(flags.model.text_tokens, cfg.d,
                                             sequence_seed(flags.model.seed, s));
        RunCounters counters;
        const auto t0 = Clock::now();
        ForwardResult fwd =
            prefill(model, text, img, prune, &counters, s == 0 ? opts : PrefillOptions{});
        prefill_ms += ms_since(t0);

        Tensor step_hiddens;
        step_hiddens.shape = {0, cfg.d};
        if (flags.steps > 0) {
            Tensor next({1, cfg.d});
            const std::size_t n = fwd.hidden.rows();
            for (std::size_t c = 0; c < cfg.d; ++c) next.data[c] = fwd.hidden.at(n - 1, c);
            next = rmsnorm_rows(next);
            const auto t1 = Clock::now();
            for (std::size_t st = 0; st < flags.steps; ++st) {
                const Tensor h = decode_step(model, fwd.caches, next, &counters);
                step_hiddens.data.insert(step_hiddens.data.end(), h.data.begin(), h.data.end());
                step_hiddens.shape[0] += 1;
                next = rmsnorm_rows(h);
            }
            decode_ms += ms_since(t1);
        }
        const CostReport report = make_cost_report(cfg, counters, flags.model.text_tokens,
                                                   flags.model.image_tokens,
                                                   fwd.selection.kept.size());

        const std::uint64_t seq_hash_pre =
            fnv1a64(fwd.hidden.data.data(), fwd.hidden.data.size() * 4);
        const std::uint64_t seq_hash_steps =
            fnv1a64(step_hiddens.data.data(), step_hiddens.data.size() * 4);
        checksum ^= seq_hash_pre + 0x9E3779B97F4A7C15ULL + (checksum << 6) + (checksum >> 2);
        checksum ^= seq_hash_steps + 0x9E3779B97F4A7C15ULL + (checksum << 6) + (checksum >> 2);

        cache_self += fwd.caches.self_bytes(cfg.dtype_bytes);
        cache_cross += fwd.caches.cross_bytes(cfg.dtype_bytes);
        prefill_self += report.measured.prefill_self;
        prefill_cross += report.measured.prefill_cross;
        decode_covered += report.measured.decode_covered;
        total_remaining += fwd.selection.remaining_ratio();

        ordered_json seq;
        seq["index"] = s;
        seq["kept"] = fwd.selection.kept.size();
        seq["remaining_ratio"] = fwd.selection.remaining_ratio();
        seq["prefill_checksum"] = seq_hash_pre;
        seq["steps_checksum"] = seq_hash_steps;
        sequences.push_back(std::move(seq));

        if (s == 0) {
            first_report["selection"] = selection_json(fwd.selection);
            first_report["analytic"] = {
                {"flops_self", report.analytic.flops_self},
                {"flops_cross", report.analytic.flops_cross},
                {"flops_prune", report.analytic.flops_prune},
                {"reduction_ratio", report.analytic.reduction_ratio},
            };
            ordered_json per_layer = ordered_json::array();
            for (const auto& layer : report.measured.per_layer) {
                per_layer.push_back({{"block", layer.block_index},
                                     {"cross", layer.is_cross},
                                     {"covered_flops", layer.covered},
                                     {"kv_dependent_flops", layer.kv_dependent}});
            }
            first_report["measured_per_layer"] = std::move(per_layer);
            const VerifyResult verdict = verify_counter(report);
            first_report["counter_matches_analytic"] =
                cfg.n_kv_heads == cfg.n_heads ? ordered_json(verdict.ok) : ordered_json(nullptr);

            if (!flags.emit_trace.empty()) {
                AttnTrace trace;
                trace.layers = std::move(fwd.cross_attn);
                trace.meta["model"] = "xtrim-toy";
                trace.meta["seed"] = std::to_string(flags.model.seed);
                trace.meta["method"] = flags.method;
                if (flags.emit_trace.size() >= 5 &&
                    flags.emit_trace.compare(flags.emit_trace.size() - 5, 5, ".json") == 0) {
                    write_trace_json_file(trace, flags.emit_trace);
                } else {
                    write_trace_file(trace, flags.emit_trace);
                }
            }
        }
    }

    ordered_json report;
    report["schema_version"] = 1;
    report["command"] = "run";
    report["config"] = {
        {"method", flags.method},     {"k_ratio", flags.k_ratio},
        {"seed", flags.model.seed},   {"dim", cfg.d},
        {"ffn", cfg.m},               {"heads", cfg.n_heads},
        {"kv_heads", cfg.n_kv_heads}, {"self_layers", cfg.S},
        {"cross_layers", cfg.C},      {"image_tokens", flags.model.image_tokens},
        {"text_tokens", flags.model.text_tokens},
        {"batch", flags.batch},       {"steps", flags.steps},
    };
    report["selection"] = first_report["selection"];
    report["sequences"] = std::move(sequences);
    report["remaining_ratio_mean"] = total_remaining / static_cast<double>(flags.batch);
    report["analytic"] = first_report["analytic"];
    report["measured_per_layer"] = first_report["measured_per_layer"];
    report["counter_matches_analytic"] = first_report["counter_matches_analytic"];
    report["measured_totals"] = {
        {"prefill_self_flops", prefill_self},
        {"prefill_cross_flops", prefill_cross},
        {"decode_flops", decode_covered},
    };
    report["cache_bytes"] = {
        {"self", cache_self},
        {"cross", cache_cross},
    };
    report["wall_clock_ms"] = {
        {"prefill", prefill_ms},
        {"decode", decode_ms},
    };
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(checksum));
    report["hidden_checksum"] = hex;

    write_text(flags.out, report.dump(2));
    return 0;
}

// --------------------------------------------------------------- cost ----

struct CostFlags {
    std::vector<double> r_grid;
    std::vector<std::size_t> n_grid;
    std::size_t n_k = 1601;
    std::size_t dim = 256;
    std::size_t ffn = 512;
    std::size_t self_layers = 8;
    std::size_t cross_layers = 4;
    std::string out;
    // Optional KV-memory curve.
    std::string memory_out;
    std::vector<std::size_t> batch_grid;
    std::vector<std::size_t> text_grid;
    std::size_t img_kept = 0;  // 0: use n_k
};

int cmd_cost(const CostFlags& flags) {
    std::vector<double> r_grid = flags.r_grid;
    if (r_grid.empty()) {
        for (int i = 1; i <= 10; ++i) r_grid.push_back(i / 10.0);
    }
    std::vector<std::size_t> n_grid = flags.n_grid;
    if (n_grid.empty()) {
        for (std::size_t n = 16; n <= 4096; n *= 2) n_grid.push_back(n);
    }
    for (double r : r_grid) {
        if (!(r > 0.0) || r > 1.0) throw ConfigError("--r-grid entries must lie in (0, 1]");
    }

    CostGridParams params{flags.n_k, flags.dim, flags.ffn, flags.self_layers,
                          flags.cross_layers};
    const auto cells = heatmap(r_grid, n_grid, params);
    std::ostringstream csv;
    write_heatmap_csv(csv, cells);
    write_text(flags.out, csv.str());

    if (!flags.memory_out.empty()) {
        ModelConfig cfg;
        cfg.d = flags.dim;
        cfg.m = flags.ffn;
        cfg.S = flags.self_layers;
        cfg.C = flags.cross_layers;
        cfg.cross_positions = ModelConfig::even_cross_layout(cfg.S, cfg.C);
        std::vector<std::size_t> batches =
            flags.batch_grid.empty() ? std::vector<std::size_t>{1, 2, 4, 8, 16, 32}
                                     : flags.batch_grid;
        std::vector<std::size_t> texts = flags.text_grid;
        if (texts.empty()) {
            for (std::size_t n = 64; n <= 4096; n *= 2) texts.push_back(n);
        }
        std::ostringstream mem;
        write_memory_csv(mem, cfg, batches, texts,
                         flags.img_kept == 0 ? flags.n_k : flags.img_kept);
        write_text(flags.memory_out, mem.str());
    }
    return 0;
}

// ------------------------------------------------------------ analyze ----

struct AnalyzeFlags {
    std::string trace;
    double k_ratio = 0.25;
    std::string out;
};

int cmd_analyze(const AnalyzeFlags& flags) {
    const AttnTrace trace = read_trace_any(flags.trace);
    const TraceAnalysis analysis = analyze_trace(trace, flags.k_ratio);
    write_text(flags.out, analysis_to_json(analysis));
    return 0;
}

// ------------------------------------------------------------- ablate ----

struct AblateFlags {
    ModelFlags model;
    double target_ratio = 0.5;
    std::size_t workloads = 50;
    std::size_t steps = 4;
    std::string out;
};

int cmd_ablate(const AblateFlags& flags) {
    ModelConfig cfg = flags.model.to_config();
    cfg.validate();
    const Model model = build_model(cfg);
    const std::size_t n_k = flags.model.image_tokens;
    const auto spatial_stride = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(1.0 / flags.target_ratio)));

    ordered_json rows = ordered_json::array();
    std::size_t trimmed_beats_random = 0, trimmed_beats_spatial = 0;

    for (std::size_t w = 0; w < flags.workloads; ++w) {
        const std::uint64_t seed_w = sequence_seed(flags.model.seed, w);
        const Tensor text = make_text_embeds(flags.model.text_tokens, cfg.d, seed_w);
        const ImageFeatures img = make_zipf_image_features(n_k, cfg.d, seed_w);

        PruneConfig none;
        const GenerateResult base = generate(model, text, img, none, flags.steps);

        PruneConfig trimmed;
        trimmed.method = PruneMethod::kTrimmed;
        trimmed.k_ratio = solve_k_ratio(base.first_layer_attn, flags.target_ratio);
        const GenerateResult trim_run = generate(model, text, img, trimmed, flags.steps);

        PruneConfig random;
        random.method = PruneMethod::kRandom;
        random.k_ratio = flags.target_ratio;
        random.seed = seed_w;
        const GenerateResult rand_run = generate(model, text, img, random, flags.steps);

        PruneConfig spatial;
        spatial.method = PruneMethod::kSpatial;
        spatial.k_ratio = flags.target_ratio;
        spatial.stride = spatial_stride;
        const GenerateResult spat_run = generate(model, text, img, spatial, flags.steps);

        const double div_trim = divergence_l2(trim_run, base);
        const double div_rand = divergence_l2(rand_run, base);
        const double div_spat = divergence_l2(spat_run, base);
        if (div_trim <= div_rand) ++trimmed_beats_random;
        if (div_trim <= div_spat) ++trimmed_beats_spatial;

        ordered_json row;
        row["workload"] = w;
        row["seed"] = seed_w;
        row["trimmed"] = {{"k_ratio", trimmed.k_ratio},
                          {"remaining_ratio", trim_run.selection.remaining_ratio()},
                          {"divergence", div_trim}};
        row["random"] = {{"remaining_ratio", rand_run.selection.remaining_ratio()},
                         {"divergence", div_rand}};
        row["spatial"] = {{"remaining_ratio", spat_run.selection.remaining_ratio()},
                          {"divergence", div_spat}};
        rows.push_back(std::move(row));
    }

    ordered_json report;
    report["schema_version"] = 1;
    report["command"] = "ablate";
    report["config"] = {
        {"target_ratio", flags.target_ratio}, {"workloads", flags.workloads},
        {"steps", flags.steps},               {"seed", flags.model.seed},
        {"dim", cfg.d},                       {"ffn", cfg.m},
        {"heads", cfg.n_heads},               {"self_layers", cfg.S},
        {"cross_layers", cfg.C},              {"image_tokens", n_k},
        {"text_tokens", flags.model.text_tokens},
    };
    report["workloads"] = std::move(rows);
    report["summary"] = {
        {"trimmed_beats_random",
         static_cast<double>(trimmed_beats_random) / static_cast<double>(flags.workloads)},
        {"trimmed_beats_spatial",
         static_cast<double>(trimmed_beats_spatial) / static_cast<double>(flags.workloads)},
    };
    write_text(flags.out, report.dump(2));
    return 0;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < bytes; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"xtrim: cross-attention decoder benchmark with visual-feature trimming"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "run a seeded toy experiment");
    run_flags.model.add_to(*run);
    run->add_option("--method", run_flags.method, "none|trimmed|random|spatial")
        ->check(CLI::IsMember({"none", "trimmed", "random", "spatial"}));
    run->add_option("--k-ratio", run_flags.k_ratio,
                    "per-head top-k fraction (trimmed) or target ratio (baselines)");
    run->add_option("--stride", run_flags.stride, "spatial baseline stride");
    run->add_option("--batch", run_flags.batch, "independent sequences")->check(CLI::PositiveNumber);
    run->add_option("--steps", run_flags.steps, "pseudo-decode steps");
    run->add_option("--out", run_flags.out, "report path (default stdout)");
    run->add_option("--emit-trace", run_flags.emit_trace,
                    "write the cross-attention trace of sequence 0");

    CostFlags cost_flags;
    auto* cost = app.add_subcommand("cost", "analytic FLOPs sweep (CSV heatmap)");
    cost->add_option("--r-grid", cost_flags.r_grid, "budget ratios (default 0.1..1.0)")
        ->delimiter(',');
    cost->add_option("--n-grid", cost_flags.n_grid, "sequence lengths (default 16..4096)")
        ->delimiter(',');
    cost->add_option("--n-k", cost_flags.n_k, "image feature count");
    cost->add_option("--dim", cost_flags.dim, "model width d");
    cost->add_option("--ffn", cost_flags.ffn, "feed-forward width m");
    cost->add_option("--self-layers", cost_flags.self_layers, "self block count S");
    cost->add_option("--cross-layers", cost_flags.cross_layers, "cross block count C");
    cost->add_option("--out", cost_flags.out, "CSV path (default stdout)");
    cost->add_option("--memory-out", cost_flags.memory_out, "also write a KV-memory curve CSV");
    cost->add_option("--batch-grid", cost_flags.batch_grid, "memory curve batch sizes")
        ->delimiter(',');
    cost->add_option("--text-grid", cost_flags.text_grid, "memory curve text lengths")
        ->delimiter(',');
    cost->add_option("--img-kept", cost_flags.img_kept, "memory curve kept features");

    AnalyzeFlags analyze_flags;
    auto* analyze = app.add_subcommand("analyze", "trace diagnostics (JSON report)");
    analyze->add_option("--trace", analyze_flags.trace, "trace file (.xatn binary or .json)")
        ->required();
    analyze->add_option("--k-ratio", analyze_flags.k_ratio, "selection ratio for overlap");
    analyze->add_option("--out", analyze_flags.out, "report path (default stdout)");

    AblateFlags ablate_flags;
    auto* ablate = app.add_subcommand("ablate", "trimmed vs random vs spatial at matched ratio");
    ablate_flags.model.add_to(*ablate);
    ablate->add_option("--target-ratio", ablate_flags.target_ratio, "matched remaining ratio");
    ablate->add_option("--workloads", ablate_flags.workloads, "seeded workload count");
    ablate->add_option("--steps", ablate_flags.steps, "pseudo-decode steps per run");
    ablate->add_option("--out", ablate_flags.out, "report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (cost->parsed()) return cmd_cost(cost_flags);
        if (analyze->parsed()) return cmd_analyze(analyze_flags);
        if (ablate->parsed()) return cmd_ablate(ablate_flags);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 2;
}

}  // namespace xtrim::cli
