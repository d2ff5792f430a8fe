// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace xtrim {

// Role a matmul plays inside a block. The analytic cost model covers the
// projection, attention and up/down FFN matmuls; the gate projection feeds an
// elementwise gate and sits outside the model, as do non-matmul ops entirely.
enum class MatmulKind : std::uint8_t {
    kQProj = 0,
    kKProj,
    kVProj,
    kOProj,
    kAttnScore,
    kAttnValue,
    kFfnUp,
    kFfnDown,
    kFfnGate,  // excluded from the analytic model
    kOther,    // excluded from the analytic model
};

inline constexpr std::size_t kMatmulKindCount = 10;

constexpr bool is_covered(MatmulKind kind) {
    return kind != MatmulKind::kFfnGate && kind != MatmulKind::kOther;
}

// Accumulates matmul cost per role. The unit is one fused multiply-add per
// output element per inner index, i.e. a matmul [r x k] * [k x c] costs
// r*k*c units. This is exactly the unit the analytic layer formulas are
// written in, so instrumented and analytic figures compare without scaling.
class FlopCounter {
public:
    void add_matmul(MatmulKind kind, std::size_t r, std::size_t k, std::size_t c) {
        by_kind_[static_cast<std::size_t>(kind)] +=
            static_cast<std::uint64_t>(r) * k * c;
    }

    void add(MatmulKind kind, std::uint64_t units) {
        by_kind_[static_cast<std::size_t>(kind)] += units;
    }

    std::uint64_t of(MatmulKind kind) const {
        return by_kind_[static_cast<std::size_t>(kind)];
    }

    /// Total over the categories the analytic model covers.
    std::uint64_t covered() const {
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < kMatmulKindCount; ++i) {
            if (is_covered(static_cast<MatmulKind>(i))) sum += by_kind_[i];
        }
        return sum;
    }

    /// Total over every category, including excluded ones.
    std::uint64_t total() const {
        std::uint64_t sum = 0;
        for (auto v : by_kind_) sum += v;
        return sum;
    }

    /// K/V projection plus attention score/value units: the terms that scale
    /// with the KV length and shrink under feature trimming.
    std::uint64_t kv_dependent() const {
        return of(MatmulKind::kKProj) + of(MatmulKind::kVProj) +
               of(MatmulKind::kAttnScore) + of(MatmulKind::kAttnValue);
    }

    FlopCounter& operator+=(const FlopCounter& other) {
        for (std::size_t i = 0; i < kMatmulKindCount; ++i) by_kind_[i] += other.by_kind_[i];
        return *this;
    }

private:
    std::array<std::uint64_t, kMatmulKindCount> by_kind_{};
};

// Per-block counters for one model run, split by phase. Owned by the caller
// and passed explicitly; the library never keeps a global counter.
struct RunCounters {
    std::vector<FlopCounter> prefill;  // one per block, in block order
    std::vector<FlopCounter> decode;

    void resize(std::size_t blocks) {
        prefill.assign(blocks, FlopCounter{});
        decode.assign(blocks, FlopCounter{});
    }

    static std::uint64_t covered_total(const std::vector<FlopCounter>& phase) {
        std::uint64_t sum = 0;
        for (const auto& c : phase) sum += c.covered();
        return sum;
    }
};

}  // namespace xtrim
