// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "xtrim/errors.hpp"
#include "xtrim/flops.hpp"

namespace xtrim {

// Dense row-major f32 tensor. Shapes are always explicit; there is no
// broadcasting. Rank-2 is the workhorse, rank-3 holds attention weights.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> extents);

    std::size_t rank() const { return shape.size(); }
    std::size_t numel() const;
    std::size_t extent(std::size_t axis) const;

    // Rank-2 accessors.
    std::size_t rows() const { return extent(0); }
    std::size_t cols() const { return extent(1); }
    float& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    float at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    // Rank-3 accessors, laid out [i0][i1][i2] row-major.
    float& at3(std::size_t i0, std::size_t i1, std::size_t i2) {
        return data[(i0 * shape[1] + i1) * shape[2] + i2];
    }
    float at3(std::size_t i0, std::size_t i1, std::size_t i2) const {
        return data[(i0 * shape[1] + i1) * shape[2] + i2];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

// splitmix64 step; the stream underlying every seeded value in the project.
std::uint64_t splitmix64_next(std::uint64_t& state);

// Derives an independent stream seed from a base seed and a tag. Layer index
// and role tag are packed into disjoint bit ranges so streams never collide.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t layer_index, std::uint64_t role_tag);

// Uniform(-scale, +scale) tensor from a splitmix64 stream. The mapping from
// raw 64-bit draws to floats uses only exactly-representable intermediate
// values, so the bytes are identical across platforms and runs:
//   u = (draw >> 40) * 2^-24, value = (2u - 1) * scale.
Tensor seeded_tensor(std::vector<std::size_t> shape, std::uint64_t seed, float scale);

// C = A * B for A [r x k], B [k x c]. When `counter` is given the cost is
// recorded under `kind` as r*k*c multiply-accumulate units.
Tensor matmul(const Tensor& a, const Tensor& b,
              FlopCounter* counter = nullptr, MatmulKind kind = MatmulKind::kOther);

Tensor transpose(const Tensor& t);

// Row softmax with per-row max subtraction. Rows sum to 1 within 1e-6.
Tensor softmax_rows(const Tensor& t);

struct AttentionResult {
    Tensor out;      // [n_q x d_h]
    Tensor weights;  // [n_q x n_kv], post-softmax
};

// Single-head scaled dot-product attention. `causal` masks key j > query i
// and requires n_kv == n_q offset handling by the caller for decode; here a
// query at row i may attend keys [0, n_kv - n_q + i]. Scores are computed
// over the full matrix and masked afterwards.
AttentionResult attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          bool causal, FlopCounter* counter = nullptr);

// RMS normalization per row, no learned gain: x / sqrt(mean(x^2) + eps).
Tensor rmsnorm_rows(const Tensor& t, float eps = 1e-6f);

Tensor add(const Tensor& a, const Tensor& b);

float silu(float x);

// Copies the rows of `t` named by `indices`, in the given order.
Tensor take_rows(const Tensor& t, const std::vector<std::size_t>& indices);

// Copies columns [c0, c1) of a rank-2 tensor.
Tensor slice_cols(const Tensor& t, std::size_t c0, std::size_t c1);

}  // namespace xtrim
