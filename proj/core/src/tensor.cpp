// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/tensor.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace xtrim {

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

void require_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(what) + " expects a rank-2 tensor, got " +
                         shape_str(t.shape));
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> extents) : shape(std::move(extents)) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extent must be >= 1, got shape " + shape_str(shape));
        n *= e;
    }
    data.assign(n, 0.0f);
}

std::size_t Tensor::numel() const {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return shape.empty() ? 0 : n;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(shape));
    }
    return shape[axis];
}

bool Tensor::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t layer_index, std::uint64_t role_tag) {
    return base ^ ((layer_index + 1) << 32) ^ (role_tag + 1);
}

Tensor seeded_tensor(std::vector<std::size_t> shape, std::uint64_t seed, float scale) {
    if (!(scale > 0.0f)) throw ConfigError("seeded_tensor scale must be > 0");
    Tensor t(std::move(shape));
    std::uint64_t state = seed;
    for (float& v : t.data) {
        const std::uint64_t draw = splitmix64_next(state);
        // Top 24 bits: exactly representable in f32, so every step rounds
        // identically on any IEEE-754 platform.
        const float u = static_cast<float>(draw >> 40) * (1.0f / 16777216.0f);
        v = (2.0f * u - 1.0f) * scale;
    }
    return t;
}

Tensor matmul(const Tensor& a, const Tensor& b, FlopCounter* counter, MatmulKind kind) {
    require_rank2(a, "matmul lhs");
    require_rank2(b, "matmul rhs");
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul inner extents differ: " + shape_str(a.shape) + " * " +
                         shape_str(b.shape));
    }
    const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
    Tensor out({r, c});
    const float* ap = a.data.data();
    const float* bp = b.data.data();
    float* op = out.data.data();
    for (std::size_t i = 0; i < r; ++i) {
        const float* arow = ap + i * k;
        float* orow = op + i * c;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const float av = arow[kk];
            const float* brow = bp + kk * c;
            for (std::size_t j = 0; j < c; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    if (counter) counter->add_matmul(kind, r, k, c);
    return out;
}

Tensor transpose(const Tensor& t) {
    require_rank2(t, "transpose");
    Tensor out({t.cols(), t.rows()});
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
            out.at(j, i) = t.at(i, j);
        }
    }
    return out;
}

Tensor softmax_rows(const Tensor& t) {
    require_rank2(t, "softmax_rows");
    Tensor out({t.rows(), t.cols()});
    const std::size_t c = t.cols();
    for (std::size_t i = 0; i < t.rows(); ++i) {
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t j = 0; j < c; ++j) m = std::max(m, t.at(i, j));
        float denom = 0.0f;
        for (std::size_t j = 0; j < c; ++j) {
            const float e = std::exp(t.at(i, j) - m);
            out.at(i, j) = e;
            denom += e;
        }
        const float inv = 1.0f / denom;
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) *= inv;
    }
    return out;
}

AttentionResult attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          bool causal, FlopCounter* counter) {
    require_rank2(q, "attention q");
    require_rank2(k, "attention k");
    require_rank2(v, "attention v");
    if (q.cols() != k.cols()) {
        throw ShapeError("attention head dim differs between q " + shape_str(q.shape) +
                         " and k " + shape_str(k.shape));
    }
    if (k.rows() != v.rows()) {
        throw ShapeError("attention kv length differs between k " + shape_str(k.shape) +
                         " and v " + shape_str(v.shape));
    }
    if (q.cols() != v.cols()) {
        throw ShapeError("attention head dim differs between q " + shape_str(q.shape) +
                         " and v " + shape_str(v.shape));
    }
    const std::size_t n_q = q.rows(), n_kv = k.rows(), d_h = q.cols();

    Tensor scores = matmul(q, transpose(k), counter, MatmulKind::kAttnScore);
    const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(d_h));
    for (float& s : scores.data) s *= inv_sqrt;

    if (causal) {
        if (n_kv < n_q) throw ShapeError("causal attention needs n_kv >= n_q");
        // Query i sits at sequence position n_kv - n_q + i.
        const std::size_t offset = n_kv - n_q;
        const float neg_inf = -std::numeric_limits<float>::infinity();
        for (std::size_t i = 0; i < n_q; ++i) {
            for (std::size_t j = offset + i + 1; j < n_kv; ++j) {
                scores.at(i, j) = neg_inf;
            }
        }
    }

    AttentionResult res;
    res.weights = softmax_rows(scores);
    res.out = matmul(res.weights, v, counter, MatmulKind::kAttnValue);
    return res;
}

Tensor rmsnorm_rows(const Tensor& t, float eps) {
    require_rank2(t, "rmsnorm_rows");
    Tensor out({t.rows(), t.cols()});
    const std::size_t c = t.cols();
    for (std::size_t i = 0; i < t.rows(); ++i) {
        float sum_sq = 0.0f;
        for (std::size_t j = 0; j < c; ++j) sum_sq += t.at(i, j) * t.at(i, j);
        const float inv = 1.0f / std::sqrt(sum_sq / static_cast<float>(c) + eps);
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = t.at(i, j) * inv;
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("add shape mismatch: " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

Tensor take_rows(const Tensor& t, const std::vector<std::size_t>& indices) {
    require_rank2(t, "take_rows");
    Tensor out({indices.size(), t.cols()});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= t.rows()) {
            throw ShapeError("take_rows index " + std::to_string(indices[i]) +
                             " out of range for " + shape_str(t.shape));
        }
        std::memcpy(&out.data[i * t.cols()], &t.data[indices[i] * t.cols()],
                    t.cols() * sizeof(float));
    }
    return out;
}

Tensor slice_cols(const Tensor& t, std::size_t c0, std::size_t c1) {
    require_rank2(t, "slice_cols");
    if (c0 >= c1 || c1 > t.cols()) {
        throw ShapeError("slice_cols range [" + std::to_string(c0) + ", " + std::to_string(c1) +
                         ") invalid for " + shape_str(t.shape));
    }
    Tensor out({t.rows(), c1 - c0});
    for (std::size_t i = 0; i < t.rows(); ++i) {
        std::memcpy(&out.data[i * (c1 - c0)], &t.data[i * t.cols() + c0],
                    (c1 - c0) * sizeof(float));
    }
    return out;
}

}  // namespace xtrim
