// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "xtrim/model.hpp"
#include "xtrim/tensor.hpp"

namespace xtrim {

// Seeded synthetic inputs for benchmark and ablation runs. Tags keep the
// text, image and structure streams independent of the weight streams.

Tensor make_text_embeds(std::size_t n, std::size_t d, std::uint64_t seed);

ImageFeatures make_image_features(std::size_t n_k, std::size_t d, std::uint64_t seed);

struct ZipfImageParams {
    double salient_fraction = 0.125;  // share of rows given elevated scale
    double exponent = 0.8;            // Zipf decay across salient ranks
    float base_scale = 6000.0f;       // top-rank row scale
    float noise_scale = 0.05f;        // all remaining rows
    float row_mix = 1.0f;             // per-row noise blended into salient rows
};

// Image features whose rows split into a few high-scale "salient" rows and
// many near-zero rows. Salient rows share one per-image direction with
// Zipf-decaying magnitudes, so under a seeded model the same columns attract
// cross-attention mass from every query: the concentrated, vertically
// structured weight pattern real image inputs show.
ImageFeatures make_zipf_image_features(std::size_t n_k, std::size_t d, std::uint64_t seed,
                                       const ZipfImageParams& params = {});

}  // namespace xtrim
