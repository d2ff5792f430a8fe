// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/workload.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace xtrim {

namespace {

enum InputTag : std::uint64_t {
    kTagText = 101,
    kTagImage = 102,
    kTagZipfBase = 103,
    kTagZipfPick = 104,
    kTagZipfShared = 105,
};

}  // namespace

Tensor make_text_embeds(std::size_t n, std::size_t d, std::uint64_t seed) {
    return seeded_tensor({n, d}, derive_seed(seed, 0, kTagText), 1.0f);
}

ImageFeatures make_image_features(std::size_t n_k, std::size_t d, std::uint64_t seed) {
    return ImageFeatures{seeded_tensor({n_k, d}, derive_seed(seed, 0, kTagImage), 1.0f)};
}

ImageFeatures make_zipf_image_features(std::size_t n_k, std::size_t d, std::uint64_t seed,
                                       const ZipfImageParams& params) {
    Tensor feats = seeded_tensor({n_k, d}, derive_seed(seed, 0, kTagZipfBase), 1.0f);
    const Tensor shared = seeded_tensor({1, d}, derive_seed(seed, 0, kTagZipfShared), 1.0f);

    auto salient = static_cast<std::size_t>(
        std::llround(params.salient_fraction * static_cast<double>(n_k)));
    salient = std::max<std::size_t>(1, std::min(salient, n_k));

    // Seeded shuffle picks which rows are salient.
    std::vector<std::size_t> order(n_k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::uint64_t state = derive_seed(seed, 0, kTagZipfPick);
    for (std::size_t i = n_k; i > 1; --i) {
        const std::size_t j = splitmix64_next(state) % i;
        std::swap(order[i - 1], order[j]);
    }

    // Non-salient rows are low-magnitude noise. Salient rows mix a shared
    // per-image direction with their own noise at a Zipf-decaying scale:
    // the shared component is what makes the same columns attract mass from
    // every query (the vertical pattern), and the scale must be large
    // enough that query-key products survive the small projection weights.
    std::vector<float> row_scale(n_k, 0.0f);
    for (std::size_t rank = 0; rank < salient; ++rank) {
        row_scale[order[rank]] =
            params.base_scale /
            static_cast<float>(std::pow(static_cast<double>(rank + 1), params.exponent));
    }
    for (std::size_t i = 0; i < n_k; ++i) {
        if (row_scale[i] == 0.0f) {
            for (std::size_t c = 0; c < d; ++c) feats.at(i, c) *= params.noise_scale;
        } else {
            for (std::size_t c = 0; c < d; ++c) {
                feats.at(i, c) =
                    row_scale[i] * (shared.at(0, c) + params.row_mix * feats.at(i, c));
            }
        }
    }
    return ImageFeatures{std::move(feats)};
}

}  // namespace xtrim
