// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "xtrim/trimming.hpp"

namespace xtrim {

// An ordered stack of per-layer cross-attention tensors sharing one
// [heads x queries x features] shape, plus free-form string metadata.
struct AttnTrace {
    std::vector<AttentionTensor> layers;
    std::map<std::string, std::string> meta;  // ordered map: deterministic writes

    std::size_t heads() const { return layers.empty() ? 0 : layers[0].heads(); }
    std::size_t queries() const { return layers.empty() ? 0 : layers[0].queries(); }
    std::size_t features() const { return layers.empty() ? 0 : layers[0].features(); }

    /// Layer count >= 1 and uniform dims; throws ShapeError otherwise.
    void validate() const;
};

// Binary layout, all integers little-endian:
//   magic "XATN" | u32 version=1 | u32 layer_count | u32 heads | u32 queries
//   | u32 features | u32 meta_len | meta (UTF-8 JSON object, sorted keys)
//   | layer_count blocks of heads*queries*features little-endian f32,
//     [head][query][feature] row-major.
// Round-trips are bit-exact on any host.
inline constexpr char kTraceMagic[4] = {'X', 'A', 'T', 'N'};
inline constexpr std::uint32_t kTraceVersion = 1;

void write_trace(const AttnTrace& trace, std::ostream& sink);
void write_trace_file(const AttnTrace& trace, const std::string& path);

/// Throws TraceFormatError with the byte offset of the defect: bad magic at
/// 0, unsupported version at 4, truncation at the first missing byte.
AttnTrace read_trace(std::istream& source);
AttnTrace read_trace_file(const std::string& path);

// JSON sidecar with the same logical schema, for small hand-written
// fixtures: {"version", "heads", "queries", "features", "meta",
// "layers": [...]} where layers[l][h][j] is the weight row of query j.
std::string trace_to_json(const AttnTrace& trace);
AttnTrace trace_from_json(const std::string& text);
AttnTrace read_trace_json_file(const std::string& path);
void write_trace_json_file(const AttnTrace& trace, const std::string& path);

/// Dispatches on extension: ".json" sidecar, anything else binary.
AttnTrace read_trace_any(const std::string& path);

}  // namespace xtrim
