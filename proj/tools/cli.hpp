// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

namespace xtrim::cli {

/// Entry point shared by the binary and the tests. Exit codes: 0 success,
/// 1 runtime/numerical failure, 2 invalid flags.
int run_cli(int argc, const char* const* argv);

/// FNV-1a 64-bit over raw bytes; used for hidden-state checksums.
std::uint64_t fnv1a64(const void* data, std::size_t bytes);

}  // namespace xtrim::cli
