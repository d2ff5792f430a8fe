// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return xtrim::cli::run_cli(argc, argv); }
