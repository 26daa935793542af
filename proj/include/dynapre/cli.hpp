// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace dynapre::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kTrainingAbort = 3;

std::string_view tool_version();

// Runs one subcommand. Diagnostics go to stderr; results only to files.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace dynapre::cli
