// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/cli.hpp"

int main(int argc, char** argv) { return dynapre::cli::cli_dispatch(argc, argv); }
