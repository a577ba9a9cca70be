// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0

#include "marsit/cli.hpp"

int main(int argc, char** argv) {
    return marsit::run_cli(argc, argv);
}
