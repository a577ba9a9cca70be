// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include "marsit/errors.hpp"

namespace marsit {

// Shortest decimal form that parses back to the same double, so emitted
// CSV/JSON is reproducible byte for byte and lossless.
inline std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw parameter_error("format_double: conversion failed");
    }
    return std::string(buf, ptr);
}

} // namespace marsit
