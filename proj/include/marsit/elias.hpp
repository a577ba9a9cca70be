// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>

#include "marsit/errors.hpp"

namespace marsit {

// Length in bits of the Elias gamma code of n: 2*floor(log2 n) + 1.
// Gamma cannot encode zero; callers with zero-based values shift first.
inline std::uint64_t elias_gamma_length(std::uint64_t n) {
    if (n == 0) {
        throw parameter_error("elias_gamma_length: n must be >= 1");
    }
    return 2u * static_cast<std::uint64_t>(std::bit_width(n)) - 1u;
}

// Zigzag map from signed to unsigned: 0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4.
inline std::uint64_t zigzag_encode(std::int64_t s) {
    return (static_cast<std::uint64_t>(s) << 1) ^ static_cast<std::uint64_t>(s >> 63);
}

// Accounting for a signed per-coordinate sum transmitted with gamma coding:
// zigzag first, then shift by one because the sum may be zero.
inline std::uint64_t signed_sum_code_length(std::int64_t s) {
    return elias_gamma_length(zigzag_encode(s) + 1u);
}

} // namespace marsit
