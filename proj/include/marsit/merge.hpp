// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>

#include "marsit/errors.hpp"
#include "marsit/rng.hpp"
#include "marsit/sign_vector.hpp"

namespace marsit {

// A sign vector together with the number of workers whose signs it already
// aggregates.  A freshly packed local vector has count 1.
struct AggregateSign {
    PackedSignVector bits;
    std::uint32_t count = 1;
};

// Merge a received aggregate into a local one without ever leaving the
// one-bit-per-coordinate representation.
//
// Where the two aggregates agree the bit is kept as is.  Where they
// disagree, a transient coin picks the received bit with probability
// count_received / (count_received + count_local), i.e. proportionally to
// how many workers stand behind each side.  This keeps the aggregate
// unbiased: by induction over any merge tree, the final bit is 1 with
// probability (number of workers voting 1) / (total workers) per coordinate.
//
// Coins are drawn lazily, one per disagreeing coordinate in ascending
// coordinate order, so the number and order of draws is a pure function of
// the two bit patterns.
inline AggregateSign merge_signs(const AggregateSign& received, const AggregateSign& local,
                                 RngStream& rng) {
    if (received.bits.size() != local.bits.size()) {
        throw protocol_error("merge_signs: bit length mismatch");
    }
    if (received.count == 0 || local.count == 0) {
        throw parameter_error("merge_signs: aggregate count must be >= 1");
    }
    const double p_received = static_cast<double>(received.count) /
                              (static_cast<double>(received.count) + static_cast<double>(local.count));

    AggregateSign out;
    out.bits = PackedSignVector::zeros(received.bits.size());
    out.count = received.count + local.count;
    for (std::size_t j = 0; j < received.bits.size(); ++j) {
        const bool r = received.bits.bit(j);
        const bool l = local.bits.bit(j);
        bool result = r;
        if (r != l) {
            result = rng.next_bernoulli(p_received) ? r : l;
        }
        if (result) out.bits.set_bit(j, true);
    }
    return out;
}

} // namespace marsit
