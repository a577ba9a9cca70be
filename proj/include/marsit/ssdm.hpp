// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "marsit/dense_vector.hpp"
#include "marsit/errors.hpp"
#include "marsit/rng.hpp"
#include "marsit/sign_vector.hpp"

namespace marsit {

// Stochastic sign-bit compression of a dense vector: one sign bit per
// coordinate plus the l2 norm of the whole vector.
struct SsdmPacket {
    double norm = 0.0;
    PackedSignVector bits;
};

// Compress v into sign bits, drawing bit j as 1 with probability
// 1/2 + v[j] / (2*||v||).  The reconstruction norm * (+-1) is an unbiased
// estimate of v, at the price of a squared norm inflated by the dimension.
// A zero vector degenerates to fair coin flips with norm 0.  Exactly one
// uniform is consumed per coordinate, in coordinate order.
inline SsdmPacket ssdm_compress(const DenseVector& v, RngStream& rng) {
    SsdmPacket packet;
    packet.norm = v.l2_norm();
    packet.bits = PackedSignVector::zeros(v.size());
    const double denom = packet.norm > 0.0 ? 2.0 * packet.norm : 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double p = denom > 0.0 ? 0.5 + v[j] / denom : 0.5;
        if (rng.next_bernoulli(p)) packet.bits.set_bit(j, true);
    }
    return packet;
}

// Reconstruct +-norm per coordinate; a zero-norm packet decodes to the zero
// vector regardless of its bits.
inline DenseVector ssdm_decompress(const SsdmPacket& packet) {
    if (packet.bits.size() == 0) {
        throw parameter_error("ssdm_decompress: empty packet");
    }
    if (!(packet.norm >= 0.0)) {
        throw parameter_error("ssdm_decompress: negative norm");
    }
    std::vector<double> out(packet.bits.size());
    for (std::size_t j = 0; j < packet.bits.size(); ++j) {
        out[j] = packet.norm == 0.0 ? 0.0 : (packet.bits.bit(j) ? packet.norm : -packet.norm);
    }
    return DenseVector(std::move(out));
}

} // namespace marsit
