// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "marsit/dense_vector.hpp"
#include "marsit/errors.hpp"

namespace marsit {

// A bit string of logical length L packed into 64-bit words, little-endian
// within each word (logical bit j lives at word j/64, bit position j%64).
// Storage bits beyond the logical length are kept at zero so that equality
// and popcount can operate on whole words.
class PackedSignVector {
public:
    PackedSignVector() = default;

    static PackedSignVector zeros(std::size_t logical_len) {
        PackedSignVector out;
        out.logical_len_ = logical_len;
        out.words_.assign((logical_len + 63) / 64, 0u);
        return out;
    }

    std::size_t size() const { return logical_len_; }

    bool bit(std::size_t i) const {
        if (i >= logical_len_) {
            throw parameter_error("PackedSignVector::bit: index out of range");
        }
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    void set_bit(std::size_t i, bool value) {
        if (i >= logical_len_) {
            throw parameter_error("PackedSignVector::set_bit: index out of range");
        }
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (value) {
            words_[i >> 6] |= mask;
        } else {
            words_[i >> 6] &= ~mask;
        }
    }

    std::size_t popcount() const {
        std::size_t acc = 0;
        for (std::uint64_t w : words_) acc += static_cast<std::size_t>(std::popcount(w));
        return acc;
    }

    const std::vector<std::uint64_t>& words() const { return words_; }

    friend bool operator==(const PackedSignVector&, const PackedSignVector&) = default;

private:
    std::vector<std::uint64_t> words_;
    std::size_t logical_len_ = 0;
};

// Sign-bit quantization: bit j is 1 iff v[j] >= 0, i.e. sgn(0) = +1.
inline PackedSignVector pack_signs(const DenseVector& v) {
    PackedSignVector out = PackedSignVector::zeros(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] >= 0.0) out.set_bit(i, true);
    }
    return out;
}

// Map sign bits back to a model update of +-eta_s per coordinate.  The
// squared l2 norm of the result is always eta_s^2 * L.
inline DenseVector unpack_to_update(const PackedSignVector& bits, double eta_s) {
    if (!(eta_s > 0.0)) {
        throw parameter_error("unpack_to_update: eta_s must be > 0");
    }
    if (bits.size() == 0) {
        throw parameter_error("unpack_to_update: empty sign vector");
    }
    std::vector<double> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        out[i] = bits.bit(i) ? eta_s : -eta_s;
    }
    return DenseVector(std::move(out));
}

} // namespace marsit
