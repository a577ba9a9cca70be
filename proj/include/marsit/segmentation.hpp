// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "marsit/dense_vector.hpp"
#include "marsit/errors.hpp"

namespace marsit {

// Partition of a D-dimensional vector into M equal segments of length
// ceil(D/M).  When M does not divide D the tail of the last segment is
// zero-padded; reassemble() truncates the padding away again.
struct Segmentation {
    std::size_t dim = 0;         // logical dimension D
    std::size_t segments = 0;    // number of segments M
    std::size_t segment_len = 0; // ceil(D/M)

    std::size_t padded_dim() const { return segments * segment_len; }

    // M+1 offsets into the padded coordinate space.
    std::vector<std::size_t> boundaries() const {
        std::vector<std::size_t> out(segments + 1);
        for (std::size_t i = 0; i <= segments; ++i) out[i] = i * segment_len;
        return out;
    }
};

inline std::pair<Segmentation, std::vector<DenseVector>> segment(const DenseVector& v,
                                                                 std::size_t num_segments) {
    if (num_segments == 0) {
        throw parameter_error("segment: number of segments must be >= 1");
    }
    Segmentation seg;
    seg.dim = v.size();
    seg.segments = num_segments;
    seg.segment_len = (v.size() + num_segments - 1) / num_segments;

    std::vector<DenseVector> parts;
    parts.reserve(num_segments);
    for (std::size_t s = 0; s < num_segments; ++s) {
        std::vector<double> part(seg.segment_len, 0.0);
        for (std::size_t j = 0; j < seg.segment_len; ++j) {
            const std::size_t src = s * seg.segment_len + j;
            if (src < v.size()) part[j] = v[src];
        }
        parts.push_back(DenseVector(std::move(part)));
    }
    return {seg, std::move(parts)};
}

inline DenseVector reassemble(const Segmentation& seg, const std::vector<DenseVector>& parts) {
    if (parts.size() != seg.segments) {
        throw parameter_error("reassemble: wrong number of segments");
    }
    std::vector<double> out;
    out.reserve(seg.dim);
    for (std::size_t s = 0; s < seg.segments; ++s) {
        if (parts[s].size() != seg.segment_len) {
            throw parameter_error("reassemble: segment length mismatch");
        }
        for (std::size_t j = 0; j < seg.segment_len && out.size() < seg.dim; ++j) {
            out.push_back(parts[s][j]);
        }
    }
    return DenseVector(std::move(out));
}

} // namespace marsit
